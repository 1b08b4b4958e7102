#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tsrl/series/sample.hpp"

namespace tsrl::datapipe {

class StoreError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Append-only event log: one JSON line {"seq", "sample"} per state change, holding the
/// full sample snapshot. Plots live in a "plots" directory next to the log.
/// All members are safe to call concurrently; writes are serialised.
class SampleStore {
public:
    /// Loads an existing log (a torn trailing record is cut off with a warning) or starts one.
    explicit SampleStore(std::filesystem::path events_file);

    const std::filesystem::path& events_path() const { return path_; }
    std::filesystem::path plots_dir() const { return path_.parent_path() / "plots"; }
    std::filesystem::path resolve(const std::string& relative) const { return path_.parent_path() / relative; }

    /// Inserts (status must be generated) or updates along an allowed transition.
    /// Same-status updates are allowed. Throws StoreError on an illegal transition.
    void put(const QASample& sample);

    enum class UpdateResult { ok, not_found, conflict };
    /// Atomically applies `mutate` to the stored sample when its status equals `expected`.
    UpdateResult update_if(const std::string& sample_id, SampleStatus expected,
                           const std::function<void(QASample&)>& mutate);

    std::optional<QASample> get(const std::string& sample_id) const;
    std::vector<QASample> all() const; // first-seen order
    /// Ordered by when each sample entered the status.
    std::vector<QASample> with_status(SampleStatus status) const;
    std::map<SampleStatus, std::size_t> counts() const;

    std::size_t event_count() const;
    /// Bytes cut from a torn trailing record on load (0 when the log was clean).
    std::size_t truncated_bytes() const { return truncated_bytes_; }

private:
    struct Entry {
        QASample sample;
        std::size_t entered_seq = 0;
    };
    void load();
    void apply(const QASample& s, std::size_t seq);
    void append_locked(const QASample& s);

    std::filesystem::path path_;
    mutable std::mutex mu_;
    std::map<std::string, Entry> entries_;
    std::vector<std::string> order_;
    std::size_t seq_ = 0;
    std::size_t truncated_bytes_ = 0;
    std::ofstream out_;
};

} // namespace tsrl::datapipe
