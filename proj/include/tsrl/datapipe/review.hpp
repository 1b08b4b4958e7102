#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "tsrl/datapipe/store.hpp"

namespace httplib {
class Server;
}

namespace tsrl::datapipe {

struct DecisionOutcome {
    enum class Code { ok, not_found, conflict, bad_request } code = Code::ok;
    std::optional<QASample> sample; // state after the call
    std::string message;
};

/// Manual-check queue over a SampleStore.
class ReviewService {
public:
    explicit ReviewService(SampleStore& store) : store_(store) {}

    /// Oldest sample waiting for review.
    std::optional<QASample> next() const;
    /// decision is "accept" or "reject"; only pending_review samples can be decided.
    DecisionOutcome decide(const std::string& sample_id, std::string_view decision, std::string notes);
    /// {"total", "by_status": {...}, "reviewed": [{"sample_id", "status", "notes"}]}
    nlohmann::json stats() const;
    /// Line-delimited samples with the given status. Accepted samples whose plot file
    /// is missing are left out.
    std::string export_jsonl(SampleStatus status) const;
    std::optional<std::string> plot_svg(const std::string& sample_id) const;

private:
    SampleStore& store_;
};

/// GET  /api/review/next
/// POST /api/review/{id}/decision   {"decision": "accept"|"reject", "notes": "..."}
/// GET  /api/samples/{id}/plot.svg
/// GET  /api/stats
/// GET  /api/export?status=accepted
/// With a token, every request needs "Authorization: Bearer <token>".
void install_review_routes(httplib::Server& server, ReviewService& service, std::optional<std::string> token = {});

/// Owns an httplib server running on a background thread.
class ReviewServer {
public:
    ReviewServer(ReviewService& service, std::optional<std::string> token = {});
    ~ReviewServer();
    ReviewServer(const ReviewServer&) = delete;
    ReviewServer& operator=(const ReviewServer&) = delete;

    /// Binds (port 0 picks a free one) and starts serving; returns the bound port.
    int start(const std::string& host, int port);
    /// Blocks serving on the calling thread.
    void run(const std::string& host, int port);
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace tsrl::datapipe
