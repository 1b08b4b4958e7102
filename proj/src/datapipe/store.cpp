#include "tsrl/datapipe/store.hpp"

#include <algorithm>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace tsrl::datapipe {

namespace fs = std::filesystem;

SampleStore::SampleStore(fs::path events_file) : path_(std::move(events_file)) {
    if (path_.has_parent_path()) fs::create_directories(path_.parent_path());
    else path_ = fs::path(".") / path_;
    fs::create_directories(plots_dir());
    load();
    out_.open(path_, std::ios::binary | std::ios::app);
    if (!out_) throw StoreError(fmt::format("cannot open {} for appending", path_.string()));
}

void SampleStore::load() {
    if (!fs::exists(path_)) return;
    std::ifstream in(path_, std::ios::binary);
    const std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();

    std::size_t pos = 0, good_end = 0, line_no = 0;
    while (pos < data.size()) {
        const auto nl = data.find('\n', pos);
        const std::size_t end = nl == std::string::npos ? data.size() : nl;
        const std::string_view line(data.data() + pos, end - pos);
        ++line_no;
        const bool last = nl == std::string::npos || data.find_first_not_of(" \t\r\n", nl) == std::string::npos;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) {
            pos = end + 1;
            good_end = std::min(pos, data.size());
            continue;
        }
        std::optional<QASample> sample;
        std::size_t seq = 0;
        try {
            const auto doc = nlohmann::json::parse(line);
            seq = doc.at("seq").get<std::size_t>();
            sample = sample_from_json(doc.at("sample"));
        } catch (const std::exception& e) {
            if (!last) throw StoreError(fmt::format("{}:{}: corrupt record: {}", path_.string(), line_no, e.what()));
            truncated_bytes_ = data.size() - pos;
            spdlog::warn("{}: dropping torn trailing record ({} bytes)", path_.string(), truncated_bytes_);
            fs::resize_file(path_, pos);
            break;
        }
        apply(*sample, seq);
        seq_ = std::max(seq_, seq);
        pos = end + 1;
        good_end = std::min(pos, data.size());
    }
    // A final record written without its newline would glue onto the next append.
    if (truncated_bytes_ == 0 && good_end == data.size() && !data.empty() && data.back() != '\n') {
        std::ofstream fix(path_, std::ios::binary | std::ios::app);
        fix << '\n';
    }
}

void SampleStore::apply(const QASample& s, std::size_t seq) {
    auto it = entries_.find(s.sample_id);
    if (it == entries_.end()) {
        entries_.emplace(s.sample_id, Entry{s, seq});
        order_.push_back(s.sample_id);
        return;
    }
    if (it->second.sample.status != s.status) it->second.entered_seq = seq;
    it->second.sample = s;
}

void SampleStore::append_locked(const QASample& s) {
    const nlohmann::json rec = {{"seq", ++seq_}, {"sample", to_json(s)}};
    out_ << rec.dump() << '\n';
    out_.flush();
    if (!out_) throw StoreError(fmt::format("write to {} failed", path_.string()));
    apply(s, seq_);
}

void SampleStore::put(const QASample& sample) {
    std::lock_guard lock(mu_);
    const auto it = entries_.find(sample.sample_id);
    if (it == entries_.end()) {
        if (sample.status != SampleStatus::generated)
            throw StoreError(fmt::format("new sample {} must start as generated", sample.sample_id));
    } else {
        const auto from = it->second.sample.status;
        if (from != sample.status && !is_allowed_transition(from, sample.status))
            throw StoreError(fmt::format("sample {}: illegal transition {} -> {}", sample.sample_id, to_string(from),
                                         to_string(sample.status)));
    }
    append_locked(sample);
}

SampleStore::UpdateResult SampleStore::update_if(const std::string& sample_id, SampleStatus expected,
                                                 const std::function<void(QASample&)>& mutate) {
    std::lock_guard lock(mu_);
    const auto it = entries_.find(sample_id);
    if (it == entries_.end()) return UpdateResult::not_found;
    if (it->second.sample.status != expected) return UpdateResult::conflict;
    QASample next = it->second.sample;
    mutate(next);
    if (next.sample_id != sample_id) throw StoreError("update_if must not change the sample id");
    if (next.status != expected && !is_allowed_transition(expected, next.status))
        throw StoreError(fmt::format("sample {}: illegal transition {} -> {}", sample_id, to_string(expected),
                                     to_string(next.status)));
    append_locked(next);
    return UpdateResult::ok;
}

std::optional<QASample> SampleStore::get(const std::string& sample_id) const {
    std::lock_guard lock(mu_);
    const auto it = entries_.find(sample_id);
    if (it == entries_.end()) return std::nullopt;
    return it->second.sample;
}

std::vector<QASample> SampleStore::all() const {
    std::lock_guard lock(mu_);
    std::vector<QASample> out;
    out.reserve(order_.size());
    for (const auto& id : order_) out.push_back(entries_.at(id).sample);
    return out;
}

std::vector<QASample> SampleStore::with_status(SampleStatus status) const {
    std::lock_guard lock(mu_);
    std::vector<const Entry*> hits;
    for (const auto& [_, e] : entries_)
        if (e.sample.status == status) hits.push_back(&e);
    std::sort(hits.begin(), hits.end(), [](const Entry* a, const Entry* b) { return a->entered_seq < b->entered_seq; });
    std::vector<QASample> out;
    out.reserve(hits.size());
    for (const auto* e : hits) out.push_back(e->sample);
    return out;
}

std::map<SampleStatus, std::size_t> SampleStore::counts() const {
    std::lock_guard lock(mu_);
    std::map<SampleStatus, std::size_t> out;
    for (const auto& [_, e] : entries_) ++out[e.sample.status];
    return out;
}

std::size_t SampleStore::event_count() const {
    std::lock_guard lock(mu_);
    return seq_;
}

} // namespace tsrl::datapipe
