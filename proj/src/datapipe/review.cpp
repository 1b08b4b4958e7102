#include "tsrl/datapipe/review.hpp"

#include <fstream>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <httplib.h>
#include <spdlog/spdlog.h>

namespace tsrl::datapipe {

std::optional<QASample> ReviewService::next() const {
    auto pending = store_.with_status(SampleStatus::pending_review);
    if (pending.empty()) return std::nullopt;
    return pending.front();
}

DecisionOutcome ReviewService::decide(const std::string& sample_id, std::string_view decision, std::string notes) {
    DecisionOutcome out;
    SampleStatus target;
    if (decision == "accept") target = SampleStatus::accepted;
    else if (decision == "reject") target = SampleStatus::rejected;
    else {
        out.code = DecisionOutcome::Code::bad_request;
        out.message = "decision must be \"accept\" or \"reject\"";
        return out;
    }
    const auto r = store_.update_if(sample_id, SampleStatus::pending_review, [&](QASample& s) {
        s.status = target;
        s.review_notes = notes;
    });
    out.sample = store_.get(sample_id);
    switch (r) {
    case SampleStore::UpdateResult::ok: break;
    case SampleStore::UpdateResult::not_found:
        out.code = DecisionOutcome::Code::not_found;
        out.message = fmt::format("no sample {}", sample_id);
        break;
    case SampleStore::UpdateResult::conflict:
        out.code = DecisionOutcome::Code::conflict;
        out.message = fmt::format("sample {} is {}, not pending_review", sample_id, to_string(out.sample->status));
        break;
    }
    return out;
}

nlohmann::json ReviewService::stats() const {
    nlohmann::json by_status = nlohmann::json::object();
    for (auto s : {SampleStatus::generated, SampleStatus::judged, SampleStatus::rendered, SampleStatus::pending_review,
                   SampleStatus::accepted, SampleStatus::rejected})
        by_status[std::string(to_string(s))] = 0;
    std::size_t total = 0;
    for (const auto& [status, n] : store_.counts()) {
        by_status[std::string(to_string(status))] = n;
        total += n;
    }
    nlohmann::json reviewed = nlohmann::json::array();
    for (auto status : {SampleStatus::accepted, SampleStatus::rejected}) {
        for (const auto& s : store_.with_status(status)) {
            // Judge rejections never reached a reviewer.
            if (status == SampleStatus::rejected && !s.plot_path) continue;
            reviewed.push_back({{"sample_id", s.sample_id}, {"status", to_string(s.status)}, {"notes", s.review_notes}});
        }
    }
    return {{"total", total}, {"by_status", by_status}, {"reviewed", reviewed}};
}

std::string ReviewService::export_jsonl(SampleStatus status) const {
    std::string out;
    for (const auto& s : store_.with_status(status)) {
        if (status == SampleStatus::accepted) {
            std::error_code ec;
            if (!s.plot_path || !std::filesystem::is_regular_file(store_.resolve(*s.plot_path), ec)) {
                spdlog::warn("export: {} has no readable plot, skipped", s.sample_id);
                continue;
            }
        }
        out += to_json(s).dump() + "\n";
    }
    return out;
}

std::optional<std::string> ReviewService::plot_svg(const std::string& sample_id) const {
    const auto s = store_.get(sample_id);
    if (!s || !s->plot_path) return std::nullopt;
    std::ifstream in(store_.resolve(*s->plot_path), std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

namespace {

void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
    send_json(res, status, {{"error", message}});
}

} // namespace

void install_review_routes(httplib::Server& server, ReviewService& service, std::optional<std::string> token) {
    if (token) {
        const std::string expected = "Bearer " + *token;
        server.set_pre_routing_handler([expected](const httplib::Request& req, httplib::Response& res) {
            if (req.get_header_value("Authorization") == expected) return httplib::Server::HandlerResponse::Unhandled;
            send_error(res, 401, "missing or wrong bearer token");
            return httplib::Server::HandlerResponse::Handled;
        });
    }

    server.Get("/api/review/next", [&service](const httplib::Request&, httplib::Response& res) {
        const auto s = service.next();
        if (!s) return send_json(res, 200, {{"empty", true}});
        send_json(res, 200,
                  {{"empty", false}, {"sample", to_json(*s)}, {"plot_url", fmt::format("/api/samples/{}/plot.svg", s->sample_id)}});
    });

    server.Post(R"(/api/review/([^/]+)/decision)", [&service](const httplib::Request& req, httplib::Response& res) {
        const auto body = nlohmann::json::parse(req.body, nullptr, false);
        if (!body.is_object() || !body.contains("decision") || !body["decision"].is_string())
            return send_error(res, 400, "body must be {\"decision\": \"accept\"|\"reject\", \"notes\": \"...\"}");
        std::string notes;
        if (auto it = body.find("notes"); it != body.end() && it->is_string()) notes = it->get<std::string>();
        const auto out = service.decide(req.matches[1], body["decision"].get<std::string>(), std::move(notes));
        switch (out.code) {
        case DecisionOutcome::Code::ok: return send_json(res, 200, {{"sample", to_json(*out.sample)}});
        case DecisionOutcome::Code::not_found: return send_error(res, 404, out.message);
        case DecisionOutcome::Code::bad_request: return send_error(res, 400, out.message);
        case DecisionOutcome::Code::conflict:
            return send_json(res, 409, {{"error", out.message}, {"sample", to_json(*out.sample)}});
        }
    });

    server.Get(R"(/api/samples/([^/]+)/plot\.svg)", [&service](const httplib::Request& req, httplib::Response& res) {
        const auto svg = service.plot_svg(req.matches[1]);
        if (!svg) return send_error(res, 404, fmt::format("no plot for {}", std::string(req.matches[1])));
        res.set_content(*svg, "image/svg+xml");
    });

    server.Get("/api/stats", [&service](const httplib::Request&, httplib::Response& res) {
        send_json(res, 200, service.stats());
    });

    server.Get("/api/export", [&service](const httplib::Request& req, httplib::Response& res) {
        const auto name = req.has_param("status") ? req.get_param_value("status") : std::string("accepted");
        const auto status = sample_status_from_string(name);
        if (!status) return send_error(res, 400, fmt::format("unknown status \"{}\"", name));
        res.set_content(service.export_jsonl(*status), "application/x-ndjson");
    });
}

struct ReviewServer::Impl {
    httplib::Server server;
    std::thread thread;
};

ReviewServer::ReviewServer(ReviewService& service, std::optional<std::string> token) : impl_(std::make_unique<Impl>()) {
    install_review_routes(impl_->server, service, std::move(token));
}

ReviewServer::~ReviewServer() { stop(); }

int ReviewServer::start(const std::string& host, int port) {
    int bound = port;
    if (port == 0) bound = impl_->server.bind_to_any_port(host);
    else if (!impl_->server.bind_to_port(host, port)) bound = -1;
    if (bound < 0) throw std::runtime_error(fmt::format("cannot bind {}:{}", host, port));
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return bound;
}

void ReviewServer::run(const std::string& host, int port) {
    if (!impl_->server.listen(host, port)) throw std::runtime_error(fmt::format("cannot listen on {}:{}", host, port));
}

void ReviewServer::stop() {
    impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

} // namespace tsrl::datapipe
