#include "tsrl/datapipe/chat.hpp"

#include <cmath>
#include <cstdlib>
#include <thread>

#include <fmt/format.h>
#include <httplib.h>
#include <spdlog/spdlog.h>

#include "tsrl/series/rng.hpp"

namespace tsrl::datapipe {

ChatMessage ChatMessage::text(std::string role, std::string text) {
    return {std::move(role), {{ContentPart::Kind::text, std::move(text)}}};
}

std::vector<std::string> validate(const ChatEndpointConfig& c) {
    std::vector<std::string> out;
    if (c.base_url.rfind("http://", 0) != 0 && c.base_url.rfind("https://", 0) != 0)
        out.push_back("base_url must start with http:// or https://");
    if (c.model.empty()) out.push_back("model must be set");
    if (c.max_retries < 1) out.push_back("max_retries must be >= 1");
    if (c.max_parallel < 1) out.push_back("max_parallel must be >= 1");
    if (c.timeout.count() <= 0) out.push_back("timeout must be positive");
    return out;
}

ChatEndpointConfig endpoint_config_from_json(const nlohmann::json& doc) {
    if (!doc.is_object()) throw std::invalid_argument("endpoint config must be a JSON object");
    ChatEndpointConfig c;
    c.base_url = doc.value("base_url", c.base_url);
    c.model = doc.value("model", c.model);
    c.api_key_env = doc.value("api_key_env", c.api_key_env);
    c.timeout = std::chrono::milliseconds(doc.value("timeout_ms", c.timeout.count()));
    c.max_retries = doc.value("max_retries", c.max_retries);
    c.max_parallel = doc.value("max_parallel", c.max_parallel);
    c.backoff_base = std::chrono::milliseconds(doc.value("backoff_ms", c.backoff_base.count()));
    if (const auto issues = validate(c); !issues.empty()) throw std::invalid_argument(issues.front());
    return c;
}

nlohmann::json to_json(const ChatEndpointConfig& c) {
    return {{"base_url", c.base_url},           {"model", c.model},
            {"api_key_env", c.api_key_env},     {"timeout_ms", c.timeout.count()},
            {"max_retries", c.max_retries},     {"max_parallel", c.max_parallel},
            {"backoff_ms", c.backoff_base.count()}};
}

nlohmann::json to_wire_json(const ChatRequest& request, const std::string& model) {
    nlohmann::json messages = nlohmann::json::array();
    for (const auto& m : request.messages) {
        nlohmann::json parts = nlohmann::json::array();
        for (const auto& p : m.content) {
            if (p.kind == ContentPart::Kind::text) parts.push_back({{"type", "text"}, {"text", p.value}});
            else parts.push_back({{"type", "image_url"}, {"image_url", {{"url", p.value}}}});
        }
        messages.push_back({{"role", m.role}, {"content", parts}});
    }
    nlohmann::json body = {{"model", model}, {"messages", messages}};
    if (request.temperature) body["temperature"] = *request.temperature;
    if (request.seed) body["seed"] = *request.seed;
    if (request.max_tokens) body["max_tokens"] = *request.max_tokens;
    return body;
}

ChatResult parse_wire_response(const std::string& body, int http_status) {
    ChatResult r;
    r.http_status = http_status;
    const auto doc = nlohmann::json::parse(body, nullptr, false);
    if (http_status < 200 || http_status >= 300) {
        std::string msg;
        if (doc.is_object() && doc.contains("error")) {
            const auto& e = doc["error"];
            msg = e.is_object() ? e.value("message", e.dump()) : e.dump();
        }
        r.error = fmt::format("HTTP {}{}{}", http_status, msg.empty() ? "" : ": ", msg);
        return r;
    }
    try {
        const auto& content = doc.at("choices").at(0).at("message").at("content");
        if (content.is_string()) {
            r.content = content.get<std::string>();
        } else if (content.is_array()) {
            for (const auto& part : content)
                if (part.value("type", "") == "text") r.content += part.value("text", "");
        } else {
            throw std::invalid_argument("content is neither text nor parts");
        }
        r.ok = true;
    } catch (const std::exception& e) {
        r.error = fmt::format("malformed chat response: {}", e.what());
    }
    return r;
}

std::chrono::milliseconds backoff_delay(std::chrono::milliseconds base, int attempt, std::uint64_t jitter_seed) {
    const double jitter = 0.5 + to_unit(splitmix64(jitter_seed ^ static_cast<std::uint64_t>(attempt)));
    const double ms = static_cast<double>(base.count()) * std::ldexp(1.0, attempt - 1) * jitter;
    return std::chrono::milliseconds(static_cast<long long>(ms));
}

HttpChatClient::HttpChatClient(ChatEndpointConfig config) : config_(std::move(config)) {
    if (const auto issues = validate(config_); !issues.empty()) throw std::invalid_argument(issues.front());
    sleeper = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

ChatResult HttpChatClient::complete(const ChatRequest& request) {
    // Split "scheme://host[:port]/prefix" into the client origin and the path prefix.
    const auto scheme_end = config_.base_url.find("://") + 3;
    const auto path_start = config_.base_url.find('/', scheme_end);
    const std::string origin = config_.base_url.substr(0, path_start);
    std::string prefix = path_start == std::string::npos ? "" : config_.base_url.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    const std::string path = prefix + "/chat/completions";

#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
    if (origin.rfind("https://", 0) == 0) return ChatResult::failure("https endpoint but the build has no TLS support");
#endif

    httplib::Headers headers;
    if (!config_.api_key_env.empty()) {
        const char* token = std::getenv(config_.api_key_env.c_str());
        if (!token || !*token) return ChatResult::failure(fmt::format("environment variable {} is not set", config_.api_key_env));
        headers.emplace("Authorization", fmt::format("Bearer {}", token));
    }
    const std::string body = to_wire_json(request, config_.model).dump();
    const std::uint64_t jitter_seed = derive_seed({request_counter_++, request.seed.value_or(0)});

    ChatResult last;
    for (int attempt = 1; attempt <= config_.max_retries; ++attempt) {
        httplib::Client cli(origin);
        const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
        const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
        cli.set_connection_timeout(secs.count(), usecs.count());
        cli.set_read_timeout(secs.count(), usecs.count());
        cli.set_write_timeout(secs.count(), usecs.count());
        auto res = cli.Post(path, headers, body, "application/json");
        bool retryable = true;
        if (!res) {
            last = ChatResult::failure(fmt::format("transport error: {}", httplib::to_string(res.error())));
        } else {
            last = parse_wire_response(res->body, res->status);
            if (last.ok) {
                last.attempts = attempt;
                return last;
            }
            retryable = res->status == 429 || res->status >= 500;
        }
        last.attempts = attempt;
        if (!retryable || attempt == config_.max_retries) break;
        const auto wait = backoff_delay(config_.backoff_base, attempt, jitter_seed);
        spdlog::warn("chat request failed ({}), retry {} in {} ms", last.error, attempt, wait.count());
        sleeper(wait);
    }
    return last;
}

ChatResult ScriptedChatClient::complete(const ChatRequest& request) {
    ++calls_;
    return script_(request);
}

std::string request_text(const ChatRequest& request) {
    std::string out;
    for (const auto& m : request.messages)
        for (const auto& p : m.content)
            if (p.kind == ContentPart::Kind::text) out += p.value + "\n";
    return out;
}

} // namespace tsrl::datapipe
