#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace tsrl::datapipe {

struct ContentPart {
    enum class Kind { text, image_url } kind = Kind::text;
    std::string value; // text, or an http(s)/data URL
};

struct ChatMessage {
    std::string role;
    std::vector<ContentPart> content;

    static ChatMessage text(std::string role, std::string text);
};

struct ChatRequest {
    std::vector<ChatMessage> messages;
    std::optional<double> temperature;
    std::optional<std::uint64_t> seed;
    std::optional<int> max_tokens;
};

struct ChatResult {
    bool ok = false;
    std::string content;
    std::string error;
    int http_status = 0;
    int attempts = 0;

    static ChatResult success(std::string content) { return {true, std::move(content), {}, 200, 1}; }
    static ChatResult failure(std::string error, int status = 0) { return {false, {}, std::move(error), status, 1}; }
};

class ChatClient {
public:
    virtual ~ChatClient() = default;
    /// Never throws for endpoint problems; they come back as ok = false.
    virtual ChatResult complete(const ChatRequest& request) = 0;
};

struct ChatEndpointConfig {
    std::string base_url;            // e.g. https://api.example.com/v1
    std::string model;
    std::string api_key_env;         // name of the environment variable holding the bearer token
    std::chrono::milliseconds timeout{60000};
    int max_retries = 3;             // total attempts
    int max_parallel = 4;
    std::chrono::milliseconds backoff_base{500};
};

std::vector<std::string> validate(const ChatEndpointConfig& config);
ChatEndpointConfig endpoint_config_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const ChatEndpointConfig& config);

/// Chat-completions request body: {"model", "messages": [{"role", "content": [...]}], ...}
nlohmann::json to_wire_json(const ChatRequest& request, const std::string& model);
/// First choice's message content; a string or an array of text parts is accepted.
ChatResult parse_wire_response(const std::string& body, int http_status);

/// Delay before retry number `attempt` (1-based): base * 2^(attempt-1) scaled by a
/// jitter factor in [0.5, 1.5) drawn from `jitter_seed`.
std::chrono::milliseconds backoff_delay(std::chrono::milliseconds base, int attempt, std::uint64_t jitter_seed);

/// POST {base_url}/chat/completions with retries on transport errors, 429 and 5xx.
class HttpChatClient : public ChatClient {
public:
    explicit HttpChatClient(ChatEndpointConfig config);
    ChatResult complete(const ChatRequest& request) override;

    /// Tests shorten the waits; production keeps std::this_thread::sleep_for.
    std::function<void(std::chrono::milliseconds)> sleeper;

private:
    ChatEndpointConfig config_;
    std::atomic<std::uint64_t> request_counter_{0};
};

/// Mock endpoint driven by a callback; counts calls. Safe to call from several threads
/// as long as the callback is.
class ScriptedChatClient : public ChatClient {
public:
    using Script = std::function<ChatResult(const ChatRequest&)>;
    explicit ScriptedChatClient(Script script) : script_(std::move(script)) {}
    ChatResult complete(const ChatRequest& request) override;
    std::size_t calls() const { return calls_.load(); }

private:
    Script script_;
    std::atomic<std::size_t> calls_{0};
};

/// Concatenated text of every part of every message; handy for mock routing.
std::string request_text(const ChatRequest& request);

} // namespace tsrl::datapipe
