#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tsrl/datapipe/chat.hpp"
#include "tsrl/series/sample.hpp"

namespace tsrl::datapipe {

// Generation ----------------------------------------------------------------

struct GenerationOutcome {
    enum class Status { ok, endpoint_error, malformed } status = Status::malformed;
    std::optional<QASample> sample;
    std::vector<std::string> diagnostics; // one entry per failed attempt
};

std::string build_generation_prompt(std::uint64_t scenario_seed, TaskKind kind);
std::string candidate_id(std::uint64_t scenario_seed, TaskKind kind);

class ReplyError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Parses the generator's JSON reply (prose or code fences around the object are
/// tolerated). The series spec is kept verbatim; its validity is the requirements
/// judge's business. Throws ReplyError.
QASample parse_generation_reply(std::string_view reply, TaskKind kind, std::string sample_id);

/// Up to `max_attempts` requests; malformed replies and endpoint failures are retried.
GenerationOutcome generate_candidate(std::uint64_t scenario_seed, TaskKind kind, ChatClient& client,
                                     int max_attempts = 3);

// Judges --------------------------------------------------------------------

inline constexpr int kNecessityTrials = 5;
/// Flag when strictly more than half of the trials are correct.
inline constexpr int kNecessityFlagAt = 3;
inline constexpr std::string_view kNecessityFlag = "lacking sufficient data necessity";

/// Same answer grammar as the reward engine; labels compare case-insensitively.
bool answers_match(TaskKind kind, std::string_view response, std::string_view gold);

/// Absent when the endpoint failed (verdict deferred).
std::optional<JudgeVerdict> judge_necessity(const QASample& sample, ChatClient& client);

struct ConsistencyReply {
    enum class Verdict { yes, no, unparseable } verdict = Verdict::unparseable;
    std::string reason;
};
/// Exactly one <verdict> tag holding yes or no; anything else is unparseable.
ConsistencyReply parse_consistency_reply(std::string_view text);

/// Plain-language rendition of a series DSL document, followed by the document itself.
std::string describe_series_spec(const nlohmann::json& spec);

std::optional<JudgeVerdict> judge_consistency(const QASample& sample, ChatClient& client);

/// Deterministic: sample invariants, DSL issues, and plot validation rules.
JudgeVerdict judge_requirements(const QASample& sample);

} // namespace tsrl::datapipe
