#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "tsrl/datapipe/chat.hpp"
#include "tsrl/datapipe/store.hpp"

namespace tsrl::datapipe {

/// Judges may use different endpoints from the generator.
struct PipelineClients {
    ChatClient* generator = nullptr;
    ChatClient* necessity = nullptr;
    ChatClient* consistency = nullptr;
};

struct PipelineConfig {
    std::size_t candidates = 20;
    std::uint64_t seed = 0;
    std::vector<TaskKind> task_kinds{std::begin(kReasoningTasks), std::end(kReasoningTasks)};
    int max_parallel = 4;
    int generation_attempts = 3;
};

struct JudgeTally {
    std::size_t judged = 0;
    std::size_t passed = 0;
    double pass_rate() const { return judged ? static_cast<double>(passed) / static_cast<double>(judged) : 0.0; }
};

struct PipelineStats {
    std::size_t candidates = 0;
    std::size_t generated = 0;
    std::size_t generation_failed = 0; // malformed replies after every attempt
    std::size_t deferred = 0;          // endpoint unavailable; nothing decided
    std::size_t rejected = 0;          // failed at least one judge
    std::size_t render_failed = 0;
    std::size_t pending_review = 0;
    std::map<std::string, std::size_t> rejected_by; // judge name -> samples it failed
    std::map<std::string, JudgeTally> judges;
    std::vector<std::string> diagnostics;
};

nlohmann::json to_json(const PipelineStats& stats);

/// Candidate i uses scenario seed derive_seed({seed, i}) and task kind task_kinds[i % n].
/// generate -> three judges (all must pass) -> render SVG -> pending_review; every state
/// change is persisted. Failures are recorded and the run continues.
PipelineStats run_pipeline(const PipelineConfig& config, const PipelineClients& clients, SampleStore& store);

} // namespace tsrl::datapipe
