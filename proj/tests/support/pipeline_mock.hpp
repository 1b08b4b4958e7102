#pragma once

// Scripted endpoints for a planted candidate corpus. Candidate i's plan decides what the
// generator writes and how the two model judges answer; the case index travels in the
// question text as "[case i]" so every judge can route on it.

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include "tsrl/datapipe/chat.hpp"
#include "tsrl/series/rng.hpp"

namespace tsrl::fixtures {

enum class Flaw { none, necessity, consistency, requirements, malformed };

struct CandidatePlan {
    Flaw flaw = Flaw::none;
    int necessity_correct = 1; // trials out of 5 the text-only judge gets right
};

inline nlohmann::json valid_series_spec(std::uint64_t seed, long count = 96) {
    return {{"start_time", "2024-03-01T00:00:00Z"},
            {"step", "1h"},
            {"count", count},
            {"base_level", 20.0},
            {"seasonality", {{"period", count >= 48 ? 24 : 4}, {"amplitude", 4.0}, {"waveform", "sine"}}},
            {"noise", {{"sigma", 0.5}}},
            {"rng_seed", seed % 100000},
            {"plot", {{"title", "Load"}, {"x_label", "time"}, {"y_label", "kW"}, {"x_tick_format", "%m-%d %H:%M"}}}};
}

inline std::string sample_reply(int case_index, const nlohmann::json& spec, const std::string& answer = "B") {
    nlohmann::json doc = {
        {"scenario", fmt::format("Hourly load of building {}", case_index)},
        {"question", fmt::format("[case {}] Which describes the daily pattern?", case_index)},
        {"options",
         {{{"label", "A"}, {"text", "flat"}},
          {{"label", "B"}, {"text", "daily cycle"}},
          {{"label", "C"}, {"text", "weekly cycle"}},
          {{"label", "D"}, {"text", "steady decline"}}}},
        {"answer", answer},
        {"series_spec", spec}};
    return "Here is the sample:\n```json\n" + doc.dump(2) + "\n```";
}

inline std::optional<int> case_of(const std::string& text) {
    static const std::regex re(R"(\[case (\d+)\])");
    std::smatch m;
    if (!std::regex_search(text, m, re)) return std::nullopt;
    return std::stoi(m[1]);
}

class PlantedCorpus {
public:
    PlantedCorpus(std::uint64_t pipeline_seed, std::vector<CandidatePlan> plans) : plans_(std::move(plans)) {
        for (std::size_t i = 0; i < plans_.size(); ++i)
            by_seed_[fmt::format("{:016x}", tsrl::derive_seed({pipeline_seed, i}))] = static_cast<int>(i);
    }

    const std::vector<CandidatePlan>& plans() const { return plans_; }

    tsrl::datapipe::ScriptedChatClient::Script generator() const {
        return [this](const tsrl::datapipe::ChatRequest& req) {
            static const std::regex re("Scenario seed: ([0-9a-f]{16})");
            const auto text = tsrl::datapipe::request_text(req);
            std::smatch m;
            if (!std::regex_search(text, m, re) || !by_seed_.count(m[1]))
                return tsrl::datapipe::ChatResult::failure("unknown scenario seed", 400);
            const int i = by_seed_.at(m[1]);
            const auto& plan = plans_[static_cast<std::size_t>(i)];
            switch (plan.flaw) {
            case Flaw::malformed: return tsrl::datapipe::ChatResult::success("I cannot produce JSON today.");
            case Flaw::requirements: return tsrl::datapipe::ChatResult::success(sample_reply(i, valid_series_spec(i, 12)));
            default: return tsrl::datapipe::ChatResult::success(sample_reply(i, valid_series_spec(i)));
            }
        };
    }

    /// Answers gold ("B") on trials with seed < necessity_correct, "D" otherwise.
    tsrl::datapipe::ScriptedChatClient::Script necessity() const {
        return [this](const tsrl::datapipe::ChatRequest& req) {
            const auto i = case_of(tsrl::datapipe::request_text(req));
            if (!i) return tsrl::datapipe::ChatResult::failure("no case marker", 400);
            const auto& plan = plans_[static_cast<std::size_t>(*i)];
            const bool right = static_cast<int>(req.seed.value_or(0)) < plan.necessity_correct;
            return tsrl::datapipe::ChatResult::success(
                fmt::format("Guessing from the text. <answer>{}</answer>", right ? "B" : "D"));
        };
    }

    tsrl::datapipe::ScriptedChatClient::Script consistency() const {
        return [this](const tsrl::datapipe::ChatRequest& req) {
            const auto i = case_of(tsrl::datapipe::request_text(req));
            if (!i) return tsrl::datapipe::ChatResult::failure("no case marker", 400);
            if (plans_[static_cast<std::size_t>(*i)].flaw == Flaw::consistency)
                return tsrl::datapipe::ChatResult::success(
                    "<verdict>no</verdict><reason>option C is also supported</reason>");
            return tsrl::datapipe::ChatResult::success("<verdict>yes</verdict><reason>the cycle is daily</reason>");
        };
    }

private:
    std::vector<CandidatePlan> plans_;
    std::map<std::string, int> by_seed_;
};

/// 40 candidates: 10 each of necessity (3..5 of 5 text-only correct), consistency,
/// requirements flaws and clean ones (0..2 of 5 correct), interleaved.
inline std::vector<CandidatePlan> gate_soundness_plans() {
    std::vector<CandidatePlan> plans;
    for (int i = 0; i < 40; ++i) {
        switch (i % 4) {
        case 0: plans.push_back({Flaw::necessity, 3 + (i / 4) % 3}); break;
        case 1: plans.push_back({Flaw::consistency, 1}); break;
        case 2: plans.push_back({Flaw::requirements, 1}); break;
        default: plans.push_back({Flaw::none, (i / 4) % 3}); break;
        }
    }
    return plans;
}

} // namespace tsrl::fixtures
