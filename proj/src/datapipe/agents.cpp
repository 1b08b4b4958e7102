#include "tsrl/datapipe/agents.hpp"

#include <algorithm>
#include <cctype>

#include <fmt/format.h>

#include "tsrl/datapipe/prompts.hpp"
#include "tsrl/plot/validate.hpp"
#include "tsrl/reward/reward.hpp"
#include "tsrl/series/dsl.hpp"
#include "tsrl/series/rng.hpp"
#include "tsrl/series/synth.hpp"
#include "tsrl/series/time.hpp"

namespace tsrl::datapipe {
namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

const nlohmann::json& field(const nlohmann::json& doc, const char* key, nlohmann::json::value_t type) {
    const auto it = doc.find(key);
    if (it == doc.end()) throw ReplyError(fmt::format("reply lacks \"{}\"", key));
    if (it->type() != type) throw ReplyError(fmt::format("reply field \"{}\" has type {}", key, it->type_name()));
    return *it;
}

} // namespace

std::string candidate_id(std::uint64_t scenario_seed, TaskKind kind) {
    return fmt::format("cand-{}-{:016x}", to_string(kind), derive_seed({scenario_seed, static_cast<std::uint64_t>(kind)}));
}

std::string build_generation_prompt(std::uint64_t scenario_seed, TaskKind kind) {
    if (!is_mcq(kind)) throw std::invalid_argument("the generation agent builds reasoning tasks only");
    return render_template(prompt_template("generation_shared"),
                           {{"scenario_seed", fmt::format("{:016x}", scenario_seed)},
                            {"task_description", trim(prompt_template(task_template_name(kind)))}});
}

QASample parse_generation_reply(std::string_view reply, TaskKind kind, std::string sample_id) {
    const auto open = reply.find('{');
    const auto close = reply.rfind('}');
    if (open == std::string_view::npos || close == std::string_view::npos || close < open)
        throw ReplyError("reply contains no JSON object");
    const auto doc = nlohmann::json::parse(reply.substr(open, close - open + 1), nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) throw ReplyError("reply is not valid JSON");

    QASample s;
    s.sample_id = std::move(sample_id);
    s.task_kind = kind;
    s.scenario = field(doc, "scenario", nlohmann::json::value_t::string).get<std::string>();
    s.question = field(doc, "question", nlohmann::json::value_t::string).get<std::string>();
    s.gold_answer = trim(field(doc, "answer", nlohmann::json::value_t::string).get<std::string>());
    for (const auto& o : field(doc, "options", nlohmann::json::value_t::array)) {
        if (!o.is_object() || !o.contains("label") || !o.contains("text") || !o["label"].is_string() ||
            !o["text"].is_string())
            throw ReplyError("each option needs string \"label\" and \"text\"");
        s.options.push_back({trim(o["label"].get<std::string>()), o["text"].get<std::string>()});
    }
    s.series_spec = field(doc, "series_spec", nlohmann::json::value_t::object);
    if (const auto issues = check_sample(s); !issues.empty()) throw ReplyError(issues.front());
    s.status = SampleStatus::generated;
    return s;
}

GenerationOutcome generate_candidate(std::uint64_t scenario_seed, TaskKind kind, ChatClient& client,
                                     int max_attempts) {
    GenerationOutcome out;
    const std::string prompt = build_generation_prompt(scenario_seed, kind);
    bool any_reply = false;
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        ChatRequest req;
        req.messages.push_back(ChatMessage::text("user", prompt));
        req.temperature = 1.0;
        req.seed = scenario_seed + static_cast<std::uint64_t>(attempt);
        const auto res = client.complete(req);
        if (!res.ok) {
            out.diagnostics.push_back(fmt::format("attempt {}: endpoint error: {}", attempt + 1, res.error));
            continue;
        }
        any_reply = true;
        try {
            out.sample = parse_generation_reply(res.content, kind, candidate_id(scenario_seed, kind));
            out.status = GenerationOutcome::Status::ok;
            return out;
        } catch (const ReplyError& e) {
            out.diagnostics.push_back(fmt::format("attempt {}: {}", attempt + 1, e.what()));
        }
    }
    out.status = any_reply ? GenerationOutcome::Status::malformed : GenerationOutcome::Status::endpoint_error;
    return out;
}

bool answers_match(TaskKind kind, std::string_view response, std::string_view gold) {
    const auto extracted = reward::extract_answer(response);
    if (!extracted) return false;
    const auto task = reward::answer_task_for(kind);
    const auto pred = reward::parse_structured_answer(*extracted, task);
    const auto truth = reward::parse_structured_answer(gold, task);
    if (!pred || !truth) return false;
    if (task == reward::AnswerTask::mcq || task == reward::AnswerTask::noise)
        return lower(std::get<reward::ChoicePayload>(pred.answer->payload).choice) ==
               lower(std::get<reward::ChoicePayload>(truth.answer->payload).choice);
    return reward::serialize(*pred.answer) == reward::serialize(*truth.answer);
}

std::optional<JudgeVerdict> judge_necessity(const QASample& sample, ChatClient& client) {
    const std::string prompt = render_template(
        prompt_template("judge_necessity"),
        {{"scenario", sample.scenario}, {"question", sample.question}, {"options", format_options(sample.options)}});
    JudgeVerdict v;
    v.judge = JudgeKind::necessity;
    v.trial_outcomes.emplace();
    int correct = 0;
    for (int t = 0; t < kNecessityTrials; ++t) {
        ChatRequest req;
        req.messages.push_back(ChatMessage::text("user", prompt));
        req.temperature = 1.0;
        req.seed = static_cast<std::uint64_t>(t);
        const auto res = client.complete(req);
        if (!res.ok) return std::nullopt;
        const bool ok = answers_match(sample.task_kind, res.content, sample.gold_answer);
        v.trial_outcomes->push_back(ok);
        correct += ok;
    }
    v.passed = correct < kNecessityFlagAt;
    v.detail = v.passed ? fmt::format("{}/{} text-only trials correct", correct, kNecessityTrials)
                        : fmt::format("{} ({}/{} text-only trials correct)", kNecessityFlag, correct, kNecessityTrials);
    return v;
}

ConsistencyReply parse_consistency_reply(std::string_view text) {
    ConsistencyReply out;
    auto inner = [&](std::string_view open, std::string_view close) -> std::vector<std::string> {
        std::vector<std::string> found;
        std::size_t pos = 0;
        while ((pos = text.find(open, pos)) != std::string_view::npos) {
            const auto end = text.find(close, pos + open.size());
            if (end == std::string_view::npos) break;
            found.push_back(trim(text.substr(pos + open.size(), end - pos - open.size())));
            pos = end + close.size();
        }
        return found;
    };
    const auto verdicts = inner("<verdict>", "</verdict>");
    const auto reasons = inner("<reason>", "</reason>");
    if (!reasons.empty()) out.reason = reasons.back();
    if (verdicts.size() != 1) return out;
    const auto v = lower(verdicts.front());
    if (v == "yes") out.verdict = ConsistencyReply::Verdict::yes;
    else if (v == "no") out.verdict = ConsistencyReply::Verdict::no;
    return out;
}

std::string describe_series_spec(const nlohmann::json& doc) {
    std::string out;
    const auto parsed = series::parse_series_spec(doc);
    if (parsed.spec) {
        const auto& s = *parsed.spec;
        out += fmt::format("- {} points every {} starting {}\n", s.count, series::format_duration(s.step),
                           series::format_rfc3339(s.start_time));
        out += fmt::format("- base level {}\n", s.base_level);
        if (s.trend) out += fmt::format("- linear trend of {} per step\n", s.trend->slope);
        if (s.seasonality)
            out += fmt::format("- {} seasonality, period {} steps, amplitude {}\n",
                               series::to_string(s.seasonality->waveform), s.seasonality->period,
                               s.seasonality->amplitude);
        out += fmt::format("- gaussian noise with sigma {}\n", s.noise.sigma);
        for (const auto& seg : s.ood_segments)
            out += fmt::format("- {} of magnitude {} on indices [{}, {})\n", series::to_string(seg.kind),
                               seg.magnitude, seg.start_index, seg.end_index());
    } else {
        out += "- (specification does not parse)\n";
    }
    out += "Specification document:\n" + doc.dump(2);
    return out;
}

std::optional<JudgeVerdict> judge_consistency(const QASample& sample, ChatClient& client) {
    ChatRequest req;
    req.messages.push_back(ChatMessage::text(
        "user", render_template(prompt_template("judge_consistency"),
                                {{"scenario", sample.scenario},
                                 {"question", sample.question},
                                 {"options", format_options(sample.options)},
                                 {"gold_answer", sample.gold_answer},
                                 {"series_description", describe_series_spec(sample.series_spec)}})));
    req.temperature = 0.0;
    const auto res = client.complete(req);
    if (!res.ok) return std::nullopt;
    const auto reply = parse_consistency_reply(res.content);
    JudgeVerdict v;
    v.judge = JudgeKind::consistency;
    switch (reply.verdict) {
    case ConsistencyReply::Verdict::yes:
        v.passed = true;
        v.detail = reply.reason;
        break;
    case ConsistencyReply::Verdict::no:
        v.passed = false;
        v.detail = reply.reason.empty() ? "judge denied consistency" : reply.reason;
        break;
    case ConsistencyReply::Verdict::unparseable:
        v.passed = false;
        v.detail = "unparseable verdict";
        break;
    }
    return v;
}

JudgeVerdict judge_requirements(const QASample& sample) {
    std::vector<std::string> problems;
    for (const auto& issue : check_sample(sample)) problems.push_back("sample: " + issue);
    const auto parsed = series::parse_series_spec(sample.series_spec);
    for (const auto& issue : parsed.issues) {
        problems.push_back(issue.rule_id == "time_format"
                               ? fmt::format("time_format: improper time format: {}", issue.message)
                               : fmt::format("{}: {}", issue.rule_id, issue.message));
    }
    if (parsed.ok() && parsed.spec->count > plot::kMaxPoints) {
        // Checked before synthesis so a model-written count cannot exhaust memory.
        problems.push_back(fmt::format("{}: {} points exceed the limit of {}", plot::rule::kMaxPoints,
                                       parsed.spec->count, plot::kMaxPoints));
    } else if (parsed.ok()) {
        const auto series = series::synthesize(*parsed.spec);
        for (const auto& v : plot::validate_for_plot(series, parsed.spec->plot).violations)
            problems.push_back(fmt::format("{}: {}", v.rule_id, v.message));
    }
    JudgeVerdict v;
    v.judge = JudgeKind::requirements;
    v.passed = problems.empty();
    for (const auto& p : problems) v.detail += (v.detail.empty() ? "" : "; ") + p;
    return v;
}

} // namespace tsrl::datapipe
