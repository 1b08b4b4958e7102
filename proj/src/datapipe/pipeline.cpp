#include "tsrl/datapipe/pipeline.hpp"

#include <atomic>
#include <fstream>
#include <mutex>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "tsrl/datapipe/agents.hpp"
#include "tsrl/plot/render.hpp"
#include "tsrl/series/dsl.hpp"
#include "tsrl/series/rng.hpp"
#include "tsrl/series/synth.hpp"

namespace tsrl::datapipe {

nlohmann::json to_json(const PipelineStats& s) {
    nlohmann::json judges = nlohmann::json::object();
    for (const auto& [name, t] : s.judges)
        judges[name] = {{"judged", t.judged}, {"passed", t.passed}, {"pass_rate", t.pass_rate()}};
    return {{"candidates", s.candidates},
            {"generated", s.generated},
            {"generation_failed", s.generation_failed},
            {"deferred", s.deferred},
            {"rejected", s.rejected},
            {"render_failed", s.render_failed},
            {"pending_review", s.pending_review},
            {"rejected_by", s.rejected_by},
            {"judges", judges},
            {"diagnostics", s.diagnostics}};
}

namespace {

struct CandidateResult {
    enum class End { generation_failed, deferred, rejected, render_failed, pending_review } end{};
    bool generated = false;
    std::vector<JudgeVerdict> verdicts;
    std::vector<std::string> diagnostics;
};

CandidateResult process(std::size_t index, const PipelineConfig& config, const PipelineClients& clients,
                        SampleStore& store) {
    CandidateResult r;
    const auto kind = config.task_kinds[index % config.task_kinds.size()];
    const auto seed = derive_seed({config.seed, index});
    auto gen = generate_candidate(seed, kind, *clients.generator, config.generation_attempts);
    for (auto& d : gen.diagnostics) r.diagnostics.push_back(fmt::format("candidate {}: {}", index, d));
    if (gen.status == GenerationOutcome::Status::endpoint_error) {
        r.end = CandidateResult::End::deferred;
        return r;
    }
    if (gen.status == GenerationOutcome::Status::malformed) {
        r.end = CandidateResult::End::generation_failed;
        return r;
    }
    QASample sample = std::move(*gen.sample);
    if (store.get(sample.sample_id)) {
        r.diagnostics.push_back(fmt::format("candidate {}: {} already in the store, skipped", index, sample.sample_id));
        r.end = CandidateResult::End::deferred;
        return r;
    }
    store.put(sample);
    r.generated = true;

    r.verdicts.push_back(judge_requirements(sample));
    const auto necessity = judge_necessity(sample, *clients.necessity);
    const auto consistency = judge_consistency(sample, *clients.consistency);
    if (necessity) r.verdicts.push_back(*necessity);
    if (consistency) r.verdicts.push_back(*consistency);
    sample.verdicts = r.verdicts;
    if (!necessity || !consistency) {
        // Stays generated with whatever verdicts came back.
        store.put(sample);
        r.diagnostics.push_back(fmt::format("candidate {}: judge endpoint unavailable, deferred", index));
        r.end = CandidateResult::End::deferred;
        return r;
    }

    sample.status = SampleStatus::judged;
    store.put(sample);
    const bool all_passed = std::all_of(r.verdicts.begin(), r.verdicts.end(), [](const auto& v) { return v.passed; });
    if (!all_passed) {
        sample.status = SampleStatus::rejected;
        store.put(sample);
        r.end = CandidateResult::End::rejected;
        return r;
    }

    try {
        const auto series = series::synthesize(series::series_spec_from_json(sample.series_spec));
        const auto svg = plot::render_svg(series, series.spec.plot);
        const std::string rel = fmt::format("plots/{}.svg", sample.sample_id);
        std::ofstream out(store.resolve(rel), std::ios::binary);
        out << svg;
        if (!out) throw std::runtime_error("cannot write " + rel);
        sample.plot_path = rel;
    } catch (const std::exception& e) {
        r.diagnostics.push_back(fmt::format("candidate {}: render failed: {}", index, e.what()));
        sample.status = SampleStatus::rejected;
        sample.review_notes = fmt::format("render failed: {}", e.what());
        store.put(sample);
        r.end = CandidateResult::End::render_failed;
        return r;
    }
    sample.status = SampleStatus::rendered;
    store.put(sample);
    sample.status = SampleStatus::pending_review;
    store.put(sample);
    r.end = CandidateResult::End::pending_review;
    return r;
}

} // namespace

PipelineStats run_pipeline(const PipelineConfig& config, const PipelineClients& clients, SampleStore& store) {
    if (!clients.generator || !clients.necessity || !clients.consistency)
        throw std::invalid_argument("pipeline needs generator, necessity, and consistency clients");
    if (config.task_kinds.empty()) throw std::invalid_argument("pipeline needs at least one task kind");
    if (config.max_parallel < 1) throw std::invalid_argument("max_parallel must be >= 1");

    std::vector<CandidateResult> results(config.candidates);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < config.candidates; i = next++) {
            try {
                results[i] = process(i, config, clients, store);
            } catch (const std::exception& e) {
                results[i].end = CandidateResult::End::generation_failed;
                results[i].diagnostics.push_back(fmt::format("candidate {}: {}", i, e.what()));
            }
        }
    };
    const auto n_threads = std::min<std::size_t>(static_cast<std::size_t>(config.max_parallel), config.candidates);
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    PipelineStats s;
    s.candidates = config.candidates;
    for (const auto& r : results) {
        for (const auto& d : r.diagnostics) s.diagnostics.push_back(d);
        for (const auto& v : r.verdicts) {
            auto& tally = s.judges[std::string(to_string(v.judge))];
            ++tally.judged;
            tally.passed += v.passed;
        }
        s.generated += r.generated;
        switch (r.end) {
        case CandidateResult::End::generation_failed: ++s.generation_failed; break;
        case CandidateResult::End::deferred: ++s.deferred; break;
        case CandidateResult::End::render_failed: ++s.render_failed; break;
        case CandidateResult::End::pending_review: ++s.pending_review; break;
        case CandidateResult::End::rejected:
            ++s.rejected;
            for (const auto& v : r.verdicts)
                if (!v.passed) ++s.rejected_by[std::string(to_string(v.judge))];
            break;
        }
    }
    spdlog::info("pipeline: {} candidates, {} pending review, {} rejected, {} deferred, {} failed", s.candidates,
                 s.pending_review, s.rejected, s.deferred, s.generation_failed);
    return s;
}

} // namespace tsrl::datapipe
