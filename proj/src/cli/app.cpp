#include "tsrl/cli/app.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "tsrl/datapipe/pipeline.hpp"
#include "tsrl/datapipe/review.hpp"
#include "tsrl/eval/eval.hpp"
#include "tsrl/grpo/train.hpp"
#include "tsrl/plot/render.hpp"
#include "tsrl/plot/validate.hpp"
#include "tsrl/reward/reward.hpp"
#include "tsrl/series/dsl.hpp"
#include "tsrl/series/primitive_qa.hpp"
#include "tsrl/series/rng.hpp"
#include "tsrl/series/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace tsrl::cli {
namespace {

struct RuntimeFailure : std::runtime_error {
    std::string kind;
    RuntimeFailure(std::string kind_, const std::string& msg) : std::runtime_error(msg), kind(std::move(kind_)) {}
};

struct UsageFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

json read_json_file(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw RuntimeFailure("io", fmt::format("cannot open {}", p.string()));
    auto doc = json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw RuntimeFailure("input", fmt::format("{} is not valid JSON", p.string()));
    return doc;
}

/// A single JSON document, or one document per line.
std::vector<json> read_json_documents(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw RuntimeFailure("io", fmt::format("cannot open {}", p.string()));
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    if (auto whole = json::parse(text, nullptr, false); !whole.is_discarded()) {
        if (whole.is_array()) return whole.get<std::vector<json>>();
        return {whole};
    }
    std::vector<json> docs;
    std::istringstream lines(text);
    std::string line;
    for (std::size_t n = 1; std::getline(lines, line); ++n) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto doc = json::parse(line, nullptr, false);
        if (doc.is_discarded()) throw RuntimeFailure("input", fmt::format("{}:{}: not valid JSON", p.string(), n));
        docs.push_back(std::move(doc));
    }
    return docs;
}

void write_file(const fs::path& p, std::string_view content) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw RuntimeFailure("io", fmt::format("cannot write {}", p.string()));
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

void ensure_out_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (!fs::is_directory(dir)) throw RuntimeFailure("io", fmt::format("cannot create output directory {}", dir.string()));
}

std::string jsonl(const std::vector<json>& docs) {
    std::string out;
    for (const auto& d : docs) out += d.dump() + "\n";
    return out;
}

series::SeriesSpec parse_spec_or_throw(const json& doc, const std::string& where) {
    const auto parsed = series::parse_series_spec(doc);
    if (parsed.ok()) return *parsed.spec;
    std::string msg;
    for (const auto& i : parsed.issues) msg += (msg.empty() ? "" : "; ") + i.rule_id + ": " + i.message;
    throw RuntimeFailure("invalid_spec", fmt::format("{}: {}", where, msg));
}

// Endpoint files: one ChatEndpointConfig for every role, or {"generator", "necessity",
// "consistency"} with the judges falling back to the generator's endpoint.
std::map<std::string, datapipe::ChatEndpointConfig> load_endpoints(const fs::path& p,
                                                                   const std::vector<std::string>& roles) {
    const auto doc = read_json_file(p);
    std::map<std::string, datapipe::ChatEndpointConfig> out;
    auto parse = [&](const json& d, const std::string& role) {
        try {
            auto cfg = datapipe::endpoint_config_from_json(d);
            if (const auto issues = datapipe::validate(cfg); !issues.empty())
                throw RuntimeFailure("config", fmt::format("{} endpoint: {}", role, issues.front()));
            return cfg;
        } catch (const std::invalid_argument& e) {
            throw RuntimeFailure("config", fmt::format("{} endpoint: {}", role, e.what()));
        }
    };
    const bool per_role = roles.size() > 1 && doc.is_object() && std::any_of(roles.begin(), roles.end(), [&](auto& r) { return doc.contains(r); });
    if (!per_role) {
        const auto cfg = parse(doc, roles.front());
        for (const auto& r : roles) out.emplace(r, cfg);
        return out;
    }
    for (const auto& r : roles) {
        if (doc.contains(r)) out.emplace(r, parse(doc[r], r));
        else if (out.count(roles.front())) out.emplace(r, out.at(roles.front()));
        else throw RuntimeFailure("config", fmt::format("endpoint file has no \"{}\" entry", r));
    }
    return out;
}

} // namespace

struct Command {
    CLI::App app{"Time-series reasoning toolkit: synthesis, plotting, rewards, toy RL, data pipeline, evaluation.",
                 "tsrl"};
    std::string config_path;
    bool verbose = false;
    bool quiet = false;

    struct {
        std::uint64_t seed = 0;
        std::size_t count = 20;
        std::string spec_file;
        std::string out;
    } synth;
    struct {
        std::string specs;
        std::string out;
        std::string format = "svg";
    } render;
    struct {
        std::string input = "-";
    } reward;
    struct {
        std::string round;
        std::uint64_t seed = 0;
        std::optional<std::size_t> steps;
        std::optional<std::size_t> perception_steps;
        std::size_t prompts = 64;
        std::optional<double> learning_rate;
        std::optional<std::size_t> group_size;
        std::optional<std::size_t> rollout_batch;
        std::string init;
        std::string out;
    } train;
    struct {
        std::string store;
        std::string endpoint;
        std::size_t candidates = 20;
        std::uint64_t seed = 0;
        int max_parallel = 4;
        std::vector<std::string> tasks;
    } pipeline;
    struct {
        std::string store;
        std::string host = "127.0.0.1";
        int port = 8080;
        std::string token_env;
    } review;
    struct {
        std::string samples;
        std::string store;
        std::string endpoint;
        int repeats = 5;
        std::uint64_t seed = 0;
        std::optional<double> temperature;
        int max_parallel = 4;
        std::string model_name = "model";
        std::string out;
    } eval;

    CLI::App* synth_cmd = nullptr;
    CLI::App* render_cmd = nullptr;
    CLI::App* reward_cmd = nullptr;
    CLI::App* train_cmd = nullptr;
    CLI::App* pipeline_cmd = nullptr;
    CLI::App* pipeline_run = nullptr;
    CLI::App* review_cmd = nullptr;
    CLI::App* review_serve = nullptr;
    CLI::App* eval_cmd = nullptr;
};

void CommandDeleter::operator()(Command* c) const { delete c; }

CommandPtr make_command() {
    CommandPtr c(new Command);
    auto& app = c->app;
    app.require_subcommand(1);
    app.option_defaults()->always_capture_default();
    app.add_option("--config", c->config_path,
                   "JSON file with per-subcommand defaults, e.g. {\"synth\": {\"seed\": 7}}; flags override it")
        ->check(CLI::ExistingFile);
    app.add_flag("-v,--verbose", c->verbose, "Debug logging on stderr");
    app.add_flag("-q,--quiet", c->quiet, "Only errors on stderr");

    auto* s = c->synth_cmd = app.add_subcommand("synth", "Synthesize labelled series and primitive QA samples");
    s->add_option("--seed", c->synth.seed, "Base seed for random specs and question phrasing");
    s->add_option("--count", c->synth.count, "Number of random specs to draw (ignored with --spec)")
        ->check(CLI::Range(std::size_t{1}, std::size_t{1000000}));
    s->add_option("--spec", c->synth.spec_file, "Series DSL document, JSON array, or JSONL file instead of random specs")
        ->check(CLI::ExistingFile);
    s->add_option("--out", c->synth.out, "Output directory")->required();

    auto* r = c->render_cmd = app.add_subcommand("render", "Render series specs to chart images");
    r->add_option("--specs", c->render.specs, "specs.jsonl from synth, or any DSL document / JSONL of documents")
        ->required()
        ->check(CLI::ExistingFile);
    r->add_option("--out", c->render.out, "Output directory")->required();
    r->add_option("--format", c->render.format, "Image format")->check(CLI::IsMember({"svg", "png", "both"}));

    auto* g = c->reward_cmd = app.add_subcommand(
        "reward", "Grade JSONL records {\"response\", \"task\", \"truth\", \"series_len\"?} and print breakdowns");
    g->add_option("--input", c->reward.input, "Input file, '-' for stdin");

    auto* t = c->train_cmd = app.add_subcommand("train-toy", "Train the tabular toy policy with GRPO");
    t->add_option("--round", c->train.round,
                  "perception (primitive prompts), reasoning (MCQ prompts), or curriculum (both in order)")
        ->required()
        ->check(CLI::IsMember({"perception", "reasoning", "curriculum"}));
    t->add_option("--seed", c->train.seed, "Seed for prompts and rollouts");
    t->add_option("--steps", c->train.steps, "Steps of the selected round (the reasoning round for curriculum)");
    t->add_option("--perception-steps", c->train.perception_steps, "Perception steps in a curriculum run");
    t->add_option("--prompts", c->train.prompts, "Prompts per round")->check(CLI::PositiveNumber);
    t->add_option("--learning-rate", c->train.learning_rate, "Override the round's learning rate");
    t->add_option("--group-size", c->train.group_size, "Rollouts per prompt (G)");
    t->add_option("--rollout-batch", c->train.rollout_batch, "Prompts per step");
    t->add_option("--init", c->train.init, "policy.json from an earlier run to start from")->check(CLI::ExistingFile);
    t->add_option("--out", c->train.out, "Output directory")->required();

    c->pipeline_cmd = app.add_subcommand("pipeline", "Candidate generation and judging");
    c->pipeline_cmd->require_subcommand(1);
    auto* p = c->pipeline_run = c->pipeline_cmd->add_subcommand("run", "Generate, judge, and render candidates into a store");
    p->add_option("--store", c->pipeline.store, "Store directory (events.jsonl and plots/)")->required();
    p->add_option("--endpoint", c->pipeline.endpoint,
                  "Endpoint JSON: one config, or {\"generator\", \"necessity\", \"consistency\"}")
        ->required()
        ->check(CLI::ExistingFile);
    p->add_option("--candidates", c->pipeline.candidates, "Number of candidates");
    p->add_option("--seed", c->pipeline.seed, "Scenario seed base");
    p->add_option("--max-parallel", c->pipeline.max_parallel, "Candidates in flight")->check(CLI::PositiveNumber);
    p->add_option("--tasks", c->pipeline.tasks, "Task kinds to cycle through (default: all four reasoning kinds)")
        ->check(CLI::IsMember({"fact_adherent", "predictive", "event_aware", "counterfactual"}));

    c->review_cmd = app.add_subcommand("review", "Manual-check queue");
    c->review_cmd->require_subcommand(1);
    auto* v = c->review_serve = c->review_cmd->add_subcommand("serve", "Serve the review HTTP API");
    v->add_option("--store", c->review.store, "Store directory")->required();
    v->add_option("--host", c->review.host, "Bind address");
    v->add_option("--port", c->review.port, "Port")->check(CLI::Range(1, 65535));
    v->add_option("--token-env", c->review.token_env, "Environment variable holding a required bearer token");

    auto* e = c->eval_cmd = app.add_subcommand("eval", "Evaluate an endpoint on exported samples");
    e->add_option("--samples", c->eval.samples, "Exported JSONL samples")->required()->check(CLI::ExistingFile);
    e->add_option("--store", c->eval.store, "Directory plot paths resolve against (default: the samples file's)");
    e->add_option("--endpoint", c->eval.endpoint, "Endpoint config JSON")->required()->check(CLI::ExistingFile);
    e->add_option("--repeats", c->eval.repeats, "Completions per sample")->check(CLI::PositiveNumber);
    e->add_option("--seed", c->eval.seed, "Request seed base; repeat k sends seed + k");
    e->add_option("--temperature", c->eval.temperature, "Sampling temperature");
    e->add_option("--max-parallel", c->eval.max_parallel, "Requests in flight")->check(CLI::PositiveNumber);
    e->add_option("--model-name", c->eval.model_name, "Row label in the table");
    e->add_option("--out", c->eval.out, "Output directory")->required();

    // Global flags are accepted after the subcommand too.
    for (auto* sub : {s, r, g, t, c->pipeline_cmd, p, c->review_cmd, v, e}) sub->fallthrough();
    return c;
}

CLI::App& app(Command& command) { return command.app; }

namespace {

// Config precedence: anything given on the command line wins, then the config file's
// section for the subcommand path ("synth", "pipeline run", ...), then built-in defaults.
void apply_config(Command& c) {
    if (c.config_path.empty()) return;
    const auto doc = read_json_file(c.config_path);
    if (!doc.is_object()) throw UsageFailure("config file must hold a JSON object");
    std::vector<CLI::App*> leaves;
    for (auto* sub : c.app.get_subcommands()) {
        leaves.push_back(sub);
        for (auto* inner : sub->get_subcommands()) leaves.push_back(inner);
    }
    for (auto* leaf : leaves) {
        const std::string key = leaf->get_parent() == &c.app ? leaf->get_name()
                                                             : leaf->get_parent()->get_name() + " " + leaf->get_name();
        const auto it = doc.find(key);
        if (it == doc.end()) continue;
        if (!it->is_object()) throw UsageFailure(fmt::format("config section \"{}\" must be an object", key));
        for (const auto& [name, value] : it->items()) {
            auto* opt = leaf->get_option_no_throw("--" + name);
            if (!opt) throw UsageFailure(fmt::format("config section \"{}\": unknown option \"{}\"", key, name));
            if (opt->count() > 0) continue;
            std::vector<std::string> vals;
            for (const auto& v : value.is_array() ? value : json::array({value}))
                vals.push_back(v.is_string() ? v.get<std::string>() : v.dump());
            try {
                for (const auto& s : vals) opt->add_result(s);
                opt->run_callback();
            } catch (const CLI::Error& e) {
                throw UsageFailure(fmt::format("config \"{}.{}\": {}", key, name, e.what()));
            }
        }
    }
}

int cmd_synth(Command& c, Streams io) {
    const fs::path out = c.synth.out;
    ensure_out_dir(out);
    std::vector<std::pair<std::string, json>> docs;
    if (!c.synth.spec_file.empty()) {
        std::size_t i = 0;
        for (auto& d : read_json_documents(c.synth.spec_file)) {
            // synth's own specs.jsonl lines wrap the document
            if (d.contains("spec") && d.contains("series_id")) docs.emplace_back(d["series_id"], d["spec"]);
            else docs.emplace_back(fmt::format("series-{:04}", i), d);
            ++i;
        }
    } else {
        for (std::size_t i = 0; i < c.synth.count; ++i)
            docs.emplace_back(fmt::format("series-{:04}", i),
                              series::to_json(series::random_primitive_spec(derive_seed({c.synth.seed, i}))));
    }
    std::vector<json> specs, labels, qa;
    std::size_t i = 0;
    for (const auto& [id, doc] : docs) {
        const auto spec = parse_spec_or_throw(doc, id);
        const auto s = series::synthesize(spec);
        write_file(out / "series" / (id + ".csv"), series::to_csv(s));
        specs.push_back({{"series_id", id}, {"spec", series::to_json(spec)}});
        labels.push_back({{"series_id", id}, {"label", to_json(s.label)}});
        for (auto task : {series::PrimitiveTask::noise, series::PrimitiveTask::periodicity, series::PrimitiveTask::ood}) {
            auto sample = series::make_primitive_qa(s, task, derive_seed({c.synth.seed, i, static_cast<std::uint64_t>(task)}));
            sample.sample_id = fmt::format("{}-{}", id, series::to_string(task));
            qa.push_back(to_json(sample));
        }
        ++i;
    }
    write_file(out / "specs.jsonl", jsonl(specs));
    write_file(out / "labels.jsonl", jsonl(labels));
    write_file(out / "qa.jsonl", jsonl(qa));
    io.out << json{{"series", specs.size()}, {"qa_samples", qa.size()}, {"out", out.string()}}.dump() << "\n";
    return kExitOk;
}

int cmd_render(Command& c, Streams io) {
    const fs::path out = c.render.out;
    ensure_out_dir(out);
    std::size_t ok = 0, failed = 0, i = 0;
    for (const auto& d : read_json_documents(c.render.specs)) {
        const bool wrapped = d.contains("spec") && d.contains("series_id");
        const std::string id = wrapped ? d["series_id"].get<std::string>() : fmt::format("series-{:04}", i);
        ++i;
        try {
            const auto spec = parse_spec_or_throw(wrapped ? d["spec"] : d, id);
            const auto s = series::synthesize(spec);
            const auto report = plot::validate_for_plot(s, spec.plot);
            if (!report.passed) {
                json v = json::array();
                for (const auto& x : report.violations) v.push_back({{"rule_id", x.rule_id}, {"message", x.message}});
                io.err << json{{"error", "plot validation failed"}, {"kind", "validation"}, {"series_id", id}, {"violations", v}}.dump()
                       << "\n";
                ++failed;
                continue;
            }
            if (c.render.format != "png") write_file(out / (id + ".svg"), plot::render_svg(s, spec.plot));
            if (c.render.format != "svg") {
                const auto png = plot::render_png(s, spec.plot);
                write_file(out / (id + ".png"), {reinterpret_cast<const char*>(png.data()), png.size()});
            }
            ++ok;
        } catch (const RuntimeFailure& e) {
            io.err << json{{"error", e.what()}, {"kind", e.kind}, {"series_id", id}}.dump() << "\n";
            ++failed;
        }
    }
    io.out << json{{"rendered", ok}, {"failed", failed}}.dump() << "\n";
    return failed ? kExitRuntime : kExitOk;
}

int cmd_reward(Command& c, Streams io) {
    std::ifstream file;
    std::istream* in = &io.in;
    if (c.reward.input != "-") {
        file.open(c.reward.input);
        if (!file) throw RuntimeFailure("io", fmt::format("cannot open {}", c.reward.input));
        in = &file;
    }
    std::size_t bad = 0;
    std::string line;
    for (std::size_t n = 1; std::getline(*in, line); ++n) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto doc = json::parse(line, nullptr, false);
        try {
            if (doc.is_discarded()) throw std::invalid_argument("not valid JSON");
            io.out << reward::to_json(reward::grade_record(doc)).dump() << "\n";
        } catch (const std::exception& e) {
            // In-place error keeps output lines aligned with input records.
            io.out << json{{"line", n}, {"error", e.what()}}.dump() << "\n";
            ++bad;
        }
    }
    if (bad) {
        io.err << json{{"error", fmt::format("{} record(s) could not be graded", bad)}, {"kind", "input"}}.dump() << "\n";
        return kExitRuntime;
    }
    return kExitOk;
}

void write_charts(const fs::path& out, const grpo::MetricsTrace& trace) {
    if (trace.empty()) return;
    std::vector<long> steps;
    for (const auto& m : trace) steps.push_back(static_cast<long>(m.step));
    auto chart = [&](const char* name, const char* label, auto get) {
        std::vector<double> v;
        for (const auto& m : trace) v.push_back(get(m));
        plot::PlotSpec spec;
        spec.title = label;
        spec.x_label = "step";
        spec.y_label = label;
        write_file(out / fmt::format("{}.svg", name), plot::render_trace_svg(v, steps, spec));
    };
    chart("mean_reward", "mean reward", [](auto& m) { return m.mean_reward; });
    chart("format_failure_rate", "format failure rate", [](auto& m) { return m.format_failure_rate; });
    chart("kl", "KL to reference", [](auto& m) { return m.kl; });
    chart("entropy", "policy entropy", [](auto& m) { return m.entropy; });
}

int cmd_train(Command& c, Streams io) {
    const fs::path out = c.train.out;
    ensure_out_dir(out);
    grpo::CurriculumConfig cfg;
    cfg.seed = c.train.seed;
    cfg.perception_prompts = cfg.reasoning_prompts = c.train.prompts;
    for (auto* r : {&cfg.perception, &cfg.reasoning}) {
        r->rng_seed = c.train.seed;
        if (c.train.learning_rate) r->learning_rate = *c.train.learning_rate;
        if (c.train.group_size) r->group_size = *c.train.group_size;
        if (c.train.rollout_batch) r->rollout_batch = *c.train.rollout_batch;
    }
    const std::string& round = c.train.round;
    if (round == "perception" && c.train.steps) cfg.perception.max_steps = *c.train.steps;
    if (round != "perception" && c.train.steps) cfg.reasoning.max_steps = *c.train.steps;
    if (c.train.perception_steps) {
        if (round != "curriculum") throw UsageFailure("--perception-steps applies to --round curriculum only");
        cfg.perception.max_steps = *c.train.perception_steps;
    }
    for (const auto* r : {&cfg.perception, &cfg.reasoning})
        if (const auto issues = grpo::validate(*r); !issues.empty()) throw RuntimeFailure("config", issues.front());

    auto setup = grpo::make_toy_setup(cfg);
    if (!c.train.init.empty()) grpo::load_parameters(setup.policy, read_json_file(c.train.init));

    grpo::ToyPolicy policy = setup.policy;
    grpo::MetricsTrace trace;
    if (round == "perception" || round == "curriculum") {
        auto r = grpo::train_round(setup.perception, policy, cfg.perception, grpo::grade_response, 0, 0);
        policy = std::move(r.policy);
        trace = std::move(r.trace);
    }
    if (round == "reasoning" || round == "curriculum") {
        auto r = grpo::train_round(setup.reasoning, policy, cfg.reasoning, grpo::grade_response, setup.perception.size(),
                                   trace.size());
        policy = std::move(r.policy);
        trace.insert(trace.end(), r.trace.begin(), r.trace.end());
    }

    std::ostringstream t;
    grpo::write_trace_jsonl(t, trace);
    write_file(out / "trace.jsonl", t.str());
    write_file(out / "policy.json", grpo::to_json(policy).dump() + "\n");
    write_charts(out, trace);
    json config = {{"round", round}, {"seed", c.train.seed}, {"prompts", c.train.prompts}};
    if (round != "reasoning") config["perception"] = grpo::to_json(cfg.perception);
    if (round != "perception") config["reasoning"] = grpo::to_json(cfg.reasoning);
    json summary = {{"config", config}, {"steps", trace.size()}};
    if (!trace.empty()) summary["final"] = grpo::to_json(trace.back());
    write_file(out / "summary.json", summary.dump(2) + "\n");
    io.out << summary.dump() << "\n";
    return kExitOk;
}

int cmd_pipeline(Command& c, Streams io) {
    const auto endpoints = load_endpoints(c.pipeline.endpoint, {"generator", "necessity", "consistency"});
    datapipe::HttpChatClient gen(endpoints.at("generator")), nec(endpoints.at("necessity")),
        con(endpoints.at("consistency"));
    datapipe::PipelineConfig cfg;
    cfg.candidates = c.pipeline.candidates;
    cfg.seed = c.pipeline.seed;
    cfg.max_parallel = std::min(c.pipeline.max_parallel, endpoints.at("generator").max_parallel);
    if (!c.pipeline.tasks.empty()) {
        cfg.task_kinds.clear();
        for (const auto& t : c.pipeline.tasks) cfg.task_kinds.push_back(*task_kind_from_string(t));
    }
    datapipe::SampleStore store(fs::path(c.pipeline.store) / "events.jsonl");
    const auto stats = datapipe::run_pipeline(cfg, {&gen, &nec, &con}, store);
    io.out << datapipe::to_json(stats).dump() << "\n";
    return kExitOk;
}

int cmd_review(Command& c, Streams io) {
    std::optional<std::string> token;
    if (!c.review.token_env.empty()) {
        const char* v = std::getenv(c.review.token_env.c_str());
        if (!v || !*v) throw RuntimeFailure("config", fmt::format("environment variable {} is not set", c.review.token_env));
        token = v;
    }
    datapipe::SampleStore store(fs::path(c.review.store) / "events.jsonl");
    datapipe::ReviewService service(store);
    datapipe::ReviewServer server(service, token);
    io.err << json{{"listening", fmt::format("http://{}:{}", c.review.host, c.review.port)}}.dump() << std::endl;
    try {
        server.run(c.review.host, c.review.port);
    } catch (const std::runtime_error& e) {
        throw RuntimeFailure("io", e.what());
    }
    return kExitOk;
}

int cmd_eval(Command& c, Streams io) {
    const auto endpoints = load_endpoints(c.eval.endpoint, {"eval"});
    datapipe::HttpChatClient client(endpoints.at("eval"));
    const auto samples = eval::load_samples_jsonl(c.eval.samples);
    const fs::path store_dir = c.eval.store.empty() ? fs::path(c.eval.samples).parent_path() : fs::path(c.eval.store);
    eval::EvalConfig cfg;
    cfg.repeats = c.eval.repeats;
    cfg.seed = c.eval.seed;
    cfg.temperature = c.eval.temperature;
    cfg.max_parallel = std::min(c.eval.max_parallel, endpoints.at("eval").max_parallel);
    const auto report = eval::evaluate(samples, client, cfg,
                                       [&](const QASample& s) { return eval::plot_data_url(s, store_dir); });
    const fs::path out = c.eval.out;
    ensure_out_dir(out);
    const auto table = eval::format_table(report, c.eval.model_name);
    write_file(out / "report.json", eval::to_json(report).dump(2) + "\n");
    write_file(out / "table.txt", table);
    io.out << table;
    return kExitOk;
}

} // namespace

int run(const std::vector<std::string>& args, Streams io) {
    auto cmd = make_command();
    auto& c = *cmd;
    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        c.app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        io.out << c.app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        io.out << c.app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        // Help for the deepest subcommand that was recognised.
        const CLI::App* ctx = &c.app;
        for (bool deeper = true; deeper;) {
            deeper = false;
            for (const auto* sub : ctx->get_subcommands()) {
                ctx = sub;
                deeper = true;
                break;
            }
        }
        io.err << "error: " << e.what() << "\n\n" << ctx->help();
        return kExitUsage;
    }

    spdlog::set_level(c.quiet ? spdlog::level::err : c.verbose ? spdlog::level::debug : spdlog::level::info);
    try {
        apply_config(c);
        if (c.synth_cmd->parsed()) return cmd_synth(c, io);
        if (c.render_cmd->parsed()) return cmd_render(c, io);
        if (c.reward_cmd->parsed()) return cmd_reward(c, io);
        if (c.train_cmd->parsed()) return cmd_train(c, io);
        if (c.pipeline_run->parsed()) return cmd_pipeline(c, io);
        if (c.review_serve->parsed()) return cmd_review(c, io);
        if (c.eval_cmd->parsed()) return cmd_eval(c, io);
        throw UsageFailure("no subcommand");
    } catch (const UsageFailure& e) {
        io.err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const RuntimeFailure& e) {
        io.err << json{{"error", e.what()}, {"kind", e.kind}}.dump() << "\n";
    } catch (const grpo::ConfigError& e) {
        io.err << json{{"error", e.what()}, {"kind", "config"}}.dump() << "\n";
    } catch (const std::exception& e) {
        io.err << json{{"error", e.what()}, {"kind", "runtime"}}.dump() << "\n";
    }
    return kExitRuntime;
}

} // namespace tsrl::cli
