#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <httplib.h>

#include "pipeline_mock.hpp"
#include "tsrl/cli/app.hpp"
#include "tsrl/datapipe/review.hpp"
#include "tsrl/grpo/train.hpp"

using namespace tsrl;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
    int code;
    std::string out, err;
};

Result run(std::vector<std::string> args, const std::string& stdin_text = "") {
    std::istringstream in(stdin_text);
    std::ostringstream out, err;
    const int code = cli::run(args, {in, out, err});
    return {code, out.str(), err.str()};
}

struct TempDir {
    fs::path path;
    TempDir() {
        static int n = 0;
        path = fs::temp_directory_path() / fmt::format("tsrl-cli-{}-{}", ::getpid(), n++);
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& rel) const { return (path / rel).string(); }
};

std::map<std::string, std::string> read_tree(const fs::path& root) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (!e.is_regular_file()) continue;
        std::ifstream in(e.path(), std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        files[fs::relative(e.path(), root).string()] = ss.str();
    }
    return files;
}

std::vector<json> read_jsonl(const fs::path& p) {
    std::ifstream in(p);
    std::vector<json> out;
    for (std::string line; std::getline(in, line);)
        if (!line.empty()) out.push_back(json::parse(line));
    return out;
}

/// chat-completions server answering with the planted corpus scripts, routed by prompt.
struct FakeEndpoint {
    fixtures::PlantedCorpus corpus;
    httplib::Server server;
    std::thread thread;
    int port = 0;
    std::function<std::string(const json&)> eval_answer;

    FakeEndpoint(std::uint64_t seed, std::vector<fixtures::CandidatePlan> plans) : corpus(seed, std::move(plans)) {
        server.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
            const auto body = json::parse(req.body);
            datapipe::ChatRequest r;
            std::string text;
            for (const auto& m : body["messages"])
                for (const auto& p : m["content"])
                    if (p["type"] == "text") text += p["text"].get<std::string>() + "\n";
            r.messages.push_back(datapipe::ChatMessage::text("user", text));
            if (body.contains("seed")) r.seed = body["seed"].get<std::uint64_t>();
            datapipe::ChatResult out;
            if (text.find("Scenario seed:") != std::string::npos) out = corpus.generator()(r);
            else if (text.find("No chart is available") != std::string::npos) out = corpus.necessity()(r);
            else if (text.find("<verdict>") != std::string::npos) out = corpus.consistency()(r);
            else out = datapipe::ChatResult::success(eval_answer ? eval_answer(body) : "<answer>B</answer>");
            if (!out.ok) {
                res.status = 400;
                res.set_content(json{{"error", {{"message", out.error}}}}.dump(), "application/json");
                return;
            }
            res.set_content(json{{"choices", {{{"message", {{"role", "assistant"}, {"content", out.content}}}}}}}.dump(),
                            "application/json");
        });
        port = server.bind_to_any_port("127.0.0.1");
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }
    ~FakeEndpoint() {
        server.stop();
        thread.join();
    }
    json config() const {
        return {{"base_url", fmt::format("http://127.0.0.1:{}/v1", port)}, {"model", "fake"}, {"max_retries", 1}};
    }
};

} // namespace

TEST_CASE("every subcommand's help lists every accepted flag") {
    auto cmd = cli::make_command();
    auto& app = cli::app(*cmd);
    const std::map<std::string, std::vector<std::string>> expected = {
        {"synth", {"--seed", "--count", "--spec", "--out"}},
        {"render", {"--specs", "--out", "--format"}},
        {"reward", {"--input"}},
        {"train-toy",
         {"--round", "--seed", "--steps", "--perception-steps", "--prompts", "--learning-rate", "--group-size",
          "--rollout-batch", "--init", "--out"}},
        {"pipeline run", {"--store", "--endpoint", "--candidates", "--seed", "--max-parallel", "--tasks"}},
        {"review serve", {"--store", "--host", "--port", "--token-env"}},
        {"eval",
         {"--samples", "--store", "--endpoint", "--repeats", "--seed", "--temperature", "--max-parallel", "--model-name",
          "--out"}},
    };
    std::size_t leaves = 0;
    for (auto* sub : app.get_subcommands([](const CLI::App*) { return true; })) {
        std::vector<CLI::App*> targets;
        const auto inner = sub->get_subcommands([](const CLI::App*) { return true; });
        if (inner.empty()) targets.push_back(sub);
        targets.insert(targets.end(), inner.begin(), inner.end());
        for (auto* leaf : targets) {
            const std::string key = leaf == sub ? sub->get_name() : sub->get_name() + " " + leaf->get_name();
            CAPTURE(key);
            REQUIRE(expected.count(key));
            ++leaves;
            std::vector<std::string> args;
            std::istringstream ks(key);
            for (std::string w; ks >> w;) args.push_back(w);
            args.push_back("--help");
            const auto r = run(args);
            CHECK(r.code == 0);
            for (const auto* opt : leaf->get_options()) {
                for (const auto& name : opt->get_lnames()) CHECK(r.out.find("--" + name) != std::string::npos);
            }
            for (const auto& flag : expected.at(key)) {
                CHECK(r.out.find(flag) != std::string::npos);
                CHECK(leaf->get_option_no_throw(flag) != nullptr);
            }
            // nothing registered beyond the documented list (plus --help)
            CHECK(leaf->get_options().size() == expected.at(key).size() + 1);
        }
    }
    CHECK(leaves == expected.size());
}

TEST_CASE("usage errors are distinct from runtime errors") {
    TempDir d;
    CHECK(run({}).code == cli::kExitUsage);
    CHECK(run({"frobnicate"}).code == cli::kExitUsage);
    auto r = run({"synth", "--out", d / "x", "--bogus"});
    CHECK(r.code == cli::kExitUsage);
    CHECK(r.err.find("--bogus") != std::string::npos);
    CHECK(r.err.find("Usage") != std::string::npos);
    CHECK(run({"train-toy", "--round", "sideways", "--out", d / "t"}).code == cli::kExitUsage);
    CHECK(run({"render", "--specs", d / "missing.jsonl", "--out", d / "r"}).code == cli::kExitUsage);

    std::ofstream(d.path / "bad.json") << R"({"start_time": "yesterday", "step": "1h", "count": 48})";
    r = run({"synth", "--spec", d / "bad.json", "--out", d / "s"});
    CHECK(r.code == cli::kExitRuntime);
    const auto line = json::parse(r.err);
    CHECK(line["kind"] == "invalid_spec");
    CHECK(line["error"].get<std::string>().find("time_format") != std::string::npos);

    ::unsetenv("TSRL_CLI_NO_TOKEN");
    r = run({"review", "serve", "--store", d / "st", "--token-env", "TSRL_CLI_NO_TOKEN"});
    CHECK(r.code == cli::kExitRuntime);
    CHECK(json::parse(r.err)["kind"] == "config");
}

TEST_CASE("synth and render are deterministic") {
    TempDir d;
    REQUIRE(run({"synth", "--seed", "7", "--count", "20", "--out", d / "a"}).code == 0);
    REQUIRE(run({"synth", "--seed", "7", "--count", "20", "--out", d / "b"}).code == 0);
    const auto a = read_tree(d.path / "a");
    CHECK(a == read_tree(d.path / "b"));
    CHECK(a.size() == 23);
    CHECK(read_jsonl(d.path / "a" / "qa.jsonl").size() == 60);
    REQUIRE(run({"synth", "--seed", "8", "--count", "20", "--out", d / "c"}).code == 0);
    CHECK(read_tree(d.path / "c") != a);

    // synth's specs file round-trips through --spec
    REQUIRE(run({"synth", "--seed", "7", "--spec", d / "a/specs.jsonl", "--out", d / "a2"}).code == 0);
    CHECK(read_tree(d.path / "a2") == a);

    for (auto dir : {"r1", "r2"})
        REQUIRE(run({"render", "--specs", d / "a/specs.jsonl", "--format", "both", "--out", d / dir}).code == 0);
    const auto r1 = read_tree(d.path / "r1");
    CHECK(r1.size() == 40);
    CHECK(r1 == read_tree(d.path / "r2"));
}

TEST_CASE("render reports invalid specs and carries on") {
    TempDir d;
    std::ofstream(d.path / "specs.jsonl") << fixtures::valid_series_spec(1).dump() << "\n"
                                          << fixtures::valid_series_spec(2, 12).dump() << "\n";
    const auto r = run({"render", "--specs", d / "specs.jsonl", "--out", d / "r"});
    CHECK(r.code == cli::kExitRuntime);
    CHECK(fs::exists(d.path / "r" / "series-0000.svg"));
    CHECK_FALSE(fs::exists(d.path / "r" / "series-0001.svg"));
    const auto err = json::parse(r.err);
    CHECK(err["series_id"] == "series-0001");
    CHECK(err["violations"][0]["rule_id"] == "min_points");
}

TEST_CASE("reward grades stdin records") {
    auto r = run({"reward"}, R"({"response": "B", "task": "mcq", "truth": "B"})"
                             "\n"
                             R"({"response": "<answer>b</answer>", "task": "mcq", "truth": "B"})"
                             "\n");
    CHECK(r.code == 0);
    std::istringstream lines(r.out);
    std::string l1, l2;
    std::getline(lines, l1);
    std::getline(lines, l2);
    CHECK(json::parse(l1)["combined"] == -0.5);
    CHECK(json::parse(l2)["combined"] == 1.0);

    r = run({"reward"}, "{oops\n" R"({"response": "<answer>none</answer>", "task": "periodicity", "truth": "none"})"
                        "\n");
    CHECK(r.code == cli::kExitRuntime);
    std::istringstream bad(r.out);
    std::getline(bad, l1);
    std::getline(bad, l2);
    CHECK(json::parse(l1)["line"] == 1);
    CHECK(json::parse(l2)["combined"] == 1.0);
    CHECK(json::parse(r.err)["kind"] == "input");
}

TEST_CASE("train-toy with zero steps echoes the initial policy") {
    TempDir d;
    const auto r = run({"train-toy", "--round", "reasoning", "--steps", "0", "--out", d / "t"});
    REQUIRE(r.code == 0);
    CHECK(json::parse(r.out)["steps"] == 0);
    std::ifstream trace(d.path / "t" / "trace.jsonl");
    CHECK(trace.peek() == std::char_traits<char>::eof());
    CHECK_FALSE(fs::exists(d.path / "t" / "mean_reward.svg"));
    std::ifstream p(d.path / "t" / "policy.json");
    CHECK(json::parse(p) == grpo::to_json(grpo::make_toy_setup({}).policy));
}

TEST_CASE("train-toy is deterministic and resumable") {
    TempDir d;
    for (auto dir : {"a", "b"})
        REQUIRE(run({"train-toy", "--round", "perception", "--steps", "15", "--seed", "3", "--out", d / dir}).code == 0);
    const auto a = read_tree(d.path / "a");
    CHECK(a == read_tree(d.path / "b"));
    CHECK(a.count("mean_reward.svg"));
    CHECK(read_jsonl(d.path / "a" / "trace.jsonl").size() == 15);

    REQUIRE(run({"train-toy", "--round", "reasoning", "--steps", "5", "--seed", "3", "--init", d / "a/policy.json",
                 "--out", d / "c"})
                .code == 0);
    const auto trace = read_jsonl(d.path / "c" / "trace.jsonl");
    REQUIRE(trace.size() == 5);
    CHECK(trace[0]["round"] == "reasoning");
    // a policy from a differently shaped run is refused
    REQUIRE(run({"train-toy", "--round", "perception", "--steps", "1", "--prompts", "8", "--out", d / "small"}).code == 0);
    const auto r = run({"train-toy", "--round", "reasoning", "--init", d / "small/policy.json", "--out", d / "x"});
    CHECK(r.code == cli::kExitRuntime);
}

TEST_CASE("config file: flags override the file, the file overrides defaults") {
    TempDir d;
    std::ofstream(d.path / "cfg.json") << R"({"synth": {"count": 3, "seed": 7}})";
    auto r = run({"--config", d / "cfg.json", "synth", "--out", d / "a"});
    REQUIRE(r.code == 0);
    CHECK(json::parse(r.out)["series"] == 3);
    r = run({"--config", d / "cfg.json", "synth", "--count", "5", "--out", d / "b"});
    CHECK(json::parse(r.out)["series"] == 5);
    REQUIRE(run({"synth", "--seed", "7", "--count", "3", "--out", d / "c"}).code == 0);
    CHECK(read_tree(d.path / "a") == read_tree(d.path / "c"));

    std::ofstream(d.path / "bad.json") << R"({"synth": {"colour": "red"}})";
    CHECK(run({"--config", d / "bad.json", "synth", "--out", d / "e"}).code == cli::kExitUsage);
    std::ofstream(d.path / "bad2.json") << R"({"synth": {"count": "many"}})";
    CHECK(run({"--config", d / "bad2.json", "synth", "--out", d / "e"}).code == cli::kExitUsage);
}

TEST_CASE("pipeline run and eval against a local endpoint") {
    TempDir d;
    std::vector<fixtures::CandidatePlan> plans(8);
    plans[2].flaw = fixtures::Flaw::necessity;
    plans[2].necessity_correct = 4;
    plans[5].flaw = fixtures::Flaw::requirements;
    FakeEndpoint ep(11, plans);
    std::ofstream(d.path / "endpoint.json") << ep.config().dump();

    auto r = run({"pipeline", "run", "--store", d / "store", "--endpoint", d / "endpoint.json", "--candidates", "8",
                  "--seed", "11", "-q"});
    REQUIRE(r.code == 0);
    const auto stats = json::parse(r.out);
    CHECK(stats["pending_review"] == 6);
    CHECK(stats["rejected"] == 2);

    datapipe::SampleStore store(d.path / "store" / "events.jsonl");
    datapipe::ReviewService review(store);
    for (int i = 0; i < 4; ++i) REQUIRE(review.decide(review.next()->sample_id, "accept", "").code == datapipe::DecisionOutcome::Code::ok);
    std::ofstream(d.path / "store" / "export.jsonl") << review.export_jsonl(SampleStatus::accepted);

    ep.eval_answer = [](const json& body) {
        CHECK(body["messages"][1]["content"][0]["type"] == "image_url");
        return body["seed"].get<int>() < 3 ? std::string("<answer>B</answer>") : std::string("<answer>A</answer>");
    };
    r = run({"eval", "--samples", d / "store/export.jsonl", "--endpoint", d / "endpoint.json", "--out", d / "eval",
             "--model-name", "fake"});
    INFO(r.err);
    REQUIRE(r.code == 0);
    CHECK(r.out.find("fake") != std::string::npos);
    std::ifstream rep(d.path / "eval" / "report.json");
    const auto report = json::parse(rep);
    CHECK(std::abs(report["accuracy"].get<double>() - 0.6) <= 1e-12);
    CHECK(report["records"].size() == 4);
}
