#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <random>

#include "pipeline_mock.hpp"
#include "tsrl/datapipe/agents.hpp"
#include "tsrl/datapipe/prompts.hpp"
#include "tsrl/eval/eval.hpp"
#include "tsrl/reward/reward.hpp"

using namespace tsrl;
using namespace tsrl::eval;
using tsrl::datapipe::ChatRequest;
using tsrl::datapipe::ChatResult;
using tsrl::datapipe::ContentPart;
using tsrl::datapipe::ScriptedChatClient;

namespace {

QASample mcq(int i, TaskKind kind, std::string gold = "B") {
    auto s = datapipe::parse_generation_reply(fixtures::sample_reply(i, fixtures::valid_series_spec(i), gold), kind,
                                              fmt::format("e{:02}", i));
    s.status = SampleStatus::accepted;
    s.plot_path = fmt::format("plots/e{:02}.svg", i);
    return s;
}

std::vector<QASample> dataset() {
    std::vector<QASample> out;
    int i = 0;
    for (auto kind : kReasoningTasks)
        for (int j = 0; j < 3; ++j) out.push_back(mcq(i++, kind, j == 1 ? "C" : "B"));
    return out;
}

const ImageSource kNoImage = [](const QASample&) { return std::string("data:image/png;base64,"); };

std::string gold_of(const std::vector<QASample>& ds, const ChatRequest& r) {
    const auto text = datapipe::request_text(r);
    for (const auto& s : ds)
        if (text.find(s.question) != std::string::npos) return s.gold_answer;
    return "?";
}

} // namespace

TEST_CASE("base64") {
    auto enc = [](std::string s) {
        return base64_encode({reinterpret_cast<const std::uint8_t*>(s.data()), s.size()});
    };
    CHECK(enc("") == "");
    CHECK(enc("f") == "Zg==");
    CHECK(enc("fo") == "Zm8=");
    CHECK(enc("foo") == "Zm9v");
    CHECK(enc("foobar") == "Zm9vYmFy");
    CHECK(enc(std::string("\xff\x00\x10", 3)) == "/wAQ");
}

TEST_CASE("build_prompt lists the options and the answer-tag instruction") {
    auto s = mcq(0, TaskKind::predictive);
    auto msgs = build_prompt(s, "data:image/png;base64,AAAA");
    REQUIRE(msgs.size() == 2);
    CHECK(msgs[0].role == "system");
    CHECK(msgs[0].content[0].value == datapipe::prompt_template("eval_system"));
    CHECK(msgs[0].content[0].value.find("<answer></answer>") != std::string::npos);
    CHECK(msgs[1].role == "user");
    CHECK(msgs[1].content[0].kind == ContentPart::Kind::image_url);
    const auto& text = msgs[1].content[1].value;
    for (auto l : {"A. ", "B. ", "C. ", "D. "}) CHECK(text.find(std::string("\n") + l) != std::string::npos);

    s.options.resize(2);
    s.gold_answer = "A";
    const auto two = build_prompt(s, "x")[1].content[1].value;
    CHECK(two.find("\nA. ") != std::string::npos);
    CHECK(two.find("\nB. ") != std::string::npos);
    CHECK(two.find("\nC. ") == std::string::npos);
}

TEST_CASE("plot_data_url needs the plot file") {
    const auto dir = std::filesystem::temp_directory_path() / fmt::format("tsrl-eval-{}", ::getpid());
    std::filesystem::create_directories(dir / "plots");
    auto s = mcq(4, TaskKind::fact_adherent);
    CHECK_THROWS_AS(plot_data_url(s, dir), EvalError);
    std::ofstream(dir / *s.plot_path) << "<svg/>";
    const auto url = plot_data_url(s, dir);
    CHECK(url.rfind("data:image/png;base64,iVBORw0KGgo", 0) == 0);
    s.plot_path.reset();
    CHECK_THROWS_AS(plot_data_url(s, dir), EvalError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("evaluate: always gold") {
    const auto ds = dataset();
    ScriptedChatClient c([&](const ChatRequest& r) {
        return ChatResult::success(fmt::format("The cycle repeats. <answer>{}</answer>", gold_of(ds, r)));
    });
    const auto rep = evaluate(ds, c, {}, kNoImage);
    CHECK(c.calls() == ds.size() * 5);
    CHECK(rep.accuracy == 1.0);
    CHECK(rep.margin_of_error == 0.0);
    CHECK(rep.per_run == std::vector<double>(5, 1.0));
    CHECK(rep.per_task.size() == 4);
    for (const auto& [k, t] : rep.per_task) {
        CHECK(t.accuracy == 1.0);
        CHECK(t.samples == 3);
    }
    for (const auto& r : rep.records) CHECK(r.diagnostics.empty());
}

TEST_CASE("evaluate: gold on exactly 3 of 5 repeats") {
    const auto ds = dataset();
    EvalConfig cfg;
    cfg.seed = 100;
    ScriptedChatClient c([&](const ChatRequest& r) {
        const bool right = *r.seed - 100 < 3;
        return ChatResult::success(fmt::format("<answer>{}</answer>", right ? gold_of(ds, r) : "D"));
    });
    const auto rep = evaluate(ds, c, cfg, kNoImage);
    CHECK(rep.accuracy == Catch::Approx(0.6).epsilon(0));
    CHECK(std::abs(rep.accuracy - 0.6) <= 1e-12);
    CHECK(rep.per_run == std::vector<double>{1, 1, 1, 0, 0});
    CHECK(std::abs(rep.margin_of_error - 0.6) <= 1e-12);
    for (const auto& [k, t] : rep.per_task) CHECK(std::abs(t.accuracy - 0.6) <= 1e-12);
}

TEST_CASE("evaluate: no tags and failures grade incorrect with diagnostics") {
    const auto ds = dataset();
    ScriptedChatClient tagless([](const ChatRequest&) { return ChatResult::success("B"); });
    auto rep = evaluate(ds, tagless, {}, kNoImage);
    CHECK(rep.accuracy == 0.0);
    for (const auto& r : rep.records) {
        CHECK(r.diagnostics.size() == 5);
        for (const auto& d : r.diagnostics) CHECK(d.find("no answer tag") != std::string::npos);
    }
    ScriptedChatClient flaky([&](const ChatRequest& r) {
        if (*r.seed == 4) return ChatResult::failure("HTTP 500");
        return ChatResult::success(fmt::format("<answer>{}</answer>", gold_of(ds, r)));
    });
    rep = evaluate(ds, flaky, {}, kNoImage);
    CHECK(std::abs(rep.accuracy - 0.8) <= 1e-12);
    CHECK(rep.records.size() == ds.size());
    for (const auto& r : rep.records) {
        REQUIRE(r.diagnostics.size() == 1);
        CHECK(r.diagnostics[0] == "repeat 4: endpoint error: HTTP 500");
    }
    CHECK_THROWS_AS(evaluate({}, flaky, {}, kNoImage), EvalError);
    EvalConfig bad;
    bad.repeats = 0;
    CHECK_THROWS_AS(evaluate(ds, flaky, bad, kNoImage), EvalError);
}

TEST_CASE("evaluate: random scripts obey report invariants") {
    const auto ds = dataset();
    for (std::uint64_t trial = 0; trial < 25; ++trial) {
        ScriptedChatClient c([&, trial](const ChatRequest& r) {
            std::mt19937_64 g(derive_seed({trial, *r.seed, std::hash<std::string>{}(datapipe::request_text(r))}));
            const char* labels[] = {"A", "B", "C", "D"};
            switch (g() % 4) {
            case 0: return ChatResult::success("no tag");
            case 1: return ChatResult::success(fmt::format("<answer>{}</answer>", gold_of(ds, r)));
            default: return ChatResult::success(fmt::format("<answer>{}</answer>", labels[g() % 4]));
            }
        });
        EvalConfig cfg;
        cfg.seed = trial;
        const auto rep = evaluate(ds, c, cfg, kNoImage);

        double sum = 0.0;
        for (double a : rep.per_run) {
            CHECK(a >= 0.0);
            CHECK(a <= 1.0);
            sum += a;
        }
        CHECK(std::abs(sum / 5 - rep.accuracy) <= 1e-12);
        // recomputable from per_run alone
        double mean = 0.0;
        for (double a : rep.per_run) mean += a;
        mean /= 5;
        double m = 0.0;
        for (double a : rep.per_run) m = std::max(m, std::abs(a - mean));
        CHECK(m == rep.margin_of_error);

        for (const auto& [kind, t] : rep.per_task) {
            double g = 0.0;
            std::size_t n = 0;
            for (const auto& r : rep.records)
                if (r.task_kind == kind) {
                    g += static_cast<double>(std::count(r.grades.begin(), r.grades.end(), true));
                    ++n;
                }
            CHECK(std::abs(t.accuracy - g / static_cast<double>(n * 5)) <= 1e-12);
        }
        // every grade equals the reward engine's indicator on the same pair
        std::size_t i = 0;
        for (const auto& r : rep.records) {
            const auto& s = ds[i++];
            for (std::size_t k = 0; k < 5; ++k) {
                double ind = 0.0;
                if (r.extracted[k])
                    if (auto p = reward::parse_structured_answer(*r.extracted[k], reward::AnswerTask::mcq))
                        ind = reward::indicator_reward(*p.answer, s.gold_answer);
                CHECK(r.grades[k] == (ind == 1.0));
            }
        }
        cfg.max_parallel = 1;
        CHECK(to_json(evaluate(ds, c, cfg, kNoImage)).dump() == to_json(rep).dump());
    }
}

TEST_CASE("report rendering") {
    const auto ds = dataset();
    ScriptedChatClient c([&](const ChatRequest& r) {
        return ChatResult::success(fmt::format("<answer>{}</answer>", *r.seed < 3 ? gold_of(ds, r) : "D"));
    });
    const auto rep = evaluate(ds, c, {}, kNoImage);
    const auto doc = to_json(rep);
    CHECK(doc["per_task"]["event_aware"]["samples"] == 3);
    CHECK(doc["records"][0]["grades"].size() == 5);
    CHECK(doc["records"][0]["extracted"][4] == "D");
    const auto table = format_table(rep, "toy");
    CHECK(table.find("Fact-Adherent") < table.find("Predictive"));
    CHECK(table.find("Event-Aware") < table.find("Counterfactual"));
    CHECK(table.find("60.0 ±60.0") != std::string::npos);
}

TEST_CASE("load_samples_jsonl") {
    const auto path = std::filesystem::temp_directory_path() / fmt::format("tsrl-eval-{}.jsonl", ::getpid());
    {
        std::ofstream out(path);
        for (const auto& s : dataset()) out << to_json(s).dump() << "\n";
    }
    CHECK(load_samples_jsonl(path) == dataset());
    std::ofstream(path, std::ios::app) << "{oops\n";
    CHECK_THROWS_AS(load_samples_jsonl(path), EvalError);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(load_samples_jsonl(path), EvalError);
}
