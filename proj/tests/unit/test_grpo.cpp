#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "grpo_gradcheck.hpp"
#include "tsrl/grpo/train.hpp"

using namespace tsrl;
using namespace tsrl::grpo;
using Catch::Approx;

namespace {

double mean_of(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

double popstd_of(const std::vector<double>& v) {
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / v.size());
}

ToyPolicy uniform_policy(std::size_t vocab) {
    std::vector<std::string> t;
    for (std::size_t k = 0; k < vocab; ++k) t.push_back(std::string(1, static_cast<char>('a' + k)));
    return ToyPolicy(t, 1, 1);
}

} // namespace

TEST_CASE("group advantages examples", "[grpo]") {
    CHECK(group_advantages({1, 0, 0, 1}) == std::vector<double>{1, -1, -1, 1});
    CHECK(group_advantages({0.7, 0.7, 0.7, 0.7}) == std::vector<double>{0, 0, 0, 0});
    CHECK(group_advantages({1, 0}) == std::vector<double>{1, -1});
    // the rounded mean of three 0.1s is not 0.1
    CHECK(group_advantages({0.1, 0.1, 0.1}) == std::vector<double>{0, 0, 0});
    CHECK_THROWS_AS(group_advantages({1}), ConfigError);
    CHECK_THROWS_AS(group_advantages({}), ConfigError);
}

TEST_CASE("group advantages are z-scores", "[grpo][property]") {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> g_d(2, 16);
    std::uniform_real_distribution<double> r_d(-0.5, 1.0), shift_d(-10, 10), scale_d(0.1, 10);
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<double> r(g_d(rng));
        for (double& x : r) x = r_d(rng);
        const auto a = group_advantages(r);
        CHECK(std::abs(mean_of(a)) <= 1e-9);
        CHECK(std::abs(popstd_of(a) - 1.0) <= 1e-9);
        const double shift = shift_d(rng), scale = scale_d(rng);
        std::vector<double> moved = r;
        for (double& x : moved) x = scale * x + shift;
        const auto b = group_advantages(moved);
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(b[i] == Approx(a[i]).margin(1e-9));
    }
}

TEST_CASE("token surrogate examples", "[grpo]") {
    CHECK(token_surrogate(1.5, 1.0, 0.2, 0.28) == Approx(1.28).margin(1e-15));
    for (double a : {-2.0, -0.3, 0.0, 0.9}) CHECK(token_surrogate(1.0, a, 0.2, 0.28) == a);
    // min(0.5 * -1, 0.8 * -1)
    CHECK(token_surrogate(0.5, -1.0, 0.2, 0.28) == Approx(-0.8).margin(1e-15));
}

TEST_CASE("clipping properties", "[grpo][property]") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> r_d(0.01, 3.0), a_d(-3.0, 3.0);
    const double el = 0.2, eh = 0.28;
    for (int trial = 0; trial < 5000; ++trial) {
        const double r = r_d(rng), a = a_d(rng);
        const double s = token_surrogate(r, a, el, eh);
        if (a > 0) CHECK(s <= (1 + eh) * a + 1e-15);
        CHECK(std::abs(s) <= std::max({r, 1 + eh, 1 - el}) * std::abs(a) + 1e-15);
        if (r >= 1 - el && r <= 1 + eh) CHECK(s == r * a);
        // A symmetric upper clip gives the first-round surrogate.
        CHECK(token_surrogate(r, a, el, el) == std::min(r * a, std::clamp(r, 1 - el, 1 + el) * a));
    }
}

TEST_CASE("kl estimator", "[grpo]") {
    CHECK(kl_penalty(-1.3, -1.3) == 0.0);
    CHECK(kl_penalty(-1.0, -0.9) == Approx(std::exp(0.1) - 0.1 - 1.0).margin(1e-15));
    CHECK(kl_penalty(-1.0, -0.9) == Approx(0.005171).margin(5e-7));
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> lp(-30.0, 0.0);
    for (int i = 0; i < 5000; ++i) CHECK(kl_penalty(lp(rng), lp(rng)) >= 0.0);
}

TEST_CASE("entropy examples", "[grpo]") {
    const std::vector<double> u(4, 0.0);
    CHECK(softmax_entropy(u) == Approx(std::log(4.0)).margin(1e-12));
    CHECK(softmax_entropy(std::vector<double>{1.0, 0.0}) == Approx(0.5822).margin(1e-4));
    CHECK(softmax_entropy(std::vector<double>{60.0, 0.0, 0.0}) < 1e-20);
    const auto p = uniform_policy(4);
    CHECK(policy_entropy(p, {0, 0, p.bos()}) == Approx(std::log(4.0)).margin(1e-12));
}

TEST_CASE("rollout sampling", "[grpo]") {
    auto p = uniform_policy(4);
    std::vector<int> counts(4, 0);
    for (std::uint64_t s = 0; s < 10000; ++s) ++counts[sample_rollout(p, 0, 1, s).token_ids[0]];
    for (int c : counts) CHECK(std::abs(c / 10000.0 - 0.25) <= 0.02);

    const auto a = sample_rollout(p, 0, 1, 42), b = sample_rollout(p, 0, 1, 42);
    CHECK(a.token_ids == b.token_ids);
    CHECK(a.logp_new == a.logp_old);
    CHECK(a.logp_new[0] == Approx(-std::log(4.0)));

    p.parameters()[p.bos() * p.vocab_size() + 2] = 20.0; // token c after BOS
    int dominant = 0;
    for (std::uint64_t s = 0; s < 10000; ++s) dominant += sample_rollout(p, 0, 1, s).token_ids[0] == 2;
    CHECK(dominant / 10000.0 > 0.999);
}

TEST_CASE("sampling stops at the end token and honours restrictions", "[grpo]") {
    ToyPolicy p({"x", "y", "<eos>"}, 2, 6, 2);
    for (std::uint64_t s = 0; s < 200; ++s) {
        const auto r = sample_rollout(p, 0, 6, s);
        REQUIRE(r.length() >= 1);
        REQUIRE(r.length() <= 6);
        for (std::size_t t = 0; t + 1 < r.length(); ++t) CHECK(r.token_ids[t] != 2);
        for (double lp : r.logp_new) CHECK(lp <= 0.0);
    }
    p.restrict_prompt(1, {1, 2});
    for (std::uint64_t s = 0; s < 200; ++s)
        for (auto t : sample_rollout(p, 1, 6, s).token_ids) CHECK(t != 0);
    CHECK(policy_entropy(p, {1, 0, p.bos()}) == Approx(std::log(2.0)));
}

TEST_CASE("objective examples", "[grpo]") {
    auto c = oracle::make_gradcheck_case(1);
    for (auto& g : c.groups) std::fill(g.advantages.begin(), g.advantages.end(), 0.0);
    auto cfg = TrainRoundConfig::reasoning();
    auto res = objective_and_gradient(c.groups, c.policy, cfg);
    CHECK(res.loss == 0.0);
    CHECK(std::all_of(res.gradient.begin(), res.gradient.end(), [](double g) { return g == 0.0; }));

    // one token at ratio 1 with beta = 0: loss = -A
    auto p = uniform_policy(3);
    Rollout r;
    r.token_ids = {1};
    r.logp_old = r.logp_new = {-std::log(3.0)};
    RolloutGroup g{{r}, {0.7}};
    res = objective_and_gradient({g}, p, cfg);
    CHECK(res.loss == Approx(-0.7).margin(1e-15));
    CHECK(res.token_count == 1);
    // gradient ascent on the chosen token's logit
    const std::size_t at_bos = p.bos() * p.vocab_size(); // prompt 0, position 0, prev = BOS
    CHECK(res.gradient[at_bos + 1] < 0.0);
    CHECK(res.gradient[at_bos] > 0.0);
}

TEST_CASE("objective rejects malformed groups", "[grpo]") {
    auto c = oracle::make_gradcheck_case(2);
    auto cfg = TrainRoundConfig::perception();
    auto bad = c.groups;
    bad[0].rollouts[0].logp_old.pop_back();
    CHECK_THROWS_AS(objective_and_gradient(bad, c.policy, cfg), DataError);
    bad = c.groups;
    bad[0].rollouts[1].logp_ref.clear();
    CHECK_THROWS_AS(objective_and_gradient(bad, c.policy, cfg), DataError);
    CHECK_NOTHROW(objective_and_gradient(bad, c.policy, TrainRoundConfig::reasoning()));
    bad = c.groups;
    bad[1].advantages.pop_back();
    CHECK_THROWS_AS(objective_and_gradient(bad, c.policy, cfg), DataError);
}

TEST_CASE("analytic gradient matches finite differences", "[grpo][property]") {
    for (const auto& cfg : {TrainRoundConfig::perception(), TrainRoundConfig::reasoning()}) {
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            const auto c = oracle::make_gradcheck_case(seed);
            const auto r = oracle::gradient_check(c, cfg);
            REQUIRE(r.parameters <= 500);
            CHECK(r.max_rel_error <= 1e-5);
        }
    }
}

TEST_CASE("second-round objective reduces to the first without KL", "[grpo][property]") {
    auto eq3 = TrainRoundConfig::perception();
    auto eq4 = TrainRoundConfig::reasoning();
    eq4.eps_high = eq3.eps_low;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto c = oracle::make_gradcheck_case(seed + 1000);
        const auto l3 = objective_and_gradient(c.groups, c.policy, eq3);
        const auto l4 = objective_and_gradient(c.groups, c.policy, eq4);
        CHECK(std::abs(l4.loss - (l3.loss - l3.kl)) <= 1e-12);
    }
}

TEST_CASE("degenerate groups contribute no gradient", "[grpo][property]") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto c = oracle::make_gradcheck_case(seed + 50);
        for (auto& g : c.groups) {
            for (auto& r : g.rollouts) r.reward = 0.3;
            g = RolloutGroup::from_rollouts(g.rollouts);
        }
        const auto res = objective_and_gradient(c.groups, c.policy, TrainRoundConfig::reasoning());
        CHECK(std::all_of(res.gradient.begin(), res.gradient.end(), [](double v) { return v == 0.0; }));
    }
}

TEST_CASE("config validation and parsing", "[grpo]") {
    CHECK(validate(TrainRoundConfig::perception()).empty());
    CHECK(validate(TrainRoundConfig::reasoning()).empty());
    auto bad = TrainRoundConfig::reasoning();
    bad.kl_coeff = 1e-3;
    CHECK_FALSE(validate(bad).empty());
    bad = TrainRoundConfig::perception();
    bad.eps_high = 0.28;
    CHECK_FALSE(validate(bad).empty());
    bad.group_size = 1;
    CHECK(validate(bad).size() == 2);

    const auto r = train_config_from_json(nlohmann::json{{"round", "reasoning"}, {"max_steps", 12}});
    CHECK(r.round == Round::reasoning);
    CHECK(r.eps_high == 0.28);
    CHECK(r.kl_coeff == 0.0);
    CHECK(r.max_steps == 12);
    CHECK(train_config_from_json(to_json(r)).max_steps == 12);
    CHECK_THROWS_AS(train_config_from_json(nlohmann::json{{"roud", "reasoning"}}), ConfigError);
    CHECK_THROWS_AS(train_config_from_json(nlohmann::json{{"max_steps", -1}}), ConfigError);
}

TEST_CASE("toy vocabulary and answer spaces", "[grpo]") {
    const auto mcq = toy_mcq_prompts(8, 3);
    const auto prim = toy_primitive_prompts(8, 3);
    for (const auto& s : mcq) CHECK(check_sample(s).empty());
    const auto v = toy_vocabulary({&prim, &mcq});
    CHECK(v.tokens[v.eos] == kEosToken);
    for (const auto& s : mcq) {
        const auto allowed = toy_answer_space(v, s);
        CHECK(allowed.size() == v.structural.size() + 4);
    }
    for (const auto& s : prim) {
        const auto allowed = toy_answer_space(v, s);
        bool has_gold = false;
        for (auto k : allowed) has_gold |= v.tokens[k] == s.gold_answer + std::string(kCloseTag);
        CHECK(has_gold);
    }
    ToyPolicy p(v.tokens, 1, 4, v.eos, v.structural);
    const std::vector<std::size_t> resp = {0, 5, v.eos};
    CHECK(p.detokenize(resp) == "<answer>" + v.tokens[5]);
}

TEST_CASE("train round basics", "[grpo]") {
    const auto data = toy_mcq_prompts(6, 1);
    const auto v = toy_vocabulary({&data});
    ToyPolicy p(v.tokens, data.size(), 4, v.eos, v.structural);
    auto cfg = TrainRoundConfig::reasoning();
    cfg.rollout_batch = 6;
    cfg.max_steps = 5;

    SECTION("zero learning rate leaves the policy untouched") {
        cfg.learning_rate = 0.0;
        const auto r = train_round(data, p, cfg, grade_response);
        CHECK(std::equal(r.policy.parameters().begin(), r.policy.parameters().end(), p.parameters().begin()));
        CHECK(r.trace.size() == 5);
    }
    SECTION("seeded runs are identical") {
        const auto a = train_round(data, p, cfg, grade_response);
        const auto b = train_round(data, p, cfg, grade_response);
        std::ostringstream sa, sb;
        write_trace_jsonl(sa, a.trace);
        write_trace_jsonl(sb, b.trace);
        CHECK(sa.str() == sb.str());
        CHECK(a.trace.front().step == 1);
        const auto j = nlohmann::json::parse(sa.str().substr(0, sa.str().find('\n')));
        for (const char* key : {"step", "mean_reward_by_task", "response_length", "entropy", "kl"}) CHECK(j.contains(key));
    }
    SECTION("errors") {
        CHECK_THROWS_AS(train_round({}, p, cfg, grade_response), ConfigError);
        auto bad = cfg;
        bad.kl_coeff = 0.1;
        CHECK_THROWS_AS(train_round(data, p, bad, grade_response), ConfigError);
        ToyPolicy small(v.tokens, 2, 4, v.eos, v.structural);
        CHECK_THROWS_AS(train_round(data, small, cfg, grade_response), ConfigError);
    }
}

TEST_CASE("perception round keeps KL bounded", "[grpo][slow]") {
    CurriculumConfig cc;
    cc.reasoning.max_steps = 1;
    const auto res = run_toy_curriculum(cc);
    REQUIRE(res.perception_steps >= 20);
    const double at20 = res.trace[19].kl;
    REQUIRE(at20 > 0.0);
    for (std::size_t i = 0; i < res.perception_steps; ++i) {
        CHECK(std::isfinite(res.trace[i].kl));
        CHECK(res.trace[i].kl <= 10.0 * at20);
    }
}
