#include <doctest.h>

#include <cmath>
#include <type_traits>

#include "intermediation/algorithms.hpp"
#include "intermediation/engine.hpp"
#include "oracles.hpp"

using namespace intermed;

namespace {

Instance e1() { return validate_instance({1, 3}, {2, 4}); }

Agent s(const Instance& inst, std::size_t i) { return inst.seller(i); }
Agent b(const Instance& inst, std::size_t i) { return inst.buyer(i); }

class RefuseAll final : public PricePolicy {
public:
    PriceDecision decide(std::size_t, Side) override { return PriceDecision::refuse(); }
    void observe(std::size_t, const Agent&, bool) override {}
};

/// Records what the engine tells the policy.
class Recorder final : public PricePolicy {
public:
    std::vector<std::size_t> decide_steps;
    std::vector<std::size_t> observe_steps;
    std::vector<bool> outcomes;
    PriceDecision decide(std::size_t step, Side) override {
        decide_steps.push_back(step);
        return {kInf, -kInf};
    }
    void observe(std::size_t step, const Agent&, bool traded) override {
        observe_steps.push_back(step);
        outcomes.push_back(traded);
    }
};

std::vector<double> values(const std::vector<Fill>& fills) {
    std::vector<double> v;
    for (const Fill& f : fills) v.push_back(f.agent.value);
    return v;
}

}  // namespace

// decide() receives only the step and the incoming side.
static_assert(std::is_same_v<decltype(&PricePolicy::decide), PriceDecision (PricePolicy::*)(std::size_t, Side)>);

TEST_CASE("replay E1 with constant prices at 3") {
    const Instance inst = e1();
    const std::vector<Agent> seq{s(inst, 0), b(inst, 1), s(inst, 1), b(inst, 0)};
    ConstantPolicy policy(3.0, 3.0);
    const TradeLog log = replay(inst, seq, policy, 0);
    CHECK(values(log.bought) == std::vector<double>{1, 3});
    CHECK(values(log.sold) == std::vector<double>{4});
    CHECK(log.kappa == std::vector<int>{0, 1, 0, 1, 1});
    const OutcomeMetrics m = metrics(inst, log);
    CHECK(m.gft == 0.0);
    CHECK(m.welfare == 4.0);
    CHECK(m.trades == 1);
    CHECK(m.unsold == 1);
    CHECK(audit_trade_log(inst, seq, log).empty());
    CHECK(log.bought[0].step == 1);
    CHECK(log.sold[0].step == 2);
    CHECK(log.sold[0].price == 3.0);
}

TEST_CASE("refuse-all keeps kappa constant") {
    const Instance inst = e1();
    const std::vector<Agent> seq{b(inst, 0), s(inst, 1), s(inst, 0), b(inst, 1)};
    for (int start : {0, 1}) {
        RefuseAll policy;
        const TradeLog log = replay(inst, seq, policy, start);
        CHECK(log.bought.empty());
        CHECK(log.sold.empty());
        CHECK(log.kappa == std::vector<int>(5, start));
        const OutcomeMetrics m = metrics(inst, log);
        CHECK(m.welfare == 4.0);
        CHECK(m.gft == 0.0);
    }
}

TEST_CASE("buyers before any stock cannot be served") {
    const Instance inst = e1();
    const std::vector<Agent> seq{b(inst, 1), b(inst, 0), s(inst, 0), s(inst, 1)};
    GreedyAllPolicy policy;
    const TradeLog log = replay(inst, seq, policy, 0);
    CHECK(log.sold.empty());
    CHECK(metrics(inst, log).gft <= 0.0);
    CHECK(log.kappa.back() == 2);
}

TEST_CASE("perfect log on E1 reaches the optimum") {
    const Instance inst = e1();
    const std::vector<Agent> seq{s(inst, 0), s(inst, 1), b(inst, 0), b(inst, 1)};
    ConstantPolicy policy(1.5, 3.5);
    const TradeLog log = replay(inst, seq, policy, 0);
    const OutcomeMetrics m = metrics(inst, log);
    CHECK(m.welfare == 7.0);
    CHECK(m.gft == 3.0);
}

TEST_CASE("threshold ties trade on both sides") {
    const Instance inst = e1();
    const std::vector<Agent> full{s(inst, 1), b(inst, 1), s(inst, 0), b(inst, 0)};
    ConstantPolicy policy(3.0, 4.0);
    const TradeLog log = replay(inst, full, policy, 0);
    CHECK(values(log.bought) == std::vector<double>{3, 1});
    CHECK(values(log.sold) == std::vector<double>{4});
}

TEST_CASE("policy is told each step before and after") {
    const Instance inst = e1();
    const std::vector<Agent> seq{b(inst, 0), s(inst, 0), b(inst, 1), s(inst, 1)};
    Recorder rec;
    replay(inst, seq, rec, 0);
    CHECK(rec.decide_steps == std::vector<std::size_t>{1, 2, 3, 4});
    CHECK(rec.observe_steps == std::vector<std::size_t>{1, 2, 3, 4});
    CHECK(rec.outcomes == std::vector<bool>{false, true, true, true});
}

TEST_CASE("replay input errors") {
    const Instance inst = e1();
    ConstantPolicy policy(3.0, 3.0);
    const std::vector<Agent> short_seq{s(inst, 0), b(inst, 1), s(inst, 1)};
    const std::vector<Agent> dup{s(inst, 0), s(inst, 0), b(inst, 1), b(inst, 0)};
    const Agent foreign{Side::Seller, 7.0, 0};
    const std::vector<Agent> wrong{foreign, s(inst, 1), b(inst, 1), b(inst, 0)};
    for (const auto& seq : {short_seq, dup, wrong}) {
        CHECK_FALSE(is_arrival_sequence(inst, seq));
        try {
            replay(inst, seq, policy, 0);
            FAIL("expected SequenceMismatch");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::SequenceMismatch);
        }
    }
    const std::vector<Agent> ok{s(inst, 0), b(inst, 1), s(inst, 1), b(inst, 0)};
    CHECK(is_arrival_sequence(inst, ok));
    CHECK_THROWS_AS(replay(inst, ok, policy, -1), Error);
}

TEST_CASE("count_greedy_trades examples") {
    using S = Side;
    for (std::size_t n = 1; n <= 6; ++n) {
        std::vector<Side> sellers_first(n, S::Seller);
        sellers_first.insert(sellers_first.end(), n, S::Buyer);
        std::vector<Side> buyers_first(n, S::Buyer);
        buyers_first.insert(buyers_first.end(), n, S::Seller);
        CHECK(count_greedy_trades(std::span<const Side>(sellers_first)) == n);
        CHECK(count_greedy_trades(std::span<const Side>(buyers_first)) == 0);
    }
    const std::vector<Side> bssb{S::Buyer, S::Seller, S::Seller, S::Buyer};
    CHECK(count_greedy_trades(std::span<const Side>(bssb)) == 1);
}

TEST_CASE("count_greedy_trades agrees with a greedy replay") {
    SplitMix64 rng(21);
    for (int rep = 0; rep < 500; ++rep) {
        const Instance inst = oracle::random_instance(rng, 1 + rng.below(8));
        const auto seq = oracle::random_sequence(inst, rng);
        GreedyAllPolicy greedy;
        CHECK(count_greedy_trades(std::span<const Agent>(seq)) == replay(inst, seq, greedy, 0).sold.size());
    }
}

TEST_CASE("simulate matches replay plus metrics") {
    SplitMix64 rng(22);
    for (int rep = 0; rep < 500; ++rep) {
        const Instance inst = oracle::random_instance(rng, 1 + rng.below(6));
        const auto seq = oracle::random_sequence(inst, rng);
        const int start = static_cast<int>(rng.below(2));
        const std::uint64_t pseed = rng();
        oracle::RandomPolicy p1(pseed, 10.0);
        oracle::RandomPolicy p2(pseed, 10.0);
        const OutcomeMetrics a = metrics(inst, replay(inst, seq, p1, start));
        const OutcomeMetrics c = simulate(inst, seq, p2, start);
        CHECK(a.welfare == doctest::Approx(c.welfare).epsilon(1e-12));
        CHECK(a.gft == doctest::Approx(c.gft).epsilon(1e-12));
        CHECK(a.trades == c.trades);
        CHECK(a.unsold == c.unsold);
    }
}

TEST_CASE("replay is deterministic") {
    SplitMix64 rng(23);
    const Instance inst = oracle::random_instance(rng, 6);
    const auto seq = oracle::random_sequence(inst, rng);
    oracle::RandomPolicy p1(99, 10.0);
    oracle::RandomPolicy p2(99, 10.0);
    const TradeLog a = replay(inst, seq, p1, 1);
    const TradeLog c = replay(inst, seq, p2, 1);
    CHECK(a.kappa == c.kappa);
    REQUIRE(a.bought.size() == c.bought.size());
    REQUIRE(a.sold.size() == c.sold.size());
    for (std::size_t i = 0; i < a.bought.size(); ++i) {
        CHECK(a.bought[i].agent == c.bought[i].agent);
        CHECK(a.bought[i].price == c.bought[i].price);
    }
    for (std::size_t i = 0; i < a.sold.size(); ++i) {
        CHECK(a.sold[i].agent == c.sold[i].agent);
        CHECK(a.sold[i].price == c.sold[i].price);
    }
}

TEST_CASE("audit flags a tampered log") {
    const Instance inst = e1();
    const std::vector<Agent> seq{s(inst, 0), b(inst, 1), s(inst, 1), b(inst, 0)};
    ConstantPolicy policy(3.0, 3.0);
    TradeLog log = replay(inst, seq, policy, 0);
    TradeLog bad = log;
    bad.kappa[2] = -1;
    CHECK_FALSE(audit_trade_log(inst, seq, bad).empty());
    bad = log;
    bad.sold.push_back({4, b(inst, 0), 1.0});
    CHECK_FALSE(audit_trade_log(inst, seq, bad).empty());
    bad = log;
    bad.bought.pop_back();
    CHECK_FALSE(audit_trade_log(inst, seq, bad).empty());
}

TEST_CASE("fuzz: random policies never break the log invariants") {
    SplitMix64 rng(24);
    std::size_t violations = 0;
    for (int rep = 0; rep < 10000; ++rep) {
        const Instance inst = oracle::random_instance(rng, 1 + rng.below(10));
        const auto seq = oracle::random_sequence(inst, rng);
        oracle::RandomPolicy policy(rng(), 10.0);
        const TradeLog log = replay(inst, seq, policy, static_cast<int>(rng.below(2)));
        violations += audit_trade_log(inst, seq, log).size();
    }
    CHECK(violations == 0);
}

TEST_CASE("average greedy trades respect the lower bound at n = 64") {
    const double bound = (63.0 / 64.0) * (64.0 - std::sqrt(2.0 * 64.0 * std::log(64.0)));
    CHECK(bound == doctest::Approx(40.2881).epsilon(1e-5));
    SplitMix64 rng(25);
    std::vector<Side> sides(64, Side::Seller);
    sides.insert(sides.end(), 64, Side::Buyer);
    double total = 0.0;
    const int reps = 2000;
    for (int r = 0; r < reps; ++r) {
        fisher_yates(std::span<Side>(sides), rng);
        total += static_cast<double>(count_greedy_trades(std::span<const Side>(sides)));
    }
    CHECK(total / reps >= bound);
}
