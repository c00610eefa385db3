#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "intermediation/algorithms.hpp"
#include "intermediation/harness.hpp"
#include "oracles.hpp"

using namespace intermed;

namespace {

/// Every arrival order of inst.
template <class Fn>
void for_each_order(const Instance& inst, Fn fn) {
    std::vector<Agent> agents = inst.agents();
    std::vector<std::size_t> order(agents.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<Agent> seq(agents.size());
    do {
        for (std::size_t i = 0; i < order.size(); ++i) seq[i] = agents[order[i]];
        fn(seq);
    } while (std::next_permutation(order.begin(), order.end()));
}

/// Sellers first (in index order), then buyers in the given value order.
std::vector<Agent> buyers_in_order(const Instance& inst, const std::vector<std::size_t>& buyer_order) {
    std::vector<Agent> seq;
    for (std::size_t i : buyer_order) seq.push_back(inst.buyer(i));
    for (std::size_t i = 0; i < inst.n(); ++i) seq.push_back(inst.seller(i));
    return seq;
}

}  // namespace

// ------------------------------------------------------------------ welfare

TEST_CASE("welfare sample length clamps for tiny n") {
    CHECK(welfare_sample_len(2, {}) == 3);
    CHECK(welfare_sample_len_clamped(2));
    WelfareParams p;
    p.sample_len = 0;
    CHECK(welfare_sample_len(5, p) == 1);
    p.sample_len = 4;
    CHECK(welfare_sample_len(5, p) == 4);
    CHECK(welfare_sample_len(100000, {}) ==
          static_cast<std::size_t>(std::ceil(8.0 * std::pow(100000.0, 2.0 / 3.0) * std::log(100000.0))));
}

TEST_CASE("welfare_online at n = 2 sells only at step 4") {
    const Instance inst = validate_instance({1, 3}, {2, 4});
    for_each_order(inst, [&](const std::vector<Agent>& seq) {
        WelfarePolicy policy(2, {});
        const TradeLog log = replay(inst, seq, policy, 0);
        for (const Fill& f : log.sold) CHECK(f.step == 4);
        REQUIRE(policy.price());
    });
}

TEST_CASE("lower median rule") {
    CHECK(lower_median({1, 2, 3, 4}) == 2.0);
    CHECK(lower_median({4, 3, 1, 2}) == 2.0);
    CHECK(lower_median({5, 1, 3}) == 3.0);
    CHECK(lower_median({7}) == 7.0);
    CHECK_THROWS_AS(lower_median({}), Error);
}

TEST_CASE("welfare price is the median of the sampled prefix") {
    SplitMix64 rng(31);
    for (int rep = 0; rep < 200; ++rep) {
        const Instance inst = oracle::random_instance(rng, 2 + rng.below(20));
        const auto seq = oracle::random_sequence(inst, rng);
        WelfareParams params;
        params.sample_len = 1 + rng.below(2 * inst.n() - 1);
        WelfarePolicy policy(inst.n(), params);
        const TradeLog log = replay(inst, seq, policy, 0);
        std::vector<double> prefix;
        for (std::size_t i = 0; i < policy.sample_len(); ++i) prefix.push_back(seq[i].value);
        std::sort(prefix.begin(), prefix.end());
        REQUIRE(policy.price());
        CHECK(*policy.price() == prefix[(prefix.size() - 1) / 2]);
        // No sale during sampling; every sampled seller sold.
        for (const Fill& f : log.sold) CHECK(f.step > policy.sample_len());
        std::size_t sampled_sellers = 0;
        for (std::size_t i = 0; i < policy.sample_len(); ++i) sampled_sellers += seq[i].side == Side::Seller;
        std::size_t early_buys = 0;
        for (const Fill& f : log.bought) early_buys += f.step <= policy.sample_len();
        CHECK(early_buys == sampled_sellers);
    }
}

TEST_CASE("truthful sampling skips the first seller and offers the running maximum") {
    // Sellers 5, 3, 9 arrive during sampling.
    const Instance inst = validate_instance({5, 3, 9}, {1, 2, 4});
    const std::vector<Agent> seq{inst.seller(0), inst.seller(1), inst.seller(2),
                                 inst.buyer(0),  inst.buyer(1),  inst.buyer(2)};
    WelfareParams params;
    params.truthful_sampling = true;
    params.sample_len = 3;
    WelfarePolicy policy(3, params);
    const TradeLog log = replay(inst, seq, policy, 0);
    REQUIRE(log.bought.size() == 1);
    CHECK(log.bought[0].agent.value == 3.0);
    CHECK(log.bought[0].price == 5.0);
}

// ---------------------------------------------------------------- secretary

TEST_CASE("secretary hand traces with a window of one buyer") {
    const Instance inst = validate_instance({10, 11, 12}, {3, 1, 2});
    SUBCASE("3,1,2 stays unsold") {
        SecretaryPolicy policy(3, 1);
        const TradeLog log = replay(inst, buyers_in_order(inst, {0, 1, 2}), policy, 1);
        CHECK(log.sold.empty());
        CHECK(log.kappa.back() == 1);
    }
    SUBCASE("1,3,2 sells to 3") {
        SecretaryPolicy policy(3, 1);
        const TradeLog log = replay(inst, buyers_in_order(inst, {1, 0, 2}), policy, 1);
        REQUIRE(log.sold.size() == 1);
        CHECK(log.sold[0].agent.value == 3.0);
        CHECK(log.bought.empty());
    }
}

TEST_CASE("secretary picks the best of 3 buyers in exactly half the orders") {
    const Instance inst = validate_instance({10, 11, 12}, {3, 1, 2});
    std::vector<std::size_t> order{0, 1, 2};
    int wins = 0;
    int total = 0;
    do {
        SecretaryPolicy policy(3, 1);
        const TradeLog log = replay(inst, buyers_in_order(inst, order), policy, 1);
        wins += log.sold.size() == 1 && log.sold[0].agent.value == 3.0;
        ++total;
    } while (std::next_permutation(order.begin(), order.end()));
    CHECK(total == 6);
    CHECK(wins == 3);
}

TEST_CASE("secretary with the 1/e window succeeds often enough at m = 10") {
    CHECK(secretary_window(10) == 4);
    const std::size_t m = 10;
    const std::size_t window = secretary_window(m);
    SplitMix64 rng(32);
    std::vector<int> ranks(m);
    std::iota(ranks.begin(), ranks.end(), 0);
    const int reps = 1000000;
    int wins = 0;
    for (int r = 0; r < reps; ++r) {
        fisher_yates(std::span<int>(ranks), rng);
        SecretaryTracker tracker(window);
        for (int v : ranks) {
            if (tracker.window_done() && v >= tracker.threshold()) {
                wins += v == static_cast<int>(m) - 1;
                break;
            }
            tracker.see_buyer(v);
        }
    }
    CHECK(static_cast<double>(wins) / reps >= 0.35);
}

// ---------------------------------------------------------------------- gft

TEST_CASE("gft parameters") {
    CHECK(gft_keep_count({}, 20) == 4);
    CHECK(gft_keep_count({}, 4) == 0);
    GftParams p;
    CHECK_NOTHROW(validate_gft_params(2, p));
    CHECK_THROWS_AS(validate_gft_params(1, p), Error);
    p.c = 0.5;
    CHECK_THROWS_AS(validate_gft_params(100, p), Error);
    p = {};
    p.eps = 1.0;
    CHECK_THROWS_AS(validate_gft_params(100, p), Error);
    p = {};
    p.secretary_prob = 1.5;
    CHECK_THROWS_AS(validate_gft_params(100, p), Error);
    p = {};
    p.keep_fraction = 0.0;
    CHECK_THROWS_AS(validate_gft_params(100, p), Error);
}

TEST_CASE("gft phase boundaries") {
    GftPolicy policy(100, GftParams{}, GftPolicy::Branch::Trading);
    CHECK(policy.sample_len() == 60);
    CHECK(policy.pair_trading_end() == 130);
    CHECK(policy.phase() == GftPhase::Sampling);
    GftPolicy sec(100, GftParams{}, GftPolicy::Branch::Secretary);
    CHECK(sec.phase() == GftPhase::SecretaryBranch);
}

namespace {

// n = 6 with c = 0.3 samples ceil(3.6) = 4 agents: sellers 1, 2 and buyers 9, 20.
Instance detection_instance() { return validate_instance({1, 2, 30, 31, 32, 33}, {9, 20, 3.5, 4.5, 5.5, 6.5}); }

std::vector<Agent> detection_sequence(const Instance& inst) {
    return {inst.seller(0), inst.buyer(0), inst.seller(1), inst.buyer(1), inst.seller(2), inst.buyer(2),
            inst.seller(3), inst.buyer(3), inst.seller(4), inst.buyer(4), inst.seller(5), inst.buyer(5)};
}

}  // namespace

TEST_CASE("gft detection: sampled matching of size 2 exceeds N = 1") {
    const Instance inst = detection_instance();
    const auto seq = detection_sequence(inst);
    GftParams params;
    params.big_n = 1;
    params.keep_fraction = 1.0;
    GftPolicy policy(6, params, GftPolicy::Branch::Trading);
    CHECK(policy.sample_len() == 4);
    replay(inst, seq, policy, 1);
    REQUIRE(policy.sampled_matching_size());
    CHECK(*policy.sampled_matching_size() == 2);
    CHECK_FALSE(policy.fell_back());
    REQUIRE(policy.thresholds());
    CHECK(policy.thresholds()->q == 2.0);
    CHECK(policy.thresholds()->p == 9.0);
}

TEST_CASE("gft falls back when the kept fraction rounds to zero") {
    const Instance inst = detection_instance();
    GftParams params;
    params.big_n = 1;
    GftPolicy policy(6, params, GftPolicy::Branch::Trading);
    const TradeLog log = replay(inst, detection_sequence(inst), policy, 1);
    CHECK(*policy.sampled_matching_size() == 2);
    CHECK(policy.fell_back());
    CHECK(log.bought.empty());
}

TEST_CASE("gft falls back on an empty sampled matching for any N") {
    const Instance inst = validate_instance({30, 31, 1, 2, 32, 33}, {3.5, 4.5, 9, 20, 5.5, 6.5});
    for (std::size_t big_n : {0u, 1u, 114u}) {
        GftParams params;
        params.big_n = big_n;
        params.keep_fraction = 1.0;
        GftPolicy policy(6, params, GftPolicy::Branch::Trading);
        const TradeLog log = replay(inst, detection_sequence(inst), policy, 1);
        CHECK(*policy.sampled_matching_size() == 0);
        CHECK(policy.fell_back());
        CHECK(log.bought.empty());
        CHECK(log.sold.size() <= 1);
    }
}

TEST_CASE("gft trading branch keeps stock at most one and buys only during pair trading") {
    SplitMix64 rng(33);
    GftParams params;
    params.big_n = 5;
    int trading_runs = 0;
    for (int rep = 0; rep < 300; ++rep) {
        const std::size_t n = 100 + rng.below(200);
        const Instance inst = generate({FamilyKind::FewTrades, n, rng(), n / 2});
        const auto seq = oracle::random_sequence(inst, rng);
        for (bool idle : {false, true}) {
            params.idle_free_item = idle;
            GftPolicy policy(n, params, GftPolicy::Branch::Trading);
            const TradeLog log = replay(inst, seq, policy, 1);
            CHECK(audit_trade_log(inst, seq, log).empty());
            const int cap = idle ? 2 : 1;
            for (int k : log.kappa) CHECK(k <= cap);
            if (policy.fell_back()) {
                CHECK(log.bought.empty());
                continue;
            }
            ++trading_runs;
            for (const Fill& f : log.bought) {
                CHECK(f.step > policy.sample_len());
                CHECK(f.step <= policy.pair_trading_end());
            }
            for (const Fill& f : log.sold) CHECK(f.step > policy.sample_len());
        }
    }
    CHECK(trading_runs > 0);
}

TEST_CASE("gft secretary branch never buys") {
    SplitMix64 rng(34);
    for (int rep = 0; rep < 200; ++rep) {
        const Instance inst = oracle::random_instance(rng, 2 + rng.below(30));
        const auto seq = oracle::random_sequence(inst, rng);
        GftPolicy policy(inst.n(), GftParams{}, GftPolicy::Branch::Secretary);
        const TradeLog log = replay(inst, seq, policy, 1);
        CHECK(log.bought.empty());
        CHECK(log.sold.size() <= 1);
    }
}

TEST_CASE("gft thresholds are tighter than the offline ones on well-mixed orders") {
    SplitMix64 rng(35);
    GftParams params;
    params.big_n = 5;
    int mixed = 0;
    for (int rep = 0; rep < 400; ++rep) {
        const std::size_t n = 400;
        const Instance inst = generate({FamilyKind::FewTrades, n, rng(), 100});
        const OfflineBenchmark bench = optimal_gft(inst);
        const auto seq = oracle::random_sequence(inst, rng);
        if (!is_well_mixed(inst, seq, params.c, params.eps)) continue;
        ++mixed;
        GftPolicy policy(n, params, GftPolicy::Branch::Trading);
        replay(inst, seq, policy, 1);
        REQUIRE_FALSE(policy.fell_back());
        CHECK(policy.thresholds()->q <= bench.thresholds.q);
        CHECK(policy.thresholds()->p >= bench.thresholds.p);
    }
    CHECK(mixed > 100);
}

TEST_CASE("gft coin follows secretary_prob") {
    GftParams params;
    params.secretary_prob = 0.0;
    CHECK(GftPolicy(10, params, std::uint64_t{1}).phase() == GftPhase::Sampling);
    params.secretary_prob = 1.0;
    CHECK(GftPolicy(10, params, std::uint64_t{1}).phase() == GftPhase::SecretaryBranch);
    params.secretary_prob = 0.5;
    int secretary = 0;
    for (std::uint64_t s = 0; s < 20000; ++s) {
        secretary += GftPolicy(10, params, substream_seed(7, s)).phase() == GftPhase::SecretaryBranch;
    }
    CHECK(secretary / 20000.0 == doctest::Approx(0.5).epsilon(0.03));
}

// ------------------------------------------------------------------ baselines

TEST_CASE("sequential offline on E3 uses the two-price branch") {
    const Instance inst = validate_instance({1, 2, 10}, {3, 9, 20});
    SequentialOfflinePolicy policy(inst);
    CHECK_FALSE(policy.median_branch());
    CHECK(policy.buy_price() == 10.0);
    CHECK(policy.sell_price() == 3.0);
    const std::vector<Agent> seq{inst.seller(0), inst.seller(1), inst.seller(2),
                                 inst.buyer(0),  inst.buyer(1),  inst.buyer(2)};
    const TradeLog log = sequential_offline_baseline(inst, seq);
    CHECK(log.bought.size() == 3);
    CHECK(log.sold.size() == 3);
}

TEST_CASE("sequential offline picks the median branch on a bimodal instance") {
    const Instance inst = generate({FamilyKind::Bimodal, 1000, 3});
    SequentialOfflinePolicy policy(inst);
    CHECK(policy.median_branch());
    CHECK(policy.sell_price() == optimal_welfare(inst).median_price);
}

TEST_CASE("sequential offline median branch never buys above the median price") {
    SplitMix64 rng(36);
    int median_runs = 0;
    for (int rep = 0; rep < 300; ++rep) {
        const std::size_t n = 8 + rng.below(40);
        const Instance inst = generate({FamilyKind::FewTrades, n, rng(), rng.below(n + 1)});
        SequentialOfflinePolicy policy(inst);
        if (!policy.median_branch()) continue;
        ++median_runs;
        const double median = optimal_welfare(inst).median_price;
        const TradeLog log = sequential_offline_baseline(inst, oracle::random_sequence(inst, rng));
        for (const Fill& f : log.bought) CHECK(f.agent.value < median);
    }
    CHECK(median_runs > 0);
}

// -------------------------------------------------------------------- drivers

TEST_CASE("algorithm names") {
    for (AlgoId id : kAllAlgorithms) CHECK(parse_algo(to_string(id)) == id);
    try {
        parse_algo("magic");
        FAIL("expected UnknownAlgorithm");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::UnknownAlgorithm);
    }
    CHECK(start_items_for(AlgoId::GftOnline) == 1);
    CHECK(start_items_for(AlgoId::SecretaryOnly) == 1);
    CHECK(start_items_for(AlgoId::WelfareOnline) == 0);
    CHECK(start_items_for(AlgoId::SequentialOffline) == 0);
    CHECK(start_items_for(AlgoId::GreedyAll) == 0);
}

TEST_CASE("run_algorithm rejects zero trials and is reproducible") {
    const Instance inst = validate_instance({1, 3}, {2, 4});
    CHECK_THROWS_AS(run_algorithm(inst, AlgoId::GreedyAll, {}, 0, 1), Error);
    const auto a = run_algorithm(inst, AlgoId::WelfareOnline, {}, 1, 42);
    const auto b = run_algorithm(inst, AlgoId::WelfareOnline, {}, 1, 42);
    CHECK(a[0].welfare == b[0].welfare);
    CHECK(a[0].trades == b[0].trades);
    std::vector<Agent> scratch;
    const OutcomeMetrics m = run_trial(inst, AlgoId::WelfareOnline, {}, 42, 0, scratch);
    CHECK(m.welfare == a[0].welfare);
    CHECK(scratch == trial_sequence(inst, 42, 0));
}

TEST_CASE("welfare_online on E1: Monte Carlo within 3 sigma of the exact expectation") {
    const Instance inst = validate_instance({1, 3}, {2, 4});
    const ExactExpectation exact = exact_expectation(inst, AlgoId::WelfareOnline, {});
    const auto runs = run_algorithm(inst, AlgoId::WelfareOnline, {}, 100000, 5);
    std::vector<double> w;
    for (const auto& r : runs) w.push_back(r.welfare);
    const SampleSummary sum = summarize(w);
    CHECK(std::abs(sum.mean - exact.welfare) <= 3.0 * sum.stderr_mean());
}

TEST_CASE("run_trial_log matches run_trial") {
    const Instance inst = generate({FamilyKind::FewTrades, 200, 2, 80});
    AlgoParams params;
    params.gft.big_n = 5;
    for (AlgoId id : kAllAlgorithms) {
        for (std::uint64_t t = 0; t < 20; ++t) {
            std::vector<Agent> scratch;
            const OutcomeMetrics m = run_trial(inst, id, params, 9, t, scratch);
            const TradeLog log = run_trial_log(inst, id, params, 9, t);
            CHECK(audit_trade_log(inst, scratch, log).empty());
            const OutcomeMetrics from_log = metrics(inst, log);
            CHECK(from_log.trades == m.trades);
            CHECK(from_log.gft == doctest::Approx(m.gft));
        }
    }
}
