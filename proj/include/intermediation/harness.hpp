#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "intermediation/algorithms.hpp"
#include "intermediation/core.hpp"

namespace intermed {

// ------------------------------------------------------------ instance families

enum class FamilyKind { UniformRandom, Bimodal, FewTrades, HeavyBuyer, ImpossibilityPairA, ImpossibilityPairB };

std::string_view to_string(FamilyKind kind);
/// Accepts uniform, bimodal, fewtrades, heavybuyer, impossibility_a, impossibility_b.
FamilyKind parse_family(std::string_view name);

struct InstanceFamily {
    FamilyKind kind = FamilyKind::UniformRandom;
    std::size_t n = 1;
    std::uint64_t seed = 0;
    std::size_t z = 0;        // FewTrades
    double c_v = 1.0;         // impossibility pairs: value of the first seller
    double eps = 0.1;         // impossibility pairs
    double eps_prime = 0.2;   // ImpossibilityPairB
};

/// Gap below b_hat - eps' for the second seller of ImpossibilityPairB.
inline constexpr double kImpossibilityDelta = 1e-3;

/// Throws Error{BadFamilyParams}.
Instance generate(const InstanceFamily& family);

/// Short stable label, e.g. "fewtrades-n2000-z10-s7".
std::string family_label(const InstanceFamily& family);

// ------------------------------------------------------------ exact oracle

struct ExactExpectation {
    double welfare = 0.0;
    double gft = 0.0;
    double trades = 0.0;
};

inline constexpr std::size_t kExactMaxAgents = 8;

/// Averages over all (2n)! arrival orders. gft_online's secretary coin is
/// weighted analytically. Throws Error{TooLarge} when 2n > 8.
ExactExpectation exact_expectation(const Instance& inst, AlgoId id, const AlgoParams& params);

/// Same enumeration for an arbitrary deterministic policy factory.
template <class MakePolicy>
ExactExpectation exact_expectation_for(const Instance& inst, int start_items, MakePolicy make_policy);

// ------------------------------------------------------------ Monte Carlo

enum class Objective { Welfare, Gft };
std::string_view to_string(Objective objective);
Objective parse_objective(std::string_view name);

struct SampleSummary {
    double mean = 0.0;
    double stddev = 0.0;  // sample standard deviation (n - 1)
    std::size_t count = 0;

    double stderr_mean() const;
    double ci95() const { return 1.96 * stderr_mean(); }
};

/// Summation in index order.
SampleSummary summarize(const std::vector<double>& values);

struct RatioReport {
    double algo_mean = 0.0;
    double algo_ci95 = 0.0;
    double benchmark = 0.0;
    double ratio = 0.0;
    std::size_t trials = 0;

    /// Half-width of the ratio's 95% interval.
    double ratio_ci95() const { return benchmark > 0.0 ? algo_ci95 / benchmark : 0.0; }
};

/// Welfare benchmark: optimal_welfare. GFT benchmark: m(S,B) + b_top.
double objective_benchmark(const Instance& inst, Objective objective);

/// Throws Error{ZeroBenchmark}.
RatioReport estimate_ratio(const Instance& inst, AlgoId id, const AlgoParams& params, Objective objective,
                           std::size_t trials, std::uint64_t seed, Execution exec = Execution::Parallel);

// ------------------------------------------------------------ verifiers

/// A claim checked by simulation. `pass` applies the claim's own rule
/// (upper-bound claims: empirical <= bound + 3 stderr; lower-bound claims:
/// empirical >= bound - 3 stderr).
struct ConcentrationReport {
    std::string claim;
    std::vector<std::pair<std::string, double>> parameters;
    double empirical = 0.0;
    double bound = 0.0;
    double stderr_empirical = 0.0;
    std::size_t trials = 0;
    bool pass = false;
    std::string note;
};

/// Tail bound exp(-2 eps^2 max(m, n) m n / N^2).
double lemma1_bound(std::size_t population, std::size_t ones, std::size_t draws, double eps);

/// Empirical frequencies of Y >= (1+eps)E[Y] and Y <= (1-eps)E[Y] for Y the
/// number of ones among `draws` samples without replacement; `empirical` is
/// the larger of the two. Throws Error{BadParams}.
ConcentrationReport verify_lemma1(std::size_t population, std::size_t ones, std::size_t draws, double eps,
                                  std::size_t trials, std::uint64_t seed, Execution exec = Execution::Parallel);

/// ((n-1)/n) (n - sqrt(2 n ln n)).
double lemma2_bound(std::size_t n);

ConcentrationReport verify_lemma2(std::size_t n, std::size_t trials, std::uint64_t seed,
                                  Execution exec = Execution::Parallel);

/// Constant standing in for the hidden O(1/n).
inline constexpr double kLemma4Constant = 4.0;

/// Frequency of |median - n| >= n^{2/3} when drawing ceil(8 n^{2/3} ln n)
/// values from {1..2n}, against kLemma4Constant / n. The draw count is
/// clamped to 2n and the report notes it; `draws_override` replaces it.
ConcentrationReport verify_lemma4(std::size_t n, std::size_t trials, std::uint64_t seed,
                                  std::optional<std::size_t> draws_override = std::nullopt,
                                  Execution exec = Execution::Parallel);

struct MoveToFrontResult {
    bool holds = true;
    std::size_t sequences = 0;
    std::size_t moves = 0;
    std::size_t counterexamples = 0;
};

/// Every side sequence with n sellers and n buyers (n <= n_max), every seller
/// moved to the front: greedy trades never decrease.
MoveToFrontResult check_move_to_front(std::size_t n_max);
bool verify_lemma5_exhaustive(std::size_t n_max);
ConcentrationReport lemma5_report(std::size_t n_max);

/// 1 - 2(exp(-2 eps^2 z c^2) + exp(-2 eps^2 z (1-c)^2)).
double well_mixed_bound(double c, double eps, std::size_t z);

/// True iff each of S_M, B_M has at least c(1-eps)z members in the first
/// ceil(c 2n) arrivals and at least (1-c)(1-eps)z in the rest.
bool is_well_mixed(const Instance& inst, std::span<const Agent> seq, double c, double eps);

/// Fraction of random orders that are well mixed; 1 when z = 0.
ConcentrationReport estimate_well_mixed(const Instance& inst, double c, double eps, std::size_t trials,
                                        std::uint64_t seed, Execution exec = Execution::Parallel);

// ------------------------------------------------------------ impossibility

struct ImpossibilityResult {
    double gft_a = 0.0;
    double gft_b = 0.0;
    double offline_a = 0.0;
    double offline_b = 0.0;
    double p_hat = 0.0;       // pilot estimate of the conditional buy probability
    double eps_prime = 0.0;
    bool eps_prime_clamped = false;
    std::size_t pilot_trials = 0;
    std::size_t trials = 0;
};

inline constexpr std::size_t kImpossibilityPilotTrials = 10000;

/// Runs `id` with no starting item on both impossibility instances. eps' is
/// set to eps / (1 - p_hat) from a pilot on instance B, clamped so the second
/// seller keeps a positive value. Throws Error{BadFamilyParams}.
ImpossibilityResult demonstrate_impossibility(double c_v, double eps, std::size_t trials, std::uint64_t seed,
                                              AlgoId id = AlgoId::GftOnline, const AlgoParams& params = {},
                                              std::size_t n = 2, Execution exec = Execution::Parallel);

// ------------------------------------------------------------ template impl

template <class MakePolicy>
ExactExpectation exact_expectation_for(const Instance& inst, int start_items, MakePolicy make_policy) {
    if (2 * inst.n() > kExactMaxAgents) {
        throw Error(ErrorCode::TooLarge, "exact enumeration supports at most 8 agents");
    }
    std::vector<Agent> agents = inst.agents();
    std::vector<std::size_t> order(agents.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::vector<Agent> seq(agents.size());
    ExactExpectation sum;
    std::size_t count = 0;
    do {
        for (std::size_t i = 0; i < order.size(); ++i) seq[i] = agents[order[i]];
        auto policy = make_policy();
        const OutcomeMetrics m = simulate(inst, seq, *policy, start_items);
        sum.welfare += m.welfare;
        sum.gft += m.gft;
        sum.trades += static_cast<double>(m.trades);
        ++count;
    } while (std::next_permutation(order.begin(), order.end()));
    const double c = static_cast<double>(count);
    return {sum.welfare / c, sum.gft / c, sum.trades / c};
}

}  // namespace intermed
