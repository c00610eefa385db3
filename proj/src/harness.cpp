#include "intermediation/harness.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "intermediation/rng.hpp"

namespace intermed {
namespace {

double binomial_stderr(double p, std::size_t trials) {
    return std::sqrt(std::max(0.0, p * (1.0 - p)) / static_cast<double>(trials));
}

void require(bool ok, const std::string& msg) {
    if (!ok) throw Error(ErrorCode::BadParams, msg);
}

}  // namespace

// ------------------------------------------------------------ exact oracle

ExactExpectation exact_expectation(const Instance& inst, AlgoId id, const AlgoParams& params) {
    if (id != AlgoId::GftOnline) {
        return exact_expectation_for(inst, start_items_for(id),
                                     [&] { return make_policy(inst, id, params, 0); });
    }
    validate_gft_params(inst.n(), params.gft);
    const auto branch = [&](GftPolicy::Branch b) {
        return exact_expectation_for(inst, start_items_for(id),
                                     [&] { return std::make_unique<GftPolicy>(inst.n(), params.gft, b); });
    };
    const double w = params.gft.secretary_prob;
    const ExactExpectation sec = branch(GftPolicy::Branch::Secretary);
    const ExactExpectation trade = branch(GftPolicy::Branch::Trading);
    return {w * sec.welfare + (1.0 - w) * trade.welfare, w * sec.gft + (1.0 - w) * trade.gft,
            w * sec.trades + (1.0 - w) * trade.trades};
}

// ------------------------------------------------------------ Monte Carlo

std::string_view to_string(Objective objective) {
    return objective == Objective::Welfare ? "welfare" : "gft";
}

Objective parse_objective(std::string_view name) {
    if (name == "welfare") return Objective::Welfare;
    if (name == "gft") return Objective::Gft;
    throw Error(ErrorCode::BadParams, "unknown objective '" + std::string(name) + "'");
}

double SampleSummary::stderr_mean() const {
    return count > 0 ? stddev / std::sqrt(static_cast<double>(count)) : 0.0;
}

SampleSummary summarize(const std::vector<double>& values) {
    SampleSummary s;
    s.count = values.size();
    if (values.empty()) return s;
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(values.size());
    if (values.size() > 1) {
        double sq = 0.0;
        for (double v : values) sq += (v - s.mean) * (v - s.mean);
        s.stddev = std::sqrt(sq / static_cast<double>(values.size() - 1));
    }
    return s;
}

double objective_benchmark(const Instance& inst, Objective objective) {
    const OfflineBenchmark b = optimal_gft(inst);
    return objective == Objective::Welfare ? b.optimal_welfare : b.optimal_gft + b.b_top;
}

RatioReport estimate_ratio(const Instance& inst, AlgoId id, const AlgoParams& params, Objective objective,
                           std::size_t trials, std::uint64_t seed, Execution exec) {
    const double benchmark = objective_benchmark(inst, objective);
    if (!(benchmark > 0.0)) throw Error(ErrorCode::ZeroBenchmark, "benchmark must be positive");
    const std::vector<OutcomeMetrics> runs = run_algorithm(inst, id, params, trials, seed, exec);
    std::vector<double> values;
    values.reserve(runs.size());
    for (const OutcomeMetrics& m : runs) values.push_back(objective == Objective::Welfare ? m.welfare : m.gft);
    const SampleSummary s = summarize(values);
    return {s.mean, s.ci95(), benchmark, s.mean / benchmark, trials};
}

// ------------------------------------------------------------ sampling without replacement

double lemma1_bound(std::size_t population, std::size_t ones, std::size_t draws, double eps) {
    const double N = static_cast<double>(population);
    const double m = static_cast<double>(ones);
    const double n = static_cast<double>(draws);
    return std::exp(-2.0 * eps * eps * std::max(m, n) * m * n / (N * N));
}

ConcentrationReport verify_lemma1(std::size_t population, std::size_t ones, std::size_t draws, double eps,
                                  std::size_t trials, std::uint64_t seed, Execution exec) {
    require(population >= 1, "population must be nonempty");
    require(ones <= population, "m must not exceed the population");
    require(draws >= 1 && draws <= population, "draws must lie in [1, N]");
    require(eps > 0.0 && std::isfinite(eps), "eps must be positive");
    require(trials >= 1, "trials must be at least 1");

    struct Tails {
        char upper = 0;
        char lower = 0;
    };
    const double expected = static_cast<double>(ones) * static_cast<double>(draws) / static_cast<double>(population);
    const auto tails = map_trials<Tails>(trials, exec, [&](std::size_t trial) {
        SplitMix64 rng(substream_seed(seed, trial));
        std::size_t ones_left = ones;
        std::size_t left = population;
        std::size_t y = 0;
        // Sequential draws without replacement.
        for (std::size_t k = 0; k < draws; ++k, --left) {
            if (rng.below(left) < ones_left) {
                ++y;
                --ones_left;
            }
        }
        const double yd = static_cast<double>(y);
        return Tails{static_cast<char>(yd >= (1.0 + eps) * expected), static_cast<char>(yd <= (1.0 - eps) * expected)};
    });
    std::size_t upper = 0;
    std::size_t lower = 0;
    for (const Tails& t : tails) {
        upper += static_cast<std::size_t>(t.upper);
        lower += static_cast<std::size_t>(t.lower);
    }
    const double up = static_cast<double>(upper) / static_cast<double>(trials);
    const double lo = static_cast<double>(lower) / static_cast<double>(trials);

    ConcentrationReport r;
    r.claim = "lemma1";
    r.parameters = {{"N", static_cast<double>(population)}, {"m", static_cast<double>(ones)},
                    {"n", static_cast<double>(draws)},      {"eps", eps},
                    {"upper_tail", up},                     {"lower_tail", lo}};
    r.empirical = std::max(up, lo);
    r.bound = lemma1_bound(population, ones, draws, eps);
    r.stderr_empirical = binomial_stderr(r.empirical, trials);
    r.trials = trials;
    r.pass = r.empirical <= r.bound + 3.0 * r.stderr_empirical;
    return r;
}

// ------------------------------------------------------------ greedy trade count

double lemma2_bound(std::size_t n) {
    const double nd = static_cast<double>(n);
    return (nd - 1.0) / nd * (nd - std::sqrt(2.0 * nd * std::log(nd)));
}

ConcentrationReport verify_lemma2(std::size_t n, std::size_t trials, std::uint64_t seed, Execution exec) {
    require(n >= 1, "n must be at least 1");
    require(trials >= 1, "trials must be at least 1");
    const auto served = map_trials<double>(
        trials, exec,
        [n] {
            std::vector<Side> sides(2 * n, Side::Buyer);
            return sides;
        },
        [&](std::size_t trial, std::vector<Side>& sides) {
            std::fill(sides.begin(), sides.begin() + static_cast<std::ptrdiff_t>(n), Side::Seller);
            std::fill(sides.begin() + static_cast<std::ptrdiff_t>(n), sides.end(), Side::Buyer);
            SplitMix64 rng(substream_seed(seed, trial));
            fisher_yates(std::span<Side>(sides), rng);
            return static_cast<double>(count_greedy_trades(std::span<const Side>(sides)));
        });
    const SampleSummary s = summarize(served);
    ConcentrationReport r;
    r.claim = "lemma2";
    r.parameters = {{"n", static_cast<double>(n)}};
    r.empirical = s.mean;
    r.bound = lemma2_bound(n);
    r.stderr_empirical = s.stderr_mean();
    r.trials = trials;
    r.pass = r.empirical >= r.bound - 3.0 * r.stderr_empirical;
    return r;
}

// ------------------------------------------------------------ sample median deviation

ConcentrationReport verify_lemma4(std::size_t n, std::size_t trials, std::uint64_t seed,
                                  std::optional<std::size_t> draws_override, Execution exec) {
    require(n >= 1, "n must be at least 1");
    require(trials >= 1, "trials must be at least 1");
    const double nd = static_cast<double>(n);
    const double spread = std::pow(nd, 2.0 / 3.0);
    const std::size_t population = 2 * n;
    const std::size_t requested =
        draws_override ? *draws_override
                       : static_cast<std::size_t>(std::ceil(8.0 * spread * std::log(nd) - 1e-9));
    const std::size_t draws = std::clamp<std::size_t>(requested, 1, population);
    const std::size_t median_rank = (draws - 1) / 2;  // 0-based lower median

    const auto hits = map_trials<char>(trials, exec, [&](std::size_t trial) {
        SplitMix64 rng(substream_seed(seed, trial));
        // Selection sampling visits the population in increasing order.
        std::size_t needed = draws;
        std::size_t picked = 0;
        double median = 0.0;
        for (std::size_t v = 1; v <= population; ++v) {
            if (rng.below(population - v + 1) < needed) {
                --needed;
                if (picked++ == median_rank) {
                    median = static_cast<double>(v);
                    break;
                }
            }
        }
        return static_cast<char>(std::abs(median - nd) >= spread);
    });
    std::size_t count = 0;
    for (char h : hits) count += static_cast<std::size_t>(h);

    ConcentrationReport r;
    r.claim = "lemma4";
    r.parameters = {{"n", nd}, {"draws", static_cast<double>(draws)}, {"K", kLemma4Constant}};
    r.empirical = static_cast<double>(count) / static_cast<double>(trials);
    r.bound = kLemma4Constant / nd;
    r.stderr_empirical = binomial_stderr(r.empirical, trials);
    r.trials = trials;
    r.pass = r.empirical <= r.bound + 3.0 * r.stderr_empirical;
    if (requested != draws) r.note = "clamped: requested " + std::to_string(requested) + " draws";
    return r;
}

// ------------------------------------------------------------ seller moved to the front

MoveToFrontResult check_move_to_front(std::size_t n_max) {
    MoveToFrontResult out;
    for (std::size_t n = 1; n <= n_max; ++n) {
        std::vector<Side> sides(2 * n, Side::Buyer);
        std::fill(sides.begin(), sides.begin() + static_cast<std::ptrdiff_t>(n), Side::Seller);
        // Seller < Buyer, so this walks every arrangement of the multiset.
        do {
            ++out.sequences;
            const std::size_t base = count_greedy_trades(std::span<const Side>(sides));
            for (std::size_t j = 0; j < sides.size(); ++j) {
                if (sides[j] != Side::Seller) continue;
                std::vector<Side> moved(sides);
                std::rotate(moved.begin(), moved.begin() + static_cast<std::ptrdiff_t>(j),
                            moved.begin() + static_cast<std::ptrdiff_t>(j + 1));
                ++out.moves;
                if (count_greedy_trades(std::span<const Side>(moved)) < base) {
                    ++out.counterexamples;
                    out.holds = false;
                }
            }
        } while (std::next_permutation(sides.begin(), sides.end()));
    }
    return out;
}

bool verify_lemma5_exhaustive(std::size_t n_max) { return check_move_to_front(n_max).holds; }

ConcentrationReport lemma5_report(std::size_t n_max) {
    const MoveToFrontResult res = check_move_to_front(n_max);
    ConcentrationReport r;
    r.claim = "lemma5";
    r.parameters = {{"n_max", static_cast<double>(n_max)},
                    {"sequences", static_cast<double>(res.sequences)},
                    {"moves", static_cast<double>(res.moves)}};
    r.empirical = static_cast<double>(res.counterexamples);
    r.bound = 0.0;
    r.trials = res.moves;
    r.pass = res.holds;
    r.note = "exhaustive";
    return r;
}

// ------------------------------------------------------------ well mixed

double well_mixed_bound(double c, double eps, std::size_t z) {
    const double zd = static_cast<double>(z);
    return 1.0 - 2.0 * (std::exp(-2.0 * eps * eps * zd * c * c) + std::exp(-2.0 * eps * eps * zd * (1.0 - c) * (1.0 - c)));
}

namespace {

struct MatchedMembership {
    std::vector<char> seller;
    std::vector<char> buyer;
    std::size_t z = 0;
};

MatchedMembership matched_membership(const Instance& inst) {
    std::vector<Agent> sellers;
    std::vector<Agent> buyers;
    for (std::size_t i = 0; i < inst.n(); ++i) {
        sellers.push_back(inst.seller(i));
        buyers.push_back(inst.buyer(i));
    }
    const GftPairs pairs = gft_pairs(std::move(sellers), std::move(buyers));
    MatchedMembership m{std::vector<char>(inst.n(), 0), std::vector<char>(inst.n(), 0), pairs.size()};
    for (const Agent& a : pairs.sellers) m.seller[a.index] = 1;
    for (const Agent& a : pairs.buyers) m.buyer[a.index] = 1;
    return m;
}

std::size_t first_segment_len(std::size_t n, double c) {
    const double x = c * 2.0 * static_cast<double>(n);
    return std::min<std::size_t>(2 * n, static_cast<std::size_t>(std::ceil(x - 1e-9 * std::max(1.0, x))));
}

bool well_mixed_with(const MatchedMembership& mm, std::span<const Agent> seq, std::size_t split, double c,
                     double eps) {
    std::size_t s1 = 0;
    std::size_t b1 = 0;
    for (std::size_t i = 0; i < split; ++i) {
        const Agent& a = seq[i];
        if (a.side == Side::Seller ? mm.seller[a.index] : mm.buyer[a.index]) ++(a.side == Side::Seller ? s1 : b1);
    }
    const double z = static_cast<double>(mm.z);
    const double first = c * (1.0 - eps) * z - 1e-9;
    const double second = (1.0 - c) * (1.0 - eps) * z - 1e-9;
    const auto d = [](std::size_t k) { return static_cast<double>(k); };
    return d(s1) >= first && d(b1) >= first && d(mm.z - s1) >= second && d(mm.z - b1) >= second;
}

}  // namespace

bool is_well_mixed(const Instance& inst, std::span<const Agent> seq, double c, double eps) {
    const MatchedMembership mm = matched_membership(inst);
    return well_mixed_with(mm, seq, first_segment_len(inst.n(), c), c, eps);
}

ConcentrationReport estimate_well_mixed(const Instance& inst, double c, double eps, std::size_t trials,
                                        std::uint64_t seed, Execution exec) {
    require(c > 0.0 && c < 1.0, "c must lie in (0, 1)");
    require(eps > 0.0 && eps <= 1.0, "eps must lie in (0, 1]");
    require(trials >= 1, "trials must be at least 1");
    const MatchedMembership mm = matched_membership(inst);

    ConcentrationReport r;
    r.claim = "lemma7_well_mixed";
    r.parameters = {{"n", static_cast<double>(inst.n())}, {"z", static_cast<double>(mm.z)}, {"c", c}, {"eps", eps}};
    r.bound = well_mixed_bound(c, eps, mm.z);
    r.trials = trials;
    if (mm.z == 0) {
        r.empirical = 1.0;
        r.pass = true;
        r.note = "z=0: vacuous";
        return r;
    }
    const std::size_t split = first_segment_len(inst.n(), c);
    const auto mixed = map_trials<char>(
        trials, exec, [&inst] { return std::vector<Agent>(inst.agents()); },
        [&](std::size_t trial, std::vector<Agent>& seq) {
            seq = inst.agents();
            SplitMix64 rng(substream_seed(seed, trial));
            fisher_yates(std::span<Agent>(seq), rng);
            return static_cast<char>(well_mixed_with(mm, seq, split, c, eps));
        });
    std::size_t count = 0;
    for (char m : mixed) count += static_cast<std::size_t>(m);
    r.empirical = static_cast<double>(count) / static_cast<double>(trials);
    r.stderr_empirical = binomial_stderr(r.empirical, trials);
    r.pass = r.empirical >= r.bound - 3.0 * r.stderr_empirical;
    return r;
}

// ------------------------------------------------------------ impossibility

ImpossibilityResult demonstrate_impossibility(double c_v, double eps, std::size_t trials, std::uint64_t seed,
                                              AlgoId id, const AlgoParams& params, std::size_t n,
                                              Execution exec) {
    if (!(eps > 0.0) || !(c_v > 0.0)) throw Error(ErrorCode::BadFamilyParams, "c_v and eps must be positive");
    const double room = c_v - eps - kImpossibilityDelta;
    if (!(room > 0.0)) throw Error(ErrorCode::BadFamilyParams, "c_v must exceed eps + delta");
    if (trials == 0) throw Error(ErrorCode::BadParams, "trials must be at least 1");
    const double max_eps_prime = 0.9 * room;

    InstanceFamily fam_a{FamilyKind::ImpossibilityPairA, n, seed, 0, c_v, eps, 0.0};
    InstanceFamily fam_b{FamilyKind::ImpossibilityPairB, n, seed, 0, c_v, eps, std::min(eps, max_eps_prime)};
    const Instance inst_a = generate(fam_a);
    const Instance pilot_inst = generate(fam_b);

    // Pilot: how often is the first seller bought, given that the buyer and
    // the second seller both arrive after it.
    struct Pilot {
        char condition = 0;
        char bought = 0;
    };
    const std::uint64_t pilot_seed = substream_seed(seed, ~0ULL);
    const auto pilot = map_trials<Pilot>(kImpossibilityPilotTrials, exec, [&](std::size_t trial) {
        SplitMix64 rng(substream_seed(pilot_seed, trial));
        const std::uint64_t policy_seed = rng();
        std::vector<Agent> seq = pilot_inst.agents();
        fisher_yates(std::span<Agent>(seq), rng);
        std::size_t pos_s1 = 0, pos_s2 = 0, pos_b1 = 0;
        for (std::size_t i = 0; i < seq.size(); ++i) {
            if (seq[i].side == Side::Seller && seq[i].index == 0) pos_s1 = i;
            if (seq[i].side == Side::Seller && seq[i].index == 1) pos_s2 = i;
            if (seq[i].side == Side::Buyer && seq[i].index == 0) pos_b1 = i;
        }
        if (!(pos_b1 > pos_s1 && pos_s2 > pos_s1)) return Pilot{};
        auto policy = make_policy(pilot_inst, id, params, policy_seed);
        const TradeLog log = replay(pilot_inst, seq, *policy, 0);
        const bool bought = std::any_of(log.bought.begin(), log.bought.end(),
                                        [](const Fill& f) { return f.agent.index == 0; });
        return Pilot{1, static_cast<char>(bought)};
    });
    std::size_t cond = 0;
    std::size_t bought = 0;
    for (const Pilot& p : pilot) {
        cond += static_cast<std::size_t>(p.condition);
        bought += static_cast<std::size_t>(p.bought);
    }

    ImpossibilityResult out;
    out.pilot_trials = kImpossibilityPilotTrials;
    out.trials = trials;
    out.p_hat = cond > 0 ? static_cast<double>(bought) / static_cast<double>(cond) : 0.0;
    const double wanted = out.p_hat < 1.0 ? eps / (1.0 - out.p_hat) : kInf;
    out.eps_prime = std::min(wanted, max_eps_prime);
    out.eps_prime_clamped = wanted > max_eps_prime;
    fam_b.eps_prime = out.eps_prime;
    const Instance inst_b = generate(fam_b);

    const auto mean_gft = [&](const Instance& inst, std::uint64_t s) {
        const auto runs = run_algorithm(inst, id, params, trials, s, exec, 0);
        std::vector<double> g;
        g.reserve(runs.size());
        for (const OutcomeMetrics& m : runs) g.push_back(m.gft);
        return summarize(g).mean;
    };
    out.gft_a = mean_gft(inst_a, substream_seed(seed, 1));
    out.gft_b = mean_gft(inst_b, substream_seed(seed, 2));
    out.offline_a = optimal_gft(inst_a).optimal_gft;
    out.offline_b = optimal_gft(inst_b).optimal_gft;
    return out;
}

}  // namespace intermed
