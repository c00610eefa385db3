#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "intermediation/core.hpp"
#include "intermediation/engine.hpp"
#include "intermediation/trials.hpp"

namespace intermed {

// ---------------------------------------------------------------------------
// Welfare: sample, estimate the median, then trade at that single price.
// ---------------------------------------------------------------------------

struct WelfareParams {
    /// Overrides the default sample length ceil(8 n^{2/3} ln n).
    std::optional<std::size_t> sample_len;
    /// Offer each sampled seller the highest seller value seen so far instead
    /// of an unbounded price. The first seller is skipped.
    bool truthful_sampling = false;
};

/// ceil(8 n^{2/3} ln n) clamped to [1, 2n-1], or the override clamped the same way.
std::size_t welfare_sample_len(std::size_t n, const WelfareParams& params);

/// True when the unclamped default length does not fit in 2n - 1 steps.
bool welfare_sample_len_clamped(std::size_t n);

/// Lower of the two middle order statistics for even sizes.
double lower_median(std::vector<double> values);

class WelfarePolicy final : public PricePolicy {
public:
    WelfarePolicy(std::size_t n, const WelfareParams& params);

    PriceDecision decide(std::size_t step, Side incoming) override;
    void observe(std::size_t step, const Agent& revealed, bool traded) override;

    std::size_t sample_len() const noexcept { return sample_len_; }
    std::optional<double> price() const noexcept { return price_; }

private:
    std::size_t sample_len_;
    bool truthful_;
    std::vector<double> sample_;
    std::optional<double> max_seller_;
    std::optional<double> price_;
};

// ---------------------------------------------------------------------------
// Secretary: sell a single item to the first buyer beating the observed best.
// ---------------------------------------------------------------------------

/// ceil(m / e).
std::size_t secretary_window(std::size_t num_candidates);

/// Tracks the observation window over buyers. Shared by the standalone
/// secretary policy and the GFT fallback.
class SecretaryTracker {
public:
    explicit SecretaryTracker(std::size_t window) : window_(window) {}

    void see_buyer(double value) {
        if (seen_ < window_ && (!best_ || value > *best_)) best_ = value;
        ++seen_;
    }
    bool window_done() const noexcept { return seen_ >= window_; }
    /// Sell threshold once the window is complete.
    double threshold() const noexcept { return best_ ? *best_ : -kInf; }
    std::size_t window() const noexcept { return window_; }

private:
    std::size_t window_;
    std::size_t seen_ = 0;
    std::optional<double> best_;
};

class SecretaryPolicy final : public PricePolicy {
public:
    /// Observes the first `window` buyers; defaults to secretary_window(num_candidates).
    explicit SecretaryPolicy(std::size_t num_candidates, std::optional<std::size_t> window = std::nullopt);

    PriceDecision decide(std::size_t step, Side incoming) override;
    void observe(std::size_t step, const Agent& revealed, bool traded) override;

private:
    SecretaryTracker tracker_;
};

// ---------------------------------------------------------------------------
// Gain from trade: A(c, eps, N).
// ---------------------------------------------------------------------------

struct GftParams {
    double c = 0.3;
    double eps = 0.2758;
    std::size_t big_n = 114;
    double secretary_prob = 0.5;
    /// Hold the free starting item back until the sell-off phase instead of
    /// treating it as ordinary stock during pair trading.
    bool idle_free_item = false;
    /// Fraction of M(S1,B1) kept when setting prices; defaults to (1-eps)*c.
    std::optional<double> keep_fraction;
};

/// Throws Error{BadParams} unless c in (0, 1/e], eps in (0,1),
/// secretary_prob in [0,1] and c*2n >= 1.
void validate_gft_params(std::size_t n, const GftParams& params);

enum class GftPhase { SecretaryBranch, Sampling, PairTrading, SellOff, Done };
std::string_view to_string(GftPhase phase);

/// floor(fraction * matched), the number of highest-value pairs kept.
std::size_t gft_keep_count(const GftParams& params, std::size_t matched);

class GftPolicy final : public PricePolicy {
public:
    enum class Branch { Secretary, Trading };

    /// Draws the secretary coin from `seed`.
    GftPolicy(std::size_t n, const GftParams& params, std::uint64_t seed);
    /// Fixes the coin outcome; used by the exact oracle.
    GftPolicy(std::size_t n, const GftParams& params, Branch branch);

    void start(int start_items) override;
    PriceDecision decide(std::size_t step, Side incoming) override;
    void observe(std::size_t step, const Agent& revealed, bool traded) override;

    GftPhase phase() const noexcept { return phase_; }
    /// True once the trading branch gave up and reverted to the secretary rule.
    bool fell_back() const noexcept { return fell_back_; }
    /// (q_hat, p_hat) once set.
    std::optional<ThresholdPair> thresholds() const noexcept { return thresholds_; }
    std::optional<std::size_t> sampled_matching_size() const noexcept { return sampled_matching_; }
    std::size_t sample_len() const noexcept { return sample_len_; }
    std::size_t pair_trading_end() const noexcept { return trading_end_; }

private:
    void finish_sampling();
    void advance_to(std::size_t step);

    std::size_t n_;
    GftParams params_;
    std::size_t sample_len_;
    std::size_t trading_end_;
    GftPhase phase_;
    bool fell_back_ = false;
    SecretaryTracker tracker_;
    std::vector<double> sample_sellers_;
    std::vector<double> sample_buyers_;
    std::optional<ThresholdPair> thresholds_;
    std::optional<std::size_t> sampled_matching_;
    int free_items_ = 0;   // starting stock, cost 0
    int bought_items_ = 0; // stock bought during pair trading
};

// ---------------------------------------------------------------------------
// Baselines.
// ---------------------------------------------------------------------------

/// Offline in values, online in order: trades at the median price when
/// |M(S,B)| >= n^{2/3}, otherwise buys from the lowest ceil(n^{2/3}) sellers
/// and sells to the highest ceil(n^{2/3}) buyers.
class SequentialOfflinePolicy final : public PricePolicy {
public:
    explicit SequentialOfflinePolicy(const Instance& inst);

    PriceDecision decide(std::size_t step, Side incoming) override;
    void observe(std::size_t, const Agent&, bool) override {}

    bool median_branch() const noexcept { return median_branch_; }
    double buy_price() const noexcept { return buy_price_; }
    double sell_price() const noexcept { return sell_price_; }

private:
    bool median_branch_ = false;
    double buy_price_ = -kInf;
    double sell_price_ = kInf;
};

TradeLog sequential_offline_baseline(const Instance& inst, std::span<const Agent> seq);

/// Buys from every seller and offers every buyer.
class GreedyAllPolicy final : public PricePolicy {
public:
    PriceDecision decide(std::size_t, Side incoming) override {
        return incoming == Side::Seller ? PriceDecision::buy_at(kInf) : PriceDecision::sell_at(-kInf);
    }
    void observe(std::size_t, const Agent&, bool) override {}
};

/// Fixed buy and sell prices.
class ConstantPolicy final : public PricePolicy {
public:
    ConstantPolicy(std::optional<double> buy, std::optional<double> sell) : buy_(buy), sell_(sell) {}
    PriceDecision decide(std::size_t, Side incoming) override {
        return incoming == Side::Seller ? PriceDecision{buy_, std::nullopt} : PriceDecision{std::nullopt, sell_};
    }
    void observe(std::size_t, const Agent&, bool) override {}

private:
    std::optional<double> buy_;
    std::optional<double> sell_;
};

// ---------------------------------------------------------------------------
// Whole-run drivers.
// ---------------------------------------------------------------------------

enum class AlgoId { WelfareOnline, GftOnline, SecretaryOnly, SequentialOffline, GreedyAll };

std::string_view to_string(AlgoId id);
/// Throws Error{UnknownAlgorithm}.
AlgoId parse_algo(std::string_view name);
inline constexpr AlgoId kAllAlgorithms[] = {AlgoId::WelfareOnline, AlgoId::GftOnline,
                                            AlgoId::SecretaryOnly, AlgoId::SequentialOffline,
                                            AlgoId::GreedyAll};

struct AlgoParams {
    WelfareParams welfare;
    GftParams gft;
};

/// 1 for gft_online and secretary_only, 0 otherwise.
int start_items_for(AlgoId id);

std::unique_ptr<PricePolicy> make_policy(const Instance& inst, AlgoId id, const AlgoParams& params,
                                         std::uint64_t seed);

/// One trial: substream (seed, trial) seeds the policy with its first draw
/// and then shuffles the arrival order with Fisher-Yates.
/// `start_items` overrides start_items_for(id).
OutcomeMetrics run_trial(const Instance& inst, AlgoId id, const AlgoParams& params,
                         std::uint64_t seed, std::uint64_t trial, std::vector<Agent>& scratch,
                         std::optional<int> start_items = std::nullopt);

/// Full trade log of the same trial run_trial would simulate.
TradeLog run_trial_log(const Instance& inst, AlgoId id, const AlgoParams& params, std::uint64_t seed,
                       std::uint64_t trial, std::optional<int> start_items = std::nullopt);

/// The arrival sequence used by run_trial for (seed, trial).
ArrivalSequence trial_sequence(const Instance& inst, std::uint64_t seed, std::uint64_t trial);

std::vector<OutcomeMetrics> run_algorithm(const Instance& inst, AlgoId id, const AlgoParams& params,
                                          std::size_t trials, std::uint64_t seed,
                                          Execution exec = Execution::Parallel,
                                          std::optional<int> start_items = std::nullopt);

}  // namespace intermed
