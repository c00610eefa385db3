#include "intermediation/algorithms.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "intermediation/rng.hpp"

namespace intermed {
namespace {

// ceil/floor of a real count, robust to values like 5.999999999999999.
std::size_t ceil_count(double x) {
    if (x <= 0.0) return 0;
    return static_cast<std::size_t>(std::ceil(x - 1e-9 * std::max(1.0, x)));
}

std::size_t floor_count(double x) {
    if (x <= 0.0) return 0;
    return static_cast<std::size_t>(std::floor(x + 1e-9 * std::max(1.0, x)));
}

double default_welfare_sample(std::size_t n) {
    const double nd = static_cast<double>(n);
    return 8.0 * std::pow(nd, 2.0 / 3.0) * std::log(nd);
}

}  // namespace

// ----------------------------------------------------------------- welfare

std::size_t welfare_sample_len(std::size_t n, const WelfareParams& params) {
    const std::size_t raw = params.sample_len ? *params.sample_len : ceil_count(default_welfare_sample(n));
    return std::clamp<std::size_t>(raw, 1, 2 * n - 1);
}

bool welfare_sample_len_clamped(std::size_t n) {
    return ceil_count(default_welfare_sample(n)) > 2 * n - 1;
}

double lower_median(std::vector<double> values) {
    if (values.empty()) throw Error(ErrorCode::BadParams, "median of an empty sample");
    const auto mid = values.begin() + static_cast<std::ptrdiff_t>((values.size() - 1) / 2);
    std::nth_element(values.begin(), mid, values.end());
    return *mid;
}

WelfarePolicy::WelfarePolicy(std::size_t n, const WelfareParams& params)
    : sample_len_(welfare_sample_len(n, params)), truthful_(params.truthful_sampling) {
    sample_.reserve(sample_len_);
}

PriceDecision WelfarePolicy::decide(std::size_t step, Side incoming) {
    if (step <= sample_len_) {
        if (incoming == Side::Buyer) return PriceDecision::refuse();
        if (!truthful_) return PriceDecision::buy_at(kInf);
        return max_seller_ ? PriceDecision::buy_at(*max_seller_) : PriceDecision::refuse();
    }
    return incoming == Side::Seller ? PriceDecision::buy_at(*price_) : PriceDecision::sell_at(*price_);
}

void WelfarePolicy::observe(std::size_t step, const Agent& revealed, bool) {
    if (step > sample_len_) return;
    sample_.push_back(revealed.value);
    if (revealed.side == Side::Seller && (!max_seller_ || revealed.value > *max_seller_)) {
        max_seller_ = revealed.value;
    }
    if (step == sample_len_) {
        price_ = lower_median(std::move(sample_));
        sample_ = {};
    }
}

// --------------------------------------------------------------- secretary

std::size_t secretary_window(std::size_t num_candidates) {
    return ceil_count(static_cast<double>(num_candidates) / std::numbers::e);
}

SecretaryPolicy::SecretaryPolicy(std::size_t num_candidates, std::optional<std::size_t> window)
    : tracker_(window ? *window : secretary_window(num_candidates)) {}

PriceDecision SecretaryPolicy::decide(std::size_t, Side incoming) {
    if (incoming == Side::Buyer && tracker_.window_done()) return PriceDecision::sell_at(tracker_.threshold());
    return PriceDecision::refuse();
}

void SecretaryPolicy::observe(std::size_t, const Agent& revealed, bool) {
    if (revealed.side == Side::Buyer) tracker_.see_buyer(revealed.value);
}

// --------------------------------------------------------------------- gft

void validate_gft_params(std::size_t n, const GftParams& p) {
    if (!(p.c > 0.0 && p.c <= 1.0 / std::numbers::e)) throw Error(ErrorCode::BadParams, "c must lie in (0, 1/e]");
    if (!(p.eps > 0.0 && p.eps < 1.0)) throw Error(ErrorCode::BadParams, "eps must lie in (0, 1)");
    if (!(p.secretary_prob >= 0.0 && p.secretary_prob <= 1.0)) {
        throw Error(ErrorCode::BadParams, "secretary_prob must lie in [0, 1]");
    }
    if (p.keep_fraction && !(*p.keep_fraction > 0.0 && *p.keep_fraction <= 1.0)) {
        throw Error(ErrorCode::BadParams, "keep_fraction must lie in (0, 1]");
    }
    if (p.c * 2.0 * static_cast<double>(n) < 1.0 - 1e-12) {
        throw Error(ErrorCode::BadParams, "c * 2n must be at least 1");
    }
}

std::string_view to_string(GftPhase phase) {
    switch (phase) {
        case GftPhase::SecretaryBranch: return "secretary";
        case GftPhase::Sampling: return "sampling";
        case GftPhase::PairTrading: return "pair_trading";
        case GftPhase::SellOff: return "sell_off";
        case GftPhase::Done: return "done";
    }
    return "unknown";
}

std::size_t gft_keep_count(const GftParams& params, std::size_t matched) {
    const double fraction = params.keep_fraction ? *params.keep_fraction : (1.0 - params.eps) * params.c;
    return floor_count(fraction * static_cast<double>(matched));
}

namespace {

GftPolicy::Branch draw_branch(const GftParams& params, std::uint64_t seed) {
    SplitMix64 rng(seed);
    return rng.uniform01() < params.secretary_prob ? GftPolicy::Branch::Secretary : GftPolicy::Branch::Trading;
}

}  // namespace

GftPolicy::GftPolicy(std::size_t n, const GftParams& params, std::uint64_t seed)
    : GftPolicy(n, params, draw_branch(params, seed)) {}

GftPolicy::GftPolicy(std::size_t n, const GftParams& params, Branch branch)
    : n_(n),
      params_(params),
      sample_len_(std::min(ceil_count(params.c * 2.0 * static_cast<double>(n)), 2 * n)),
      trading_end_(std::min(sample_len_ + ceil_count((1.0 - params.c) * static_cast<double>(n)), 2 * n)),
      phase_(branch == Branch::Secretary ? GftPhase::SecretaryBranch : GftPhase::Sampling),
      tracker_(secretary_window(n)) {}

void GftPolicy::start(int start_items) {
    free_items_ = start_items;
    bought_items_ = 0;
}

void GftPolicy::advance_to(std::size_t step) {
    if (phase_ == GftPhase::PairTrading && step > trading_end_) phase_ = GftPhase::SellOff;
}

PriceDecision GftPolicy::decide(std::size_t step, Side incoming) {
    advance_to(step);
    const int stock = free_items_ + bought_items_;
    switch (phase_) {
        case GftPhase::SecretaryBranch:
            if (incoming == Side::Buyer && stock > 0 && tracker_.window_done()) {
                return PriceDecision::sell_at(tracker_.threshold());
            }
            return PriceDecision::refuse();
        case GftPhase::PairTrading: {
            const int tradable = params_.idle_free_item ? bought_items_ : stock;
            if (incoming == Side::Seller) {
                return tradable == 0 ? PriceDecision::buy_at(thresholds_->q) : PriceDecision::refuse();
            }
            return tradable > 0 ? PriceDecision::sell_at(thresholds_->p) : PriceDecision::refuse();
        }
        case GftPhase::SellOff:
            if (incoming == Side::Buyer && stock > 0) return PriceDecision::sell_at(thresholds_->p);
            return PriceDecision::refuse();
        case GftPhase::Sampling:
        case GftPhase::Done:
            return PriceDecision::refuse();
    }
    return PriceDecision::refuse();
}

void GftPolicy::observe(std::size_t step, const Agent& revealed, bool traded) {
    if (revealed.side == Side::Buyer) tracker_.see_buyer(revealed.value);
    if (traded) {
        if (revealed.side == Side::Seller) {
            ++bought_items_;
        } else if (bought_items_ > 0) {
            --bought_items_;
        } else {
            --free_items_;
        }
        if (phase_ == GftPhase::SecretaryBranch ||
            (phase_ == GftPhase::SellOff && free_items_ + bought_items_ == 0)) {
            phase_ = GftPhase::Done;
        }
    }
    if (phase_ == GftPhase::Sampling) {
        (revealed.side == Side::Seller ? sample_sellers_ : sample_buyers_).push_back(revealed.value);
        if (step == sample_len_) finish_sampling();
    }
}

void GftPolicy::finish_sampling() {
    const GftValuePairs pairs = gft_value_pairs(std::move(sample_sellers_), std::move(sample_buyers_));
    sample_sellers_ = {};
    sample_buyers_ = {};
    sampled_matching_ = pairs.size();
    const std::size_t keep = gft_keep_count(params_, pairs.size());
    if (pairs.size() <= params_.big_n || keep == 0) {
        fell_back_ = true;
        phase_ = GftPhase::SecretaryBranch;
        return;
    }
    thresholds_ = ThresholdPair{pairs.sellers[keep - 1], pairs.buyers[keep - 1]};
    phase_ = trading_end_ > sample_len_ ? GftPhase::PairTrading : GftPhase::SellOff;
}

// --------------------------------------------------------------- baselines

SequentialOfflinePolicy::SequentialOfflinePolicy(const Instance& inst) {
    const std::size_t n = inst.n();
    const OfflineBenchmark bench = optimal_gft(inst);
    const double cut = std::pow(static_cast<double>(n), 2.0 / 3.0);
    median_branch_ = static_cast<double>(bench.z) + 1e-9 >= cut;
    if (median_branch_) {
        std::vector<double> all(inst.sellers());
        all.insert(all.end(), inst.buyers().begin(), inst.buyers().end());
        std::sort(all.begin(), all.end(), std::greater<>());
        sell_price_ = all[n - 1];  // the median price; buyers at or above it receive
        buy_price_ = all[n];       // sellers strictly below the median sell
        return;
    }
    const std::size_t k = std::min(n, ceil_count(cut));
    std::vector<double> sellers(inst.sellers());
    std::vector<double> buyers(inst.buyers());
    std::sort(sellers.begin(), sellers.end());
    std::sort(buyers.begin(), buyers.end(), std::greater<>());
    buy_price_ = sellers[k - 1];
    sell_price_ = buyers[k - 1];
}

PriceDecision SequentialOfflinePolicy::decide(std::size_t, Side incoming) {
    return incoming == Side::Seller ? PriceDecision::buy_at(buy_price_) : PriceDecision::sell_at(sell_price_);
}

TradeLog sequential_offline_baseline(const Instance& inst, std::span<const Agent> seq) {
    SequentialOfflinePolicy policy(inst);
    return replay(inst, seq, policy, 0);
}

// ----------------------------------------------------------------- drivers

std::string_view to_string(AlgoId id) {
    switch (id) {
        case AlgoId::WelfareOnline: return "welfare_online";
        case AlgoId::GftOnline: return "gft_online";
        case AlgoId::SecretaryOnly: return "secretary_only";
        case AlgoId::SequentialOffline: return "sequential_offline";
        case AlgoId::GreedyAll: return "greedy_all";
    }
    return "unknown";
}

AlgoId parse_algo(std::string_view name) {
    for (AlgoId id : kAllAlgorithms) {
        if (to_string(id) == name) return id;
    }
    throw Error(ErrorCode::UnknownAlgorithm, "unknown algorithm '" + std::string(name) + "'");
}

int start_items_for(AlgoId id) {
    return id == AlgoId::GftOnline || id == AlgoId::SecretaryOnly ? 1 : 0;
}

std::unique_ptr<PricePolicy> make_policy(const Instance& inst, AlgoId id, const AlgoParams& params,
                                         std::uint64_t seed) {
    switch (id) {
        case AlgoId::WelfareOnline: return std::make_unique<WelfarePolicy>(inst.n(), params.welfare);
        case AlgoId::GftOnline:
            validate_gft_params(inst.n(), params.gft);
            return std::make_unique<GftPolicy>(inst.n(), params.gft, seed);
        case AlgoId::SecretaryOnly: return std::make_unique<SecretaryPolicy>(inst.n());
        case AlgoId::SequentialOffline: return std::make_unique<SequentialOfflinePolicy>(inst);
        case AlgoId::GreedyAll: return std::make_unique<GreedyAllPolicy>();
    }
    throw Error(ErrorCode::UnknownAlgorithm, "unknown algorithm id");
}

namespace {

void shuffled_agents(const Instance& inst, SplitMix64& rng, std::vector<Agent>& out) {
    out.clear();
    for (std::size_t i = 0; i < inst.n(); ++i) out.push_back(inst.seller(i));
    for (std::size_t i = 0; i < inst.n(); ++i) out.push_back(inst.buyer(i));
    fisher_yates(std::span<Agent>(out), rng);
}

}  // namespace

OutcomeMetrics run_trial(const Instance& inst, AlgoId id, const AlgoParams& params, std::uint64_t seed,
                         std::uint64_t trial, std::vector<Agent>& scratch, std::optional<int> start_items) {
    SplitMix64 rng(substream_seed(seed, trial));
    const std::uint64_t policy_seed = rng();
    shuffled_agents(inst, rng, scratch);
    auto policy = make_policy(inst, id, params, policy_seed);
    return simulate(inst, scratch, *policy, start_items.value_or(start_items_for(id)));
}

TradeLog run_trial_log(const Instance& inst, AlgoId id, const AlgoParams& params, std::uint64_t seed,
                       std::uint64_t trial, std::optional<int> start_items) {
    SplitMix64 rng(substream_seed(seed, trial));
    const std::uint64_t policy_seed = rng();
    std::vector<Agent> seq;
    shuffled_agents(inst, rng, seq);
    auto policy = make_policy(inst, id, params, policy_seed);
    return replay(inst, seq, *policy, start_items.value_or(start_items_for(id)));
}

ArrivalSequence trial_sequence(const Instance& inst, std::uint64_t seed, std::uint64_t trial) {
    SplitMix64 rng(substream_seed(seed, trial));
    rng();
    ArrivalSequence seq;
    shuffled_agents(inst, rng, seq);
    return seq;
}

std::vector<OutcomeMetrics> run_algorithm(const Instance& inst, AlgoId id, const AlgoParams& params,
                                          std::size_t trials, std::uint64_t seed, Execution exec,
                                          std::optional<int> start_items) {
    if (trials == 0) throw Error(ErrorCode::BadParams, "trials must be at least 1");
    if (id == AlgoId::GftOnline) validate_gft_params(inst.n(), params.gft);
    return map_trials<OutcomeMetrics>(
        trials, exec,
        [&inst] {
            std::vector<Agent> scratch;
            scratch.reserve(2 * inst.n());
            return scratch;
        },
        [&](std::size_t trial, std::vector<Agent>& scratch) {
            return run_trial(inst, id, params, seed, trial, scratch, start_items);
        });
}

}  // namespace intermed
