#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "intermediation/error.hpp"

namespace intermed {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Side : std::uint8_t { Seller, Buyer };

/// One trader. `index` identifies the agent within its side of an Instance.
struct Agent {
    Side side = Side::Seller;
    double value = 0.0;
    std::uint32_t index = 0;

    friend bool operator==(const Agent&, const Agent&) = default;
};

/// n seller values and n buyer values, all strictly positive and pairwise
/// distinct. Only constructible through validate_instance().
class Instance {
public:
    std::size_t n() const noexcept { return sellers_.size(); }
    const std::vector<double>& sellers() const noexcept { return sellers_; }
    const std::vector<double>& buyers() const noexcept { return buyers_; }
    double seller_total() const noexcept { return seller_total_; }

    Agent seller(std::size_t i) const {
        return {Side::Seller, sellers_.at(i), static_cast<std::uint32_t>(i)};
    }
    Agent buyer(std::size_t i) const {
        return {Side::Buyer, buyers_.at(i), static_cast<std::uint32_t>(i)};
    }
    Agent agent(Side side, std::size_t i) const {
        return side == Side::Seller ? seller(i) : buyer(i);
    }

    /// All sellers (by index) followed by all buyers (by index).
    std::vector<Agent> agents() const;

private:
    friend Instance validate_instance(std::vector<double> sellers, std::vector<double> buyers);
    Instance(std::vector<double> sellers, std::vector<double> buyers);

    std::vector<double> sellers_;
    std::vector<double> buyers_;
    double seller_total_ = 0.0;
};

/// Throws Error{LengthMismatch | NonPositiveValue | DuplicateValue}.
Instance validate_instance(std::vector<double> sellers, std::vector<double> buyers);

/// Side-sets of a matching; holds no pairs.
struct Matching {
    std::vector<Agent> sellers;
    std::vector<Agent> buyers;

    std::size_t size() const noexcept { return sellers.size(); }
};

/// Sellers with value <= q and buyers with value >= p are eligible.
struct ThresholdPair {
    double q = -kInf;
    double p = kInf;
};

struct WelfareOptimum {
    double welfare = 0.0;
    double median_price = 0.0;  // value of the n-th most valuable agent
    Matching matching;
};

struct OfflineBenchmark {
    double optimal_welfare = 0.0;
    double optimal_gft = 0.0;
    std::size_t z = 0;
    ThresholdPair thresholds;
    double median_price = 0.0;
    double b_top = 0.0;
    std::optional<double> s_star;
};

/// Result of the greedy GFT pairing: matched sellers ascending, matched
/// buyers descending, so pair i is (sellers[i], buyers[i]) and pair gains
/// are nonincreasing in i.
struct GftPairs {
    std::vector<Agent> sellers;
    std::vector<Agent> buyers;
    double gft = 0.0;

    std::size_t size() const noexcept { return sellers.size(); }
};

/// Canonical GFT oracle. Side sizes may differ.
GftPairs gft_pairs(std::vector<Agent> sellers, std::vector<Agent> buyers);

/// Value-only variant used on hot paths; returns the same pairs as gft_pairs.
struct GftValuePairs {
    std::vector<double> sellers;  // ascending
    std::vector<double> buyers;   // descending
    double gft = 0.0;

    std::size_t size() const noexcept { return sellers.size(); }
};
GftValuePairs gft_value_pairs(std::vector<double> sellers, std::vector<double> buyers);

WelfareOptimum optimal_welfare(const Instance& inst);
OfflineBenchmark optimal_gft(const Instance& inst);

struct TruncatedMatching {
    Matching matching;
    double gft = 0.0;
};

/// M(S,B,q,p): eligible agents on each side, truncated to equal size by
/// dropping the highest eligible sellers and the lowest eligible buyers.
TruncatedMatching truncated_matching(const Instance& inst, ThresholdPair t);

struct RestrictedMatching {
    std::size_t z = 0;
    double gft = 0.0;
};

/// optimal_gft on the sub-instance given by agent indices.
RestrictedMatching matching_restricted(const Instance& inst,
                                       std::span<const std::size_t> seller_indices,
                                       std::span<const std::size_t> buyer_indices);

}  // namespace intermed
