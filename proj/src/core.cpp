#include "intermediation/core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace intermed {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::DuplicateValue: return "DuplicateValue";
        case ErrorCode::NonPositiveValue: return "NonPositiveValue";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::SequenceMismatch: return "SequenceMismatch";
        case ErrorCode::UnknownAlgorithm: return "UnknownAlgorithm";
        case ErrorCode::BadFamilyParams: return "BadFamilyParams";
        case ErrorCode::BadParams: return "BadParams";
        case ErrorCode::TooLarge: return "TooLarge";
        case ErrorCode::ZeroBenchmark: return "ZeroBenchmark";
    }
    return "Unknown";
}

Instance::Instance(std::vector<double> sellers, std::vector<double> buyers)
    : sellers_(std::move(sellers)), buyers_(std::move(buyers)) {
    for (double s : sellers_) seller_total_ += s;
}

std::vector<Agent> Instance::agents() const {
    std::vector<Agent> out;
    out.reserve(2 * n());
    for (std::size_t i = 0; i < n(); ++i) out.push_back(seller(i));
    for (std::size_t i = 0; i < n(); ++i) out.push_back(buyer(i));
    return out;
}

Instance validate_instance(std::vector<double> sellers, std::vector<double> buyers) {
    if (sellers.empty() || buyers.empty()) {
        throw Error(ErrorCode::LengthMismatch, "instance needs at least one seller and one buyer");
    }
    if (sellers.size() != buyers.size()) {
        throw Error(ErrorCode::LengthMismatch,
                    std::to_string(sellers.size()) + " sellers vs " + std::to_string(buyers.size()) +
                        " buyers");
    }
    std::vector<double> all;
    all.reserve(2 * sellers.size());
    all.insert(all.end(), sellers.begin(), sellers.end());
    all.insert(all.end(), buyers.begin(), buyers.end());
    for (double v : all) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw Error(ErrorCode::NonPositiveValue, "value " + std::to_string(v) + " is not a positive finite number");
        }
    }
    std::sort(all.begin(), all.end());
    if (auto it = std::adjacent_find(all.begin(), all.end()); it != all.end()) {
        throw Error(ErrorCode::DuplicateValue, "value " + std::to_string(*it) + " appears more than once");
    }
    return Instance(std::move(sellers), std::move(buyers));
}

GftPairs gft_pairs(std::vector<Agent> sellers, std::vector<Agent> buyers) {
    std::sort(sellers.begin(), sellers.end(),
              [](const Agent& a, const Agent& b) { return a.value < b.value; });
    std::sort(buyers.begin(), buyers.end(),
              [](const Agent& a, const Agent& b) { return a.value > b.value; });
    std::size_t z = 0;
    const std::size_t limit = std::min(sellers.size(), buyers.size());
    GftPairs out;
    while (z < limit && sellers[z].value < buyers[z].value) {
        out.gft += buyers[z].value - sellers[z].value;
        ++z;
    }
    sellers.resize(z);
    buyers.resize(z);
    out.sellers = std::move(sellers);
    out.buyers = std::move(buyers);
    return out;
}

GftValuePairs gft_value_pairs(std::vector<double> sellers, std::vector<double> buyers) {
    std::sort(sellers.begin(), sellers.end());
    std::sort(buyers.begin(), buyers.end(), std::greater<>());
    std::size_t z = 0;
    const std::size_t limit = std::min(sellers.size(), buyers.size());
    GftValuePairs out;
    while (z < limit && sellers[z] < buyers[z]) {
        out.gft += buyers[z] - sellers[z];
        ++z;
    }
    sellers.resize(z);
    buyers.resize(z);
    out.sellers = std::move(sellers);
    out.buyers = std::move(buyers);
    return out;
}

WelfareOptimum optimal_welfare(const Instance& inst) {
    std::vector<Agent> all = inst.agents();
    std::sort(all.begin(), all.end(),
              [](const Agent& a, const Agent& b) { return a.value > b.value; });
    const std::size_t n = inst.n();
    WelfareOptimum out;
    out.median_price = all[n - 1].value;
    // Top n agents end up holding the n items.
    for (std::size_t i = 0; i < n; ++i) out.welfare += all[i].value;
    for (std::size_t i = 0; i < all.size(); ++i) {
        const Agent& a = all[i];
        if (a.side == Side::Buyer && i < n) out.matching.buyers.push_back(a);
        if (a.side == Side::Seller && i >= n) out.matching.sellers.push_back(a);
    }
    std::reverse(out.matching.sellers.begin(), out.matching.sellers.end());
    return out;
}

OfflineBenchmark optimal_gft(const Instance& inst) {
    std::vector<Agent> sellers;
    std::vector<Agent> buyers;
    sellers.reserve(inst.n());
    buyers.reserve(inst.n());
    for (std::size_t i = 0; i < inst.n(); ++i) {
        sellers.push_back(inst.seller(i));
        buyers.push_back(inst.buyer(i));
    }
    const GftPairs pairs = gft_pairs(std::move(sellers), std::move(buyers));
    const WelfareOptimum welfare = optimal_welfare(inst);

    OfflineBenchmark out;
    out.optimal_welfare = welfare.welfare;
    out.median_price = welfare.median_price;
    out.optimal_gft = pairs.gft;
    out.z = pairs.size();
    out.b_top = *std::max_element(inst.buyers().begin(), inst.buyers().end());
    if (out.z > 0) {
        out.thresholds = {pairs.sellers.back().value, pairs.buyers.back().value};
        out.s_star = pairs.sellers.back().value;
    }
    return out;
}

TruncatedMatching truncated_matching(const Instance& inst, ThresholdPair t) {
    TruncatedMatching out;
    for (std::size_t i = 0; i < inst.n(); ++i) {
        if (inst.sellers()[i] <= t.q) out.matching.sellers.push_back(inst.seller(i));
        if (inst.buyers()[i] >= t.p) out.matching.buyers.push_back(inst.buyer(i));
    }
    auto& s = out.matching.sellers;
    auto& b = out.matching.buyers;
    std::sort(s.begin(), s.end(), [](const Agent& x, const Agent& y) { return x.value < y.value; });
    std::sort(b.begin(), b.end(), [](const Agent& x, const Agent& y) { return x.value > y.value; });
    const std::size_t size = std::min(s.size(), b.size());
    s.resize(size);
    b.resize(size);
    for (std::size_t i = 0; i < size; ++i) out.gft += b[i].value - s[i].value;
    return out;
}

RestrictedMatching matching_restricted(const Instance& inst,
                                       std::span<const std::size_t> seller_indices,
                                       std::span<const std::size_t> buyer_indices) {
    std::vector<Agent> sellers;
    std::vector<Agent> buyers;
    sellers.reserve(seller_indices.size());
    buyers.reserve(buyer_indices.size());
    for (std::size_t i : seller_indices) sellers.push_back(inst.seller(i));
    for (std::size_t i : buyer_indices) buyers.push_back(inst.buyer(i));
    const GftPairs pairs = gft_pairs(std::move(sellers), std::move(buyers));
    return {pairs.size(), pairs.gft};
}

}  // namespace intermed
