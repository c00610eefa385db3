#include <cmath>
#include <string>
#include <unordered_set>

#include "intermediation/harness.hpp"
#include "intermediation/rng.hpp"

namespace intermed {
namespace {

// Uniform on the open interval (lo, hi).
double draw_open(SplitMix64& rng, double lo, double hi) {
    const double u = (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
    return lo + (hi - lo) * u;
}

// Nudges repeated values upward so all values are distinct.
void make_distinct(std::vector<double>& sellers, std::vector<double>& buyers) {
    std::unordered_set<double> seen;
    seen.reserve(2 * (sellers.size() + buyers.size()));
    for (auto* side : {&sellers, &buyers}) {
        for (double& v : *side) {
            while (!seen.insert(v).second) v = std::nextafter(v, kInf);
        }
    }
}

void fill(std::vector<double>& out, std::size_t count, SplitMix64& rng, double lo, double hi) {
    for (std::size_t i = 0; i < count; ++i) out.push_back(draw_open(rng, lo, hi));
}

[[noreturn]] void bad(const std::string& msg) { throw Error(ErrorCode::BadFamilyParams, msg); }

}  // namespace

std::string_view to_string(FamilyKind kind) {
    switch (kind) {
        case FamilyKind::UniformRandom: return "uniform";
        case FamilyKind::Bimodal: return "bimodal";
        case FamilyKind::FewTrades: return "fewtrades";
        case FamilyKind::HeavyBuyer: return "heavybuyer";
        case FamilyKind::ImpossibilityPairA: return "impossibility_a";
        case FamilyKind::ImpossibilityPairB: return "impossibility_b";
    }
    return "unknown";
}

FamilyKind parse_family(std::string_view name) {
    for (FamilyKind k : {FamilyKind::UniformRandom, FamilyKind::Bimodal, FamilyKind::FewTrades,
                         FamilyKind::HeavyBuyer, FamilyKind::ImpossibilityPairA, FamilyKind::ImpossibilityPairB}) {
        if (to_string(k) == name) return k;
    }
    bad("unknown family '" + std::string(name) + "'");
}

std::string family_label(const InstanceFamily& f) {
    std::string label = std::string(to_string(f.kind)) + "-n" + std::to_string(f.n);
    if (f.kind == FamilyKind::FewTrades) label += "-z" + std::to_string(f.z);
    return label + "-s" + std::to_string(f.seed);
}

Instance generate(const InstanceFamily& f) {
    if (f.n == 0) bad("n must be at least 1");
    const std::size_t n = f.n;
    SplitMix64 rng(substream_seed(f.seed, 0x6A09E667F3BCC909ULL));
    std::vector<double> sellers;
    std::vector<double> buyers;
    sellers.reserve(n);
    buyers.reserve(n);

    switch (f.kind) {
        case FamilyKind::UniformRandom:
            fill(sellers, n, rng, 0.0, 1.0);
            fill(buyers, n, rng, 0.0, 1.0);
            break;
        case FamilyKind::Bimodal:
            fill(sellers, n, rng, 0.0, 1.0);
            fill(buyers, n, rng, 1.0, 2.0);
            break;
        case FamilyKind::FewTrades:
            if (f.z > n) bad("z must not exceed n");
            // z sellers in (0,1) pair with z buyers in (3,4); the remaining
            // sellers in (2,3) all sit above the remaining buyers in (1,2).
            fill(sellers, f.z, rng, 0.0, 1.0);
            fill(sellers, n - f.z, rng, 2.0, 3.0);
            fill(buyers, f.z, rng, 3.0, 4.0);
            fill(buyers, n - f.z, rng, 1.0, 2.0);
            break;
        case FamilyKind::HeavyBuyer:
            // One cheap seller and one very valuable buyer; everyone else is
            // a seller above the median or a buyer below it.
            fill(sellers, 1, rng, 0.0, 1.0);
            fill(sellers, n - 1, rng, 2.0, 3.0);
            fill(buyers, n - 1, rng, 1.0, 2.0);
            buyers.push_back(1000.0);
            break;
        case FamilyKind::ImpossibilityPairA: {
            if (!(f.c_v > 0.0) || !(f.eps > 0.0)) bad("c_v and eps must be positive");
            sellers.push_back(f.c_v);
            buyers.push_back(f.c_v + f.eps);
            for (std::size_t i = 0; i + 1 < n; ++i) {
                sellers.push_back(f.c_v + f.eps + 1.0 + static_cast<double>(i));
                buyers.push_back(f.c_v * static_cast<double>(i + 1) / (2.0 * static_cast<double>(n)));
            }
            break;
        }
        case FamilyKind::ImpossibilityPairB: {
            if (n < 2) bad("impossibility_b needs n >= 2");
            if (!(f.c_v > 0.0) || !(f.eps > 0.0) || !(f.eps_prime > 0.0)) bad("c_v, eps and eps' must be positive");
            const double buyer = f.c_v - f.eps;
            const double second = buyer - f.eps_prime - kImpossibilityDelta;
            if (!(second > 0.0)) bad("c_v - eps - eps' - delta must be positive");
            sellers.push_back(f.c_v);
            sellers.push_back(second);
            buyers.push_back(buyer);
            for (std::size_t i = 0; i + 2 < n; ++i) sellers.push_back(f.c_v + 1.0 + static_cast<double>(i));
            for (std::size_t i = 0; i + 1 < n; ++i) {
                buyers.push_back(second * static_cast<double>(i + 1) / (2.0 * static_cast<double>(n)));
            }
            break;
        }
    }
    make_distinct(sellers, buyers);
    return validate_instance(std::move(sellers), std::move(buyers));
}

}  // namespace intermed
