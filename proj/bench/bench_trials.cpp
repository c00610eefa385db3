// Times run_algorithm and the verifiers with serial and parallel trial
// execution and checks that both paths return identical results.
//
//   bench_trials [trials] [threads]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>

#include <omp.h>

#include "intermediation/harness.hpp"

using namespace intermed;

namespace {

double seconds(const std::function<void()>& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

template <class Fn>
bool compare(const char* label, Fn fn) {
    decltype(fn(Execution::Serial)) serial;
    decltype(fn(Execution::Serial)) parallel;
    const double ts = seconds([&] { serial = fn(Execution::Serial); });
    const double tp = seconds([&] { parallel = fn(Execution::Parallel); });
    const bool same = serial == parallel;
    std::printf("%-34s serial %8.3f s  parallel %8.3f s  speedup %5.2fx  %s\n", label, ts, tp, ts / tp,
                same ? "identical" : "MISMATCH");
    return same;
}

}  // namespace

int main(int argc, char** argv) {
    const std::size_t trials = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 2000;
    if (argc > 2) set_thread_count(std::atoi(argv[2]));
    std::printf("threads: %d, trials: %zu\n", omp_get_max_threads(), trials);

    const Instance bimodal = generate({FamilyKind::Bimodal, 2000, 1});
    const Instance few = generate({FamilyKind::FewTrades, 2000, 1, 500});
    bool ok = true;

    const auto means = [&](const Instance& inst, AlgoId id) {
        return [&inst, id, trials](Execution exec) {
            const auto runs = run_algorithm(inst, id, {}, trials, 7, exec);
            std::vector<double> out;
            for (const OutcomeMetrics& m : runs) out.push_back(m.welfare);
            return out;
        };
    };
    ok &= compare("welfare_online bimodal n=2000", means(bimodal, AlgoId::WelfareOnline));
    ok &= compare("gft_online fewtrades n=2000", means(few, AlgoId::GftOnline));
    ok &= compare("sequential_offline bimodal n=2000", means(bimodal, AlgoId::SequentialOffline));
    ok &= compare("lemma1 N=10000", [&](Execution exec) {
        return verify_lemma1(10000, 5000, 1000, 0.05, trials * 10, 3, exec).empirical;
    });
    ok &= compare("lemma2 n=1024", [&](Execution exec) { return verify_lemma2(1024, trials * 5, 3, exec).empirical; });
    ok &= compare("well_mixed bimodal n=2000", [&](Execution exec) {
        return estimate_well_mixed(bimodal, 0.3, 0.2758, trials * 5, 3, exec).empirical;
    });
    return ok ? 0 : 1;
}
