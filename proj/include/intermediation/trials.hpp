#pragma once

#include <cstddef>
#include <vector>

#include <omp.h>

namespace intermed {

enum class Execution { Serial, Parallel };

/// Evaluates fn(trial, workspace) for trial = 0..trials-1 into a vector.
/// Each thread owns one workspace from make_workspace(). Trial results must
/// depend only on the trial index, so the serial and parallel paths return
/// identical vectors and callers reduce them in index order.
template <class T, class MakeWorkspace, class Fn>
std::vector<T> map_trials(std::size_t trials, Execution exec, MakeWorkspace make_workspace, Fn fn) {
    std::vector<T> out(trials);
    if (exec == Execution::Serial) {
        auto ws = make_workspace();
        for (std::size_t i = 0; i < trials; ++i) out[i] = fn(i, ws);
        return out;
    }
    const auto count = static_cast<long long>(trials);
#pragma omp parallel
    {
        auto ws = make_workspace();
#pragma omp for schedule(static)
        for (long long i = 0; i < count; ++i) {
            out[static_cast<std::size_t>(i)] = fn(static_cast<std::size_t>(i), ws);
        }
    }
    return out;
}

struct NoWorkspace {};

template <class T, class Fn>
std::vector<T> map_trials(std::size_t trials, Execution exec, Fn fn) {
    return map_trials<T>(trials, exec, [] { return NoWorkspace{}; },
                         [&fn](std::size_t i, NoWorkspace&) { return fn(i); });
}

inline void set_thread_count(int threads) {
    if (threads > 0) omp_set_num_threads(threads);
}

}  // namespace intermed
