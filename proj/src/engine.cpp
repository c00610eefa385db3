#include "intermediation/engine.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace intermed {
namespace {

// The kappa recurrence, shared by replay() and simulate(). Sink receives
// on_buy / on_sell / on_step callbacks.
template <class Sink>
void run_recurrence(std::span<const Agent> seq, PricePolicy& policy, int start_items, Sink& sink) {
    int kappa = start_items;
    policy.start(start_items);
    for (std::size_t i = 0; i < seq.size(); ++i) {
        const std::size_t step = i + 1;
        const Agent& agent = seq[i];
        const PriceDecision decision = policy.decide(step, agent.side);
        bool traded = false;
        if (agent.side == Side::Seller) {
            if (decision.buy_price && agent.value <= *decision.buy_price) {
                ++kappa;
                traded = true;
                sink.on_buy(step, agent, *decision.buy_price);
            }
        } else if (kappa >= 1 && decision.sell_price && agent.value >= *decision.sell_price) {
            --kappa;
            traded = true;
            sink.on_sell(step, agent, *decision.sell_price);
        }
        sink.on_step(kappa);
        policy.observe(step, agent, traded);
    }
}

struct LogSink {
    TradeLog& log;
    void on_buy(std::size_t step, const Agent& a, double price) { log.bought.push_back({step, a, price}); }
    void on_sell(std::size_t step, const Agent& a, double price) { log.sold.push_back({step, a, price}); }
    void on_step(int kappa) { log.kappa.push_back(kappa); }
};

struct MetricsSink {
    double bought_total = 0.0;
    double sold_total = 0.0;
    std::size_t trades = 0;
    int kappa = 0;
    void on_buy(std::size_t, const Agent& a, double) { bought_total += a.value; }
    void on_sell(std::size_t, const Agent& a, double) {
        sold_total += a.value;
        ++trades;
    }
    void on_step(int k) { kappa = k; }
};

}  // namespace

bool is_arrival_sequence(const Instance& inst, std::span<const Agent> seq) {
    const std::size_t n = inst.n();
    if (seq.size() != 2 * n) return false;
    std::vector<char> seen(2 * n, 0);
    for (const Agent& a : seq) {
        if (a.index >= n) return false;
        if (a != inst.agent(a.side, a.index)) return false;
        const std::size_t slot = (a.side == Side::Seller ? 0 : n) + a.index;
        if (seen[slot]) return false;
        seen[slot] = 1;
    }
    return true;
}

TradeLog replay(const Instance& inst, std::span<const Agent> seq, PricePolicy& policy,
                int start_items) {
    if (!is_arrival_sequence(inst, seq)) {
        throw Error(ErrorCode::SequenceMismatch, "sequence is not a permutation of the instance's agents");
    }
    if (start_items < 0) throw Error(ErrorCode::BadParams, "start_items must be nonnegative");
    TradeLog log;
    log.start_items = start_items;
    log.kappa.reserve(seq.size() + 1);
    log.kappa.push_back(start_items);
    LogSink sink{log};
    run_recurrence(seq, policy, start_items, sink);
    return log;
}

OutcomeMetrics simulate(const Instance& inst, std::span<const Agent> seq, PricePolicy& policy,
                        int start_items) {
    MetricsSink sink;
    sink.kappa = start_items;
    run_recurrence(seq, policy, start_items, sink);
    OutcomeMetrics out;
    out.gft = sink.sold_total - sink.bought_total;
    out.welfare = inst.seller_total() - sink.bought_total + sink.sold_total;
    out.trades = sink.trades;
    out.unsold = sink.kappa;
    return out;
}

OutcomeMetrics metrics(const Instance& inst, const TradeLog& log) {
    std::vector<char> bought(inst.n(), 0);
    double bought_total = 0.0;
    double sold_total = 0.0;
    for (const Fill& f : log.bought) {
        bought[f.agent.index] = 1;
        bought_total += f.agent.value;
    }
    for (const Fill& f : log.sold) sold_total += f.agent.value;

    OutcomeMetrics out;
    for (std::size_t i = 0; i < inst.n(); ++i) {
        if (!bought[i]) out.welfare += inst.sellers()[i];
    }
    out.welfare += sold_total;
    out.gft = sold_total - bought_total;
    out.trades = log.sold.size();
    out.unsold = log.kappa.empty() ? log.start_items : log.kappa.back();
    return out;
}

std::size_t count_greedy_trades(std::span<const Side> sides) {
    std::size_t stock = 0;
    std::size_t served = 0;
    for (Side s : sides) {
        if (s == Side::Seller) {
            ++stock;
        } else if (stock > 0) {
            --stock;
            ++served;
        }
    }
    return served;
}

std::size_t count_greedy_trades(std::span<const Agent> seq) {
    std::vector<Side> sides;
    sides.reserve(seq.size());
    for (const Agent& a : seq) sides.push_back(a.side);
    return count_greedy_trades(std::span<const Side>(sides));
}

std::vector<std::string> audit_trade_log(const Instance& inst, std::span<const Agent> seq,
                                         const TradeLog& log) {
    std::vector<std::string> issues;
    const auto report = [&](std::string msg) { issues.push_back(std::move(msg)); };

    if (log.kappa.size() != seq.size() + 1) {
        report("kappa has " + std::to_string(log.kappa.size()) + " entries, expected " +
               std::to_string(seq.size() + 1));
        return issues;
    }
    if (log.kappa.front() != log.start_items) report("kappa[0] differs from start_items");
    for (std::size_t t = 0; t < log.kappa.size(); ++t) {
        if (log.kappa[t] < 0) report("kappa[" + std::to_string(t) + "] is negative");
        if (t > 0) {
            const int d = log.kappa[t] - log.kappa[t - 1];
            if (d < -1 || d > 1) report("kappa jumps by " + std::to_string(d) + " at step " + std::to_string(t));
        }
    }
    const long long balance = static_cast<long long>(log.bought.size()) -
                              static_cast<long long>(log.sold.size()) + log.start_items;
    if (balance != log.kappa.back()) report("|T_S| - |T_B| + kappa_0 != kappa_2n");

    std::size_t bi = 0;
    std::size_t si = 0;
    for (std::size_t t = 1; t <= seq.size(); ++t) {
        const Agent& a = seq[t - 1];
        const int d = log.kappa[t] - log.kappa[t - 1];
        const bool is_buy = bi < log.bought.size() && log.bought[bi].step == t;
        const bool is_sell = si < log.sold.size() && log.sold[si].step == t;
        if (is_buy) {
            const Fill& f = log.bought[bi++];
            if (a.side != Side::Seller || f.agent != a) report("buy at step " + std::to_string(t) + " is not the arriving seller");
            if (a.value > f.price) report("seller above buy price traded at step " + std::to_string(t));
            if (d != 1) report("buy at step " + std::to_string(t) + " without kappa increment");
        }
        if (is_sell) {
            const Fill& f = log.sold[si++];
            if (a.side != Side::Buyer || f.agent != a) report("sale at step " + std::to_string(t) + " is not the arriving buyer");
            if (a.value < f.price) report("buyer below sell price traded at step " + std::to_string(t));
            if (log.kappa[t - 1] < 1) report("sale without stock at step " + std::to_string(t));
            if (d != -1) report("sale at step " + std::to_string(t) + " without kappa decrement");
        }
        if (!is_buy && !is_sell && d != 0) report("kappa changes without a trade at step " + std::to_string(t));
    }
    if (bi != log.bought.size() || si != log.sold.size()) report("fills out of step order");

    const OutcomeMetrics m = metrics(inst, log);
    double bought_total = 0.0;
    double sold_total = 0.0;
    for (const Fill& f : log.bought) bought_total += f.agent.value;
    for (const Fill& f : log.sold) sold_total += f.agent.value;
    const double scale = inst.seller_total() + sold_total + 1.0;
    if (std::abs(m.welfare - (inst.seller_total() + m.gft)) > 1e-9 * scale) {
        report("welfare != initial welfare + gft");
    }
    if (std::abs(m.gft - (sold_total - bought_total)) > 1e-9 * scale) report("gft accounting mismatch");
    return issues;
}

}  // namespace intermed
