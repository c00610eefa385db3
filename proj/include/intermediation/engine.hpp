#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "intermediation/core.hpp"

namespace intermed {

/// A permutation of the 2n agents of an Instance, in arrival order.
using ArrivalSequence = std::vector<Agent>;

/// Prices offered at one step; an empty price refuses to trade. Only the
/// price for the incoming agent's side is consulted.
struct PriceDecision {
    std::optional<double> buy_price;
    std::optional<double> sell_price;

    static PriceDecision refuse() { return {}; }
    static PriceDecision buy_at(double price) { return {price, std::nullopt}; }
    static PriceDecision sell_at(double price) { return {std::nullopt, price}; }
};

/// Posted-price decision procedure. decide() sees the step number and the
/// side of the incoming agent only; the value arrives later through observe().
/// Steps are numbered 1..2n.
class PricePolicy {
public:
    virtual ~PricePolicy() = default;

    /// Called once before step 1 with the number of items held initially.
    virtual void start(int start_items) { (void)start_items; }
    virtual PriceDecision decide(std::size_t step, Side incoming) = 0;
    virtual void observe(std::size_t step, const Agent& revealed, bool traded) = 0;
};

struct Fill {
    std::size_t step = 0;
    Agent agent;
    double price = 0.0;
};

struct TradeLog {
    std::vector<Fill> bought;  // T_S
    std::vector<Fill> sold;    // T_B
    std::vector<int> kappa;    // kappa[t] for t = 0..2n
    int start_items = 0;
    double free_item_cost = 0.0;
};

struct OutcomeMetrics {
    double welfare = 0.0;
    double gft = 0.0;
    std::size_t trades = 0;  // items delivered to buyers
    int unsold = 0;          // kappa at the end of the run
};

/// True iff seq holds every agent of inst exactly once.
bool is_arrival_sequence(const Instance& inst, std::span<const Agent> seq);

/// Runs the inventory recurrence: a seller trades iff its value <= the buy
/// price, a buyer trades iff stock >= 1 and its value >= the sell price.
/// Throws Error{SequenceMismatch} or Error{BadParams} for start_items < 0.
TradeLog replay(const Instance& inst, std::span<const Agent> seq, PricePolicy& policy,
                int start_items);

/// Same recurrence as replay() without recording the log. The sequence is
/// trusted to be a permutation of inst.
OutcomeMetrics simulate(const Instance& inst, std::span<const Agent> seq, PricePolicy& policy,
                        int start_items);

OutcomeMetrics metrics(const Instance& inst, const TradeLog& log);

/// Number of buyers served when buying from every seller and offering to
/// every buyer, given only the arrival sides.
std::size_t count_greedy_trades(std::span<const Agent> seq);
std::size_t count_greedy_trades(std::span<const Side> sides);

/// Checks every TradeLog invariant; returns one message per violation.
std::vector<std::string> audit_trade_log(const Instance& inst, std::span<const Agent> seq,
                                         const TradeLog& log);

}  // namespace intermed
