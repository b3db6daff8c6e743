#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "crn/trading_env.hpp"

namespace crn::backtest {

enum class Strategy { CrnPpo, CrnDdpg, BasePpo, BaseDdpg, BuyAndHold };

std::string_view strategy_name(Strategy s);
/// Throws ConfigError for unknown ids.
Strategy parse_strategy(std::string_view name);
const std::vector<Strategy>& all_strategies();
bool uses_signal(Strategy s);

/// Throws ContractError unless initial > 0.
double roi(double initial, double final_value);
/// Linear annualization: roi * 365 / days. Throws ContractError for days < 1.
double annual_roi(double roi, std::size_t days);

/// Shares in percent. Sizes average executed trades and are absent when none
/// occurred; the DBN frequencies are absent when the log carries no predictions.
struct DecisionStats {
    double buy_pct = 0.0;
    double sell_pct = 0.0;
    double hold_pct = 0.0;
    std::optional<double> buy_size_pct;
    std::optional<double> sell_size_pct;
    std::optional<double> up_pct;
    std::optional<double> down_pct;
};

/// Throws ContractError on an empty log.
DecisionStats decision_stats(const std::vector<TradeLogEntry>& log);

struct RunResult {
    std::string coin;
    Strategy strategy = Strategy::BuyAndHold;
    std::uint64_t seed = 0;
    double roi = 0.0;          // fraction
    double annual_roi = 0.0;   // fraction
    std::size_t test_days = 0;
    std::string trade_log;     // path of the persisted log, empty when not written
    std::optional<DecisionStats> stats;  // absent for Buy-and-Hold
    std::vector<TradeLogEntry> log;
};

struct Aggregate {
    std::string coin;
    Strategy strategy = Strategy::BuyAndHold;
    std::size_t runs = 0;
    double roi_mean = 0.0;
    double roi_std = 0.0;  // sample, n - 1
    double annual_mean = 0.0;
    double annual_std = 0.0;
    std::optional<DecisionStats> stats;  // means over runs
};

inline constexpr std::size_t kSeedsPerCell = 5;

/// Requires exactly `expected_runs` results of one (coin, strategy).
/// Throws ContractError otherwise.
Aggregate aggregate_runs(std::span<const RunResult> results, std::size_t expected_runs = kSeedsPerCell);

}  // namespace crn::backtest
