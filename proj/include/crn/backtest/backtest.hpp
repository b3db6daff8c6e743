#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "crn/agents/trainer.hpp"
#include "crn/backtest/metrics.hpp"
#include "crn/indicators.hpp"
#include "crn/market_data.hpp"
#include "crn/pgm/feature_selection.hpp"
#include "crn/trading_env.hpp"

namespace crn::backtest {

struct BacktestConfig {
    EnvConfig env;
    agents::AgentConfig agents;
    pgm::PgmConfig pgm;
    std::optional<FeatureGroup> group;  // pinned group; empty selects by BN accuracy
    std::size_t ppo_steps = 100000;
    std::size_t ddpg_steps = 100000;
    bool buy_and_hold_fees = true;      // false is the zero-fee switch
};

enum class Segment { Train, Test };

/// Everything about one coin that does not depend on the seed: selected
/// group, fitted DBN, direction predictions and normalized feature rows.
struct PreparedMarket {
    std::string coin;
    FeatureGroup group = FeatureGroup::Ohlcv;
    std::vector<std::pair<FeatureGroup, double>> group_accuracies;  // empty when pinned
    pgm::FittedDbn dbn;
    std::vector<Date> dates;
    std::vector<double> close;
    std::vector<std::vector<double>> crn_features;   // selected group, z-scored on train rows
    std::vector<std::vector<double>> base_features;  // OHLCV only, z-scored on train rows
    std::vector<std::optional<DirectionPrediction>> predictions;
    std::size_t first = 0;  // first row with defined features and a prediction
    std::size_t split = 0;  // first test row

    std::size_t test_days() const { return dates.size() - split; }
    /// Train covers [first, split), test covers [split, rows).
    MarketEpisode episode(bool with_signal, Segment segment) const;
};

/// Stationary view of a feature frame for agent observations: price-scale
/// columns become ratios to the close minus one, close and macro levels
/// become log returns, cumulative volume lines become first differences and
/// volume or tweet counts become logs. Bounded oscillators pass through.
/// Row 0 of a differenced column is 0.
std::vector<std::vector<double>> stationary_rows(const FeatureFrame& frame);

/// Throws TooSmallError when the training segment leaves fewer than two usable rows.
PreparedMarket prepare_market(const Dataset& ds, const BacktestConfig& cfg);

/// Buys with the whole balance at the first close and sells all at the last,
/// paying `fee_rate` on both legs. Throws ContractError on an empty series.
RunResult buy_and_hold(const std::vector<double>& close, double initial_cash, double fee_rate, std::string coin);

/// Trains a strategy's agent on the train segment. Throws ContractError for Buy-and-Hold.
agents::TrainingResult train_strategy(const PreparedMarket& market, Strategy strategy, std::uint64_t seed,
                                      const BacktestConfig& cfg);

/// Evaluates a trained policy on the test segment. Base strategies are
/// checked to observe OHLCV and portfolio fractions only.
RunResult evaluate_strategy(const PreparedMarket& market, Strategy strategy, std::uint64_t seed,
                            const agents::TrainedPolicy& policy, const BacktestConfig& cfg);

/// Train-then-test for agents, Buy-and-Hold directly. When `trade_log_dir`
/// is given the trade log is written there.
RunResult run_backtest(const PreparedMarket& market, Strategy strategy, std::uint64_t seed,
                       const BacktestConfig& cfg, const std::optional<std::filesystem::path>& trade_log_dir = {});

std::string trade_log_name(const std::string& coin, Strategy strategy, std::uint64_t seed);
void write_run_trade_log(RunResult& result, const std::filesystem::path& dir);

}  // namespace crn::backtest
