#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "crn/market_data.hpp"
#include "crn/pgm/dbn.hpp"

namespace crn {

using pgm::DirectionPrediction;

struct EnvConfig {
    double lower = 0.40;            // position-size band, fraction of B or WA
    double upper = 0.60;
    double strong_fraction = 0.75;  // size forced by a strong DBN signal
    double strong_cutoff = 0.80;    // posterior needed for a strong signal (>=)
    double fee_rate = 0.001;        // of the traded notional
    double risk_free_annual = 0.034;
    double roi_weight = 0.7;
    double sr_weight = 0.3;
    std::size_t sharpe_window = 30;
    double initial_cash = 10000.0;
    double obs_clip = 10.0;         // |z-score| bound for normalized features

    /// Throws ConfigError when the band/cutoff ordering is violated.
    void validate() const;
};

enum class ActionKind { Sell, Hold, Buy };
std::string_view kind_name(ActionKind k);

/// Two bounded channels produced by both agents: a1 picks the kind, a2 the size.
struct RawAction {
    double a1 = 0.0;
    double a2 = 0.0;
};

struct ActionCommand {
    ActionKind kind = ActionKind::Hold;
    double fraction = 0.0;
};

struct PortfolioState {
    double cash = 0.0;   // B, USD
    double coins = 0.0;  // WA, coin units
    std::size_t step = 0;
    std::vector<double> values;  // marked-to-market history, USD

    double value(double price) const { return cash + coins * price; }
};

struct Execution {
    PortfolioState portfolio;
    double cost = 0.0;      // transaction cost, USD
    double fraction = 0.0;  // executed position size (0 for Hold)
    ActionKind kind = ActionKind::Hold;
};

/// Position sizing with fees. A matching strong signal (p_up for Buy, p_down
/// for Sell, at or above the cutoff) forces the strong fraction; otherwise the
/// requested fraction is clamped to the band. Sale proceeds are credited to
/// cash and purchased coins to the wallet at `price`. A buy whose fee would
/// overdraw cash is scaled down to leave exactly zero.
Execution apply_action(const PortfolioState& portfolio, const ActionCommand& action,
                       const std::optional<DirectionPrediction>& prediction, double price,
                       const EnvConfig& cfg);

/// Sharpe ratio of daily returns over the trailing window:
/// (mean - annual_rf/365) / std (population). Zero when fewer than two
/// values or the returns have no spread.
double compute_sharpe(std::span<const double> values, const EnvConfig& cfg);

/// Sharpe step reward. The S = 0 row takes precedence; the remaining
/// overlapping boundaries resolve top-down (S = 4 -> 10, S = 1 -> 4, S = -1 -> -1).
int reward_sr(double sharpe);
/// ROI step reward, top-down first match; the uncovered gap (0, 0.1) gives 0.
int reward_roi(double roi);
double combined_reward(double roi, double sharpe, const EnvConfig& cfg = {});

/// Z-score normalization fitted on training rows.
struct FeatureScaler {
    std::vector<double> mean;
    std::vector<double> std;

    static FeatureScaler fit(const std::vector<std::vector<double>>& rows);
    /// Zero-spread features map to 0. Results are clipped to +-clip.
    std::vector<double> apply(std::span<const double> row, double clip) const;
};

/// Layout: normalized features, [p_up, p_down] when the signal is enabled,
/// then cash fraction and holdings fraction of the portfolio value.
struct Observation {
    std::vector<double> values;
    std::size_t n_features = 0;
    bool has_signal = false;
};

Observation build_observation(std::span<const double> normalized_features,
                              const std::optional<DirectionPrediction>& prediction, bool with_signal,
                              const PortfolioState& portfolio, double price);

/// Data replayed by one environment: the rows of an episode.
struct MarketEpisode {
    std::vector<Date> dates;
    std::vector<double> close;
    std::vector<std::vector<double>> features;  // already normalized
    /// Empty disables the DBN signal (Base-RL); otherwise one entry per row.
    std::vector<std::optional<DirectionPrediction>> predictions;

    std::size_t rows() const { return dates.size(); }
    bool with_signal() const { return !predictions.empty(); }
};

struct TradeLogEntry {
    Date date;
    ActionKind kind = ActionKind::Hold;
    double fraction = 0.0;
    double cost = 0.0;
    double cash = 0.0;
    double coins = 0.0;
    double value = 0.0;
    std::optional<double> p_up;
    std::optional<double> p_down;
    double reward = 0.0;
};

struct StepResult {
    Observation observation;
    double reward = 0.0;
    bool done = false;
    double cost = 0.0;
    double fraction = 0.0;
    ActionKind kind = ActionKind::Hold;
};

/// Trading MDP over one episode. The action of step t executes at close t;
/// the portfolio is then marked at close t+1 and rewarded with the
/// cumulative ROI since reset and the trailing Sharpe ratio. Reaching the
/// last row liquidates all coins at its close, fee included.
class TradingEnv {
public:
    TradingEnv(MarketEpisode episode, EnvConfig cfg);

    Observation reset() { return reset(0); }
    /// Starts a fresh wallet at `start_row`. Throws ContractError unless at
    /// least one step remains.
    Observation reset(std::size_t start_row);
    /// Throws ContractError once the episode is done.
    StepResult step(RawAction raw);

    bool done() const { return done_; }
    std::size_t observation_size() const;
    std::size_t steps_per_episode() const { return episode_.rows() - 1; }
    const PortfolioState& portfolio() const { return portfolio_; }
    const std::vector<TradeLogEntry>& log() const { return log_; }
    const EnvConfig& config() const { return cfg_; }
    const MarketEpisode& episode() const { return episode_; }
    double roi() const;

private:
    Observation observe() const;

    MarketEpisode episode_;
    EnvConfig cfg_;
    PortfolioState portfolio_;
    std::vector<TradeLogEntry> log_;
    std::size_t t_ = 0;
    bool done_ = false;
};

void write_trade_log_csv(const std::vector<TradeLogEntry>& log, const std::filesystem::path& path);

}  // namespace crn
