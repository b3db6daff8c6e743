#pragma once

#include <cstddef>
#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "crn/market_data.hpp"

namespace crn {

/// Indicator output. Warm-up rows where the value is undefined hold NaN.
using Series = std::vector<double>;

inline constexpr double kUndefined = std::numeric_limits<double>::quiet_NaN();

Series sma(std::span<const double> x, int window = 10);
/// Seeded with the SMA of the first `window` defined values; leading NaNs in
/// the input are skipped, so an EMA of another indicator works.
Series ema(std::span<const double> x, int window = 10);
/// Wilder smoothing. A zero average loss yields 100.
Series rsi(std::span<const double> closes, int window = 14);

struct Macd {
    Series line;
    Series signal;
    Series histogram;
};
Macd macd(std::span<const double> closes, int fast = 12, int slow = 26, int signal = 9);

Series obv(std::span<const double> closes, std::span<const double> volumes);
/// Accumulation/distribution line (money-flow multiplier times volume, cumulated).
Series ad(std::span<const double> high, std::span<const double> low,
          std::span<const double> close, std::span<const double> volume);

struct Bollinger {
    Series upper;
    Series middle;
    Series lower;
    Series width;  // upper - lower
};
Bollinger bbands(std::span<const double> closes, int window = 5, double k = 2.0);

/// 100 * ATR / close, ATR with Wilder smoothing.
Series natr(std::span<const double> high, std::span<const double> low,
            std::span<const double> close, int window = 14);

struct Stochastic {
    Series k;
    Series d;
};
/// %K over `k_window`; a flat high/low range gives 50. %D is the SMA of %K.
Stochastic stoch(std::span<const double> high, std::span<const double> low,
                 std::span<const double> close, int k_window = 14, int d_window = 3);

/// The four candidate observation groups.
enum class FeatureGroup { Ohlcv, OhlcvTi, OhlcvMacroTweets, All };

std::string_view group_name(FeatureGroup g);
/// Accepts the canonical names ("OHLCV", "OHLCV+TI", "OHLCV+MACRO+TWEETS", "ALL").
/// Throws ConfigError otherwise.
FeatureGroup parse_group(std::string_view name);
const std::vector<FeatureGroup>& all_groups();

/// Windows and the mapping from indicator outputs to the ten TI columns.
struct IndicatorConfig {
    int sma_window = 10;
    int ema_window = 10;
    int rsi_window = 14;
    int natr_window = 14;
    int stoch_k = 14;
    int stoch_d = 3;
    int bb_window = 5;
    double bb_k = 2.0;
    int macd_fast = 12;
    int macd_slow = 26;
    int macd_signal = 9;
    /// Indicator outputs emitted for the technical-indicator group. Any of:
    /// ad, obv, ema, sma, rsi, natr, macd, macd_signal, macd_hist,
    /// bb_upper, bb_middle, bb_lower, bb_width, stoch_k, stoch_d.
    std::vector<std::string> ti_columns{"ad",   "obv",  "ema",       "sma",      "rsi",
                                        "natr", "macd", "bb_middle", "bb_width", "stoch_k"};
};

std::vector<std::string> group_columns(FeatureGroup g, const IndicatorConfig& cfg = {});

/// Date-aligned named feature columns. `mask[i]` marks warm-up rows where at
/// least one indicator is undefined; those rows never enter model fitting.
struct FeatureFrame {
    std::vector<Date> dates;
    std::vector<std::string> names;
    std::vector<std::vector<double>> columns;
    std::vector<bool> mask;

    std::size_t rows() const { return dates.size(); }
    std::size_t cols() const { return names.size(); }
    bool has(std::string_view name) const;
    /// Throws LookupError.
    const std::vector<double>& column(std::string_view name) const;
    std::vector<double> row(std::size_t i) const;
    /// First row not covered by the warm-up mask (rows() if none).
    std::size_t first_valid() const;
};

/// Builds the group's columns from a dataset. The warm-up mask is the same
/// for every group (the longest indicator chain), so all groups share rows.
FeatureFrame compute_feature_frame(const Dataset& ds, FeatureGroup group,
                                   const IndicatorConfig& cfg = {});

void write_feature_frame_csv(const FeatureFrame& frame, const std::filesystem::path& path);

}  // namespace crn
