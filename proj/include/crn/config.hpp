#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "crn/backtest/backtest.hpp"

namespace crn {

struct CoinSource {
    std::string name;
    std::filesystem::path ohlcv;
    std::optional<std::filesystem::path> macro;
    std::optional<std::filesystem::path> tweets;
    std::optional<FeatureGroup> group;  // pin; empty falls back to the pipeline default
};

struct PipelineConfig {
    std::vector<CoinSource> coins;
    std::optional<FeatureGroup> default_group;  // empty means auto-select
    backtest::BacktestConfig backtest;
    std::vector<backtest::Strategy> strategies = backtest::all_strategies();
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
    std::filesystem::path output_dir = "crn_out";

    backtest::BacktestConfig for_coin(const CoinSource& coin) const;
    /// Canonical JSON used for hashing and for the run metadata.
    nlohmann::json to_json() const;
};

/// Relative data paths resolve against `base_dir`. Unknown keys, wrong types
/// and invalid values throw ConfigError naming the offending key; malformed
/// JSON throws ConfigError with the line and column.
PipelineConfig parse_pipeline_config(const std::string& text, const std::filesystem::path& base_dir = {});
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

}  // namespace crn
