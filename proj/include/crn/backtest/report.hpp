#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "crn/backtest/metrics.hpp"

namespace crn::backtest {

/// "12.93 (30.34)": a fraction pair rendered in percent with two decimals.
std::string mean_std(double mean, double std);

/// FNV-1a 64 of the canonical JSON dump, as 16 hex digits.
std::string config_hash(const nlohmann::json& config);

nlohmann::json to_json(const DecisionStats& s);
nlohmann::json to_json(const RunResult& r);
RunResult run_result_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Aggregate& a);

/// Table rows, one per aggregate plus an "Average" row per strategy that
/// spans more than one coin. Header first.
std::vector<std::vector<std::string>> roi_table(const std::vector<Aggregate>& aggregates);
std::vector<std::vector<std::string>> decision_table(const std::vector<Aggregate>& aggregates);

/// Writes report.json, roi_table.{csv,txt} and decision_table.{csv,txt} into `dir`.
void emit_report(const std::vector<Aggregate>& aggregates, const std::filesystem::path& dir,
                 const std::string& config_hash);

}  // namespace crn::backtest
