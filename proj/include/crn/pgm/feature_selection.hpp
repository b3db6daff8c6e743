#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include <json.hpp>

#include "crn/indicators.hpp"
#include "crn/market_data.hpp"
#include "crn/pgm/dbn.hpp"
#include "crn/pgm/discrete.hpp"

namespace crn::pgm {

struct PgmConfig {
    int bins = 3;
    bool zero_change_is_down = true;
    /// Share of the training rows used to fit when scoring a feature group;
    /// the remainder is the walk-forward validation segment.
    double fit_fraction = 0.8;
    DbnOptions dbn;
    IndicatorConfig indicators;
};

/// Unmasked training rows whose next-day direction lies inside the training split.
std::vector<std::size_t> training_rows(const FeatureFrame& frame, std::size_t split_index);

struct GroupScore {
    double accuracy = 0.0;
    bool degenerate_validation = false;  // validation segment holds a single class
};

/// Fits a BN on `fit` and scores next-day direction (argmax posterior given
/// every other variable, ties to Down) on `validation`.
GroupScore evaluate_discrete(const DiscreteFrame& fit, const DiscreteFrame& validation,
                             const StructureOptions& opts = {});

/// Walk-forward score of one group inside the training split.
GroupScore evaluate_feature_group(const Dataset& ds, FeatureGroup group, const PgmConfig& cfg = {});

struct GroupSelection {
    FeatureGroup group = FeatureGroup::Ohlcv;
    std::vector<std::pair<FeatureGroup, double>> accuracies;
};

/// Argmax accuracy over the four groups; ties go to the group with fewer features.
GroupSelection select_feature_group(const Dataset& ds, const PgmConfig& cfg = {});

/// A DBN plus the discretizer that produced its training data.
struct FittedDbn {
    FeatureGroup group = FeatureGroup::Ohlcv;
    Discretizer discretizer;
    DbnModel model;
};

/// Discretizes the group's training rows and fits the DBN on them.
FittedDbn fit_dbn(const Dataset& ds, FeatureGroup group, const PgmConfig& cfg = {});

/// Next-day direction prediction for every frame row whose trailing window
/// of unmasked rows is complete. Earlier directions inside the window are
/// observed (they are realized by row t); the last one is the query.
std::vector<std::optional<DirectionPrediction>> predict_directions(const FittedDbn& fitted,
                                                                   const FeatureFrame& frame,
                                                                   bool zero_change_is_down = true);

nlohmann::json to_json(const FittedDbn& fitted);
FittedDbn fitted_dbn_from_json(const nlohmann::json& j);

}  // namespace crn::pgm
