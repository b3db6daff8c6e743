#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <json.hpp>

#include "crn/market_data.hpp"
#include "crn/pgm/bayes_net.hpp"

namespace crn::pgm {

/// Parent of a node in the transition network: a variable of the same slice
/// (lag 0) or of the previous slice (lag 1).
struct LaggedParent {
    std::size_t var = 0;
    int lag = 0;
    friend bool operator==(const LaggedParent&, const LaggedParent&) = default;
};

/// First-order two-slice dynamic Bayesian network with a binary direction node.
///
/// `prior` is the slice-0 network. Transition CPTs use the same row-major
/// layout as BayesNet with parents ordered as in `transition_parents[v]`.
struct DbnModel {
    std::vector<DiscreteVariable> variables;
    std::size_t direction = 0;
    BayesNet prior;
    std::vector<std::vector<LaggedParent>> transition_parents;
    std::vector<std::vector<double>> transition_cpts;
    std::size_t window = 5;

    std::size_t size() const { return variables.size(); }
    std::size_t transition_configs(std::size_t v) const;
    double transition_prob(std::size_t v, std::span<const int> prev, std::span<const int> cur) const;
    /// Throws ContractError/ShapeError on malformed structure or CPTs.
    void validate(double tol = 1e-9) const;
    /// Edges of the intra-slice structure plus all transition edges.
    std::size_t edge_count() const;

    /// Flattens `slices` copies into a static network with variables named
    /// "<name>@<slice>", slice 0 first.
    BayesNet unroll(std::size_t slices) const;
};

struct DirectionPrediction {
    double p_up = 0.5;
    double p_down = 0.5;
};

/// One observed slice: a state per model variable. Features must be
/// observed; the direction may be kUnobserved.
using DbnSlice = std::vector<int>;

/// Forward filtering over exactly `model.window` slices. Returns the
/// posterior of the last slice's direction, i.e. the next-day move.
DirectionPrediction dbn_predict(const DbnModel& model, std::span<const DbnSlice> window);

struct DbnOptions {
    StructureOptions structure;
    /// Upper bound on the direction node's parent count in the transition network.
    int max_direction_parents = 5;
    std::size_t min_rows = 100;
    std::size_t window = 5;
};

/// Fits a DBN on chronologically consecutive discrete rows (features plus the
/// direction column named kDirection).
DbnModel fit_dbn(const DiscreteFrame& rows, const DbnOptions& opts = {});

nlohmann::json to_json(const DbnModel& model);
DbnModel dbn_from_json(const nlohmann::json& j);

}  // namespace crn::pgm
