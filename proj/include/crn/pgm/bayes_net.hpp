#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "crn/pgm/discrete.hpp"

namespace crn::pgm {

/// Discrete Bayesian network.
///
/// CPT layout: `cpts[v]` is row-major with one row per parent configuration
/// and `cardinality(v)` entries per row. The configuration index treats the
/// parent list as a mixed-radix number with the last parent varying fastest.
class BayesNet {
public:
    BayesNet() = default;
    explicit BayesNet(std::vector<DiscreteVariable> variables);

    std::size_t size() const { return variables_.size(); }
    const std::vector<DiscreteVariable>& variables() const { return variables_; }
    const DiscreteVariable& variable(std::size_t v) const { return variables_[v]; }
    int cardinality(std::size_t v) const { return variables_[v].cardinality; }
    /// Throws LookupError.
    std::size_t index_of(std::string_view name) const;

    const std::vector<std::size_t>& parents(std::size_t v) const { return parents_[v]; }
    void set_parents(std::size_t v, std::vector<std::size_t> parents);
    bool has_edge(std::size_t from, std::size_t to) const;
    std::size_t edge_count() const;

    /// Number of parent configurations (rows) of v's CPT.
    std::size_t parent_configs(std::size_t v) const;
    /// Row index of the parent configuration found in `assignment` (indexed by variable).
    std::size_t config_index(std::size_t v, std::span<const int> assignment) const;

    const std::vector<double>& cpt(std::size_t v) const { return cpts_[v]; }
    void set_cpt(std::size_t v, std::vector<double> table);
    bool has_cpts() const;
    /// P(v = assignment[v] | parents as in assignment).
    double prob(std::size_t v, std::span<const int> assignment) const;

    bool acyclic() const;
    /// Parents before children; ties broken by index. Throws ContractError on cycles.
    std::vector<std::size_t> topological_order() const;
    /// Checks acyclicity, CPT shapes and that every CPT row sums to 1 within `tol`.
    void validate(double tol = 1e-9) const;

    /// Log-likelihood of one complete assignment.
    double log_prob(std::span<const int> assignment) const;

private:
    std::vector<DiscreteVariable> variables_;
    std::vector<std::vector<std::size_t>> parents_;
    std::vector<std::vector<double>> cpts_;
};

/// BIC contribution of one node given a parent set:
/// sum N_jk log(N_jk / N_j) - 0.5 log(N) (r - 1) q.
double bic_local_score(const DiscreteFrame& data, std::size_t node,
                       std::span<const std::size_t> parents);

struct StructureOptions {
    int max_parents = 3;
    std::size_t min_rows = 50;
    double min_improvement = 1e-9;
};

/// Greedy hill climbing over edge additions, removals and reversals,
/// maximizing BIC. Moves are scanned in lexicographic order of
/// (from-name, to-name) and the first best move wins, so the result is
/// deterministic. Returns a structure without CPTs.
BayesNet learn_structure(const DiscreteFrame& data, std::string_view target,
                         const StructureOptions& opts = {});

/// Maximum likelihood with Laplace smoothing: (count + 1) / (total + r).
BayesNet fit_cpts(const BayesNet& structure, const DiscreteFrame& data);

nlohmann::json to_json(const BayesNet& net);
BayesNet bayes_net_from_json(const nlohmann::json& j);

}  // namespace crn::pgm
