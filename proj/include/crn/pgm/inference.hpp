#pragma once

#include <cstddef>
#include <map>
#include <vector>

#include "crn/pgm/bayes_net.hpp"

namespace crn::pgm {

/// Observed states keyed by variable index.
using Evidence = std::map<std::size_t, int>;

/// Exact posterior P(query | evidence) by variable elimination over the
/// ancestral subgraph of the query and evidence.
/// Throws LookupError for unknown variables, ContractError when the query is
/// observed, ZeroProbabilityError when the evidence is impossible.
std::vector<double> infer(const BayesNet& net, const Evidence& evidence, std::size_t query);

/// Test oracle: sums the full joint over every assignment. Limited to
/// 2^20 joint states (OracleLimitError beyond).
std::vector<double> brute_force_joint(const BayesNet& net, const Evidence& evidence, std::size_t query);

inline constexpr std::size_t kOracleStateLimit = std::size_t{1} << 20;

}  // namespace crn::pgm
