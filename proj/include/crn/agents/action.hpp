#pragma once

#include <random>

#include "crn/trading_env.hpp"

namespace crn::agents {

/// Clips both channels to [-1, 1]. a1 below -1/3 sells, above 1/3 buys,
/// otherwise holds; a2 maps affinely onto [lower, upper].
/// Throws ContractError on non-finite components.
ActionCommand decode_action(RawAction raw, const EnvConfig& cfg);

/// Training reset: a uniformly random start row when `random_start`, else row 0.
/// Late starts give short episodes whose first days carry most of the reward signal.
Observation start_episode(TradingEnv& env, bool random_start, std::mt19937_64& rng);

}  // namespace crn::agents
