#include "crn/agents/action.hpp"

#include <algorithm>
#include <cmath>

#include "crn/errors.hpp"

namespace crn::agents {

ActionCommand decode_action(RawAction raw, const EnvConfig& cfg) {
    if (!std::isfinite(raw.a1) || !std::isfinite(raw.a2)) throw ContractError("raw action is not finite");
    const double a1 = std::clamp(raw.a1, -1.0, 1.0);
    const double a2 = std::clamp(raw.a2, -1.0, 1.0);
    ActionCommand cmd;
    if (a1 < -1.0 / 3.0) {
        cmd.kind = ActionKind::Sell;
    } else if (a1 > 1.0 / 3.0) {
        cmd.kind = ActionKind::Buy;
    } else {
        cmd.kind = ActionKind::Hold;
    }
    cmd.fraction = cfg.lower + (a2 + 1.0) / 2.0 * (cfg.upper - cfg.lower);
    return cmd;
}

Observation start_episode(TradingEnv& env, bool random_start, std::mt19937_64& rng) {
    if (!random_start) return env.reset();
    std::uniform_int_distribution<std::size_t> start(0, env.steps_per_episode() - 1);
    return env.reset(start(rng));
}

}  // namespace crn::agents
