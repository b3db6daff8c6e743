#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "crn/agents/ddpg.hpp"
#include "crn/agents/ppo.hpp"
#include "crn/neural/mlp.hpp"
#include "crn/trading_env.hpp"

namespace crn::agents {

enum class Algorithm { Ppo, Ddpg };

std::string_view algorithm_name(Algorithm a);
/// Accepts "ppo" / "ddpg" in any case. Throws ConfigError otherwise.
Algorithm parse_algorithm(std::string_view name);

struct AgentConfig {
    PpoConfig ppo;
    DdpgConfig ddpg;
    std::size_t log_interval = 2048;  // DDPG log cadence in steps; PPO logs per rollout
};

struct TrainingLogRow {
    std::size_t step = 0;
    std::optional<double> mean_episode_reward;  // absent when no episode finished in the window
    double metric = 0.0;                        // PPO clip fraction, DDPG mean critic loss
};

/// Deterministic evaluation policy: the PPO mean net or the DDPG actor.
struct TrainedPolicy {
    Algorithm algorithm = Algorithm::Ppo;
    neural::Mlp net;

    RawAction act(const Observation& obs) const;
};

struct TrainingResult {
    TrainedPolicy policy;
    std::vector<TrainingLogRow> log;
    nlohmann::json checkpoint;  // every network, enough to resume evaluation
};

using EnvFactory = std::function<TradingEnv()>;

/// Trains from scratch with every random draw derived from `seed`.
/// PPO needs total_steps >= one rollout; DDPG needs total_steps >= one batch.
/// Throws ContractError otherwise.
TrainingResult train_agent(Algorithm algorithm, const EnvFactory& make_env, std::size_t total_steps,
                           std::uint64_t seed, const AgentConfig& cfg = {});

TrainedPolicy policy_from_checkpoint(const nlohmann::json& checkpoint);

struct Evaluation {
    double roi = 0.0;
    std::vector<TradeLogEntry> log;
};

/// Runs one full episode with the deterministic policy.
Evaluation evaluate_policy(const TrainedPolicy& policy, TradingEnv& env);

void write_training_log_csv(const std::vector<TrainingLogRow>& log, Algorithm algorithm,
                            const std::filesystem::path& path);

}  // namespace crn::agents
