#pragma once

#include <cstddef>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "crn/agents/replay_buffer.hpp"
#include "crn/neural/adam.hpp"
#include "crn/neural/mlp.hpp"
#include "crn/trading_env.hpp"

namespace crn::agents {

struct DdpgConfig {
    std::size_t capacity = 100000;
    std::size_t batch = 64;
    double tau = 0.005;
    double actor_lr = 1e-4;
    double critic_lr = 1e-3;
    double noise_sigma = 0.3;  // wide enough that the critic sees the cost of selling
    double gamma = 0.99;
    std::size_t learning_starts = 100;  // uniform-random exploration steps before updates
    std::vector<int> hidden = {64, 64};
    bool random_starts = true;  // training episodes begin at a random row
    double reward_scale = 0.01;  // applied to stored rewards, as for PPO

    /// Throws ConfigError when tau is outside (0, 1] or capacity < batch.
    void validate() const;
};

struct DdpgAgent {
    neural::Mlp actor;          // obs -> tanh action
    neural::Mlp critic;         // [obs; action] -> Q
    neural::Mlp actor_target;
    neural::Mlp critic_target;
    neural::Adam actor_opt;
    neural::Adam critic_opt;

    DdpgAgent() = default;
    DdpgAgent(std::size_t obs_size, const DdpgConfig& cfg, std::uint64_t seed);
};

/// actor(obs) plus N(0, sigma^2) noise per channel, clipped to [-1, 1].
RawAction ddpg_act(const neural::Mlp& actor, const Eigen::VectorXd& obs, double sigma, std::mt19937_64& rng);

/// theta' <- tau theta + (1 - tau) theta', elementwise.
void soft_update(neural::Mlp& target, const neural::Mlp& online, double tau);

struct DdpgDiagnostics {
    double critic_loss = 0.0;
    double actor_objective = 0.0;  // mean Q(s, mu(s)) before the actor step
};

/// One critic step toward r + gamma (1 - done) Q'(s', mu'(s')), one actor
/// step ascending Q(s, mu(s)), then soft target updates. Throws
/// TrainingError on a non-finite loss.
DdpgDiagnostics ddpg_update(DdpgAgent& agent, const TransitionBatch& batch, const DdpgConfig& cfg);

/// Critic regression targets for a batch, exposed for testing.
Eigen::VectorXd critic_targets(const DdpgAgent& agent, const TransitionBatch& batch, double gamma);

}  // namespace crn::agents
