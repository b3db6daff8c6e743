#pragma once

#include <cstddef>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "crn/neural/adam.hpp"
#include "crn/neural/mlp.hpp"
#include "crn/trading_env.hpp"

namespace crn::agents {

struct PpoConfig {
    double clip = 0.2;
    double gamma = 0.99;
    double gae_lambda = 0.95;
    int epochs = 10;
    std::size_t rollout = 2048;
    std::size_t minibatch = 64;
    double lr = 3e-4;
    double log_std_init = -0.5;
    double max_grad_norm = 0.5;  // over policy, log-std and value gradients together
    double value_coef = 0.5;
    std::vector<int> hidden = {64, 64};
    bool random_starts = true;  // training episodes begin at a random row
    /// Multiplies rewards before GAE so discounted returns stay within reach of
    /// the value net; logged episode returns stay unscaled.
    double reward_scale = 0.01;

    /// Throws ConfigError when clip is outside (0, 1) or gamma outside [0, 1].
    void validate() const;
};

/// Gaussian policy with a state-independent log-std plus a separate value net.
struct PpoAgent {
    neural::Mlp policy;      // obs -> action mean
    Eigen::VectorXd log_std;
    neural::Mlp value;       // obs -> V(s)
    neural::Adam policy_opt;
    neural::Adam log_std_opt;
    neural::Adam value_opt;

    PpoAgent() = default;
    PpoAgent(std::size_t obs_size, const PpoConfig& cfg, std::uint64_t seed);

    /// Deterministic action: the policy mean.
    RawAction act(const Eigen::VectorXd& obs) const;
};

struct Trajectory {
    Eigen::MatrixXd obs;       // obs_size x N
    Eigen::MatrixXd actions;   // 2 x N, unclipped samples
    Eigen::VectorXd log_probs;
    Eigen::VectorXd values;
    Eigen::VectorXd rewards;
    std::vector<bool> dones;
    Eigen::VectorXd advantages;
    Eigen::VectorXd returns;
    std::vector<double> episode_returns;  // episodes that finished inside the rollout

    std::size_t size() const { return static_cast<std::size_t>(rewards.size()); }
};

/// Log-density of `actions` (2 x N) under N(mean, exp(log_std)^2), per column.
Eigen::VectorXd gaussian_log_prob(const Eigen::MatrixXd& mean, const Eigen::VectorXd& log_std,
                                  const Eigen::MatrixXd& actions);

/// Backward GAE recursion. `dones[t]` stops bootstrapping past step t;
/// `last_value` is V of the state following the final step.
void compute_gae(Trajectory& traj, double last_value, double gamma, double lambda);

/// Rolls the current policy for `length` steps, resetting the environment on
/// episode end. `obs` carries the live observation between calls.
Trajectory ppo_collect(TradingEnv& env, const PpoAgent& agent, std::size_t length, std::mt19937_64& rng,
                       Observation& obs, const PpoConfig& cfg);

/// Mean over samples of min(r A, clip(r, 1-eps, 1+eps) A).
double clipped_surrogate(const Eigen::VectorXd& ratios, const Eigen::VectorXd& advantages, double clip);

struct PpoDiagnostics {
    double policy_loss = 0.0;
    double value_loss = 0.0;
    double mean_ratio = 1.0;
    double clip_fraction = 0.0;
};

/// Runs `epochs` passes of shuffled minibatches, normalizing advantages
/// within each minibatch.
/// Throws TrainingError on a non-finite loss.
PpoDiagnostics ppo_update(PpoAgent& agent, const Trajectory& traj, const PpoConfig& cfg, std::mt19937_64& rng);

}  // namespace crn::agents
