#include "crn/agents/ddpg.hpp"

#include <algorithm>
#include <cmath>

#include "crn/errors.hpp"

namespace crn::agents {

namespace {

constexpr int kActionSize = 2;

Eigen::MatrixXd stack(const Eigen::MatrixXd& obs, const Eigen::MatrixXd& act) {
    Eigen::MatrixXd x(obs.rows() + act.rows(), obs.cols());
    x << obs, act;
    return x;
}

}  // namespace

void DdpgConfig::validate() const {
    if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("soft-update tau must lie in (0, 1]");
    if (batch == 0 || capacity < batch) throw ConfigError("replay capacity must be at least the batch size");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("discount must lie in [0, 1]");
    if (!(actor_lr > 0.0 && critic_lr > 0.0)) throw ConfigError("DDPG learning rates must be positive");
    if (!(noise_sigma >= 0.0)) throw ConfigError("exploration noise must be non-negative");
    if (!(reward_scale > 0.0)) throw ConfigError("DDPG reward scale must be positive");
}

DdpgAgent::DdpgAgent(std::size_t obs_size, const DdpgConfig& cfg, std::uint64_t seed)
    : actor(neural::NetSpec::make(static_cast<int>(obs_size), cfg.hidden, kActionSize, neural::Activation::Tanh,
                                  neural::Activation::Tanh, seed)),
      critic(neural::NetSpec::make(static_cast<int>(obs_size) + kActionSize, cfg.hidden, 1, neural::Activation::Tanh,
                                   neural::Activation::Linear, seed + 1)),
      actor_target(actor),
      critic_target(critic),
      actor_opt(static_cast<Eigen::Index>(actor.parameter_count())),
      critic_opt(static_cast<Eigen::Index>(critic.parameter_count())) {
    // Output layers start in U(-3e-3, 3e-3) so the first actions sit near Hold.
    std::mt19937_64 rng(seed + 2);
    std::uniform_real_distribution<double> u(-3e-3, 3e-3);
    for (auto* net : {&actor, &critic}) {
        const auto& last = net->layout().back();
        const auto begin = static_cast<Eigen::Index>(last.weights);
        const auto end = static_cast<Eigen::Index>(last.bias) + last.rows;
        for (Eigen::Index i = begin; i < end; ++i) net->params()[i] = u(rng);
    }
    actor_target = actor;
    critic_target = critic;
}

RawAction ddpg_act(const neural::Mlp& actor, const Eigen::VectorXd& obs, double sigma, std::mt19937_64& rng) {
    const Eigen::VectorXd mu = actor.forward(obs);
    RawAction a{mu[0], mu[1]};
    if (sigma > 0.0) {
        std::normal_distribution<double> noise(0.0, sigma);
        a.a1 += noise(rng);
        a.a2 += noise(rng);
    }
    a.a1 = std::clamp(a.a1, -1.0, 1.0);
    a.a2 = std::clamp(a.a2, -1.0, 1.0);
    return a;
}

void soft_update(neural::Mlp& target, const neural::Mlp& online, double tau) {
    if (target.parameter_count() != online.parameter_count()) throw ShapeError("soft update between different layouts");
    if (tau == 1.0) {
        target.params() = online.params();
        return;
    }
    target.params() = tau * online.params() + (1.0 - tau) * target.params();
}

Eigen::VectorXd critic_targets(const DdpgAgent& agent, const TransitionBatch& batch, double gamma) {
    const Eigen::MatrixXd next_act = agent.actor_target.forward(batch.next_obs);
    const Eigen::MatrixXd next_q = agent.critic_target.forward(stack(batch.next_obs, next_act));
    Eigen::VectorXd y = batch.rewards;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (batch.dones[i] == 0.0) y[i] += gamma * next_q(0, i);
    }
    return y;
}

DdpgDiagnostics ddpg_update(DdpgAgent& agent, const TransitionBatch& batch, const DdpgConfig& cfg) {
    const auto b = batch.obs.cols();
    if (b == 0) throw ContractError("DDPG update needs a nonempty batch");
    const double inv_b = 1.0 / static_cast<double>(b);
    DdpgDiagnostics diag;

    const Eigen::VectorXd y = critic_targets(agent, batch, cfg.gamma);
    neural::Mlp::Cache cc;
    const Eigen::MatrixXd q = agent.critic.forward(stack(batch.obs, batch.actions), &cc);
    const Eigen::RowVectorXd err = q.row(0) - y.transpose();
    diag.critic_loss = err.squaredNorm() * inv_b;
    if (!std::isfinite(diag.critic_loss)) throw TrainingError("DDPG critic loss became non-finite");
    const Eigen::VectorXd g_critic = agent.critic.backward(cc, 2.0 * inv_b * err).params;
    agent.critic_opt.step(agent.critic.params(), g_critic, cfg.critic_lr);

    neural::Mlp::Cache ac;
    const Eigen::MatrixXd mu = agent.actor.forward(batch.obs, &ac);
    neural::Mlp::Cache qc;
    const Eigen::MatrixXd q_mu = agent.critic.forward(stack(batch.obs, mu), &qc);
    diag.actor_objective = q_mu.mean();
    if (!std::isfinite(diag.actor_objective)) throw TrainingError("DDPG actor objective became non-finite");
    // Loss -mean Q: push -1/B through the critic to its action inputs.
    const Eigen::MatrixXd up = Eigen::MatrixXd::Constant(1, b, -inv_b);
    const Eigen::MatrixXd dq_dx = agent.critic.backward(qc, up).input;
    const Eigen::MatrixXd dq_da = dq_dx.bottomRows(kActionSize);
    const Eigen::VectorXd g_actor = agent.actor.backward(ac, dq_da).params;
    agent.actor_opt.step(agent.actor.params(), g_actor, cfg.actor_lr);

    soft_update(agent.critic_target, agent.critic, cfg.tau);
    soft_update(agent.actor_target, agent.actor, cfg.tau);
    return diag;
}

}  // namespace crn::agents
