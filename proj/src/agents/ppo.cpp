#include "crn/agents/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "crn/agents/action.hpp"
#include "crn/errors.hpp"

namespace crn::agents {

namespace {

constexpr Eigen::Index kActionSize = 2;

Eigen::VectorXd to_vector(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

void PpoConfig::validate() const {
    if (!(clip > 0.0 && clip < 1.0)) throw ConfigError("PPO clip must lie in (0, 1)");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("discount must lie in [0, 1]");
    if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) throw ConfigError("GAE lambda must lie in [0, 1]");
    if (epochs < 1 || rollout < 1 || minibatch < 1) throw ConfigError("PPO epochs, rollout and minibatch must be positive");
    if (!(lr > 0.0)) throw ConfigError("PPO learning rate must be positive");
    if (!(reward_scale > 0.0)) throw ConfigError("PPO reward scale must be positive");
    if (!(value_coef >= 0.0) || !(max_grad_norm > 0.0)) throw ConfigError("PPO value coefficient and grad norm must be positive");
}

PpoAgent::PpoAgent(std::size_t obs_size, const PpoConfig& cfg, std::uint64_t seed)
    : policy(neural::NetSpec::make(static_cast<int>(obs_size), cfg.hidden, kActionSize, neural::Activation::Tanh,
                                   neural::Activation::Linear, seed)),
      log_std(Eigen::VectorXd::Constant(kActionSize, cfg.log_std_init)),
      value(neural::NetSpec::make(static_cast<int>(obs_size), cfg.hidden, 1, neural::Activation::Tanh,
                                  neural::Activation::Linear, seed + 1)),
      policy_opt(static_cast<Eigen::Index>(policy.parameter_count())),
      log_std_opt(kActionSize),
      value_opt(static_cast<Eigen::Index>(value.parameter_count())) {
    // Small final-layer weights keep the initial mean near zero (Hold, mid size).
    const auto& last = policy.layout().back();
    policy.params().segment(static_cast<Eigen::Index>(last.weights), last.rows * last.cols) *= 0.01;
}

RawAction PpoAgent::act(const Eigen::VectorXd& obs) const {
    const Eigen::VectorXd mu = policy.forward(obs);
    return {mu[0], mu[1]};
}

Eigen::VectorXd gaussian_log_prob(const Eigen::MatrixXd& mean, const Eigen::VectorXd& log_std,
                                  const Eigen::MatrixXd& actions) {
    const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(mean.cols());
    for (Eigen::Index j = 0; j < mean.rows(); ++j) {
        const double sigma = std::exp(log_std[j]);
        const Eigen::ArrayXd z = (actions.row(j) - mean.row(j)).array() / sigma;
        out.array() += -0.5 * z.square() - log_std[j] - half_log_2pi;
    }
    return out;
}

void compute_gae(Trajectory& traj, double last_value, double gamma, double lambda) {
    const auto n = static_cast<Eigen::Index>(traj.size());
    traj.advantages.resize(n);
    traj.returns.resize(n);
    double next_adv = 0.0;
    double next_value = last_value;
    for (Eigen::Index t = n - 1; t >= 0; --t) {
        const double nonterminal = traj.dones[static_cast<std::size_t>(t)] ? 0.0 : 1.0;
        const double delta = traj.rewards[t] + gamma * next_value * nonterminal - traj.values[t];
        next_adv = delta + gamma * lambda * nonterminal * next_adv;
        traj.advantages[t] = next_adv;
        next_value = traj.values[t];
    }
    traj.returns = traj.advantages + traj.values;
}

Trajectory ppo_collect(TradingEnv& env, const PpoAgent& agent, std::size_t length, std::mt19937_64& rng,
                       Observation& obs, const PpoConfig& cfg) {
    if (length == 0) throw ContractError("rollout length must be positive");
    const auto n = static_cast<Eigen::Index>(length);
    const auto d = static_cast<Eigen::Index>(env.observation_size());
    Trajectory traj;
    traj.obs.resize(d, n);
    traj.actions.resize(kActionSize, n);
    traj.log_probs.resize(n);
    traj.values.resize(n);
    traj.rewards.resize(n);
    traj.dones.assign(length, false);

    std::normal_distribution<double> normal(0.0, 1.0);
    double episode_return = 0.0;
    for (Eigen::Index t = 0; t < n; ++t) {
        const Eigen::VectorXd x = to_vector(obs.values);
        const Eigen::VectorXd mu = agent.policy.forward(x);
        Eigen::VectorXd a(kActionSize);
        for (Eigen::Index j = 0; j < kActionSize; ++j) a[j] = mu[j] + std::exp(agent.log_std[j]) * normal(rng);
        traj.obs.col(t) = x;
        traj.actions.col(t) = a;
        traj.log_probs[t] = gaussian_log_prob(mu, agent.log_std, a)[0];
        traj.values[t] = agent.value.forward(x)[0];

        const auto res = env.step({a[0], a[1]});
        traj.rewards[t] = res.reward * cfg.reward_scale;
        traj.dones[static_cast<std::size_t>(t)] = res.done;
        episode_return += res.reward;
        if (res.done) {
            traj.episode_returns.push_back(episode_return);
            episode_return = 0.0;
            obs = start_episode(env, cfg.random_starts, rng);
        } else {
            obs = res.observation;
        }
    }
    const double last_value = agent.value.forward(to_vector(obs.values))[0];
    compute_gae(traj, last_value, cfg.gamma, cfg.gae_lambda);
    return traj;
}

double clipped_surrogate(const Eigen::VectorXd& ratios, const Eigen::VectorXd& advantages, double clip) {
    if (ratios.size() != advantages.size() || ratios.size() == 0) throw ShapeError("surrogate inputs differ in length");
    const Eigen::ArrayXd r = ratios.array();
    const Eigen::ArrayXd a = advantages.array();
    return (r * a).min(r.min(1.0 + clip).max(1.0 - clip) * a).mean();
}

PpoDiagnostics ppo_update(PpoAgent& agent, const Trajectory& traj, const PpoConfig& cfg, std::mt19937_64& rng) {
    const auto n = traj.size();
    if (n == 0) throw ContractError("PPO update needs a nonempty batch");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto d = traj.obs.rows();

    PpoDiagnostics diag;
    double ratio_sum = 0.0;
    std::size_t clipped = 0;
    std::size_t seen = 0;
    double policy_loss_sum = 0.0;
    double value_loss_sum = 0.0;
    std::size_t batches = 0;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < n; start += cfg.minibatch) {
            const std::size_t stop = std::min(n, start + cfg.minibatch);
            const auto b = static_cast<Eigen::Index>(stop - start);
            Eigen::MatrixXd obs(d, b);
            Eigen::MatrixXd act(kActionSize, b);
            Eigen::VectorXd old_lp(b), a(b), ret(b);
            for (Eigen::Index i = 0; i < b; ++i) {
                const auto k = static_cast<Eigen::Index>(order[start + static_cast<std::size_t>(i)]);
                obs.col(i) = traj.obs.col(k);
                act.col(i) = traj.actions.col(k);
                old_lp[i] = traj.log_probs[k];
                a[i] = traj.advantages[k];
                ret[i] = traj.returns[k];
            }

            if (b > 1) {
                const double m = a.mean();
                const double sd = std::sqrt((a.array() - m).square().sum() / static_cast<double>(b - 1));
                a = (a.array() - m) / (sd + 1e-8);
            }

            neural::Mlp::Cache pc;
            const Eigen::MatrixXd mu = agent.policy.forward(obs, &pc);
            const Eigen::VectorXd lp = gaussian_log_prob(mu, agent.log_std, act);
            const Eigen::VectorXd ratio = (lp - old_lp).array().exp();
            const double surrogate = clipped_surrogate(ratio, a, cfg.clip);
            const double policy_loss = -surrogate;

            // d(-surrogate)/d logp per sample; zero where the clipped branch is the active minimum.
            Eigen::VectorXd dlp(b);
            for (Eigen::Index i = 0; i < b; ++i) {
                const double r = ratio[i];
                const double rc = std::clamp(r, 1.0 - cfg.clip, 1.0 + cfg.clip);
                const bool unclipped_active = r * a[i] <= rc * a[i] || r == rc;
                dlp[i] = unclipped_active ? -a[i] * r / static_cast<double>(b) : 0.0;
                ratio_sum += r;
                if (std::abs(r - 1.0) > cfg.clip) ++clipped;
            }
            seen += static_cast<std::size_t>(b);

            Eigen::MatrixXd up_mu(kActionSize, b);
            Eigen::VectorXd g_log_std = Eigen::VectorXd::Zero(kActionSize);
            for (Eigen::Index j = 0; j < kActionSize; ++j) {
                const double var = std::exp(2.0 * agent.log_std[j]);
                const Eigen::ArrayXd diff = (act.row(j) - mu.row(j)).array();
                up_mu.row(j) = (dlp.array() * diff / var).matrix().transpose();
                g_log_std[j] = (dlp.array() * (diff.square() / var - 1.0)).sum();
            }
            Eigen::VectorXd g_policy = agent.policy.backward(pc, up_mu).params;

            neural::Mlp::Cache vc;
            const Eigen::MatrixXd v = agent.value.forward(obs, &vc);
            const Eigen::RowVectorXd verr = v.row(0) - ret.transpose();
            const double value_loss = verr.squaredNorm() / static_cast<double>(b);
            if (!std::isfinite(policy_loss) || !std::isfinite(value_loss)) {
                throw TrainingError("PPO loss became non-finite");
            }
            Eigen::VectorXd g_value =
                agent.value.backward(vc, cfg.value_coef * 2.0 * verr / static_cast<double>(b)).params;

            // One norm clip over every parameter of the combined loss.
            Eigen::VectorXd joint(g_policy.size() + g_log_std.size() + g_value.size());
            joint << g_policy, g_log_std, g_value;
            neural::clip_grad_norm(joint, cfg.max_grad_norm);
            g_policy = joint.head(g_policy.size());
            g_log_std = joint.segment(g_policy.size(), g_log_std.size());
            g_value = joint.tail(g_value.size());

            agent.policy_opt.step(agent.policy.params(), g_policy, cfg.lr);
            agent.log_std_opt.step(agent.log_std, g_log_std, cfg.lr);
            agent.value_opt.step(agent.value.params(), g_value, cfg.lr);

            policy_loss_sum += policy_loss;
            value_loss_sum += value_loss;
            ++batches;
        }
    }
    diag.policy_loss = policy_loss_sum / static_cast<double>(batches);
    diag.value_loss = value_loss_sum / static_cast<double>(batches);
    diag.mean_ratio = ratio_sum / static_cast<double>(seen);
    diag.clip_fraction = static_cast<double>(clipped) / static_cast<double>(seen);
    return diag;
}

}  // namespace crn::agents
