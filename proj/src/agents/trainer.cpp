#include "crn/agents/trainer.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <numeric>
#include <random>
#include <string>

#include <fmt/format.h>

#include "crn/agents/action.hpp"
#include "crn/errors.hpp"

namespace crn::agents {

namespace {

constexpr const char* kCheckpointFormat = "crn-agent";
constexpr int kCheckpointVersion = 1;

Eigen::VectorXd to_vector(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::optional<double> mean_of(const std::vector<double>& xs) {
    if (xs.empty()) return std::nullopt;
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

TrainingResult train_ppo(const EnvFactory& make_env, std::size_t total_steps, std::uint64_t seed,
                         const PpoConfig& cfg) {
    cfg.validate();
    if (total_steps < cfg.rollout) {
        throw ContractError(fmt::format("PPO needs at least one rollout ({} steps), got {}", cfg.rollout, total_steps));
    }
    std::mt19937_64 rng(seed);
    TradingEnv env = make_env();
    PpoAgent agent(env.observation_size(), cfg, rng());

    TrainingResult out;
    Observation obs = start_episode(env, cfg.random_starts, rng);
    std::size_t step = 0;
    const std::size_t rollouts = total_steps / cfg.rollout;
    for (std::size_t r = 0; r < rollouts; ++r) {
        const auto traj = ppo_collect(env, agent, cfg.rollout, rng, obs, cfg);
        const auto diag = ppo_update(agent, traj, cfg, rng);
        step += cfg.rollout;
        out.log.push_back({step, mean_of(traj.episode_returns), diag.clip_fraction});
    }

    out.policy = {Algorithm::Ppo, agent.policy};
    out.checkpoint = {{"format", kCheckpointFormat},
                      {"version", kCheckpointVersion},
                      {"algorithm", algorithm_name(Algorithm::Ppo)},
                      {"seed", seed},
                      {"total_steps", step},
                      {"policy", neural::to_json(agent.policy)},
                      {"log_std", std::vector<double>(agent.log_std.data(), agent.log_std.data() + agent.log_std.size())},
                      {"value", neural::to_json(agent.value)}};
    return out;
}

TrainingResult train_ddpg(const EnvFactory& make_env, std::size_t total_steps, std::uint64_t seed,
                          const DdpgConfig& cfg, std::size_t log_interval) {
    cfg.validate();
    if (total_steps < cfg.batch) {
        throw ContractError(fmt::format("DDPG needs at least one batch ({} steps), got {}", cfg.batch, total_steps));
    }
    std::mt19937_64 rng(seed);
    TradingEnv env = make_env();
    const auto d = env.observation_size();
    DdpgAgent agent(d, cfg, rng());
    ReplayBuffer buffer(cfg.capacity, d, 2);
    std::uniform_real_distribution<double> uniform(-1.0, 1.0);

    TrainingResult out;
    Observation obs = start_episode(env, cfg.random_starts, rng);
    double episode_return = 0.0;
    std::vector<double> finished;
    double loss_sum = 0.0;
    std::size_t updates = 0;
    for (std::size_t step = 0; step < total_steps; ++step) {
        const Eigen::VectorXd x = to_vector(obs.values);
        RawAction a;
        if (step < cfg.learning_starts) {
            a = {uniform(rng), uniform(rng)};
        } else {
            a = ddpg_act(agent.actor, x, cfg.noise_sigma, rng);
        }
        const auto res = env.step(a);
        buffer.add(x, Eigen::Vector2d(a.a1, a.a2), res.reward * cfg.reward_scale, to_vector(res.observation.values),
                   res.done);
        episode_return += res.reward;
        if (res.done) {
            finished.push_back(episode_return);
            episode_return = 0.0;
            obs = start_episode(env, cfg.random_starts, rng);
        } else {
            obs = res.observation;
        }
        if (step + 1 > cfg.learning_starts && buffer.size() >= cfg.batch) {
            const auto diag = ddpg_update(agent, buffer.sample(cfg.batch, rng), cfg);
            loss_sum += diag.critic_loss;
            ++updates;
        }
        if ((step + 1) % log_interval == 0 || step + 1 == total_steps) {
            out.log.push_back({step + 1, mean_of(finished), updates ? loss_sum / static_cast<double>(updates) : 0.0});
            finished.clear();
            loss_sum = 0.0;
            updates = 0;
        }
    }

    out.policy = {Algorithm::Ddpg, agent.actor};
    out.checkpoint = {{"format", kCheckpointFormat},
                      {"version", kCheckpointVersion},
                      {"algorithm", algorithm_name(Algorithm::Ddpg)},
                      {"seed", seed},
                      {"total_steps", total_steps},
                      {"policy", neural::to_json(agent.actor)},
                      {"critic", neural::to_json(agent.critic)},
                      {"actor_target", neural::to_json(agent.actor_target)},
                      {"critic_target", neural::to_json(agent.critic_target)}};
    return out;
}

}  // namespace

std::string_view algorithm_name(Algorithm a) {
    return a == Algorithm::Ppo ? "ppo" : "ddpg";
}

Algorithm parse_algorithm(std::string_view name) {
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    if (lower == "ppo") return Algorithm::Ppo;
    if (lower == "ddpg") return Algorithm::Ddpg;
    throw ConfigError(fmt::format("unknown algorithm '{}' (expected ppo or ddpg)", name));
}

RawAction TrainedPolicy::act(const Observation& obs) const {
    const Eigen::VectorXd out = net.forward(to_vector(obs.values));
    return {out[0], out[1]};
}

TrainingResult train_agent(Algorithm algorithm, const EnvFactory& make_env, std::size_t total_steps,
                           std::uint64_t seed, const AgentConfig& cfg) {
    if (algorithm == Algorithm::Ppo) return train_ppo(make_env, total_steps, seed, cfg.ppo);
    if (cfg.log_interval == 0) throw ConfigError("log interval must be positive");
    return train_ddpg(make_env, total_steps, seed, cfg.ddpg, cfg.log_interval);
}

TrainedPolicy policy_from_checkpoint(const nlohmann::json& checkpoint) {
    if (checkpoint.value("format", std::string{}) != kCheckpointFormat) {
        throw ConfigError("not an agent checkpoint");
    }
    if (checkpoint.at("version").get<int>() != kCheckpointVersion) {
        throw ConfigError(fmt::format("unsupported checkpoint version {}", checkpoint.at("version").dump()));
    }
    TrainedPolicy p;
    p.algorithm = parse_algorithm(checkpoint.at("algorithm").get<std::string>());
    p.net = neural::mlp_from_json(checkpoint.at("policy"));
    return p;
}

Evaluation evaluate_policy(const TrainedPolicy& policy, TradingEnv& env) {
    Observation obs = env.reset();
    while (!env.done()) obs = env.step(policy.act(obs)).observation;
    return {env.roi(), env.log()};
}

void write_training_log_csv(const std::vector<TrainingLogRow>& log, Algorithm algorithm,
                            const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
    out << "step,mean_episode_reward," << (algorithm == Algorithm::Ppo ? "clip_fraction" : "critic_loss") << '\n';
    for (const auto& r : log) {
        out << r.step << ',' << (r.mean_episode_reward ? fmt::format("{}", *r.mean_episode_reward) : std::string{})
            << ',' << fmt::format("{}", r.metric) << '\n';
    }
    if (!out) throw Error(fmt::format("write failed for '{}'", path.string()));
}

}  // namespace crn::agents
