#include <doctest.h>

#include <cmath>
#include <random>

#include "crn/agents/action.hpp"
#include "crn/agents/ddpg.hpp"
#include "crn/agents/ppo.hpp"
#include "crn/agents/replay_buffer.hpp"
#include "crn/agents/trainer.hpp"
#include "crn/errors.hpp"
#include "test_support.hpp"

using namespace crn;
using namespace crn::agents;
using namespace std::chrono;

namespace {

MarketEpisode ramp_episode(std::size_t n, bool with_signal) {
    MarketEpisode ep;
    for (std::size_t i = 0; i < n; ++i) {
        ep.dates.push_back(sys_days{year{2021} / 1 / 1} + days(static_cast<int>(i)));
        ep.close.push_back(100.0 * std::pow(1.01, static_cast<double>(i)));
        ep.features.push_back({std::sin(0.3 * static_cast<double>(i)), std::cos(0.3 * static_cast<double>(i))});
    }
    if (with_signal) ep.predictions.assign(n, DirectionPrediction{0.6, 0.4});
    return ep;
}

AgentConfig small_config() {
    AgentConfig cfg;
    cfg.ppo.rollout = 64;
    cfg.ppo.minibatch = 16;
    cfg.ppo.epochs = 2;
    cfg.ppo.hidden = {8, 8};
    cfg.ddpg.hidden = {8, 8};
    cfg.ddpg.batch = 16;
    cfg.ddpg.learning_starts = 20;
    cfg.ddpg.capacity = 1000;
    cfg.log_interval = 32;
    return cfg;
}

EnvFactory factory(bool with_signal) {
    return [with_signal] { return TradingEnv(ramp_episode(30, with_signal), EnvConfig{}); };
}

}  // namespace

TEST_CASE("action decoding") {
    EnvConfig cfg;
    auto buy = decode_action({1, 1}, cfg);
    CHECK(buy.kind == ActionKind::Buy);
    CHECK(buy.fraction == doctest::Approx(0.60));
    auto sell = decode_action({-1, -1}, cfg);
    CHECK(sell.kind == ActionKind::Sell);
    CHECK(sell.fraction == doctest::Approx(0.40));
    auto hold = decode_action({0.2, 0}, cfg);
    CHECK(hold.kind == ActionKind::Hold);
    CHECK(decode_action({0.34, 0}, cfg).kind == ActionKind::Buy);
    CHECK(decode_action({-0.34, 0}, cfg).kind == ActionKind::Sell);
    CHECK(decode_action({0, 0}, cfg).fraction == doctest::Approx(0.50));
    // Out-of-range channels are clipped.
    CHECK(decode_action({5, 5}, cfg).fraction == doctest::Approx(0.60));
    CHECK_THROWS_AS(decode_action({std::nan(""), 0}, cfg), ContractError);
    CHECK_THROWS_AS(decode_action({0, INFINITY}, cfg), ContractError);
}

TEST_CASE("replay buffer") {
    ReplayBuffer buf(4, 2, 1);
    std::mt19937_64 rng(1);
    CHECK_THROWS_AS(buf.sample(1, rng), ContractError);
    for (int i = 0; i < 6; ++i) {
        buf.add(Eigen::Vector2d(i, i), Eigen::VectorXd::Constant(1, i), i, Eigen::Vector2d(i + 1, i + 1), i == 5);
    }
    CHECK(buf.size() == 4);
    CHECK(buf.insertions() == 6);
    auto b = buf.sample(4, rng);
    // Oldest two were overwritten; all four samples are distinct.
    std::vector<double> seen;
    for (int j = 0; j < 4; ++j) {
        seen.push_back(b.rewards[j]);
        CHECK(b.obs(0, j) == b.rewards[j]);
        CHECK(b.next_obs(0, j) == b.rewards[j] + 1);
        CHECK(b.dones[j] == (b.rewards[j] == 5 ? 1.0 : 0.0));
    }
    std::sort(seen.begin(), seen.end());
    CHECK(seen == std::vector<double>{2, 3, 4, 5});
    CHECK_THROWS_AS(buf.sample(5, rng), ContractError);
    CHECK_THROWS_AS(buf.sample(0, rng), ContractError);
}

TEST_CASE("replay sampling is uniform") {
    ReplayBuffer buf(10, 1, 1);
    for (int i = 0; i < 10; ++i) buf.add(Eigen::VectorXd::Constant(1, i), Eigen::VectorXd::Zero(1), i, Eigen::VectorXd::Zero(1), false);
    std::mt19937_64 rng(5);
    std::vector<int> counts(10, 0);
    for (int k = 0; k < 5000; ++k) {
        auto b = buf.sample(3, rng);
        for (int j = 0; j < 3; ++j) ++counts[static_cast<std::size_t>(b.rewards[j])];
    }
    for (int c : counts) CHECK(c == doctest::Approx(1500).epsilon(0.1));
}

TEST_CASE("gae") {
    SUBCASE("single step") {
        Trajectory t;
        t.rewards = Eigen::VectorXd::Constant(1, 1.0);
        t.values = Eigen::VectorXd::Constant(1, 0.5);
        t.dones = {false};
        compute_gae(t, 2.0, 0.99, 0.95);
        CHECK(t.advantages[0] == doctest::Approx(1.0 + 0.99 * 2.0 - 0.5));
        CHECK(t.returns[0] == doctest::Approx(t.advantages[0] + 0.5));
        t.dones = {true};
        compute_gae(t, 2.0, 0.99, 0.95);
        CHECK(t.advantages[0] == doctest::Approx(0.5));
    }
    SUBCASE("two steps with lambda") {
        Trajectory t;
        t.rewards = Eigen::Vector2d(1.0, 2.0);
        t.values = Eigen::Vector2d(0.0, 1.0);
        t.dones = {false, false};
        compute_gae(t, 3.0, 0.9, 0.5);
        const double d1 = 2.0 + 0.9 * 3.0 - 1.0;
        const double d0 = 1.0 + 0.9 * 1.0 - 0.0;
        CHECK(t.advantages[1] == doctest::Approx(d1));
        CHECK(t.advantages[0] == doctest::Approx(d0 + 0.9 * 0.5 * d1));
    }
    SUBCASE("episode boundary stops the recursion") {
        Trajectory t;
        t.rewards = Eigen::Vector2d(1.0, 2.0);
        t.values = Eigen::Vector2d(0.0, 1.0);
        t.dones = {true, false};
        compute_gae(t, 3.0, 0.9, 0.5);
        CHECK(t.advantages[0] == doctest::Approx(1.0));
    }
}

TEST_CASE("clipped surrogate") {
    Eigen::VectorXd r = Eigen::VectorXd::Constant(1, 2.0);
    Eigen::VectorXd a = Eigen::VectorXd::Constant(1, 1.0);
    CHECK(clipped_surrogate(r, a, 0.2) == doctest::Approx(1.2));
    a[0] = -1.0;
    CHECK(clipped_surrogate(r, a, 0.2) == doctest::Approx(-2.0));
    r[0] = 0.5;
    CHECK(clipped_surrogate(r, a, 0.2) == doctest::Approx(-0.8));
    r[0] = 1.0;
    a[0] = 3.0;
    CHECK(clipped_surrogate(r, a, 0.2) == doctest::Approx(3.0));
}

TEST_CASE("gaussian log density") {
    Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(2, 1);
    Eigen::VectorXd log_std = Eigen::VectorXd::Zero(2);
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(2, 1);
    CHECK(gaussian_log_prob(mean, log_std, x)[0] == doctest::Approx(-std::log(2 * M_PI)));
    x(0, 0) = 1.0;
    log_std[0] = std::log(2.0);
    const double expect = -0.5 * 0.25 - std::log(2.0) - std::log(2 * M_PI);
    CHECK(gaussian_log_prob(mean, log_std, x)[0] == doctest::Approx(expect));
}

TEST_CASE("ppo config validation") {
    PpoConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.clip = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = PpoConfig{};
    cfg.gamma = 1.5;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    DdpgConfig d;
    CHECK_NOTHROW(d.validate());
    d.tau = 0.0;
    CHECK_THROWS_AS(d.validate(), ConfigError);
    d = DdpgConfig{};
    d.capacity = 10;
    CHECK_THROWS_AS(d.validate(), ConfigError);
}

TEST_CASE("ppo agent starts near hold") {
    PpoAgent agent(6, PpoConfig{}, 3);
    auto a = agent.act(Eigen::VectorXd::Ones(6));
    CHECK(std::abs(a.a1) < 1.0 / 3.0);
    CHECK(agent.log_std[0] == doctest::Approx(PpoConfig{}.log_std_init));
}

TEST_CASE("ppo rollout and update") {
    auto cfg = small_config();
    cfg.ppo.random_starts = false;
    TradingEnv env = factory(true)();
    PpoAgent agent(env.observation_size(), cfg.ppo, 1);
    std::mt19937_64 rng(2);
    Observation obs = env.reset();
    auto traj = ppo_collect(env, agent, 64, rng, obs, cfg.ppo);
    CHECK(traj.size() == 64);
    CHECK(traj.obs.cols() == 64);
    CHECK(traj.episode_returns.size() == 2);  // 29-step episodes
    CHECK(traj.dones[28]);
    for (double r : traj.rewards) CHECK(std::abs(r) <= 10.0);
    const auto before = agent.policy.params();
    auto diag = ppo_update(agent, traj, cfg.ppo, rng);
    CHECK(std::isfinite(diag.policy_loss));
    CHECK(diag.clip_fraction >= 0.0);
    CHECK(diag.clip_fraction <= 1.0);
    CHECK((agent.policy.params() - before).norm() > 0.0);
}

TEST_CASE("soft update") {
    neural::Mlp a(neural::NetSpec::make(2, {3}, 1, neural::Activation::Tanh, neural::Activation::Linear, 1));
    neural::Mlp b(neural::NetSpec::make(2, {3}, 1, neural::Activation::Tanh, neural::Activation::Linear, 2));
    auto t = a;
    soft_update(t, b, 1.0);
    CHECK(t.params() == b.params());
    t = a;
    soft_update(t, b, 0.0);
    CHECK(t.params() == a.params());
    t = a;
    soft_update(t, b, 0.25);
    CHECK((t.params() - (0.25 * b.params() + 0.75 * a.params())).norm() < 1e-15);
}

TEST_CASE("ddpg critic targets") {
    DdpgAgent agent(3, DdpgConfig{}, 4);
    TransitionBatch batch;
    batch.obs = Eigen::MatrixXd::Random(3, 2);
    batch.next_obs = Eigen::MatrixXd::Random(3, 2);
    batch.actions = Eigen::MatrixXd::Zero(2, 2);
    batch.rewards = Eigen::Vector2d(1.5, -2.0);
    batch.dones = Eigen::Vector2d(1.0, 0.0);
    auto y = critic_targets(agent, batch, 0.9);
    CHECK(y[0] == doctest::Approx(1.5));
    Eigen::VectorXd next = batch.next_obs.col(1);
    Eigen::VectorXd mu = agent.actor_target.forward(next);
    Eigen::VectorXd in(5);
    in << next, mu;
    CHECK(y[1] == doctest::Approx(-2.0 + 0.9 * agent.critic_target.forward(in)[0]));
}

TEST_CASE("ddpg acting and updating") {
    DdpgAgent agent(3, DdpgConfig{}, 4);
    std::mt19937_64 rng(1);
    Eigen::VectorXd obs = Eigen::VectorXd::Random(3);
    auto greedy = ddpg_act(agent.actor, obs, 0.0, rng);
    auto mu = agent.actor.forward(obs);
    CHECK(greedy.a1 == mu[0]);
    CHECK(greedy.a2 == mu[1]);
    for (int i = 0; i < 100; ++i) {
        auto a = ddpg_act(agent.actor, obs, 5.0, rng);
        CHECK(std::abs(a.a1) <= 1.0);
        CHECK(std::abs(a.a2) <= 1.0);
    }

    TransitionBatch batch;
    batch.obs = Eigen::MatrixXd::Random(3, 8);
    batch.next_obs = Eigen::MatrixXd::Random(3, 8);
    batch.actions = Eigen::MatrixXd::Random(2, 8);
    batch.rewards = Eigen::VectorXd::Random(8);
    batch.dones = Eigen::VectorXd::Zero(8);
    const auto actor_before = agent.actor.params();
    const auto target_before = agent.critic_target.params();
    auto diag = ddpg_update(agent, batch, DdpgConfig{});
    CHECK(std::isfinite(diag.critic_loss));
    CHECK((agent.actor.params() - actor_before).norm() > 0.0);
    CHECK((agent.critic_target.params() - target_before).norm() > 0.0);
}

TEST_CASE("training is reproducible from the seed") {
    auto cfg = small_config();
    for (auto algo : {Algorithm::Ppo, Algorithm::Ddpg}) {
        auto a = train_agent(algo, factory(true), 128, 7, cfg);
        auto b = train_agent(algo, factory(true), 128, 7, cfg);
        auto c = train_agent(algo, factory(true), 128, 8, cfg);
        CHECK(a.checkpoint.dump() == b.checkpoint.dump());
        CHECK(a.checkpoint.dump() != c.checkpoint.dump());
        CHECK_FALSE(a.log.empty());
    }
}

TEST_CASE("training budgets") {
    auto cfg = small_config();
    CHECK_THROWS_AS(train_agent(Algorithm::Ppo, factory(false), 10, 1, cfg), ContractError);
    CHECK_THROWS_AS(train_agent(Algorithm::Ddpg, factory(false), 10, 1, cfg), ContractError);
    CHECK(parse_algorithm("PPO") == Algorithm::Ppo);
    CHECK(parse_algorithm("ddpg") == Algorithm::Ddpg);
    CHECK_THROWS_AS(parse_algorithm("sac"), ConfigError);
}

TEST_CASE("checkpoints restore the evaluation policy") {
    auto cfg = small_config();
    crn::testing::TempDir dir;
    for (auto algo : {Algorithm::Ppo, Algorithm::Ddpg}) {
        auto res = train_agent(algo, factory(false), 128, 3, cfg);
        auto policy = policy_from_checkpoint(nlohmann::json::parse(res.checkpoint.dump()));
        TradingEnv e1 = factory(false)(), e2 = factory(false)();
        auto r1 = evaluate_policy(res.policy, e1);
        auto r2 = evaluate_policy(policy, e2);
        CHECK(r1.roi == r2.roi);
        CHECK(r1.log.size() == 29);
        write_training_log_csv(res.log, algo, dir / "log.csv");
        auto text = crn::testing::read_file(dir / "log.csv");
        CHECK(text.rfind(algo == Algorithm::Ppo ? "step,mean_episode_reward,clip_fraction"
                                                : "step,mean_episode_reward,critic_loss",
                         0) == 0);
    }
    CHECK_THROWS(policy_from_checkpoint(nlohmann::json{{"format", "other"}}));
}

TEST_CASE("ppo learns to buy a steady uptrend") {
    auto cfg = small_config();
    cfg.ppo.hidden = {16, 16};
    cfg.ppo.rollout = 256;
    cfg.ppo.minibatch = 32;
    cfg.ppo.epochs = 5;
    cfg.ppo.random_starts = false;
    auto make = [] { return TradingEnv(ramp_episode(60, false), EnvConfig{}); };
    auto res = train_agent(Algorithm::Ppo, make, 256 * 40, 1, cfg);
    TradingEnv env = make();
    auto ev = evaluate_policy(res.policy, env);
    CHECK(ev.roi > 0.0);
}
