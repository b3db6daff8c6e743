#include "crn/backtest/backtest.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "crn/errors.hpp"

namespace crn::backtest {

namespace {

enum class Transform { RelativeToClose, LogReturn, Difference, Log, Identity };

Transform transform_for(const std::string& name) {
    static const std::set<std::string> relative{"open",     "high",     "low",      "ema",     "sma", "bb_upper",
                                                "bb_middle", "bb_lower", "bb_width", "macd", "macd_signal", "macd_hist"};
    static const std::set<std::string> log_return{"close", "gold", "msci", "sp500", "usdx", "wti"};
    if (relative.count(name)) return Transform::RelativeToClose;
    if (log_return.count(name)) return Transform::LogReturn;
    if (name == "obv" || name == "ad") return Transform::Difference;
    if (name == "volume" || name == "tweet_count") return Transform::Log;
    return Transform::Identity;
}

std::vector<std::vector<double>> normalized_rows(const FeatureFrame& frame, std::size_t first, std::size_t split,
                                                 double clip) {
    const auto rows = stationary_rows(frame);
    const std::vector<std::vector<double>> train(rows.begin() + static_cast<std::ptrdiff_t>(first),
                                                 rows.begin() + static_cast<std::ptrdiff_t>(split));
    const auto scaler = FeatureScaler::fit(train);
    std::vector<std::vector<double>> out(frame.rows());
    for (std::size_t i = first; i < frame.rows(); ++i) out[i] = scaler.apply(rows[i], clip);
    return out;
}

agents::Algorithm algorithm_of(Strategy s) {
    switch (s) {
        case Strategy::CrnPpo:
        case Strategy::BasePpo: return agents::Algorithm::Ppo;
        case Strategy::CrnDdpg:
        case Strategy::BaseDdpg: return agents::Algorithm::Ddpg;
        case Strategy::BuyAndHold: break;
    }
    throw ContractError("Buy-and-Hold has no agent");
}

void check_layout(const PreparedMarket& market, Strategy strategy, const TradingEnv& env) {
    if (uses_signal(strategy)) return;
    const auto expected = market.base_features.at(market.split).size() + 2;
    if (env.episode().with_signal() || env.observation_size() != expected) {
        throw ContractError(fmt::format("{} must observe OHLCV and portfolio fractions only", strategy_name(strategy)));
    }
}

}  // namespace

std::vector<std::vector<double>> stationary_rows(const FeatureFrame& frame) {
    const auto& close = frame.column("close");
    std::vector<std::vector<double>> out(frame.rows(), std::vector<double>(frame.cols(), 0.0));
    for (std::size_t c = 0; c < frame.cols(); ++c) {
        const auto& x = frame.columns[c];
        const auto t = transform_for(frame.names[c]);
        for (std::size_t i = 0; i < frame.rows(); ++i) {
            double v = 0.0;
            switch (t) {
                case Transform::RelativeToClose:
                    v = frame.names[c] == "bb_width" || frame.names[c].starts_with("macd") ? x[i] / close[i]
                                                                                          : x[i] / close[i] - 1.0;
                    break;
                case Transform::LogReturn: v = i ? std::log(x[i] / x[i - 1]) : 0.0; break;
                case Transform::Difference: v = i ? x[i] - x[i - 1] : 0.0; break;
                case Transform::Log: v = std::log1p(std::max(x[i], 0.0)); break;
                case Transform::Identity: v = x[i]; break;
            }
            // Warm-up rows hold NaN; they never reach the scaler.
            out[i][c] = v;
        }
    }
    return out;
}

MarketEpisode PreparedMarket::episode(bool with_signal, Segment segment) const {
    const std::size_t begin = segment == Segment::Train ? first : split;
    const std::size_t end = segment == Segment::Train ? split : dates.size();
    MarketEpisode ep;
    const auto& features = with_signal ? crn_features : base_features;
    for (std::size_t i = begin; i < end; ++i) {
        ep.dates.push_back(dates[i]);
        ep.close.push_back(close[i]);
        ep.features.push_back(features[i]);
        if (with_signal) ep.predictions.push_back(predictions[i]);
    }
    return ep;
}

PreparedMarket prepare_market(const Dataset& ds, const BacktestConfig& cfg) {
    cfg.env.validate();
    PreparedMarket m;
    m.coin = ds.asset();
    if (cfg.group) {
        m.group = *cfg.group;
    } else {
        const auto sel = pgm::select_feature_group(ds, cfg.pgm);
        m.group = sel.group;
        m.group_accuracies = sel.accuracies;
    }
    spdlog::info("{}: feature group {}", m.coin, group_name(m.group));
    m.dbn = pgm::fit_dbn(ds, m.group, cfg.pgm);

    const auto frame = compute_feature_frame(ds, m.group, cfg.pgm.indicators);
    const auto base = compute_feature_frame(ds, FeatureGroup::Ohlcv, cfg.pgm.indicators);
    m.predictions = pgm::predict_directions(m.dbn, frame, cfg.pgm.zero_change_is_down);
    m.dates = ds.dates();
    m.close = ds.column("close");
    m.split = ds.split_index();

    m.first = frame.first_valid();
    while (m.first < m.predictions.size() && !m.predictions[m.first]) ++m.first;
    if (m.first + 2 > m.split) throw TooSmallError(fmt::format("{}: too few usable training rows", m.coin));
    if (m.dates.size() - m.split < 2) throw TooSmallError(fmt::format("{}: test split needs two rows", m.coin));
    m.crn_features = normalized_rows(frame, m.first, m.split, cfg.env.obs_clip);
    m.base_features = normalized_rows(base, m.first, m.split, cfg.env.obs_clip);
    return m;
}

RunResult buy_and_hold(const std::vector<double>& close, double initial_cash, double fee_rate, std::string coin) {
    if (close.empty()) throw ContractError("Buy-and-Hold needs a nonempty test split");
    const double coins = initial_cash * (1.0 - fee_rate) / close.front();
    const double final_cash = coins * close.back() * (1.0 - fee_rate);
    RunResult r;
    r.coin = std::move(coin);
    r.strategy = Strategy::BuyAndHold;
    r.roi = roi(initial_cash, final_cash);
    r.test_days = close.size();
    r.annual_roi = annual_roi(r.roi, r.test_days);
    return r;
}

agents::TrainingResult train_strategy(const PreparedMarket& market, Strategy strategy, std::uint64_t seed,
                                      const BacktestConfig& cfg) {
    const auto algo = algorithm_of(strategy);
    const bool signal = uses_signal(strategy);
    const auto episode = market.episode(signal, Segment::Train);
    auto make_env = [&] {
        TradingEnv env(episode, cfg.env);
        check_layout(market, strategy, env);
        return env;
    };
    const auto steps = algo == agents::Algorithm::Ppo ? cfg.ppo_steps : cfg.ddpg_steps;
    return agents::train_agent(algo, make_env, steps, seed, cfg.agents);
}

RunResult evaluate_strategy(const PreparedMarket& market, Strategy strategy, std::uint64_t seed,
                            const agents::TrainedPolicy& policy, const BacktestConfig& cfg) {
    if (policy.algorithm != algorithm_of(strategy)) throw ContractError("policy algorithm does not match the strategy");
    TradingEnv env(market.episode(uses_signal(strategy), Segment::Test), cfg.env);
    check_layout(market, strategy, env);
    if (policy.net.input_size() != env.observation_size()) throw ShapeError("policy input does not match the observation");
    const auto eval = agents::evaluate_policy(policy, env);
    RunResult r;
    r.coin = market.coin;
    r.strategy = strategy;
    r.seed = seed;
    r.roi = eval.roi;
    r.test_days = market.test_days();
    r.annual_roi = annual_roi(r.roi, r.test_days);
    r.log = eval.log;
    r.stats = decision_stats(r.log);
    return r;
}

RunResult run_backtest(const PreparedMarket& market, Strategy strategy, std::uint64_t seed,
                       const BacktestConfig& cfg, const std::optional<std::filesystem::path>& trade_log_dir) {
    RunResult r;
    if (strategy == Strategy::BuyAndHold) {
        const std::vector<double> test(market.close.begin() + static_cast<std::ptrdiff_t>(market.split),
                                       market.close.end());
        r = buy_and_hold(test, cfg.env.initial_cash, cfg.buy_and_hold_fees ? cfg.env.fee_rate : 0.0, market.coin);
        r.seed = seed;
    } else {
        const auto trained = train_strategy(market, strategy, seed, cfg);
        r = evaluate_strategy(market, strategy, seed, trained.policy, cfg);
    }
    if (trade_log_dir && !r.log.empty()) write_run_trade_log(r, *trade_log_dir);
    return r;
}

std::string trade_log_name(const std::string& coin, Strategy strategy, std::uint64_t seed) {
    return fmt::format("{}_{}_seed{}.csv", coin, strategy_name(strategy), seed);
}

void write_run_trade_log(RunResult& result, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const auto path = dir / trade_log_name(result.coin, result.strategy, result.seed);
    write_trade_log_csv(result.log, path);
    result.trade_log = path.string();
}

}  // namespace crn::backtest
