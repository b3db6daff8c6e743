#include "crn/trading_env.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "crn/agents/action.hpp"
#include "crn/errors.hpp"

namespace crn {

void EnvConfig::validate() const {
    if (!(0.0 < lower && lower <= upper && upper < strong_fraction && strong_fraction <= 1.0)) {
        throw ConfigError("position sizes must satisfy 0 < lower <= upper < strong fraction <= 1");
    }
    if (!(strong_cutoff > 0.5 && strong_cutoff <= 1.0)) throw ConfigError("strong-signal cutoff must lie in (0.5, 1]");
    if (!(fee_rate >= 0.0)) throw ConfigError("fee rate must be non-negative");
    if (sharpe_window < 1) throw ConfigError("Sharpe window must be at least 1");
    if (!(initial_cash > 0.0)) throw ConfigError("initial cash must be positive");
    if (!(obs_clip > 0.0)) throw ConfigError("observation clip must be positive");
}

std::string_view kind_name(ActionKind k) {
    switch (k) {
        case ActionKind::Sell: return "Sell";
        case ActionKind::Hold: return "Hold";
        case ActionKind::Buy: return "Buy";
    }
    return "";
}

Execution apply_action(const PortfolioState& portfolio, const ActionCommand& action,
                       const std::optional<DirectionPrediction>& prediction, double price,
                       const EnvConfig& cfg) {
    if (!(price > 0.0)) throw ContractError(fmt::format("execution price must be positive, got {}", price));
    Execution ex;
    ex.portfolio = portfolio;
    ex.kind = action.kind;
    if (action.kind == ActionKind::Hold) return ex;

    const bool strong = prediction && (action.kind == ActionKind::Buy ? prediction->p_up >= cfg.strong_cutoff
                                                                      : prediction->p_down >= cfg.strong_cutoff);
    double f = strong ? cfg.strong_fraction : std::clamp(action.fraction, cfg.lower, cfg.upper);

    auto& p = ex.portfolio;
    if (action.kind == ActionKind::Sell) {
        if (p.coins <= 0.0) return ex;
        const double sold = p.coins * f;
        ex.cost = p.coins * price * f * cfg.fee_rate;
        p.coins = p.coins * (1.0 - f);
        p.cash = p.cash + sold * price - ex.cost;
    } else {
        if (p.cash <= 0.0) return ex;
        if (f * (1.0 + cfg.fee_rate) > 1.0) f = 1.0 / (1.0 + cfg.fee_rate);
        const double spend = p.cash * f;
        ex.cost = p.cash * f * cfg.fee_rate;
        p.coins = p.coins + spend / price;
        p.cash = std::max(0.0, p.cash - spend - ex.cost);
    }
    ex.fraction = f;
    return ex;
}

double compute_sharpe(std::span<const double> values, const EnvConfig& cfg) {
    if (values.size() < 2) return 0.0;
    const std::size_t n = std::min(values.size(), cfg.sharpe_window + 1);
    auto tail = values.subspan(values.size() - n);
    std::vector<double> r;
    r.reserve(n - 1);
    for (std::size_t i = 1; i < n; ++i) r.push_back(tail[i] / tail[i - 1] - 1.0);
    const double mean = std::accumulate(r.begin(), r.end(), 0.0) / static_cast<double>(r.size());
    double ss = 0.0;
    for (double x : r) ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / static_cast<double>(r.size()));
    if (!(sd > 1e-12)) return 0.0;
    return (mean - cfg.risk_free_annual / 365.0) / sd;
}

int reward_sr(double s) {
    if (std::isnan(s) || s == 0.0) return 0;
    if (s >= 4.0) return 10;
    if (s >= 1.0) return 4;
    if (s >= 0.0) return 1;
    if (s >= -1.0) return -1;
    if (s >= -4.0) return -4;
    return -10;
}

int reward_roi(double roi) {
    if (std::isnan(roi)) return 0;
    if (roi >= 0.5) return 10;
    if (roi >= 0.2) return 4;
    if (roi >= 0.1) return 1;
    if (roi == 0.0) return 0;
    if (roi > 0.0) return 0;  // gap between 0 and 0.1
    if (roi >= -0.2) return -4;
    return -10;
}

double combined_reward(double roi, double sharpe, const EnvConfig& cfg) {
    return cfg.roi_weight * reward_roi(roi) + cfg.sr_weight * reward_sr(sharpe);
}

FeatureScaler FeatureScaler::fit(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) throw TooSmallError("cannot fit a scaler on zero rows");
    const auto k = rows.front().size();
    FeatureScaler s;
    s.mean.assign(k, 0.0);
    s.std.assign(k, 0.0);
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < k; ++i) s.mean[i] += r[i];
    }
    for (auto& m : s.mean) m /= static_cast<double>(rows.size());
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < k; ++i) s.std[i] += (r[i] - s.mean[i]) * (r[i] - s.mean[i]);
    }
    for (std::size_t i = 0; i < k; ++i) {
        s.std[i] = std::sqrt(s.std[i] / static_cast<double>(rows.size()));
        if (!(s.std[i] > 0.0)) spdlog::warn("feature {} has zero training spread; observed as 0", i);
    }
    return s;
}

std::vector<double> FeatureScaler::apply(std::span<const double> row, double clip) const {
    if (row.size() != mean.size()) throw ShapeError("feature row does not match the scaler");
    std::vector<double> out(row.size());
    for (std::size_t i = 0; i < row.size(); ++i) {
        out[i] = std[i] > 0.0 ? std::clamp((row[i] - mean[i]) / std[i], -clip, clip) : 0.0;
    }
    return out;
}

Observation build_observation(std::span<const double> normalized_features,
                              const std::optional<DirectionPrediction>& prediction, bool with_signal,
                              const PortfolioState& portfolio, double price) {
    Observation obs;
    obs.n_features = normalized_features.size();
    obs.has_signal = with_signal;
    obs.values.assign(normalized_features.begin(), normalized_features.end());
    if (with_signal) {
        const auto p = prediction.value_or(DirectionPrediction{});
        obs.values.push_back(p.p_up);
        obs.values.push_back(p.p_down);
    }
    const double value = portfolio.value(price);
    if (value > 0.0) {
        obs.values.push_back(portfolio.cash / value);
        obs.values.push_back(portfolio.coins * price / value);
    } else {
        obs.values.push_back(0.0);
        obs.values.push_back(0.0);
    }
    for (double x : obs.values) {
        if (!std::isfinite(x)) throw ContractError("observation contains a non-finite entry");
    }
    return obs;
}

TradingEnv::TradingEnv(MarketEpisode episode, EnvConfig cfg) : episode_(std::move(episode)), cfg_(cfg) {
    cfg_.validate();
    const auto n = episode_.rows();
    if (n < 2) throw TooSmallError("an episode needs at least two rows");
    if (episode_.close.size() != n || episode_.features.size() != n ||
        (episode_.with_signal() && episode_.predictions.size() != n)) {
        throw ShapeError("episode columns differ in length");
    }
    reset();
}

Observation TradingEnv::reset(std::size_t start_row) {
    if (start_row + 1 >= episode_.rows()) {
        throw ContractError(fmt::format("episode start {} leaves no step in {} rows", start_row, episode_.rows()));
    }
    t_ = start_row;
    done_ = false;
    portfolio_ = PortfolioState{};
    portfolio_.cash = cfg_.initial_cash;
    portfolio_.values = {cfg_.initial_cash};
    portfolio_.step = start_row;
    log_.clear();
    return observe();
}

std::size_t TradingEnv::observation_size() const {
    return episode_.features.front().size() + (episode_.with_signal() ? 2 : 0) + 2;
}

Observation TradingEnv::observe() const {
    const std::optional<DirectionPrediction> pred =
        episode_.with_signal() ? episode_.predictions[t_] : std::nullopt;
    return build_observation(episode_.features[t_], pred, episode_.with_signal(), portfolio_,
                             episode_.close[t_]);
}

double TradingEnv::roi() const {
    return (portfolio_.values.back() - cfg_.initial_cash) / cfg_.initial_cash;
}

StepResult TradingEnv::step(RawAction raw) {
    if (done_) throw ContractError("step() called on a finished episode");
    const auto cmd = agents::decode_action(raw, cfg_);
    const std::optional<DirectionPrediction> pred =
        episode_.with_signal() ? episode_.predictions[t_] : std::nullopt;
    auto ex = apply_action(portfolio_, cmd, pred, episode_.close[t_], cfg_);
    const Date date = episode_.dates[t_];
    portfolio_.cash = ex.portfolio.cash;
    portfolio_.coins = ex.portfolio.coins;
    ++t_;
    portfolio_.step = t_;

    const double price = episode_.close[t_];
    double cost = ex.cost;
    if (t_ + 1 == episode_.rows()) {
        if (portfolio_.coins > 0.0) {
            const double fee = portfolio_.coins * price * cfg_.fee_rate;
            portfolio_.cash = portfolio_.cash + portfolio_.coins * price - fee;
            portfolio_.coins = 0.0;
            cost += fee;
        }
        done_ = true;
    }
    const double value = portfolio_.value(price);
    portfolio_.values.push_back(value);

    StepResult res;
    res.reward = combined_reward(roi(), compute_sharpe(portfolio_.values, cfg_), cfg_);
    res.done = done_;
    res.cost = cost;
    res.fraction = ex.fraction;
    res.kind = ex.kind;
    res.observation = observe();

    TradeLogEntry e;
    e.date = date;
    e.kind = ex.kind;
    e.fraction = ex.fraction;
    e.cost = cost;
    e.cash = portfolio_.cash;
    e.coins = portfolio_.coins;
    e.value = value;
    if (pred) {
        e.p_up = pred->p_up;
        e.p_down = pred->p_down;
    }
    e.reward = res.reward;
    log_.push_back(e);
    return res;
}

void write_trade_log_csv(const std::vector<TradeLogEntry>& log, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
    out << "date,kind,fraction,TC,B,WA,value,p_up,reward\n";
    for (const auto& e : log) {
        out << format_date(e.date) << ',' << kind_name(e.kind) << ',' << fmt::format("{}", e.fraction) << ','
            << fmt::format("{}", e.cost) << ',' << fmt::format("{}", e.cash) << ',' << fmt::format("{}", e.coins)
            << ',' << fmt::format("{}", e.value) << ',' << (e.p_up ? fmt::format("{}", *e.p_up) : std::string{})
            << ',' << fmt::format("{}", e.reward) << '\n';
    }
    if (!out) throw Error(fmt::format("write failed for '{}'", path.string()));
}

}  // namespace crn
