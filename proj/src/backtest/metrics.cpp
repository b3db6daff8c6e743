#include "crn/backtest/metrics.hpp"

#include <cmath>

#include <fmt/format.h>

#include "crn/errors.hpp"

namespace crn::backtest {

namespace {

struct Moments {
    double mean = 0.0;
    double std = 0.0;
};

Moments sample_moments(const std::vector<double>& xs) {
    Moments m;
    for (double x : xs) m.mean += x;
    m.mean /= static_cast<double>(xs.size());
    if (xs.size() < 2) return m;
    double ss = 0.0;
    for (double x : xs) ss += (x - m.mean) * (x - m.mean);
    m.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    return m;
}

std::optional<double> mean_present(const std::vector<std::optional<double>>& xs) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& x : xs) {
        if (x) {
            sum += *x;
            ++n;
        }
    }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
}

}  // namespace

std::string_view strategy_name(Strategy s) {
    switch (s) {
        case Strategy::CrnPpo: return "CRN_PPO";
        case Strategy::CrnDdpg: return "CRN_DDPG";
        case Strategy::BasePpo: return "BASE_PPO";
        case Strategy::BaseDdpg: return "BASE_DDPG";
        case Strategy::BuyAndHold: return "BUY_AND_HOLD";
    }
    return "";
}

const std::vector<Strategy>& all_strategies() {
    static const std::vector<Strategy> all{Strategy::CrnPpo, Strategy::CrnDdpg, Strategy::BasePpo,
                                           Strategy::BaseDdpg, Strategy::BuyAndHold};
    return all;
}

Strategy parse_strategy(std::string_view name) {
    for (auto s : all_strategies()) {
        if (strategy_name(s) == name) return s;
    }
    throw ConfigError(fmt::format("unknown strategy '{}'", name));
}

bool uses_signal(Strategy s) {
    return s == Strategy::CrnPpo || s == Strategy::CrnDdpg;
}

double roi(double initial, double final_value) {
    if (!(initial > 0.0)) throw ContractError("initial value must be positive");
    return (final_value - initial) / initial;
}

double annual_roi(double r, std::size_t days) {
    if (days < 1) throw ContractError("annualization needs at least one day");
    return r * 365.0 / static_cast<double>(days);
}

DecisionStats decision_stats(const std::vector<TradeLogEntry>& log) {
    if (log.empty()) throw ContractError("decision statistics need a nonempty trade log");
    std::size_t buys = 0, sells = 0, holds = 0, ups = 0, predicted = 0;
    std::size_t buys_done = 0, sells_done = 0;
    double buy_size = 0.0, sell_size = 0.0;
    for (const auto& e : log) {
        switch (e.kind) {
            case ActionKind::Buy:
                ++buys;
                if (e.fraction > 0.0) ++buys_done, buy_size += e.fraction;
                break;
            case ActionKind::Sell:
                ++sells;
                if (e.fraction > 0.0) ++sells_done, sell_size += e.fraction;
                break;
            case ActionKind::Hold: ++holds; break;
        }
        if (e.p_up && e.p_down) {
            ++predicted;
            if (*e.p_up > *e.p_down) ++ups;
        }
    }
    const double n = static_cast<double>(log.size());
    DecisionStats s;
    s.buy_pct = 100.0 * static_cast<double>(buys) / n;
    s.sell_pct = 100.0 * static_cast<double>(sells) / n;
    s.hold_pct = 100.0 * static_cast<double>(holds) / n;
    // Sizes average executed trades only; a sell with no coins is a no-op.
    if (buys_done) s.buy_size_pct = 100.0 * buy_size / static_cast<double>(buys_done);
    if (sells_done) s.sell_size_pct = 100.0 * sell_size / static_cast<double>(sells_done);
    if (predicted) {
        s.up_pct = 100.0 * static_cast<double>(ups) / static_cast<double>(predicted);
        s.down_pct = 100.0 - *s.up_pct;
    }
    return s;
}

Aggregate aggregate_runs(std::span<const RunResult> results, std::size_t expected_runs) {
    if (results.size() != expected_runs) {
        throw ContractError(fmt::format("aggregation expects {} runs, got {}", expected_runs, results.size()));
    }
    Aggregate a;
    a.coin = results.front().coin;
    a.strategy = results.front().strategy;
    a.runs = results.size();
    std::vector<double> rois, annual;
    std::vector<std::optional<double>> buy, sell, hold, bsize, ssize, up, down;
    bool any_stats = false;
    for (const auto& r : results) {
        if (r.coin != a.coin || r.strategy != a.strategy) {
            throw ContractError("aggregation mixes coins or strategies");
        }
        rois.push_back(r.roi);
        annual.push_back(r.annual_roi);
        if (r.stats) {
            any_stats = true;
            buy.push_back(r.stats->buy_pct);
            sell.push_back(r.stats->sell_pct);
            hold.push_back(r.stats->hold_pct);
            bsize.push_back(r.stats->buy_size_pct);
            ssize.push_back(r.stats->sell_size_pct);
            up.push_back(r.stats->up_pct);
            down.push_back(r.stats->down_pct);
        }
    }
    const auto rm = sample_moments(rois);
    const auto am = sample_moments(annual);
    a.roi_mean = rm.mean;
    a.roi_std = rm.std;
    a.annual_mean = am.mean;
    a.annual_std = am.std;
    if (any_stats) {
        DecisionStats s;
        s.buy_pct = *mean_present(buy);
        s.sell_pct = *mean_present(sell);
        s.hold_pct = *mean_present(hold);
        s.buy_size_pct = mean_present(bsize);
        s.sell_size_pct = mean_present(ssize);
        s.up_pct = mean_present(up);
        s.down_pct = mean_present(down);
        a.stats = s;
    }
    return a;
}

}  // namespace crn::backtest
