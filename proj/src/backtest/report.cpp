#include "crn/backtest/report.hpp"

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>

#include <fmt/format.h>

#include "crn/errors.hpp"

namespace crn::backtest {

namespace {

const char* kAbsent = "-";

std::string pct(const std::optional<double>& v) {
    return v ? fmt::format("{:.2f}", *v) : std::string{kAbsent};
}

nlohmann::json opt_json(const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::optional<double> opt_from(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<double>();
}

void write_csv(const std::vector<std::vector<std::string>>& rows, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << r[i];
        out << '\n';
    }
    if (!out) throw Error(fmt::format("write failed for '{}'", path.string()));
}

void write_text(const std::vector<std::vector<std::string>>& rows, const std::filesystem::path& path) {
    std::vector<std::size_t> width;
    for (const auto& r : rows) {
        width.resize(std::max(width.size(), r.size()), 0);
        for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], r[i].size());
    }
    std::ofstream out(path);
    if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
    for (const auto& r : rows) {
        std::string line;
        for (std::size_t i = 0; i < r.size(); ++i) {
            if (i) line += "  ";
            line += i < 2 ? fmt::format("{:<{}}", r[i], width[i]) : fmt::format("{:>{}}", r[i], width[i]);
        }
        while (!line.empty() && line.back() == ' ') line.pop_back();
        out << line << '\n';
    }
    if (!out) throw Error(fmt::format("write failed for '{}'", path.string()));
}

/// Strategies in canonical order, each with its aggregates.
std::map<Strategy, std::vector<const Aggregate*>> by_strategy(const std::vector<Aggregate>& aggregates) {
    std::map<Strategy, std::vector<const Aggregate*>> m;
    for (const auto& a : aggregates) m[a.strategy].push_back(&a);
    return m;
}

std::optional<double> mean_of(const std::vector<std::optional<double>>& xs) {
    double s = 0.0;
    std::size_t n = 0;
    for (const auto& x : xs) {
        if (x) {
            s += *x;
            ++n;
        }
    }
    if (!n) return std::nullopt;
    return s / static_cast<double>(n);
}

}  // namespace

std::string mean_std(double mean, double std) {
    return fmt::format("{:.2f} ({:.2f})", 100.0 * mean, 100.0 * std);
}

std::string config_hash(const nlohmann::json& config) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : config.dump()) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return fmt::format("{:016x}", h);
}

nlohmann::json to_json(const DecisionStats& s) {
    return {{"buy_pct", s.buy_pct},
            {"sell_pct", s.sell_pct},
            {"hold_pct", s.hold_pct},
            {"buy_size_pct", opt_json(s.buy_size_pct)},
            {"sell_size_pct", opt_json(s.sell_size_pct)},
            {"up_pct", opt_json(s.up_pct)},
            {"down_pct", opt_json(s.down_pct)}};
}

nlohmann::json to_json(const RunResult& r) {
    nlohmann::json j{{"coin", r.coin},
                     {"strategy", strategy_name(r.strategy)},
                     {"seed", r.seed},
                     {"roi", r.roi},
                     {"annual_roi", r.annual_roi},
                     {"test_days", r.test_days},
                     {"trade_log", r.trade_log}};
    j["stats"] = r.stats ? to_json(*r.stats) : nlohmann::json(nullptr);
    return j;
}

RunResult run_result_from_json(const nlohmann::json& j) {
    RunResult r;
    r.coin = j.at("coin").get<std::string>();
    r.strategy = parse_strategy(j.at("strategy").get<std::string>());
    r.seed = j.at("seed").get<std::uint64_t>();
    r.roi = j.at("roi").get<double>();
    r.annual_roi = j.at("annual_roi").get<double>();
    r.test_days = j.at("test_days").get<std::size_t>();
    r.trade_log = j.value("trade_log", std::string{});
    if (j.contains("stats") && !j.at("stats").is_null()) {
        const auto& s = j.at("stats");
        DecisionStats d;
        d.buy_pct = s.at("buy_pct").get<double>();
        d.sell_pct = s.at("sell_pct").get<double>();
        d.hold_pct = s.at("hold_pct").get<double>();
        d.buy_size_pct = opt_from(s, "buy_size_pct");
        d.sell_size_pct = opt_from(s, "sell_size_pct");
        d.up_pct = opt_from(s, "up_pct");
        d.down_pct = opt_from(s, "down_pct");
        r.stats = d;
    }
    return r;
}

nlohmann::json to_json(const Aggregate& a) {
    nlohmann::json j{{"coin", a.coin},
                     {"strategy", strategy_name(a.strategy)},
                     {"runs", a.runs},
                     {"roi_mean", a.roi_mean},
                     {"roi_std", a.roi_std},
                     {"annual_roi_mean", a.annual_mean},
                     {"annual_roi_std", a.annual_std}};
    j["stats"] = a.stats ? to_json(*a.stats) : nlohmann::json(nullptr);
    return j;
}

std::vector<std::vector<std::string>> roi_table(const std::vector<Aggregate>& aggregates) {
    std::vector<std::vector<std::string>> rows{{"Coin", "Strategy", "ROI (%)", "Ann.ROI (%)"}};
    for (const auto& a : aggregates) {
        rows.push_back({a.coin, std::string(strategy_name(a.strategy)), mean_std(a.roi_mean, a.roi_std),
                        mean_std(a.annual_mean, a.annual_std)});
    }
    for (const auto& [strategy, group] : by_strategy(aggregates)) {
        if (group.size() < 2) continue;
        double roi = 0.0, annual = 0.0;
        for (const auto* a : group) {
            roi += a->roi_mean;
            annual += a->annual_mean;
        }
        const double n = static_cast<double>(group.size());
        rows.push_back({"Average", std::string(strategy_name(strategy)), fmt::format("{:.2f}", 100.0 * roi / n),
                        fmt::format("{:.2f}", 100.0 * annual / n)});
    }
    return rows;
}

std::vector<std::vector<std::string>> decision_table(const std::vector<Aggregate>& aggregates) {
    std::vector<std::vector<std::string>> rows{
        {"Coin", "Strategy", "Buy (%)", "Sell (%)", "Hold (%)", "Buy Size (%)", "Sell Size (%)", "Up (%)", "Down (%)"}};
    for (const auto& a : aggregates) {
        if (!a.stats) continue;
        const auto& s = *a.stats;
        rows.push_back({a.coin, std::string(strategy_name(a.strategy)), pct(s.buy_pct), pct(s.sell_pct),
                        pct(s.hold_pct), pct(s.buy_size_pct), pct(s.sell_size_pct), pct(s.up_pct), pct(s.down_pct)});
    }
    for (const auto& [strategy, group] : by_strategy(aggregates)) {
        std::vector<std::optional<double>> buy, sell, hold, bs, ss, up, down;
        for (const auto* a : group) {
            if (!a->stats) continue;
            buy.push_back(a->stats->buy_pct);
            sell.push_back(a->stats->sell_pct);
            hold.push_back(a->stats->hold_pct);
            bs.push_back(a->stats->buy_size_pct);
            ss.push_back(a->stats->sell_size_pct);
            up.push_back(a->stats->up_pct);
            down.push_back(a->stats->down_pct);
        }
        if (buy.size() < 2) continue;
        rows.push_back({"Average", std::string(strategy_name(strategy)), pct(mean_of(buy)), pct(mean_of(sell)),
                        pct(mean_of(hold)), pct(mean_of(bs)), pct(mean_of(ss)), pct(mean_of(up)),
                        pct(mean_of(down))});
    }
    return rows;
}

void emit_report(const std::vector<Aggregate>& aggregates, const std::filesystem::path& dir,
                 const std::string& hash) {
    std::filesystem::create_directories(dir);
    nlohmann::json j{{"config_hash", hash}, {"aggregates", nlohmann::json::array()}};
    for (const auto& a : aggregates) j["aggregates"].push_back(to_json(a));
    {
        std::ofstream out(dir / "report.json");
        if (!out) throw Error(fmt::format("cannot write '{}'", (dir / "report.json").string()));
        out << j.dump(2) << '\n';
        if (!out) throw Error("report.json write failed");
    }
    const auto roi = roi_table(aggregates);
    const auto decisions = decision_table(aggregates);
    write_csv(roi, dir / "roi_table.csv");
    write_text(roi, dir / "roi_table.txt");
    write_csv(decisions, dir / "decision_table.csv");
    write_text(decisions, dir / "decision_table.txt");
}

}  // namespace crn::backtest
