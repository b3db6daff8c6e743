#include "crn/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include <fmt/format.h>

#include "crn/errors.hpp"

namespace crn::synthetic {

namespace {

using namespace std::chrono;

const Date kStart = sys_days{year{2018} / January / 1};

Bar make_bar(Date d, double open, double close, double volume, double spread) {
    Bar b;
    b.date = d;
    b.open = open;
    b.close = close;
    b.high = std::max(open, close) * (1.0 + spread);
    b.low = std::min(open, close) * (1.0 - spread);
    b.volume = volume;
    return b;
}

/// Random-walk macro levels for every day.
void add_macro(Market& m, std::mt19937_64& rng) {
    std::normal_distribution<double> step(0.0, 0.01);
    double gold = 1300.0, msci = 2000.0, sp500 = 2700.0, usdx = 95.0, wti = 60.0;
    for (auto& r : m.exo) {
        gold *= 1.0 + step(rng);
        msci *= 1.0 + step(rng);
        sp500 *= 1.0 + step(rng);
        usdx *= 1.0 + 0.3 * step(rng);
        wti *= 1.0 + 2.0 * step(rng);
        r.gold = gold;
        r.msci = msci;
        r.sp500 = sp500;
        r.usdx = usdx;
        r.wti = wti;
    }
}

void check_days(std::size_t days) {
    if (days < 2) throw ContractError("a synthetic market needs at least two days");
}

}  // namespace

Dataset Market::dataset(std::string asset) const {
    return align_calendar(std::move(asset), bars, exo);
}

Market uptrend(std::size_t days, double daily_rate, std::uint64_t seed, double noise) {
    check_days(days);
    if (noise < 0.0) throw ContractError("uptrend noise must be non-negative");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> vol(0.9, 1.1);
    std::normal_distribution<double> eps(0.0, 1.0);
    Market m;
    double prev = 100.0 / (1.0 + daily_rate);
    double close = 100.0;
    for (std::size_t t = 0; t < days; ++t) {
        if (t > 0) close = prev * (1.0 + daily_rate + (noise > 0.0 ? noise * eps(rng) : 0.0));
        const Date d = kStart + std::chrono::days(static_cast<int>(t));
        m.bars.push_back(make_bar(d, prev, close, 1e6 * vol(rng), 0.005));
        prev = close;
    }
    return m;
}

Market planted_signal(std::size_t days, double predictability, std::uint64_t seed) {
    check_days(days);
    if (!(predictability >= 0.5 && predictability <= 1.0)) throw ContractError("predictability must lie in [0.5, 1]");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> size(0.02, 0.005);
    std::uniform_int_distribution<int> regime_length(20, 60);

    // Directions first: ups[t] is the move from day t-1 to day t.
    std::vector<int> ups(days, 1);
    bool bull = true;
    int left = regime_length(rng);
    for (std::size_t t = 1; t < days; ++t) {
        if (--left == 0) {
            bull = !bull;
            left = regime_length(rng);
        }
        ups[t] = u(rng) < (bull ? 0.6 : 0.4) ? 1 : 0;
    }

    Market m;
    m.exo.resize(days);
    double close = 100.0;
    std::uniform_real_distribution<double> vol(0.8, 1.2);
    for (std::size_t t = 0; t < days; ++t) {
        const Date d = kStart + std::chrono::days(static_cast<int>(t));
        const double open = close;
        if (t > 0) {
            const double r = std::clamp(size(rng), 0.005, 0.05);
            close = ups[t] ? close * (1.0 + r) : close / (1.0 + r);
        }
        m.bars.push_back(make_bar(d, open, close, 1e6 * vol(rng), 0.01));
        // Tweets today foretell tomorrow's move.
        const int next_up = t + 1 < days ? ups[t + 1] : 1;
        const int shown = u(rng) < predictability ? next_up : 1 - next_up;
        m.exo[t].date = d;
        m.exo[t].tweet_count = shown ? 1500 + static_cast<std::int64_t>(200 * u(rng))
                                     : 500 + static_cast<std::int64_t>(200 * u(rng));
    }
    add_macro(m, rng);
    return m;
}

Market random_walk(std::size_t days, std::uint64_t seed) {
    check_days(days);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> ret(0.0005, 0.03);
    std::uniform_real_distribution<double> vol(0.5, 1.5);
    std::poisson_distribution<std::int64_t> tweets(800);
    Market m;
    m.exo.resize(days);
    double close = 50.0;
    for (std::size_t t = 0; t < days; ++t) {
        const Date d = kStart + std::chrono::days(static_cast<int>(t));
        const double open = close;
        if (t > 0) close *= std::exp(ret(rng));
        m.bars.push_back(make_bar(d, open, close, 2e6 * vol(rng), 0.015));
        m.exo[t].date = d;
        m.exo[t].tweet_count = tweets(rng);
    }
    add_macro(m, rng);
    return m;
}

void write_market_csvs(const Market& m, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    auto open_file = [&](const char* name) {
        std::ofstream out(dir / name);
        if (!out) throw Error(fmt::format("cannot write '{}'", (dir / name).string()));
        return out;
    };
    auto opt = [](const std::optional<double>& v) { return v ? fmt::format("{}", *v) : std::string{}; };

    auto ohlcv = open_file("ohlcv.csv");
    ohlcv << "date,open,high,low,close,volume\n";
    for (const auto& b : m.bars) {
        ohlcv << fmt::format("{},{},{},{},{},{}\n", format_date(b.date), b.open, b.high, b.low, b.close, b.volume);
    }
    auto macro = open_file("macro.csv");
    macro << "date,gold,msci,sp500,usdx,wti\n";
    auto tweets = open_file("tweets.csv");
    tweets << "date,tweet_count\n";
    for (const auto& r : m.exo) {
        macro << fmt::format("{},{},{},{},{},{}\n", format_date(r.date), opt(r.gold), opt(r.msci), opt(r.sp500),
                             opt(r.usdx), opt(r.wti));
        tweets << format_date(r.date) << ',' << (r.tweet_count ? std::to_string(*r.tweet_count) : std::string{})
               << '\n';
    }
}

}  // namespace crn::synthetic
