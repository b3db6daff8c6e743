#include "crn/indicators.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include <fmt/format.h>

#include "crn/errors.hpp"

namespace crn {

namespace {

void require_window(int window) {
    if (window < 1) throw ConfigError(fmt::format("indicator window must be >= 1, got {}", window));
}

void require_same_length(std::initializer_list<std::size_t> sizes) {
    auto first = *sizes.begin();
    for (auto s : sizes) {
        if (s != first) throw ShapeError("indicator inputs differ in length");
    }
}

}  // namespace

Series sma(std::span<const double> x, int window) {
    require_window(window);
    const auto w = static_cast<std::size_t>(window);
    Series out(x.size(), kUndefined);
    for (std::size_t t = w - 1; t < x.size(); ++t) {
        double sum = 0.0;
        for (std::size_t i = t + 1 - w; i <= t; ++i) sum += x[i];
        out[t] = sum / static_cast<double>(w);
    }
    return out;
}

Series ema(std::span<const double> x, int window) {
    require_window(window);
    const auto w = static_cast<std::size_t>(window);
    Series out(x.size(), kUndefined);
    std::size_t first = 0;
    while (first < x.size() && std::isnan(x[first])) ++first;
    const std::size_t seed_at = first + w - 1;
    if (seed_at >= x.size()) return out;
    double sum = 0.0;
    for (std::size_t i = first; i <= seed_at; ++i) sum += x[i];
    double prev = sum / static_cast<double>(w);
    out[seed_at] = prev;
    const double k = 2.0 / (static_cast<double>(w) + 1.0);
    for (std::size_t t = seed_at + 1; t < x.size(); ++t) {
        prev = k * x[t] + (1.0 - k) * prev;
        out[t] = prev;
    }
    return out;
}

Series rsi(std::span<const double> closes, int window) {
    require_window(window);
    const auto w = static_cast<std::size_t>(window);
    Series out(closes.size(), kUndefined);
    if (closes.size() <= w) return out;
    auto value = [](double gain, double loss) {
        if (loss == 0.0) return 100.0;
        return 100.0 - 100.0 / (1.0 + gain / loss);
    };
    double gain = 0.0, loss = 0.0;
    for (std::size_t t = 1; t <= w; ++t) {
        const double ch = closes[t] - closes[t - 1];
        gain += ch > 0.0 ? ch : 0.0;
        loss += ch < 0.0 ? -ch : 0.0;
    }
    gain /= static_cast<double>(w);
    loss /= static_cast<double>(w);
    out[w] = value(gain, loss);
    const double wd = static_cast<double>(w);
    for (std::size_t t = w + 1; t < closes.size(); ++t) {
        const double ch = closes[t] - closes[t - 1];
        gain = (gain * (wd - 1.0) + (ch > 0.0 ? ch : 0.0)) / wd;
        loss = (loss * (wd - 1.0) + (ch < 0.0 ? -ch : 0.0)) / wd;
        out[t] = value(gain, loss);
    }
    return out;
}

Macd macd(std::span<const double> closes, int fast, int slow, int signal) {
    if (fast >= slow) throw ConfigError("MACD fast period must be shorter than slow period");
    auto ef = ema(closes, fast);
    auto es = ema(closes, slow);
    Macd m;
    m.line.assign(closes.size(), kUndefined);
    for (std::size_t t = 0; t < closes.size(); ++t) m.line[t] = ef[t] - es[t];  // NaN propagates
    m.signal = ema(m.line, signal);
    m.histogram.assign(closes.size(), kUndefined);
    for (std::size_t t = 0; t < closes.size(); ++t) m.histogram[t] = m.line[t] - m.signal[t];
    return m;
}

Series obv(std::span<const double> closes, std::span<const double> volumes) {
    require_same_length({closes.size(), volumes.size()});
    Series out(closes.size(), 0.0);
    for (std::size_t t = 1; t < closes.size(); ++t) {
        const double ch = closes[t] - closes[t - 1];
        const double sign = ch > 0.0 ? 1.0 : (ch < 0.0 ? -1.0 : 0.0);
        out[t] = out[t - 1] + sign * volumes[t];
    }
    return out;
}

Series ad(std::span<const double> high, std::span<const double> low,
          std::span<const double> close, std::span<const double> volume) {
    require_same_length({high.size(), low.size(), close.size(), volume.size()});
    Series out(close.size(), 0.0);
    double acc = 0.0;
    for (std::size_t t = 0; t < close.size(); ++t) {
        const double range = high[t] - low[t];
        const double mfm = range > 0.0 ? ((close[t] - low[t]) - (high[t] - close[t])) / range : 0.0;
        acc += mfm * volume[t];
        out[t] = acc;
    }
    return out;
}

Bollinger bbands(std::span<const double> closes, int window, double k) {
    require_window(window);
    const auto w = static_cast<std::size_t>(window);
    Bollinger b;
    b.middle = sma(closes, window);
    b.upper.assign(closes.size(), kUndefined);
    b.lower.assign(closes.size(), kUndefined);
    b.width.assign(closes.size(), kUndefined);
    for (std::size_t t = w - 1; t < closes.size(); ++t) {
        const double mid = b.middle[t];
        double ss = 0.0;
        for (std::size_t i = t + 1 - w; i <= t; ++i) ss += (closes[i] - mid) * (closes[i] - mid);
        const double sd = std::sqrt(ss / static_cast<double>(w));
        b.upper[t] = mid + k * sd;
        b.lower[t] = mid - k * sd;
        b.width[t] = b.upper[t] - b.lower[t];
    }
    return b;
}

Series natr(std::span<const double> high, std::span<const double> low,
            std::span<const double> close, int window) {
    require_window(window);
    require_same_length({high.size(), low.size(), close.size()});
    const auto w = static_cast<std::size_t>(window);
    Series out(close.size(), kUndefined);
    if (close.size() <= w) return out;
    auto tr = [&](std::size_t t) {
        return std::max({high[t] - low[t], std::abs(high[t] - close[t - 1]),
                         std::abs(low[t] - close[t - 1])});
    };
    double atr = 0.0;
    for (std::size_t t = 1; t <= w; ++t) atr += tr(t);
    atr /= static_cast<double>(w);
    const double wd = static_cast<double>(w);
    for (std::size_t t = w; t < close.size(); ++t) {
        if (t > w) atr = (atr * (wd - 1.0) + tr(t)) / wd;
        out[t] = close[t] > 0.0 ? 100.0 * atr / close[t] : 0.0;
    }
    return out;
}

Stochastic stoch(std::span<const double> high, std::span<const double> low,
                 std::span<const double> close, int k_window, int d_window) {
    require_window(k_window);
    require_window(d_window);
    require_same_length({high.size(), low.size(), close.size()});
    const auto w = static_cast<std::size_t>(k_window);
    Stochastic s;
    s.k.assign(close.size(), kUndefined);
    for (std::size_t t = w - 1; t < close.size(); ++t) {
        double hh = high[t + 1 - w], ll = low[t + 1 - w];
        for (std::size_t i = t + 2 - w; i <= t; ++i) {
            hh = std::max(hh, high[i]);
            ll = std::min(ll, low[i]);
        }
        s.k[t] = hh > ll ? 100.0 * (close[t] - ll) / (hh - ll) : 50.0;
    }
    // %D only over the defined part of %K.
    s.d.assign(close.size(), kUndefined);
    const auto dw = static_cast<std::size_t>(d_window);
    for (std::size_t t = w - 1 + dw - 1; t < close.size(); ++t) {
        double sum = 0.0;
        for (std::size_t i = t + 1 - dw; i <= t; ++i) sum += s.k[i];
        s.d[t] = sum / static_cast<double>(dw);
    }
    return s;
}

std::string_view group_name(FeatureGroup g) {
    switch (g) {
        case FeatureGroup::Ohlcv: return "OHLCV";
        case FeatureGroup::OhlcvTi: return "OHLCV+TI";
        case FeatureGroup::OhlcvMacroTweets: return "OHLCV+MACRO+TWEETS";
        case FeatureGroup::All: return "ALL";
    }
    return "";
}

FeatureGroup parse_group(std::string_view name) {
    for (auto g : all_groups()) {
        if (group_name(g) == name) return g;
    }
    throw ConfigError(fmt::format("unknown feature group '{}'", name));
}

const std::vector<FeatureGroup>& all_groups() {
    static const std::vector<FeatureGroup> groups{FeatureGroup::Ohlcv, FeatureGroup::OhlcvTi,
                                                  FeatureGroup::OhlcvMacroTweets, FeatureGroup::All};
    return groups;
}

std::vector<std::string> group_columns(FeatureGroup g, const IndicatorConfig& cfg) {
    std::vector<std::string> cols{"open", "high", "low", "close", "volume"};
    const bool ti = g == FeatureGroup::OhlcvTi || g == FeatureGroup::All;
    const bool exo = g == FeatureGroup::OhlcvMacroTweets || g == FeatureGroup::All;
    if (ti) cols.insert(cols.end(), cfg.ti_columns.begin(), cfg.ti_columns.end());
    if (exo) {
        for (auto c : macro_columns()) cols.emplace_back(column_name(c));
        cols.emplace_back(column_name(ExoColumn::TweetCount));
    }
    return cols;
}

bool FeatureFrame::has(std::string_view name) const {
    return std::find(names.begin(), names.end(), name) != names.end();
}

const std::vector<double>& FeatureFrame::column(std::string_view name) const {
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw LookupError(fmt::format("unknown feature '{}'", name));
    return columns[static_cast<std::size_t>(it - names.begin())];
}

std::vector<double> FeatureFrame::row(std::size_t i) const {
    std::vector<double> r(cols());
    for (std::size_t c = 0; c < cols(); ++c) r[c] = columns[c][i];
    return r;
}

std::size_t FeatureFrame::first_valid() const {
    auto it = std::find(mask.begin(), mask.end(), false);
    return static_cast<std::size_t>(it - mask.begin());
}

FeatureFrame compute_feature_frame(const Dataset& ds, FeatureGroup group, const IndicatorConfig& cfg) {
    const auto& open = ds.column("open");
    const auto& high = ds.column("high");
    const auto& low = ds.column("low");
    const auto& close = ds.column("close");
    const auto& volume = ds.column("volume");

    std::map<std::string, Series> ind;
    ind["ad"] = ad(high, low, close, volume);
    ind["obv"] = obv(close, volume);
    ind["ema"] = ema(close, cfg.ema_window);
    ind["sma"] = sma(close, cfg.sma_window);
    ind["rsi"] = rsi(close, cfg.rsi_window);
    ind["natr"] = natr(high, low, close, cfg.natr_window);
    auto m = macd(close, cfg.macd_fast, cfg.macd_slow, cfg.macd_signal);
    ind["macd"] = std::move(m.line);
    ind["macd_signal"] = std::move(m.signal);
    ind["macd_hist"] = std::move(m.histogram);
    auto bb = bbands(close, cfg.bb_window, cfg.bb_k);
    ind["bb_upper"] = std::move(bb.upper);
    ind["bb_middle"] = std::move(bb.middle);
    ind["bb_lower"] = std::move(bb.lower);
    ind["bb_width"] = std::move(bb.width);
    auto st = stoch(high, low, close, cfg.stoch_k, cfg.stoch_d);
    ind["stoch_k"] = std::move(st.k);
    ind["stoch_d"] = std::move(st.d);

    FeatureFrame frame;
    frame.dates = ds.dates();
    frame.mask.assign(ds.size(), false);
    for (const auto& [_, s] : ind) {
        for (std::size_t t = 0; t < s.size(); ++t) {
            if (std::isnan(s[t])) frame.mask[t] = true;
        }
    }

    for (const auto& name : group_columns(group, cfg)) {
        if (auto it = ind.find(name); it != ind.end()) {
            frame.columns.push_back(it->second);
        } else if (name == "open") {
            frame.columns.push_back(open);
        } else if (ds.has_column(name)) {
            frame.columns.push_back(ds.column(name));
        } else {
            throw MissingDataError(fmt::format("dataset '{}' lacks column '{}' required by group {}",
                                               ds.asset(), name, group_name(group)));
        }
        frame.names.push_back(name);
    }
    return frame;
}

void write_feature_frame_csv(const FeatureFrame& frame, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
    out << "date";
    for (const auto& n : frame.names) out << ',' << n;
    out << ",mask\n";
    for (std::size_t i = 0; i < frame.rows(); ++i) {
        out << format_date(frame.dates[i]);
        for (const auto& c : frame.columns) {
            if (std::isnan(c[i])) {
                out << ',';
            } else {
                out << ',' << fmt::format("{}", c[i]);
            }
        }
        out << ',' << (frame.mask[i] ? 1 : 0) << '\n';
    }
}

}  // namespace crn
