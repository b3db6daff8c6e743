#include <doctest.h>

#include <cmath>
#include <random>

#include "crn/errors.hpp"
#include "crn/indicators.hpp"
#include "crn/synthetic.hpp"

using namespace crn;

namespace {

bool undefined(double v) { return std::isnan(v); }

std::vector<double> noisy_series(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> step(0.0, 1.0);
    std::vector<double> x{100.0};
    for (std::size_t i = 1; i < n; ++i) x.push_back(x.back() + step(rng));
    return x;
}

}  // namespace

TEST_CASE("sma") {
    std::vector<double> x{1, 2, 3, 4};
    auto s = sma(x, 3);
    CHECK(undefined(s[0]));
    CHECK(undefined(s[1]));
    CHECK(s[2] == doctest::Approx(2));
    CHECK(s[3] == doctest::Approx(3));

    std::vector<double> one{1};
    CHECK(undefined(sma(one, 2)[0]));

    std::vector<double> c(20, 7.5);
    for (double v : sma(c, 5)) {
        if (!undefined(v)) CHECK(v == doctest::Approx(7.5));
    }
}

TEST_CASE("ema") {
    std::vector<double> x{1, 3, 5};
    auto e = ema(x, 2);
    CHECK(undefined(e[0]));
    CHECK(e[1] == doctest::Approx(2));
    CHECK(e[2] == doctest::Approx(4));

    std::vector<double> c(30, 3.0);
    auto ec = ema(c, 10);
    CHECK(ec.back() == doctest::Approx(3.0));

    // Leading NaNs are skipped, so an EMA of an SMA is defined.
    auto nested = ema(sma(c, 5), 3);
    CHECK(undefined(nested[5]));
    CHECK(nested[6] == doctest::Approx(3.0));
}

TEST_CASE("rsi") {
    std::vector<double> up, down, alt;
    for (int i = 0; i < 60; ++i) {
        up.push_back(10.0 + i);
        down.push_back(100.0 - i);
        alt.push_back(i % 2 ? 11.0 : 10.0);
    }
    CHECK(rsi(up).back() == doctest::Approx(100));
    CHECK(rsi(down).back() == doctest::Approx(0));
    CHECK(rsi(alt).back() == doctest::Approx(50).epsilon(0.05));
    auto r = rsi(up, 14);
    CHECK(undefined(r[13]));
    CHECK_FALSE(undefined(r[14]));
}

TEST_CASE("macd") {
    std::vector<double> c(80, 5.0);
    auto m = macd(c);
    CHECK(m.line.back() == doctest::Approx(0));
    CHECK(m.signal.back() == doctest::Approx(0));
    CHECK(m.histogram.back() == doctest::Approx(0));

    std::vector<double> ramp;
    for (int i = 0; i < 200; ++i) ramp.push_back(i);
    auto mr = macd(ramp);
    CHECK(mr.line.back() > 0);
    // Converged: (slow - fast) / 2 lag difference of the two EMAs.
    CHECK(mr.line.back() == doctest::Approx(7.0).epsilon(1e-3));
    CHECK(mr.line[198] == doctest::Approx(mr.line[199]).epsilon(1e-6));

    std::vector<double> long_step(80, 1.0);
    for (std::size_t i = 40; i < 80; ++i) long_step[i] = 2.0;
    auto ms = macd(long_step);
    bool positive = false, crossed = false;
    for (std::size_t i = 40; i < 80; ++i) {
        if (undefined(ms.histogram[i])) continue;
        if (ms.histogram[i] > 0) positive = true;
        if (positive && ms.histogram[i] < 0) crossed = true;
    }
    CHECK(positive);
    CHECK(crossed);
}

TEST_CASE("obv") {
    std::vector<double> c{1, 2, 2, 1}, v{10, 10, 10, 10};
    CHECK(obv(c, v) == std::vector<double>{0, 10, 10, 0});
    std::vector<double> flat(5, 3.0), vol(5, 4.0);
    CHECK(obv(flat, vol) == std::vector<double>(5, 0.0));
    std::vector<double> one{1}, onev{2};
    CHECK(obv(one, onev) == std::vector<double>{0});
    std::vector<double> shorter{1, 2};
    CHECK_THROWS_AS(obv(c, shorter), ShapeError);
}

TEST_CASE("accumulation/distribution") {
    std::vector<double> h{2, 2}, l{0, 0}, c{2, 0}, v{10, 10};
    auto a = ad(h, l, c, v);
    CHECK(a[0] == doctest::Approx(10));
    CHECK(a[1] == doctest::Approx(0));
    std::vector<double> flat{1, 1};
    auto z = ad(flat, flat, flat, v);  // zero range contributes nothing
    CHECK(z[1] == doctest::Approx(0));
}

TEST_CASE("bollinger bands") {
    std::vector<double> x{1, 2, 3, 4, 5};
    auto b = bbands(x, 5, 2.0);
    const double sd = std::sqrt(2.0);  // population std of 1..5
    CHECK(b.middle[4] == doctest::Approx(3));
    CHECK(b.upper[4] == doctest::Approx(3 + 2 * sd));
    CHECK(b.lower[4] == doctest::Approx(3 - 2 * sd));
    CHECK(b.width[4] == doctest::Approx(4 * sd));
    CHECK(undefined(b.middle[3]));
}

TEST_CASE("natr and stochastic") {
    std::vector<double> h(30, 11), l(30, 9), c(30, 10);
    auto n = natr(h, l, c, 14);
    CHECK(n.back() == doctest::Approx(20));

    auto s = stoch(h, l, c, 14, 3);
    CHECK(s.k.back() == doctest::Approx(50));
    CHECK(s.d.back() == doctest::Approx(50));
    std::vector<double> flat(30, 1.0);
    CHECK(stoch(flat, flat, flat).k.back() == doctest::Approx(50));
}

TEST_CASE("window larger than the series is all undefined") {
    std::vector<double> x{1, 2, 3};
    for (double v : sma(x, 10)) CHECK(undefined(v));
    for (double v : ema(x, 10)) CHECK(undefined(v));
    for (double v : rsi(x, 10)) CHECK(undefined(v));
}

TEST_CASE("indicators never look ahead") {
    // The value at t computed on a prefix equals the value on the full series.
    auto x = noisy_series(120, 9);
    auto full_sma = sma(x, 10);
    auto full_ema = ema(x, 10);
    auto full_rsi = rsi(x, 14);
    auto full_macd = macd(x);
    for (std::size_t t : {20u, 45u, 80u, 119u}) {
        std::span<const double> prefix(x.data(), t + 1);
        CHECK(sma(prefix, 10)[t] == doctest::Approx(full_sma[t]));
        CHECK(ema(prefix, 10)[t] == doctest::Approx(full_ema[t]));
        CHECK(rsi(prefix, 14)[t] == doctest::Approx(full_rsi[t]));
        if (t >= 40) CHECK(macd(prefix).histogram[t] == doctest::Approx(full_macd.histogram[t]));
    }
}

TEST_CASE("feature groups") {
    CHECK(group_columns(FeatureGroup::Ohlcv).size() == 5);
    CHECK(group_columns(FeatureGroup::OhlcvTi).size() == 15);
    CHECK(group_columns(FeatureGroup::OhlcvMacroTweets).size() == 11);
    CHECK(group_columns(FeatureGroup::All).size() == 21);
    for (auto g : all_groups()) CHECK(parse_group(group_name(g)) == g);
    CHECK_THROWS_AS(parse_group("OHLCV+NEWS"), ConfigError);
}

TEST_CASE("feature frames share the warm-up mask across groups") {
    auto ds = synthetic::random_walk(150, 2).dataset("X");
    auto a = compute_feature_frame(ds, FeatureGroup::Ohlcv);
    auto b = compute_feature_frame(ds, FeatureGroup::All);
    CHECK(a.mask == b.mask);
    CHECK(a.rows() == 150);
    CHECK(b.cols() == 21);
    const auto first = b.first_valid();
    CHECK(first > 0);
    CHECK(first < 60);
    for (std::size_t i = first; i < b.rows(); ++i) {
        CHECK_FALSE(b.mask[i]);
        for (double v : b.row(i)) CHECK(std::isfinite(v));
    }
    CHECK_THROWS_AS(a.column("rsi"), LookupError);
}

TEST_CASE("macro group requires macro columns") {
    auto ds = synthetic::uptrend(80, 0.01, 1).dataset("X");
    CHECK_THROWS(compute_feature_frame(ds, FeatureGroup::OhlcvMacroTweets));
}
