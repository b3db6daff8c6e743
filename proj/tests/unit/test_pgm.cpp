#include <doctest.h>

#include <cmath>
#include <random>

#include "crn/errors.hpp"
#include "crn/pgm/bayes_net.hpp"
#include "crn/pgm/dbn.hpp"
#include "crn/pgm/discrete.hpp"
#include "crn/pgm/feature_selection.hpp"
#include "crn/pgm/inference.hpp"
#include "crn/synthetic.hpp"
#include "random_models.hpp"

using namespace crn;
using namespace crn::pgm;

namespace {

DiscreteFrame frame_of(std::vector<std::string> names, std::vector<std::vector<int>> data) {
    DiscreteFrame f;
    for (auto& n : names) f.variables.push_back({n, 2, {}});
    f.data = std::move(data);
    return f;
}

std::vector<int> coin_flips(std::size_t n, double p, std::mt19937_64& rng) {
    std::bernoulli_distribution b(p);
    std::vector<int> v(n);
    for (auto& x : v) x = b(rng) ? 1 : 0;
    return v;
}

double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

}  // namespace

TEST_CASE("quantile edges") {
    std::vector<double> u;
    for (int i = 0; i <= 90; ++i) u.push_back(i);
    auto e = quantile_edges(u, 3);
    REQUIRE(e.size() == 2);
    CHECK(e[0] == doctest::Approx(30));
    CHECK(e[1] == doctest::Approx(60));

    DiscreteVariable v{"x", 3, e};
    CHECK(v.bin(0) == 0);
    CHECK(v.bin(29.9) == 0);
    CHECK(v.bin(30) == 1);
    CHECK(v.bin(90) == 2);

    auto flat = quantile_edges({4, 4, 4}, 3);
    CHECK(flat == std::vector<double>{4});
    CHECK_THROWS_AS(quantile_edges({1, 2}, 1), ContractError);
}

TEST_CASE("next-day directions") {
    std::vector<double> c{1, 2, 1};
    auto d = next_day_directions(c);
    CHECK(d == std::vector<int>{kUp, kDown, kUnobserved});
    std::vector<double> tie{5, 5};
    CHECK(next_day_directions(tie)[0] == kDown);
    CHECK(next_day_directions(tie, false)[0] == kUp);
}

TEST_CASE("bin edges depend on training rows only") {
    auto ds = synthetic::random_walk(300, 5).dataset("X");
    auto full = compute_feature_frame(ds, FeatureGroup::OhlcvTi);
    auto head = compute_feature_frame(ds.slice(0, 200), FeatureGroup::OhlcvTi);
    auto rows = training_rows(head, head.rows());
    auto a = fit_discretizer(head, 3, rows);
    auto b = fit_discretizer(full, 3, rows);
    REQUIRE(a.features.size() == b.features.size());
    for (std::size_t i = 0; i < a.features.size(); ++i) CHECK(a.features[i] == b.features[i]);
    for (const auto& f : a.features) {
        for (std::size_t k = 1; k < f.edges.size(); ++k) CHECK(f.edges[k] > f.edges[k - 1]);
    }
}

TEST_CASE("discretize_frame encodes only rows with a known direction") {
    auto ds = synthetic::random_walk(120, 6).dataset("X");
    auto frame = compute_feature_frame(ds, FeatureGroup::Ohlcv);
    auto rows = training_rows(frame, 80);
    auto d = discretize_frame(frame, 3, rows);
    CHECK(d.frame.cols() == 6);
    CHECK(d.frame.variables.back().name == kDirection);
    CHECK(d.source_rows.front() == frame.first_valid());
    CHECK(d.source_rows.back() == frame.rows() - 2);
    for (std::size_t r : d.source_rows) CHECK_FALSE(frame.mask[r]);
}

TEST_CASE("bayes net structure checks") {
    BayesNet net(std::vector<DiscreteVariable>{{"a", 2, {}}, {"b", 2, {}}, {"c", 3, {}}});
    net.set_parents(1, {0});
    net.set_parents(2, {0, 1});
    CHECK(net.acyclic());
    CHECK(net.parent_configs(2) == 4);
    CHECK(net.topological_order() == std::vector<std::size_t>{0, 1, 2});
    std::vector<int> assignment{1, 0, 2};
    CHECK(net.config_index(2, assignment) == 2);  // last parent varies fastest
    net.set_parents(0, {2});
    CHECK_FALSE(net.acyclic());
    CHECK_THROWS_AS(net.topological_order(), ContractError);
    CHECK_THROWS_AS(net.index_of("zzz"), LookupError);
}

TEST_CASE("cpt validation") {
    BayesNet net(std::vector<DiscreteVariable>{{"a", 2, {}}});
    CHECK_THROWS_AS(net.set_cpt(0, {0.5, 0.5, 0.0}), ShapeError);
    net.set_cpt(0, {0.6, 0.5});
    CHECK_THROWS(net.validate());
    net.set_cpt(0, {0.5, 0.5});
    CHECK_NOTHROW(net.validate());
}

TEST_CASE("structure learning") {
    std::mt19937_64 rng(11);
    SUBCASE("independent columns stay unconnected") {
        auto f = frame_of({"x", "direction"}, {coin_flips(1000, 0.5, rng), coin_flips(1000, 0.5, rng)});
        CHECK(learn_structure(f, kDirection).edge_count() == 0);
    }
    SUBCASE("a deterministic copy is linked") {
        auto x = coin_flips(1000, 0.5, rng);
        auto f = frame_of({"x", "direction"}, {x, x});
        auto net = learn_structure(f, kDirection);
        CHECK((net.has_edge(0, 1) || net.has_edge(1, 0)));
    }
    SUBCASE("single variable") {
        auto f = frame_of({"direction"}, {coin_flips(100, 0.5, rng)});
        CHECK(learn_structure(f, kDirection).edge_count() == 0);
    }
    SUBCASE("too few rows") {
        auto f = frame_of({"x", "direction"}, {coin_flips(10, 0.5, rng), coin_flips(10, 0.5, rng)});
        CHECK_THROWS_AS(learn_structure(f, kDirection), InsufficientDataError);
    }
    SUBCASE("deterministic result") {
        std::vector<std::vector<int>> cols;
        auto a = coin_flips(500, 0.5, rng);
        cols.push_back(a);
        auto b = a;
        std::bernoulli_distribution flip(0.2);
        for (auto& v : b) v = flip(rng) ? 1 - v : v;
        cols.push_back(b);
        cols.push_back(coin_flips(500, 0.3, rng));
        auto f = frame_of({"p", "q", "direction"}, cols);
        auto n1 = learn_structure(f, kDirection);
        auto n2 = learn_structure(f, kDirection);
        for (std::size_t v = 0; v < 3; ++v) CHECK(n1.parents(v) == n2.parents(v));
    }
}

TEST_CASE("laplace-smoothed cpts") {
    SUBCASE("deterministic child") {
        std::vector<int> x(100);
        for (std::size_t i = 0; i < 100; ++i) x[i] = i < 50 ? 0 : 1;
        auto f = frame_of({"x", "y"}, {x, x});
        BayesNet s(f.variables);
        s.set_parents(1, {0});
        auto net = fit_cpts(s, f);
        // 50 rows per parent state.
        CHECK(net.cpt(1)[1] == doctest::Approx(1.0 / 52));
        CHECK(net.cpt(1)[0] == doctest::Approx(51.0 / 52));

        // All 100 rows share x = 1.
        std::vector<int> ones(100, 1);
        auto g = frame_of({"x", "y"}, {ones, ones});
        auto net2 = fit_cpts(s, g);
        CHECK(net2.cpt(1)[3] == doctest::Approx(101.0 / 102));
        // x = 0 never occurs: uniform row.
        CHECK(net2.cpt(1)[0] == doctest::Approx(0.5));
        CHECK(net2.cpt(1)[1] == doctest::Approx(0.5));
    }
    SUBCASE("root node 60/40") {
        std::vector<int> x(100, 0);
        for (std::size_t i = 0; i < 40; ++i) x[i] = 1;
        auto f = frame_of({"x"}, {x});
        auto net = fit_cpts(BayesNet(f.variables), f);
        CHECK(net.cpt(0)[0] == doctest::Approx(61.0 / 102));
        CHECK(net.cpt(0)[1] == doctest::Approx(41.0 / 102));
    }
    SUBCASE("random frames give normalized rows") {
        std::mt19937_64 rng(3);
        for (int trial = 0; trial < 20; ++trial) {
            auto truth = testing::random_bayes_net(5, 3, 2, rng);
            DiscreteFrame f;
            f.variables = truth.variables();
            f.data.assign(5, std::vector<int>(200));
            std::uniform_int_distribution<int> any(0, 2);
            for (std::size_t v = 0; v < 5; ++v) {
                for (auto& x : f.data[v]) x = any(rng) % truth.cardinality(v);
            }
            auto net = fit_cpts(truth, f);
            CHECK_NOTHROW(net.validate(1e-9));
        }
    }
}

TEST_CASE("variable elimination") {
    SUBCASE("uniform cpts give a uniform posterior") {
        BayesNet net(std::vector<DiscreteVariable>{{"a", 2, {}}, {"b", 3, {}}});
        net.set_parents(1, {0});
        net.set_cpt(0, {0.5, 0.5});
        net.set_cpt(1, std::vector<double>(6, 1.0 / 3));
        auto p = infer(net, {{0, 1}}, 1);
        for (double x : p) CHECK(x == doctest::Approx(1.0 / 3));
    }
    SUBCASE("deterministic child is a point mass") {
        BayesNet net(std::vector<DiscreteVariable>{{"a", 2, {}}, {"b", 2, {}}});
        net.set_parents(1, {0});
        net.set_cpt(0, {0.3, 0.7});
        net.set_cpt(1, {1, 0, 0, 1});
        auto p = infer(net, {{0, 1}}, 1);
        CHECK(p[0] == doctest::Approx(0));
        CHECK(p[1] == doctest::Approx(1));
    }
    SUBCASE("errors") {
        BayesNet net(std::vector<DiscreteVariable>{{"a", 2, {}}, {"b", 2, {}}});
        net.set_parents(1, {0});
        net.set_cpt(0, {1.0, 0.0});
        net.set_cpt(1, {0.5, 0.5, 0.5, 0.5});
        CHECK_THROWS_AS(infer(net, {{0, 1}}, 1), ZeroProbabilityError);
        CHECK_THROWS_AS(infer(net, {{1, 1}}, 1), ContractError);
        CHECK_THROWS_AS(infer(net, {}, 7), LookupError);
    }
    SUBCASE("random 8-node networks match the oracle") {
        std::mt19937_64 rng(8);
        for (int trial = 0; trial < 50; ++trial) {
            auto net = testing::random_bayes_net(8, 3, 3, rng);
            std::uniform_int_distribution<std::size_t> pick(0, 7);
            const auto q = pick(rng);
            auto ev = testing::random_evidence(net, q, rng);
            CHECK(max_diff(infer(net, ev, q), brute_force_joint(net, ev, q)) < 1e-9);
        }
    }
    SUBCASE("oracle refuses huge joints") {
        std::vector<DiscreteVariable> vars;
        for (int i = 0; i < 21; ++i) vars.push_back({"v" + std::to_string(i), 2, {}});
        BayesNet net(vars);
        for (std::size_t v = 0; v < 21; ++v) net.set_cpt(v, {0.5, 0.5});
        CHECK_THROWS_AS(brute_force_joint(net, {}, 0), OracleLimitError);
        CHECK(infer(net, {}, 0)[0] == doctest::Approx(0.5));
    }
}

TEST_CASE("property: infer equals brute force on random networks") {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<std::size_t> size(1, 12);
    for (int trial = 0; trial < 200; ++trial) {
        auto net = testing::random_bayes_net(size(rng), 2, 3, rng);
        std::uniform_int_distribution<std::size_t> pick(0, net.size() - 1);
        const auto q = pick(rng);
        auto ev = testing::random_evidence(net, q, rng);
        auto p = infer(net, ev, q);
        CHECK(max_diff(p, brute_force_joint(net, ev, q)) < 1e-9);
        CHECK(p[0] + p[1] == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("bayes net json round trip") {
    std::mt19937_64 rng(1);
    auto net = testing::random_bayes_net(6, 3, 2, rng);
    auto back = bayes_net_from_json(to_json(net));
    for (std::size_t v = 0; v < net.size(); ++v) {
        CHECK(back.parents(v) == net.parents(v));
        CHECK(back.cpt(v) == net.cpt(v));
    }
}

TEST_CASE("dbn filtering") {
    SUBCASE("uniform model gives one half") {
        std::mt19937_64 rng(1);
        auto m = testing::random_dbn(2, 5, rng);
        m.prior.set_cpt(0, {0.5, 0.5});
        m.prior.set_cpt(1, std::vector<double>(m.prior.parent_configs(1) * 2, 0.5));
        for (auto& t : m.transition_cpts) std::fill(t.begin(), t.end(), 0.5);
        std::vector<DbnSlice> w(5, DbnSlice{kUnobserved, 1});
        auto p = dbn_predict(m, w);
        CHECK(p.p_up == doctest::Approx(0.5));
        CHECK(p.p_down == doctest::Approx(0.5));
    }
    SUBCASE("persistent chain with an all-up window") {
        DbnModel m;
        m.variables = {{"direction", 2, {}}};
        m.prior = BayesNet(m.variables);
        m.prior.set_cpt(0, {0.5, 0.5});
        m.transition_parents = {{{0, 1}}};
        m.transition_cpts = {{0.9, 0.1, 0.1, 0.9}};
        m.window = 5;
        std::vector<DbnSlice> w(4, DbnSlice{kUp});
        w.push_back(DbnSlice{kUnobserved});
        auto p = dbn_predict(m, w);
        CHECK(p.p_up == doctest::Approx(0.9));
        CHECK(p.p_down == doctest::Approx(0.1));
        w.pop_back();
        CHECK_THROWS_AS(dbn_predict(m, w), ContractError);
    }
    SUBCASE("forward filtering matches the unrolled oracle") {
        std::mt19937_64 rng(77);
        for (int trial = 0; trial < 60; ++trial) {
            std::uniform_int_distribution<std::size_t> vars(1, 4), slices(1, 5);
            const auto n = vars(rng);
            const auto w = slices(rng);
            auto m = testing::random_dbn(n, w, rng);
            std::vector<DbnSlice> window;
            Evidence ev;
            std::bernoulli_distribution b(0.5);
            for (std::size_t s = 0; s < w; ++s) {
                DbnSlice slice(n);
                for (std::size_t v = 0; v < n; ++v) {
                    slice[v] = b(rng) ? 1 : 0;
                    if (v == 0 && (s + 1 == w || b(rng))) slice[v] = kUnobserved;
                    if (slice[v] != kUnobserved) ev[s * n + v] = slice[v];
                }
                window.push_back(slice);
            }
            auto p = dbn_predict(m, window);
            auto oracle = brute_force_joint(m.unroll(w), ev, (w - 1) * n);
            CHECK(std::abs(p.p_up - oracle[kUp]) < 1e-9);
            CHECK(p.p_up + p.p_down == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("dbn fitting") {
    std::mt19937_64 rng(5);
    SUBCASE("noise features leave the class prior") {
        auto f = frame_of({"a", "b", "direction"},
                          {coin_flips(2000, 0.5, rng), coin_flips(2000, 0.5, rng), coin_flips(2000, 0.7, rng)});
        auto m = fit_dbn(f);
        const auto d = m.direction;
        CHECK(m.prior.parents(d).empty());
        CHECK(m.prior.cpt(d)[kUp] == doctest::Approx(0.7).epsilon(0.05));
        CHECK_NOTHROW(m.validate());
    }
    SUBCASE("persistent direction chain") {
        std::vector<int> dir{1};
        std::bernoulli_distribution stay(0.9);
        for (int i = 1; i < 3000; ++i) dir.push_back(stay(rng) ? dir.back() : 1 - dir.back());
        auto f = frame_of({"direction"}, {dir});
        auto m = fit_dbn(f);
        // P(Up_t | Up_{t-1}): row 1, column Up.
        CHECK(m.transition_cpts[0][3] == doctest::Approx(0.9).epsilon(0.03));
    }
    SUBCASE("single feature frame has few edges") {
        auto f = frame_of({"a", "direction"}, {coin_flips(500, 0.5, rng), coin_flips(500, 0.5, rng)});
        CHECK(fit_dbn(f).edge_count() <= 3);
    }
    SUBCASE("too few rows") {
        auto f = frame_of({"direction"}, {coin_flips(20, 0.5, rng)});
        CHECK_THROWS_AS(fit_dbn(f), InsufficientDataError);
    }
    SUBCASE("json round trip") {
        auto f = frame_of({"a", "direction"}, {coin_flips(500, 0.5, rng), coin_flips(500, 0.5, rng)});
        auto m = fit_dbn(f);
        auto back = dbn_from_json(to_json(m));
        CHECK(back.transition_parents == m.transition_parents);
        CHECK(back.transition_cpts == m.transition_cpts);
        std::vector<DbnSlice> w(5, DbnSlice{1, kUnobserved});
        CHECK(dbn_predict(back, w).p_up == dbn_predict(m, w).p_up);
    }
}

TEST_CASE("predictions do not depend on absolute dates") {
    auto ds = synthetic::planted_signal(400, 0.85, 3).dataset("X");
    PgmConfig cfg;
    auto fitted = fit_dbn(ds, FeatureGroup::OhlcvMacroTweets, cfg);
    auto frame = compute_feature_frame(ds, FeatureGroup::OhlcvMacroTweets);
    auto shifted = frame;
    for (auto& d : shifted.dates) d += std::chrono::days(1000);
    auto a = predict_directions(fitted, frame);
    auto b = predict_directions(fitted, shifted);
    REQUIRE(a.size() == b.size());
    std::size_t defined = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        REQUIRE(a[i].has_value() == b[i].has_value());
        if (!a[i]) continue;
        ++defined;
        CHECK(a[i]->p_up == b[i]->p_up);
        CHECK(a[i]->p_up + a[i]->p_down == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK(defined == frame.rows() - frame.first_valid() - 4);
}

TEST_CASE("group scoring") {
    std::mt19937_64 rng(9);
    SUBCASE("leaked direction scores perfectly") {
        auto dir = coin_flips(1000, 0.5, rng);
        auto f = frame_of({"leak", "direction"}, {dir, dir});
        auto fit = f.slice(0, 800), val = f.slice(800, 1000);
        CHECK(evaluate_discrete(fit, val).accuracy == doctest::Approx(1.0));
    }
    SUBCASE("noise scores near one half") {
        auto f = frame_of({"a", "b", "direction"},
                          {coin_flips(2000, 0.5, rng), coin_flips(2000, 0.5, rng), coin_flips(2000, 0.5, rng)});
        auto s = evaluate_discrete(f.slice(0, 1000), f.slice(1000, 2000));
        CHECK(s.accuracy == doctest::Approx(0.5).epsilon(0.1));
    }
    SUBCASE("a strongly informative feature") {
        auto dir = coin_flips(1000, 0.5, rng);
        auto sig = dir;
        std::bernoulli_distribution noise(0.02);
        for (auto& v : sig) v = noise(rng) ? 1 - v : v;
        auto f = frame_of({"sig", "direction"}, {sig, dir});
        CHECK(evaluate_discrete(f.slice(0, 800), f.slice(800, 1000)).accuracy > 0.95);
    }
    SUBCASE("single-class validation is flagged") {
        std::vector<int> ups(300, 1);
        auto f = frame_of({"a", "direction"}, {coin_flips(300, 0.5, rng), ups});
        auto s = evaluate_discrete(f.slice(0, 200), f.slice(200, 300));
        CHECK(s.degenerate_validation);
        CHECK(s.accuracy == doctest::Approx(1.0));
    }
}

TEST_CASE("group selection") {
    SUBCASE("deterministic") {
        auto ds = synthetic::planted_signal(500, 0.85, 2).dataset("X");
        auto a = select_feature_group(ds);
        auto b = select_feature_group(ds);
        CHECK(a.group == b.group);
        CHECK(a.accuracies == b.accuracies);
        CHECK(a.accuracies.size() == 4);
    }
    SUBCASE("ties go to the smallest group") {
        // A flat close makes every direction Down, so every group scores 1.
        auto ds = synthetic::random_walk(400, 4).dataset("X");
        auto cols = ds.columns();
        for (const char* c : {"open", "high", "low", "close"}) cols[c].assign(ds.size(), 10.0);
        Dataset flat("X", ds.dates(), cols);
        auto sel = select_feature_group(flat);
        for (const auto& [g, acc] : sel.accuracies) CHECK(acc == doctest::Approx(1.0));
        CHECK(sel.group == FeatureGroup::Ohlcv);
    }
    SUBCASE("planted tweet signal prefers a tweet group") {
        auto ds = synthetic::planted_signal(1000, 0.95, 1).dataset("X");
        auto sel = select_feature_group(ds);
        CHECK((sel.group == FeatureGroup::OhlcvMacroTweets || sel.group == FeatureGroup::All));
    }
}

TEST_CASE("fitted dbn json round trip") {
    auto ds = synthetic::planted_signal(300, 0.85, 8).dataset("X");
    auto fitted = fit_dbn(ds, FeatureGroup::Ohlcv);
    auto back = fitted_dbn_from_json(to_json(fitted));
    CHECK(back.group == fitted.group);
    REQUIRE(back.discretizer.features.size() == fitted.discretizer.features.size());
    for (std::size_t i = 0; i < back.discretizer.features.size(); ++i) {
        CHECK(back.discretizer.features[i] == fitted.discretizer.features[i]);
    }
}
