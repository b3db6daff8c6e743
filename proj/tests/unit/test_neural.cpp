#include <doctest.h>

#include <cmath>
#include <random>

#include "crn/errors.hpp"
#include "crn/neural/adam.hpp"
#include "crn/neural/gradient_check.hpp"
#include "crn/neural/mlp.hpp"

using namespace crn;
using namespace crn::neural;

namespace {

// Half squared error against zero: d/dy = y.
double half_square(const Eigen::MatrixXd& y, Eigen::MatrixXd* grad) {
    if (grad) *grad = y;
    return 0.5 * y.squaredNorm();
}

}  // namespace

TEST_CASE("net spec validation") {
    NetSpec s;
    s.sizes = {3};
    CHECK_THROWS_AS(Mlp{s}, ConfigError);
    s.sizes = {3, 2};
    CHECK_THROWS_AS(Mlp{s}, ConfigError);  // missing activation
    s.activations = {Activation::Tanh};
    CHECK_NOTHROW(Mlp{s});
    CHECK(parse_activation("relu") == Activation::Relu);
    CHECK_THROWS_AS(parse_activation("gelu"), ConfigError);
}

TEST_CASE("parameter layout") {
    Mlp net(NetSpec::make(3, {4}, 2, Activation::Tanh, Activation::Linear, 1));
    CHECK(net.parameter_count() == 3 * 4 + 4 + 4 * 2 + 2);
    CHECK(net.layout()[1].weights == 16);
    CHECK(net.layout()[1].bias == 24);
}

TEST_CASE("forward is pure and checks shapes") {
    Mlp net(NetSpec::make(3, {8, 8}, 2, Activation::Relu, Activation::Tanh, 4));
    Eigen::VectorXd x(3);
    x << 0.1, -0.2, 0.3;
    auto a = net.forward(x);
    auto b = net.forward(x);
    CHECK(a == b);
    for (int i = 0; i < 2; ++i) CHECK(std::abs(a[i]) <= 1.0);
    Eigen::VectorXd wrong(4);
    CHECK_THROWS_AS(net.forward(wrong), ShapeError);

    // Batched columns equal single forwards.
    Eigen::MatrixXd batch(3, 2);
    batch.col(0) = x;
    batch.col(1) = -x;
    auto out = net.forward(batch, nullptr);
    CHECK((out.col(0) - a).norm() < 1e-15);
    CHECK((out.col(1) - net.forward(Eigen::VectorXd(-x))).norm() < 1e-15);
}

TEST_CASE("seed fully determines the weights") {
    auto spec = NetSpec::make(5, {16}, 1, Activation::Tanh, Activation::Linear, 42);
    CHECK(Mlp(spec).params() == Mlp(spec).params());
    spec.seed = 43;
    CHECK(Mlp(spec).params() != Mlp(NetSpec::make(5, {16}, 1, Activation::Tanh, Activation::Linear, 42)).params());
}

TEST_CASE("backward needs a cache") {
    Mlp net(NetSpec::make(2, {3}, 1, Activation::Tanh, Activation::Linear, 1));
    Mlp::Cache empty;
    CHECK_THROWS_AS(net.backward(empty, Eigen::MatrixXd::Ones(1, 1)), ContractError);
}

TEST_CASE("gradient check on a small net") {
    Mlp net(NetSpec::make(4, {6, 5}, 3, Activation::Tanh, Activation::Linear, 7));
    Eigen::MatrixXd x = Eigen::MatrixXd::Random(4, 3);
    auto report = gradient_check(net, x, half_square);
    CHECK(report.passed);
    CHECK(report.max_relative_error < 1e-4);
    CHECK(report.relative_errors.size() == net.parameter_count());
}

TEST_CASE("property: gradients match finite differences on random nets") {
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<int> depth(1, 3), width(1, 12), io(1, 6), act(0, 2);
    for (int trial = 0; trial < 20; ++trial) {
        NetSpec s;
        s.sizes.push_back(io(rng));
        const int d = depth(rng);
        for (int l = 0; l < d; ++l) s.sizes.push_back(width(rng));
        s.sizes.push_back(io(rng));
        for (std::size_t l = 0; l + 1 < s.sizes.size(); ++l) s.activations.push_back(static_cast<Activation>(act(rng)));
        s.seed = rng();
        Mlp net(s);
        // Nonzero biases keep relu pre-activations off the kink at exactly 0.
        std::normal_distribution<double> w(0.0, 0.5);
        for (Eigen::Index i = 0; i < net.params().size(); ++i) net.params()[i] = w(rng);
        Eigen::MatrixXd x = Eigen::MatrixXd::Random(s.sizes.front(), 4);
        auto report = gradient_check(net, x, half_square);
        CHECK_MESSAGE(report.passed, "trial " << trial << " max error " << report.max_relative_error);
    }
}

TEST_CASE("input gradients") {
    Mlp net(NetSpec::make(3, {5}, 1, Activation::Tanh, Activation::Linear, 2));
    Eigen::VectorXd x(3);
    x << 0.5, -0.1, 0.2;
    Mlp::Cache cache;
    net.forward(Eigen::MatrixXd(x), &cache);
    auto g = net.backward(cache, Eigen::MatrixXd::Ones(1, 1));
    const double h = 1e-6;
    for (int i = 0; i < 3; ++i) {
        Eigen::VectorXd xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        const double num = (net.forward(xp)[0] - net.forward(xm)[0]) / (2 * h);
        CHECK(g.input(i, 0) == doctest::Approx(num).epsilon(1e-6));
    }
}

TEST_CASE("gradient check refuses big nets") {
    Mlp net(NetSpec::make(200, {64}, 1, Activation::Tanh, Activation::Linear, 1));
    CHECK_THROWS_AS(gradient_check(net, Eigen::MatrixXd::Zero(200, 1), half_square), ContractError);
}

TEST_CASE("adam") {
    Eigen::VectorXd p = Eigen::VectorXd::Zero(3);
    Eigen::VectorXd g(3);
    g << 1.0, -2.0, 0.5;
    Adam opt(3);
    opt.step(p, g, 0.01);
    // The bias-corrected first step moves each coordinate by lr against its gradient sign.
    CHECK(p[0] == doctest::Approx(-0.01).epsilon(1e-6));
    CHECK(p[1] == doctest::Approx(0.01).epsilon(1e-6));
    CHECK(p[2] == doctest::Approx(-0.01).epsilon(1e-6));
    CHECK(opt.steps() == 1);

    Eigen::VectorXd bad = g;
    bad[0] = std::nan("");
    CHECK_THROWS_AS(opt.step(p, bad, 0.01), TrainingError);
    Eigen::VectorXd wrong(2);
    CHECK_THROWS_AS(opt.step(p, wrong, 0.01), ShapeError);
}

TEST_CASE("adam minimizes a quadratic") {
    Eigen::VectorXd p(2);
    p << 3.0, -4.0;
    Adam opt(2);
    for (int i = 0; i < 2000; ++i) opt.step(p, p, 0.05);
    CHECK(p.norm() < 1e-2);
}

TEST_CASE("gradient clipping") {
    Eigen::VectorXd g(2);
    g << 3.0, 4.0;
    clip_grad_norm(g, 1.0);
    CHECK(g.norm() == doctest::Approx(1.0));
    CHECK(g[0] == doctest::Approx(0.6));
    Eigen::VectorXd small(2);
    small << 0.1, 0.1;
    clip_grad_norm(small, 1.0);
    CHECK(small[0] == doctest::Approx(0.1));
}

TEST_CASE("network json round trip") {
    Mlp net(NetSpec::make(3, {4, 4}, 2, Activation::Relu, Activation::Tanh, 5));
    net.params()[0] = 0.123456789012345678;
    auto back = mlp_from_json(to_json(net));
    CHECK(back.params() == net.params());
    CHECK(back.spec().activations == net.spec().activations);
    auto j = to_json(net);
    j["params"].erase(0);
    CHECK_THROWS_AS(mlp_from_json(j), ShapeError);
}
