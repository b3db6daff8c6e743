#include "crn/neural/mlp.hpp"

#include <cmath>
#include <random>

#include <fmt/format.h>

#include "crn/errors.hpp"

namespace crn::neural {

std::string_view activation_name(Activation a) {
    switch (a) {
        case Activation::Tanh: return "tanh";
        case Activation::Relu: return "relu";
        case Activation::Linear: return "linear";
    }
    return "";
}

Activation parse_activation(std::string_view name) {
    for (auto a : {Activation::Tanh, Activation::Relu, Activation::Linear}) {
        if (activation_name(a) == name) return a;
    }
    throw ConfigError(fmt::format("unknown activation '{}'", name));
}

void NetSpec::validate() const {
    if (sizes.size() < 2) throw ConfigError("a network needs at least one layer");
    if (activations.size() != sizes.size() - 1) throw ConfigError("one activation per layer is required");
    for (int s : sizes) {
        if (s < 1) throw ConfigError("layer sizes must be positive");
    }
}

NetSpec NetSpec::make(int inputs, std::vector<int> hidden, int outputs, Activation hidden_activation,
                      Activation output, std::uint64_t seed) {
    NetSpec s;
    s.sizes.push_back(inputs);
    for (int h : hidden) {
        s.sizes.push_back(h);
        s.activations.push_back(hidden_activation);
    }
    s.sizes.push_back(outputs);
    s.activations.push_back(output);
    s.seed = seed;
    return s;
}

Mlp::Mlp(NetSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    std::size_t offset = 0;
    for (std::size_t l = 0; l + 1 < spec_.sizes.size(); ++l) {
        LayerSlot slot;
        slot.rows = spec_.sizes[l + 1];
        slot.cols = spec_.sizes[l];
        slot.weights = offset;
        offset += static_cast<std::size_t>(slot.rows) * static_cast<std::size_t>(slot.cols);
        slot.bias = offset;
        offset += static_cast<std::size_t>(slot.rows);
        layout_.push_back(slot);
    }
    params_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(offset));

    // Xavier-uniform for tanh/linear layers, He-normal for relu; zero biases.
    std::mt19937_64 rng(spec_.seed);
    for (std::size_t l = 0; l < layout_.size(); ++l) {
        const auto& s = layout_[l];
        const auto n = static_cast<std::size_t>(s.rows) * static_cast<std::size_t>(s.cols);
        if (spec_.activations[l] == Activation::Relu) {
            std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / s.cols));
            for (std::size_t i = 0; i < n; ++i) params_[static_cast<Eigen::Index>(s.weights + i)] = dist(rng);
        } else {
            const double limit = std::sqrt(6.0 / (s.rows + s.cols));
            std::uniform_real_distribution<double> dist(-limit, limit);
            for (std::size_t i = 0; i < n; ++i) params_[static_cast<Eigen::Index>(s.weights + i)] = dist(rng);
        }
    }
}

namespace {

using RowMajorMap = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using RowMajorMapMut = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

void activate(Activation a, Eigen::MatrixXd& z) {
    switch (a) {
        // Eigen's packet exp is vectorized for double while tanh is scalar; this form saturates cleanly.
        case Activation::Tanh: z = 1.0 - 2.0 / ((2.0 * z.array()).exp() + 1.0); break;
        case Activation::Relu: z = z.array().max(0.0); break;
        case Activation::Linear: break;
    }
}

}  // namespace

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& input, Cache* cache) const {
    if (input.rows() != static_cast<Eigen::Index>(input_size())) {
        throw ShapeError(fmt::format("network expects {} inputs, got {}", input_size(), input.rows()));
    }
    if (cache) {
        cache->inputs.clear();
        cache->outputs.clear();
    }
    Eigen::MatrixXd x = input;
    for (std::size_t l = 0; l < layout_.size(); ++l) {
        const auto& s = layout_[l];
        RowMajorMap w(params_.data() + s.weights, s.rows, s.cols);
        Eigen::Map<const Eigen::VectorXd> b(params_.data() + s.bias, s.rows);
        Eigen::MatrixXd z = w * x;
        z.colwise() += b;
        activate(spec_.activations[l], z);
        if (cache) {
            cache->inputs.push_back(std::move(x));
            cache->outputs.push_back(z);
        }
        x = std::move(z);
    }
    return x;
}

Eigen::VectorXd Mlp::forward(const Eigen::VectorXd& input) const {
    Eigen::MatrixXd out = forward(Eigen::MatrixXd(input), nullptr);
    return out.col(0);
}

Mlp::Gradients Mlp::backward(const Cache& cache, const Eigen::MatrixXd& upstream) const {
    if (cache.empty() || cache.inputs.size() != layout_.size()) {
        throw ContractError("backward() needs the cache of a forward pass");
    }
    if (upstream.rows() != static_cast<Eigen::Index>(output_size()) ||
        upstream.cols() != cache.outputs.back().cols()) {
        throw ShapeError("upstream gradient does not match the network output");
    }
    Gradients g;
    g.params = Eigen::VectorXd::Zero(params_.size());
    Eigen::MatrixXd delta = upstream;
    for (std::size_t l = layout_.size(); l-- > 0;) {
        const auto& s = layout_[l];
        const auto& y = cache.outputs[l];
        switch (spec_.activations[l]) {
            case Activation::Tanh: delta = delta.array() * (1.0 - y.array().square()); break;
            case Activation::Relu: delta = delta.array() * (y.array() > 0.0).cast<double>(); break;
            case Activation::Linear: break;
        }
        RowMajorMapMut gw(g.params.data() + s.weights, s.rows, s.cols);
        gw.noalias() = delta * cache.inputs[l].transpose();
        Eigen::Map<Eigen::VectorXd>(g.params.data() + s.bias, s.rows) = delta.rowwise().sum();
        RowMajorMap w(params_.data() + s.weights, s.rows, s.cols);
        delta = w.transpose() * delta;
    }
    g.input = std::move(delta);
    return g;
}

nlohmann::json to_json(const Mlp& net) {
    nlohmann::json layout = nlohmann::json::array();
    for (const auto& s : net.layout()) {
        layout.push_back({{"weights_offset", s.weights}, {"bias_offset", s.bias}, {"rows", s.rows}, {"cols", s.cols}});
    }
    std::vector<std::string> acts;
    for (auto a : net.spec().activations) acts.emplace_back(activation_name(a));
    std::vector<double> params(net.params().data(), net.params().data() + net.params().size());
    return {{"format", "crn-mlp"},
            {"version", 1},
            {"seed", net.spec().seed},
            {"sizes", net.spec().sizes},
            {"activations", acts},
            {"weight_order", "row-major (out x in)"},
            {"layout", layout},
            {"params", params}};
}

Mlp mlp_from_json(const nlohmann::json& j) {
    if (j.at("format") != "crn-mlp" || j.at("version") != 1) throw ConfigError("unsupported checkpoint format");
    NetSpec spec;
    spec.sizes = j.at("sizes").get<std::vector<int>>();
    for (const auto& a : j.at("activations")) spec.activations.push_back(parse_activation(a.get<std::string>()));
    spec.seed = j.at("seed").get<std::uint64_t>();
    Mlp net(spec);
    auto params = j.at("params").get<std::vector<double>>();
    if (params.size() != net.parameter_count()) throw ShapeError("checkpoint parameter count mismatch");
    net.params() = Eigen::Map<const Eigen::VectorXd>(params.data(), static_cast<Eigen::Index>(params.size()));
    return net;
}

}  // namespace crn::neural
