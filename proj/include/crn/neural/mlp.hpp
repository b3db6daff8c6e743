#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace crn::neural {

enum class Activation { Tanh, Relu, Linear };

std::string_view activation_name(Activation a);
Activation parse_activation(std::string_view name);

/// Layer sizes from input to output, one activation per weight layer.
struct NetSpec {
    std::vector<int> sizes;
    std::vector<Activation> activations;
    std::uint64_t seed = 0;

    void validate() const;
    /// Hidden layers share `hidden_activation`; the output layer uses `output`.
    static NetSpec make(int inputs, std::vector<int> hidden, int outputs, Activation hidden_activation,
                        Activation output, std::uint64_t seed);
};

/// Where one layer's weights (row-major, out x in) and biases sit in the flat vector.
struct LayerSlot {
    std::size_t weights = 0;
    std::size_t bias = 0;
    int rows = 0;
    int cols = 0;
};

/// Dense feed-forward network over a flat parameter vector.
/// Batches are column-major: one sample per column.
class Mlp {
public:
    Mlp() = default;
    explicit Mlp(NetSpec spec);

    struct Cache {
        std::vector<Eigen::MatrixXd> inputs;  // input of each layer
        std::vector<Eigen::MatrixXd> outputs;  // activated output of each layer
        bool empty() const { return inputs.empty(); }
    };

    struct Gradients {
        Eigen::VectorXd params;  // summed over the batch
        Eigen::MatrixXd input;   // d loss / d input, per sample
    };

    const NetSpec& spec() const { return spec_; }
    const std::vector<LayerSlot>& layout() const { return layout_; }
    std::size_t input_size() const { return static_cast<std::size_t>(spec_.sizes.front()); }
    std::size_t output_size() const { return static_cast<std::size_t>(spec_.sizes.back()); }
    std::size_t parameter_count() const { return static_cast<std::size_t>(params_.size()); }

    const Eigen::VectorXd& params() const { return params_; }
    Eigen::VectorXd& params() { return params_; }

    /// Throws ShapeError when the input height differs from the input size.
    Eigen::MatrixXd forward(const Eigen::MatrixXd& input, Cache* cache = nullptr) const;
    Eigen::VectorXd forward(const Eigen::VectorXd& input) const;

    /// Reverse-mode gradient of a scalar loss whose gradient with respect to
    /// the outputs is `upstream`. Throws ContractError without a forward cache.
    Gradients backward(const Cache& cache, const Eigen::MatrixXd& upstream) const;

private:
    NetSpec spec_;
    std::vector<LayerSlot> layout_;
    Eigen::VectorXd params_;
};

nlohmann::json to_json(const Mlp& net);
Mlp mlp_from_json(const nlohmann::json& j);

}  // namespace crn::neural
