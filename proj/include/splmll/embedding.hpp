#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "splmll/dataset_io.hpp"

namespace splmll {

enum class Variant { linear, mlp };

std::string_view to_string(Variant v);
Variant parse_variant(std::string_view text);

inline constexpr double kDefaultLeakySlope = 0.01;
inline const std::vector<Eigen::Index> kDefaultHiddenWidths{512, 64};

struct DenseLayer {
    Matrix weight;   // fan_in x fan_out
    RowVector bias;  // fan_out
};

// f(.; theta). The linear variant is a single affine layer; the MLP variant
// stacks leaky-ReLU hidden layers and ends in an affine output layer.
struct EmbeddingParams {
    Variant variant = Variant::linear;
    double leaky_slope = kDefaultLeakySlope;
    std::vector<DenseLayer> layers;

    Eigen::Index input_dim() const { return layers.front().weight.rows(); }
    Eigen::Index output_dim() const { return layers.back().weight.cols(); }
    std::vector<Eigen::Index> hidden_widths() const;
    bool all_finite() const;
    void validate() const;
};

struct EmbeddingGradients {
    std::vector<DenseLayer> layers;

    static EmbeddingGradients zeros_like(const EmbeddingParams& params);
    bool all_finite() const;
};

// Inputs and pre-activations of each layer from one forward pass.
struct ForwardCache {
    std::vector<Matrix> inputs;           // inputs[l] feeds layer l
    std::vector<Matrix> preactivations;  // hidden layers only
};

struct ForwardResult {
    Matrix output;
    ForwardCache cache;
};

EmbeddingParams init_params(Variant variant, Eigen::Index input_dim, Eigen::Index num_labels, std::uint64_t seed,
                            const std::vector<Eigen::Index>& hidden_widths = kDefaultHiddenWidths,
                            double leaky_slope = kDefaultLeakySlope);

inline double leaky_relu(double x, double slope) { return x >= 0.0 ? x : slope * x; }
// Taken as 1 at exactly zero.
inline double leaky_relu_derivative(double x, double slope) { return x >= 0.0 ? 1.0 : slope; }

ForwardResult forward(const EmbeddingParams& params, const Matrix& features);
// Forward pass without retaining the cache.
Matrix embed(const EmbeddingParams& params, const Matrix& features);

EmbeddingGradients backward(const EmbeddingParams& params, const ForwardCache& cache, const Matrix& output_grad);

EmbeddingParams sgd_step(const EmbeddingParams& params, const EmbeddingGradients& grads, double learning_rate);
void sgd_update(EmbeddingParams& params, const EmbeddingGradients& grads, double learning_rate);

}  // namespace splmll
