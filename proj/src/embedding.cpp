#include "splmll/embedding.hpp"

#include <cmath>
#include <random>

#include <fmt/format.h>

#include "splmll/errors.hpp"

namespace splmll {

namespace {

Matrix activate(const Matrix& z, double slope) {
    return z.unaryExpr([slope](double x) { return leaky_relu(x, slope); });
}

void check_congruent(const std::vector<DenseLayer>& a, const std::vector<DenseLayer>& b, const char* what) {
    bool ok = a.size() == b.size();
    for (std::size_t l = 0; ok && l < a.size(); ++l) {
        ok = a[l].weight.rows() == b[l].weight.rows() && a[l].weight.cols() == b[l].weight.cols() &&
             a[l].bias.size() == b[l].bias.size();
    }
    if (!ok) throw ArgumentError(std::string(what) + ": parameter shapes are not congruent");
}

}  // namespace

std::string_view to_string(Variant v) { return v == Variant::linear ? "linear" : "mlp"; }

Variant parse_variant(std::string_view text) {
    if (text == "linear") return Variant::linear;
    if (text == "mlp") return Variant::mlp;
    throw ArgumentError(fmt::format("unknown variant '{}' (expected linear or mlp)", text));
}

std::vector<Eigen::Index> EmbeddingParams::hidden_widths() const {
    std::vector<Eigen::Index> out;
    for (std::size_t l = 0; l + 1 < layers.size(); ++l) out.push_back(layers[l].weight.cols());
    return out;
}

bool EmbeddingParams::all_finite() const {
    for (const auto& layer : layers) {
        if (!layer.weight.allFinite() || !layer.bias.allFinite()) return false;
    }
    return true;
}

void EmbeddingParams::validate() const {
    if (layers.empty()) throw ValidationError("embedding has no layers");
    if (variant == Variant::linear && layers.size() != 1) throw ValidationError("linear embedding must have one layer");
    if (variant == Variant::mlp && layers.size() < 2) throw ValidationError("mlp embedding needs a hidden layer");
    for (std::size_t l = 0; l < layers.size(); ++l) {
        if (layers[l].bias.size() != layers[l].weight.cols()) {
            throw ValidationError(fmt::format("layer {} bias length does not match its width", l + 1));
        }
        if (l > 0 && layers[l].weight.rows() != layers[l - 1].weight.cols()) {
            throw ValidationError(fmt::format("layer {} input width does not match layer {}", l + 1, l));
        }
    }
    if (!(leaky_slope > 0.0 && leaky_slope < 1.0)) throw ValidationError("leaky_slope must lie in (0, 1)");
    if (!all_finite()) throw ValidationError("embedding parameters contain non-finite values");
}

EmbeddingGradients EmbeddingGradients::zeros_like(const EmbeddingParams& params) {
    EmbeddingGradients g;
    for (const auto& layer : params.layers) {
        g.layers.push_back({Matrix::Zero(layer.weight.rows(), layer.weight.cols()), RowVector::Zero(layer.bias.size())});
    }
    return g;
}

bool EmbeddingGradients::all_finite() const {
    for (const auto& layer : layers) {
        if (!layer.weight.allFinite() || !layer.bias.allFinite()) return false;
    }
    return true;
}

EmbeddingParams init_params(Variant variant, Eigen::Index input_dim, Eigen::Index num_labels, std::uint64_t seed,
                            const std::vector<Eigen::Index>& hidden_widths, double leaky_slope) {
    if (input_dim < 1) throw ArgumentError("input dimension must be >= 1");
    if (num_labels < 2) throw ArgumentError("need at least 2 labels");
    std::vector<Eigen::Index> widths{input_dim};
    if (variant == Variant::mlp) {
        if (hidden_widths.empty()) throw ArgumentError("mlp variant needs at least one hidden width");
        for (auto w : hidden_widths) {
            if (w < 1) throw ArgumentError("hidden widths must be >= 1");
            widths.push_back(w);
        }
    }
    widths.push_back(num_labels);

    EmbeddingParams p;
    p.variant = variant;
    p.leaky_slope = leaky_slope;
    std::mt19937_64 rng(seed);
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        const auto fan_in = widths[l];
        const auto fan_out = widths[l + 1];
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        std::uniform_real_distribution<double> uniform(-limit, limit);
        DenseLayer layer{Matrix(fan_in, fan_out), RowVector::Zero(fan_out)};
        for (Eigen::Index i = 0; i < fan_in; ++i)
            for (Eigen::Index j = 0; j < fan_out; ++j) layer.weight(i, j) = uniform(rng);
        p.layers.push_back(std::move(layer));
    }
    p.validate();
    return p;
}

ForwardResult forward(const EmbeddingParams& params, const Matrix& features) {
    if (features.cols() != params.input_dim()) {
        throw ArgumentError(fmt::format("embedding expects {} features, got {}", params.input_dim(), features.cols()));
    }
    ForwardResult r;
    Matrix h = features;
    const auto last = params.layers.size() - 1;
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        const auto& layer = params.layers[l];
        Matrix z = h * layer.weight;
        z.rowwise() += layer.bias;
        r.cache.inputs.push_back(std::move(h));
        if (l == last) {
            r.output = std::move(z);
        } else {
            h = activate(z, params.leaky_slope);
            r.cache.preactivations.push_back(std::move(z));
        }
    }
    return r;
}

Matrix embed(const EmbeddingParams& params, const Matrix& features) {
    if (features.cols() != params.input_dim()) {
        throw ArgumentError(fmt::format("embedding expects {} features, got {}", params.input_dim(), features.cols()));
    }
    Matrix h = features;
    const auto last = params.layers.size() - 1;
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        Matrix z = h * params.layers[l].weight;
        z.rowwise() += params.layers[l].bias;
        h = l == last ? std::move(z) : activate(z, params.leaky_slope);
    }
    return h;
}

EmbeddingGradients backward(const EmbeddingParams& params, const ForwardCache& cache, const Matrix& output_grad) {
    const auto n_layers = params.layers.size();
    if (cache.inputs.size() != n_layers || cache.preactivations.size() + 1 != n_layers) {
        throw ArgumentError("forward cache does not match the parameter layout");
    }
    for (std::size_t l = 0; l < n_layers; ++l) {
        if (cache.inputs[l].cols() != params.layers[l].weight.rows()) {
            throw ArgumentError(fmt::format("forward cache layer {} does not match the parameters", l + 1));
        }
    }
    const auto n = cache.inputs.front().rows();
    if (output_grad.rows() != n || output_grad.cols() != params.output_dim()) {
        throw ArgumentError(fmt::format("output gradient is {}x{}, expected {}x{}", output_grad.rows(),
                                        output_grad.cols(), n, params.output_dim()));
    }

    EmbeddingGradients grads;
    grads.layers.resize(n_layers);
    Matrix delta = output_grad;
    for (std::size_t l = n_layers; l-- > 0;) {
        grads.layers[l].weight = cache.inputs[l].transpose() * delta;
        grads.layers[l].bias = delta.colwise().sum();
        if (l == 0) break;
        const Matrix& z = cache.preactivations[l - 1];
        const double slope = params.leaky_slope;
        delta = (delta * params.layers[l].weight.transpose())
                    .cwiseProduct(z.unaryExpr([slope](double x) { return leaky_relu_derivative(x, slope); }));
    }
    return grads;
}

void sgd_update(EmbeddingParams& params, const EmbeddingGradients& grads, double learning_rate) {
    check_congruent(params.layers, grads.layers, "sgd_update");
    if (!(learning_rate > 0.0)) throw ArgumentError("learning rate must be positive");
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        params.layers[l].weight.noalias() -= learning_rate * grads.layers[l].weight;
        params.layers[l].bias.noalias() -= learning_rate * grads.layers[l].bias;
    }
}

EmbeddingParams sgd_step(const EmbeddingParams& params, const EmbeddingGradients& grads, double learning_rate) {
    EmbeddingParams out = params;
    sgd_update(out, grads, learning_rate);
    return out;
}

}  // namespace splmll
