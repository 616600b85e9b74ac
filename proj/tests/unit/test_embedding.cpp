#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "splmll/embedding.hpp"
#include "splmll/errors.hpp"
#include "splmll/objective.hpp"

using namespace splmll;

namespace {

// Independent forward pass with explicit loops.
Matrix naive_forward(const EmbeddingParams& p, const Matrix& x) {
    Matrix h = x;
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
        const auto& layer = p.layers[l];
        Matrix z(h.rows(), layer.weight.cols());
        for (Eigen::Index i = 0; i < h.rows(); ++i) {
            for (Eigen::Index j = 0; j < layer.weight.cols(); ++j) {
                double acc = layer.bias(j);
                for (Eigen::Index k = 0; k < h.cols(); ++k) acc += h(i, k) * layer.weight(k, j);
                const bool hidden = l + 1 < p.layers.size();
                z(i, j) = hidden && acc < 0.0 ? p.leaky_slope * acc : acc;
            }
        }
        h = z;
    }
    return h;
}

void randomize_biases(EmbeddingParams& p, std::mt19937_64& rng) {
    for (auto& l : p.layers) l.bias = 0.1 * oracle::gaussian(1, l.bias.size(), rng).row(0);
}

}  // namespace

TEST(Init, LinearShapes) {
    const auto p = init_params(Variant::linear, 3, 2, 1);
    ASSERT_EQ(p.layers.size(), 1u);
    EXPECT_EQ(p.layers[0].weight.rows(), 3);
    EXPECT_EQ(p.layers[0].weight.cols(), 2);
    EXPECT_EQ(p.layers[0].bias, RowVector::Zero(2));
}

TEST(Init, MlpDefaultShapes) {
    const auto p = init_params(Variant::mlp, 72, 6, 1);
    ASSERT_EQ(p.layers.size(), 3u);
    EXPECT_EQ(p.layers[0].weight.rows(), 72);
    EXPECT_EQ(p.layers[0].weight.cols(), 512);
    EXPECT_EQ(p.layers[1].weight.rows(), 512);
    EXPECT_EQ(p.layers[1].weight.cols(), 64);
    EXPECT_EQ(p.layers[2].weight.rows(), 64);
    EXPECT_EQ(p.layers[2].weight.cols(), 6);
    EXPECT_EQ(p.hidden_widths(), (std::vector<Eigen::Index>{512, 64}));
    for (const auto& l : p.layers) EXPECT_EQ(l.bias.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Init, GlorotBounds) {
    const auto p = init_params(Variant::mlp, 20, 4, 3, {30, 10});
    for (const auto& l : p.layers) {
        const double bound = std::sqrt(6.0 / static_cast<double>(l.weight.rows() + l.weight.cols()));
        EXPECT_LE(l.weight.cwiseAbs().maxCoeff(), bound);
        EXPECT_GT(l.weight.cwiseAbs().maxCoeff(), 0.5 * bound);
    }
}

TEST(Init, Deterministic) {
    const auto a = init_params(Variant::mlp, 5, 3, 42, {4, 3});
    const auto b = init_params(Variant::mlp, 5, 3, 42, {4, 3});
    const auto c = init_params(Variant::mlp, 5, 3, 43, {4, 3});
    for (std::size_t l = 0; l < a.layers.size(); ++l) EXPECT_EQ(a.layers[l].weight, b.layers[l].weight);
    EXPECT_NE(a.layers[0].weight, c.layers[0].weight);
}

TEST(Init, RejectsBadDimensions) {
    EXPECT_THROW(init_params(Variant::linear, 0, 2, 1), ArgumentError);
    EXPECT_THROW(init_params(Variant::linear, 3, 1, 1), ArgumentError);
    EXPECT_THROW(init_params(Variant::mlp, 3, 2, 1, {4, 0}), ArgumentError);
}

TEST(Variant, ParseAndPrint) {
    EXPECT_EQ(parse_variant("linear"), Variant::linear);
    EXPECT_EQ(parse_variant("mlp"), Variant::mlp);
    EXPECT_EQ(to_string(Variant::mlp), "mlp");
    EXPECT_THROW(parse_variant("cnn"), ArgumentError);
}

TEST(LeakyRelu, Examples) {
    EXPECT_EQ(leaky_relu(2.0, 0.01), 2.0);
    EXPECT_DOUBLE_EQ(leaky_relu(-2.0, 0.01), -0.02);
    EXPECT_EQ(leaky_relu_derivative(-1.0, 0.01), 0.01);
    EXPECT_EQ(leaky_relu_derivative(3.0, 0.01), 1.0);
    EXPECT_EQ(leaky_relu_derivative(0.0, 0.01), 1.0);
}

TEST(Forward, ZeroLinearMap) {
    auto p = init_params(Variant::linear, 3, 2, 0);
    p.layers[0].weight.setZero();
    std::mt19937_64 rng(1);
    EXPECT_EQ(forward(p, oracle::gaussian(4, 3, rng)).output, Matrix::Zero(4, 2));
}

TEST(Forward, IdentityLinearMap) {
    auto p = init_params(Variant::linear, 3, 3, 0);
    p.layers[0].weight = Matrix::Identity(3, 3);
    EXPECT_EQ(forward(p, Matrix::Identity(3, 3)).output, Matrix::Identity(3, 3));
}

TEST(Forward, MlpMatchesNaiveRecomputation) {
    std::mt19937_64 rng(2);
    auto p = init_params(Variant::mlp, 4, 3, 9, {6, 5});
    randomize_biases(p, rng);
    const Matrix x = oracle::gaussian(5, 4, rng);
    const auto f = forward(p, x).output;
    ASSERT_EQ(f.rows(), 5);
    ASSERT_EQ(f.cols(), 3);
    EXPECT_TRUE(f.allFinite());
    EXPECT_LE((f - naive_forward(p, x)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_EQ(embed(p, x), f);
}

TEST(Forward, DimensionMismatchIsArgumentError) {
    const auto p = init_params(Variant::linear, 3, 2, 0);
    EXPECT_THROW(forward(p, Matrix::Zero(2, 4)), ArgumentError);
}

TEST(Forward, Deterministic) {
    std::mt19937_64 rng(3);
    const auto p = init_params(Variant::mlp, 4, 2, 1, {8, 8});
    const Matrix x = oracle::gaussian(7, 4, rng);
    EXPECT_EQ(forward(p, x).output, forward(p, x).output);
}

TEST(Forward, FinalLayerHomogeneity) {
    std::mt19937_64 rng(4);
    auto p = init_params(Variant::mlp, 3, 2, 5, {4, 4});
    randomize_biases(p, rng);
    const Matrix x = oracle::gaussian(6, 3, rng);
    const Matrix base = forward(p, x).output;
    auto scaled = p;
    scaled.layers.back().weight *= 2.5;
    scaled.layers.back().bias *= 2.5;
    EXPECT_LE((forward(scaled, x).output - 2.5 * base).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Backward, ZeroUpstreamGivesZeroGradients) {
    std::mt19937_64 rng(5);
    const auto p = init_params(Variant::mlp, 3, 2, 1, {4, 3});
    const auto fwd = forward(p, oracle::gaussian(4, 3, rng));
    const auto g = backward(p, fwd.cache, Matrix::Zero(4, 2));
    for (const auto& l : g.layers) {
        EXPECT_EQ(l.weight.cwiseAbs().maxCoeff(), 0.0);
        EXPECT_EQ(l.bias.cwiseAbs().maxCoeff(), 0.0);
    }
}

TEST(Backward, LinearClosedForm) {
    std::mt19937_64 rng(6);
    const auto p = init_params(Variant::linear, 3, 2, 1);
    const Matrix x = oracle::gaussian(5, 3, rng);
    const Matrix g = oracle::gaussian(5, 2, rng);
    const auto grads = backward(p, forward(p, x).cache, g);
    EXPECT_LE((grads.layers[0].weight - x.transpose() * g).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((grads.layers[0].bias - g.colwise().sum()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Backward, MlpMatchesFiniteDifferencesOfFullLoss) {
    std::mt19937_64 rng(7);
    auto p = init_params(Variant::mlp, 3, 2, 11, {5, 4});
    randomize_biases(p, rng);
    const Matrix x = oracle::gaussian(4, 3, rng);
    const Matrix y = oracle::bits(4, 2, rng);
    Matrix b = oracle::gaussian(2, 2, rng);
    const Matrix a = oracle::gaussian(2, 2, rng);
    const Hyperparams hp;
    const auto fwd = forward(p, x);
    const auto grads = backward(p, fwd.cache, grad_F(fwd.output, y, b));
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
        const auto numeric_w = oracle::central_diff(
            [&](const Matrix& w) {
                auto q = p;
                q.layers[l].weight = w;
                return oracle::objective(embed(q, x), y, b, a, hp.lambda1, hp.lambda2);
            },
            p.layers[l].weight);
        EXPECT_LE(oracle::rel_err(grads.layers[l].weight, numeric_w), 1e-5) << "layer " << l;
        const auto numeric_b = oracle::central_diff(
            [&](const Matrix& bias) {
                auto q = p;
                q.layers[l].bias = bias.row(0);
                return oracle::objective(embed(q, x), y, b, a, hp.lambda1, hp.lambda2);
            },
            Matrix(p.layers[l].bias));
        EXPECT_LE(oracle::rel_err(grads.layers[l].bias, numeric_b), 1e-5) << "layer " << l;
    }
}

TEST(Backward, LinearMatchesFiniteDifferences) {
    std::mt19937_64 rng(8);
    const auto p = init_params(Variant::linear, 4, 3, 2);
    const Matrix x = oracle::gaussian(6, 4, rng);
    const Matrix y = oracle::bits(6, 3, rng);
    const Matrix b = oracle::gaussian(3, 3, rng);
    const Matrix a = oracle::gaussian(3, 3, rng);
    const auto fwd = forward(p, x);
    const auto grads = backward(p, fwd.cache, grad_F(fwd.output, y, b));
    const auto numeric = oracle::central_diff(
        [&](const Matrix& w) {
            auto q = p;
            q.layers[0].weight = w;
            return oracle::objective(embed(q, x), y, b, a, 0.1, 0.1);
        },
        p.layers[0].weight);
    EXPECT_LE(oracle::rel_err(grads.layers[0].weight, numeric), 1e-5);
}

TEST(Backward, MismatchedCacheIsArgumentError) {
    std::mt19937_64 rng(9);
    const auto p = init_params(Variant::mlp, 3, 2, 1, {4, 3});
    const auto other = init_params(Variant::linear, 3, 2, 1);
    const auto fwd = forward(other, oracle::gaussian(4, 3, rng));
    EXPECT_THROW(backward(p, fwd.cache, Matrix::Zero(4, 2)), ArgumentError);
    const auto own = forward(p, oracle::gaussian(4, 3, rng));
    EXPECT_THROW(backward(p, own.cache, Matrix::Zero(3, 2)), ArgumentError);
}

TEST(Sgd, ZeroGradientIsFixedPoint) {
    const auto p = init_params(Variant::mlp, 3, 2, 1, {4, 3});
    const auto q = sgd_step(p, EmbeddingGradients::zeros_like(p), 0.5);
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
        EXPECT_EQ(q.layers[l].weight, p.layers[l].weight);
        EXPECT_EQ(q.layers[l].bias, p.layers[l].bias);
    }
}

TEST(Sgd, ScalarStep) {
    auto p = init_params(Variant::linear, 1, 2, 1);
    p.layers[0].weight(0, 0) = 2.0;
    auto g = EmbeddingGradients::zeros_like(p);
    g.layers[0].weight(0, 0) = 0.5;
    EXPECT_EQ(sgd_step(p, g, 1.0).layers[0].weight(0, 0), 1.5);
}

TEST(Sgd, TwoStepsEqualOneDoubledStep) {
    std::mt19937_64 rng(10);
    const auto p = init_params(Variant::linear, 3, 2, 1);
    auto g = EmbeddingGradients::zeros_like(p);
    g.layers[0].weight = oracle::gaussian(3, 2, rng);
    g.layers[0].bias = oracle::gaussian(1, 2, rng).row(0);
    const auto twice = sgd_step(sgd_step(p, g, 0.125), g, 0.125);
    const auto once = sgd_step(p, g, 0.25);
    EXPECT_LE((twice.layers[0].weight - once.layers[0].weight).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_LE((twice.layers[0].bias - once.layers[0].bias).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Sgd, InPlaceMatchesCopy) {
    std::mt19937_64 rng(11);
    auto p = init_params(Variant::mlp, 3, 2, 4, {3, 3});
    auto g = EmbeddingGradients::zeros_like(p);
    for (auto& l : g.layers) l.weight = oracle::gaussian(l.weight.rows(), l.weight.cols(), rng);
    const auto copy = sgd_step(p, g, 0.1);
    sgd_update(p, g, 0.1);
    for (std::size_t l = 0; l < p.layers.size(); ++l) EXPECT_EQ(p.layers[l].weight, copy.layers[l].weight);
}

TEST(Params, ValidateRejectsBadSlopeAndNonFinite) {
    auto p = init_params(Variant::mlp, 3, 2, 1, {4, 3});
    p.leaky_slope = 1.0;
    EXPECT_THROW(p.validate(), ValidationError);
    p.leaky_slope = 0.01;
    p.layers[1].weight(0, 0) = std::nan("");
    EXPECT_FALSE(p.all_finite());
    EXPECT_THROW(p.validate(), ValidationError);
}
