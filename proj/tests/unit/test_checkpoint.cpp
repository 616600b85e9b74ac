#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "splmll/checkpoint.hpp"
#include "splmll/errors.hpp"
#include "splmll/trainer.hpp"

using namespace splmll;

namespace {

ModelState sample_state(Variant variant, bool scaled) {
    std::mt19937_64 rng(variant == Variant::mlp ? 1 : 2);
    ModelState s;
    s.theta = init_params(variant, 4, 3, 9, {5, 3});
    for (auto& l : s.theta.layers) l.bias = oracle::gaussian(1, l.bias.size(), rng).row(0);
    s.B = Matrix(oracle::gaussian(3, 3, rng).diagonal().asDiagonal());
    s.A = oracle::gaussian(3, 3, rng) * 1e-7;
    if (scaled) s.scaler = fit_scaler(oracle::gaussian(10, 4, rng));
    return s;
}

}  // namespace

TEST(TensorDocument, RoundTripsFieldsAndTensors) {
    TensorDocument doc;
    doc.set("name", "two words");
    Matrix t(2, 3);
    t << 1.0 / 3.0, -0.0, 1e-300, 6.02e23, -2.5, 0.1;
    doc.set_tensor("t", t);
    const auto back = TensorDocument::parse(doc.serialize());
    EXPECT_EQ(back.get("name"), "two words");
    EXPECT_EQ(back.tensor("t"), t);
    EXPECT_TRUE(back.has("name"));
    EXPECT_FALSE(back.has_tensor("u"));
    EXPECT_THROW(back.get("missing"), SchemaError);
    EXPECT_THROW(back.tensor("missing"), SchemaError);
}

TEST(TensorDocument, MalformedInputs) {
    EXPECT_THROW(TensorDocument::parse("hello\n"), ParseError);
    EXPECT_THROW(TensorDocument::parse("# splmll checkpoint\ntensor t 1 2\n1 2\n"), ParseError);
    EXPECT_THROW(TensorDocument::parse("# splmll checkpoint\ntensor t 2 2\n1 2\nend\n"), ParseError);
    EXPECT_THROW(TensorDocument::parse("# splmll checkpoint\ntensor t 1 2\n1 x\nend\n"), ParseError);
    EXPECT_THROW(TensorDocument::parse("# splmll checkpoint\ntensor t 1\nend\n"), ParseError);
}

TEST(Embedding, RoundTripReproducesForward) {
    std::mt19937_64 rng(3);
    const Matrix x = oracle::gaussian(6, 4, rng);
    for (auto variant : {Variant::linear, Variant::mlp}) {
        const auto p = sample_state(variant, false).theta;
        const auto back = embedding_from_text(embedding_to_text(p));
        EXPECT_EQ(back.variant, p.variant);
        EXPECT_EQ(back.leaky_slope, p.leaky_slope);
        EXPECT_EQ(back.hidden_widths(), p.hidden_widths());
        EXPECT_LE((embed(back, x) - embed(p, x)).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(Checkpoint, RoundTripIsExact) {
    for (auto variant : {Variant::linear, Variant::mlp}) {
        for (bool scaled : {false, true}) {
            const auto s = sample_state(variant, scaled);
            const auto text = checkpoint_to_text(s);
            const auto back = checkpoint_from_text(text);
            EXPECT_EQ(back.B, s.B);
            EXPECT_EQ(back.A, s.A);
            ASSERT_EQ(back.scaler.has_value(), scaled);
            if (scaled) EXPECT_EQ(back.scaler->inv_stddev, s.scaler->inv_stddev);
            for (std::size_t l = 0; l < s.theta.layers.size(); ++l) {
                EXPECT_EQ(back.theta.layers[l].weight, s.theta.layers[l].weight);
                EXPECT_EQ(back.theta.layers[l].bias, s.theta.layers[l].bias);
            }
            EXPECT_EQ(checkpoint_to_text(back), text);
        }
    }
}

TEST(Checkpoint, SelfDescribingHeader) {
    const auto text = checkpoint_to_text(sample_state(Variant::mlp, true));
    for (const char* needle : {"format_version 1\n", "variant mlp\n", "input_dim 4\n", "num_labels 3\n",
                               "hidden_widths 5 3\n", "leaky_slope 0.01", "tensor W1 4 5\n", "tensor b3 1 3\n",
                               "tensor B 3 3\n", "tensor A 3 3\n", "tensor feature_mean 1 4\n"}) {
        EXPECT_NE(text.find(needle), std::string::npos) << needle;
    }
}

TEST(Checkpoint, SchemaErrors) {
    auto text = checkpoint_to_text(sample_state(Variant::linear, false));
    auto bump = text;
    bump.replace(bump.find("format_version 1"), 16, "format_version 9");
    EXPECT_THROW(checkpoint_from_text(bump), SchemaError);
    auto dims = text;
    dims.replace(dims.find("input_dim 4"), 11, "input_dim 5");
    EXPECT_THROW(checkpoint_from_text(dims), SchemaError);
    auto missing = text;
    missing.replace(missing.find("tensor A"), 8, "tensor Q");
    EXPECT_THROW(checkpoint_from_text(missing), SchemaError);
}
