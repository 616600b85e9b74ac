#include <gtest/gtest.h>

#include <random>

#include <json.hpp>

#include "oracles.hpp"
#include "splmll/errors.hpp"
#include "splmll/metrics.hpp"

using namespace splmll;

namespace {

Matrix m(std::initializer_list<std::initializer_list<double>> rows) {
    Matrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
    Eigen::Index i = 0;
    for (const auto& r : rows) {
        Eigen::Index j = 0;
        for (double v : r) out(i, j++) = v;
        ++i;
    }
    return out;
}

// Scores drawn from a small grid so ties are common.
Matrix coarse_scores(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c) {
    std::uniform_int_distribution<int> level(0, 4);
    Matrix s(r, c);
    for (Eigen::Index i = 0; i < s.size(); ++i) s.data()[i] = 0.25 * level(rng);
    return s;
}

}  // namespace

TEST(Threshold, Examples) {
    EXPECT_EQ(threshold_scores(m({{0.6, 0.4}}), 0.5), m({{1, 0}}));
    EXPECT_EQ(threshold_scores(m({{0.5, 0.49}})), m({{1, 0}}));
    EXPECT_EQ(threshold_scores(m({{0.6, 0.4}, {0.1, 0.9}}), 2.0), Matrix::Zero(2, 2));
    EXPECT_EQ(threshold_scores(m({{0.6, 0.4}, {0.1, -0.9}}), -1.0), Matrix::Ones(2, 2));
}

TEST(Hamming, Examples) {
    const Matrix truth = m({{1, 0}, {0, 1}});
    EXPECT_EQ(hamming_loss(truth, truth), 0.0);
    EXPECT_DOUBLE_EQ(hamming_loss(m({{1, 0}, {1, 1}}), truth), 0.25);
    EXPECT_EQ(hamming_loss(Matrix::Ones(2, 2) - truth, truth), 1.0);
    EXPECT_THROW(hamming_loss(truth, Matrix::Zero(2, 3)), ArgumentError);
}

TEST(Ranking, PerfectAndTies) {
    EXPECT_EQ(ranking_loss(m({{0.9, 0.1, 0.8}}), m({{1, 0, 1}})), 0.0);
    EXPECT_EQ(ranking_loss(m({{0.2, 0.2}}), m({{1, 0}})), 1.0);
}

TEST(Ranking, SkipsDegenerateInstances) {
    Eigen::Index counted = -1;
    const double v = ranking_loss(m({{0.1, 0.9}, {0.5, 0.5}, {0.3, 0.2}}), m({{1, 0}, {1, 1}, {0, 0}}), &counted);
    EXPECT_EQ(counted, 1);
    EXPECT_EQ(v, 1.0);
    EXPECT_THROW(ranking_loss(m({{0.1, 0.2}}), m({{1, 1}})), UndefinedMetricError);
}

TEST(Ranking, MatchesPairEnumeration) {
    std::mt19937_64 rng(1);
    const Matrix s = oracle::gaussian(6, 4, rng);
    Matrix y = oracle::bits(6, 4, rng);
    y.row(0) << 1, 0, 0, 0;
    EXPECT_EQ(ranking_loss(s, y), *oracle::ranking(s, y));
}

TEST(AveragePrecision, Examples) {
    EXPECT_EQ(average_precision(m({{0.9, 0.8, 0.1}}), m({{1, 1, 0}})), 1.0);
    EXPECT_DOUBLE_EQ(average_precision(m({{0.9, 0.8, 0.7, 0.6}}), m({{0, 1, 0, 1}})), 0.5);
    EXPECT_THROW(average_precision(m({{0.1, 0.2}}), m({{0, 0}})), UndefinedMetricError);
}

TEST(AveragePrecision, TieBreaksByAscendingIndex) {
    // Label 1 is positive and tied with label 0; ascending index puts it second.
    EXPECT_DOUBLE_EQ(average_precision(m({{0.5, 0.5}}), m({{0, 1}})), 0.5);
    EXPECT_DOUBLE_EQ(average_precision(m({{0.5, 0.5}}), m({{1, 0}})), 1.0);
}

TEST(AveragePrecision, MatchesSortAndCount) {
    std::mt19937_64 rng(2);
    const Matrix s = oracle::gaussian(5, 4, rng);
    Matrix y = oracle::bits(5, 4, rng);
    y(0, 0) = 1.0;
    EXPECT_EQ(average_precision(s, y), *oracle::avg_precision(s, y));
}

TEST(F1, Examples) {
    const Matrix truth = m({{1, 0}, {1, 0}});
    const Matrix pred = m({{1, 1}, {0, 0}});
    EXPECT_DOUBLE_EQ(macro_f1(pred, truth), 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(micro_f1(pred, truth), 0.5);
    EXPECT_EQ(micro_f1(truth, truth), 1.0);
    EXPECT_EQ(micro_f1(Matrix::Zero(2, 2), Matrix::Zero(2, 2)), 0.0);
    EXPECT_EQ(macro_f1(Matrix::Zero(2, 2), Matrix::Zero(2, 2)), 0.0);
    const Matrix both = m({{1, 0}, {0, 1}});
    EXPECT_EQ(macro_f1(both, both), 1.0);
}

TEST(Evaluate, PerfectScores) {
    const Matrix truth = m({{1, 0, 1}, {0, 1, 0}});
    const auto r = evaluate(truth, truth, 0.5);
    EXPECT_EQ(r.hamming_loss, 0.0);
    EXPECT_EQ(r.ranking_loss, 0.0);
    EXPECT_EQ(r.average_precision, 1.0);
    EXPECT_EQ(r.micro_f1, 1.0);
    EXPECT_EQ(r.macro_f1, 1.0);
    EXPECT_EQ(r.threshold_used, 0.5);
    EXPECT_EQ(r.num_instances, 2);
    EXPECT_EQ(r.num_labels, 3);
}

TEST(Evaluate, ConsistentWithComponents) {
    std::mt19937_64 rng(3);
    const Matrix s = oracle::gaussian(7, 5, rng);
    Matrix y = oracle::bits(7, 5, rng);
    y.row(0) << 1, 0, 0, 0, 0;
    const auto r = evaluate(s, y, 0.1);
    const Matrix pred = threshold_scores(s, 0.1);
    EXPECT_EQ(r.hamming_loss, hamming_loss(pred, y));
    EXPECT_EQ(r.ranking_loss, ranking_loss(s, y));
    EXPECT_EQ(r.average_precision, average_precision(s, y));
    EXPECT_EQ(r.micro_f1, micro_f1(pred, y));
    EXPECT_EQ(r.macro_f1, macro_f1(pred, y));
}

TEST(Evaluate, InvertedScoresGiveFullRankingLoss) {
    const Matrix truth = m({{1, 0, 1}, {0, 1, 0}, {1, 1, 0}});
    EXPECT_EQ(evaluate(-truth, truth).ranking_loss, 1.0);
}

TEST(Evaluate, NonFiniteScoresAreNumericError) {
    Matrix s = Matrix::Zero(1, 2);
    s(0, 1) = std::nan("");
    EXPECT_THROW(evaluate(s, m({{1, 0}})), NumericError);
}

TEST(Evaluate, FlatJsonHasExactlyTheDocumentedKeys) {
    const Matrix truth = m({{1, 0}, {0, 1}});
    const auto doc = nlohmann::json::parse(to_flat_json(evaluate(truth, truth)));
    const std::vector<std::string> keys{"average_precision", "hamming_loss",  "macro_f1",
                                        "micro_f1",          "num_instances", "num_labels",
                                        "precision_instances", "ranked_instances", "ranking_loss",
                                        "threshold"};
    std::vector<std::string> got;
    for (const auto& [k, v] : doc.items()) {
        got.push_back(k);
        EXPECT_TRUE(v.is_number()) << k;
    }
    std::sort(got.begin(), got.end());
    EXPECT_EQ(got, keys);
}

TEST(Properties, RankMetricsInvariantUnderMonotoneTransform) {
    std::mt19937_64 rng(4);
    for (int t = 0; t < 50; ++t) {
        const Matrix s = coarse_scores(rng, 5, 4);
        Matrix y = oracle::bits(5, 4, rng);
        y.row(0) << 1, 0, 1, 0;
        const Matrix warped = (3.0 * s.array()).exp().matrix() - Matrix::Constant(5, 4, 2.0);
        EXPECT_EQ(ranking_loss(s, y), ranking_loss(warped, y));
        EXPECT_EQ(average_precision(s, y), average_precision(warped, y));
    }
}

TEST(Properties, InvariantUnderInstanceReordering) {
    std::mt19937_64 rng(5);
    const Matrix s = oracle::gaussian(6, 3, rng);
    Matrix y = oracle::bits(6, 3, rng);
    y.row(0) << 1, 0, 0;
    Eigen::PermutationMatrix<Eigen::Dynamic> perm(6);
    perm.setIdentity();
    std::shuffle(perm.indices().data(), perm.indices().data() + 6, rng);
    const auto a = evaluate(s, y, 0.0);
    const auto b = evaluate(perm * s, perm * y, 0.0);
    EXPECT_NEAR(a.hamming_loss, b.hamming_loss, 1e-15);
    EXPECT_NEAR(a.ranking_loss, b.ranking_loss, 1e-15);
    EXPECT_NEAR(a.average_precision, b.average_precision, 1e-15);
    EXPECT_EQ(a.micro_f1, b.micro_f1);
    EXPECT_EQ(a.macro_f1, b.macro_f1);
}

TEST(Properties, RankingLossComplementsCorrectPairsWithoutTies) {
    std::mt19937_64 rng(6);
    const Matrix s = oracle::gaussian(1, 6, rng);
    const Matrix y = m({{1, 0, 1, 0, 0, 1}});
    long correct = 0;
    for (Eigen::Index p = 0; p < 6; ++p)
        for (Eigen::Index q = 0; q < 6; ++q)
            if (y(0, p) == 1 && y(0, q) == 0 && s(0, p) > s(0, q)) ++correct;
    EXPECT_NEAR(ranking_loss(s, y) + static_cast<double>(correct) / 9.0, 1.0, 1e-15);
}

TEST(Properties, RandomInstancesMatchOracles) {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<Eigen::Index> rows(1, 8), cols(2, 6);
    int compared = 0;
    for (int t = 0; t < 300; ++t) {
        const Eigen::Index r = rows(rng), c = cols(rng);
        const Matrix s = t % 2 ? coarse_scores(rng, r, c) : oracle::gaussian(r, c, rng);
        const Matrix y = oracle::bits(r, c, rng);
        const Matrix pred = threshold_scores(s, 0.5);
        ASSERT_EQ(pred, oracle::binarize(s, 0.5));
        ASSERT_NEAR(hamming_loss(pred, y), oracle::hamming(pred, y), 1e-12);
        ASSERT_NEAR(micro_f1(pred, y), oracle::micro(pred, y), 1e-12);
        ASSERT_NEAR(macro_f1(pred, y), oracle::macro(pred, y), 1e-12);
        if (const auto rl = oracle::ranking(s, y)) {
            ASSERT_EQ(ranking_loss(s, y), *rl);
            ++compared;
        } else {
            ASSERT_THROW(ranking_loss(s, y), UndefinedMetricError);
        }
        if (const auto ap = oracle::avg_precision(s, y)) {
            ASSERT_EQ(average_precision(s, y), *ap);
        } else {
            ASSERT_THROW(average_precision(s, y), UndefinedMetricError);
        }
    }
    EXPECT_GT(compared, 200);
}
