#include "splmll/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include "splmll/errors.hpp"

namespace splmll {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw ArgumentError(fmt::format("shape mismatch: {}x{} vs {}x{}", a.rows(), a.cols(), b.rows(), b.cols()));
    }
}

double f1(double tp, double fp, double fn) {
    const double denom = 2.0 * tp + fp + fn;
    return denom == 0.0 ? 0.0 : 2.0 * tp / denom;
}

}  // namespace

Matrix threshold_scores(const Matrix& scores, double threshold) {
    return (scores.array() >= threshold).cast<double>();
}

double hamming_loss(const Matrix& predicted, const Matrix& truth) {
    require_same_shape(predicted, truth);
    if (truth.size() == 0) throw UndefinedMetricError("hamming loss of an empty matrix");
    const auto mismatches = ((predicted.array() != 0.0) != (truth.array() != 0.0)).count();
    return static_cast<double>(mismatches) / static_cast<double>(truth.size());
}

double ranking_loss(const Matrix& scores, const Matrix& truth, Eigen::Index* counted) {
    require_same_shape(scores, truth);
    double total = 0.0;
    Eigen::Index used = 0;
    std::vector<double> pos, neg;
    for (Eigen::Index i = 0; i < truth.rows(); ++i) {
        pos.clear();
        neg.clear();
        for (Eigen::Index j = 0; j < truth.cols(); ++j) (truth(i, j) != 0.0 ? pos : neg).push_back(scores(i, j));
        if (pos.empty() || neg.empty()) continue;
        std::sort(neg.begin(), neg.end());
        std::size_t violations = 0;
        for (double p : pos) {
            // negatives scored at or above this positive
            violations += static_cast<std::size_t>(neg.end() - std::lower_bound(neg.begin(), neg.end(), p));
        }
        total += static_cast<double>(violations) / static_cast<double>(pos.size() * neg.size());
        ++used;
    }
    if (counted) *counted = used;
    if (used == 0) throw UndefinedMetricError("ranking loss: no instance has both positive and negative labels");
    return total / static_cast<double>(used);
}

double average_precision(const Matrix& scores, const Matrix& truth, Eigen::Index* counted) {
    require_same_shape(scores, truth);
    double total = 0.0;
    Eigen::Index used = 0;
    std::vector<Eigen::Index> order(static_cast<std::size_t>(truth.cols()));
    for (Eigen::Index i = 0; i < truth.rows(); ++i) {
        std::iota(order.begin(), order.end(), Eigen::Index{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](Eigen::Index a, Eigen::Index b) { return scores(i, a) > scores(i, b); });
        double sum = 0.0;
        std::size_t hits = 0;
        for (std::size_t r = 0; r < order.size(); ++r) {
            if (truth(i, order[r]) == 0.0) continue;
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(r + 1);
        }
        if (hits == 0) continue;
        total += sum / static_cast<double>(hits);
        ++used;
    }
    if (counted) *counted = used;
    if (used == 0) throw UndefinedMetricError("average precision: no instance has a positive label");
    return total / static_cast<double>(used);
}

double micro_f1(const Matrix& predicted, const Matrix& truth) {
    require_same_shape(predicted, truth);
    const auto p = predicted.array() != 0.0;
    const auto t = truth.array() != 0.0;
    const auto tp = static_cast<double>((p && t).count());
    const auto fp = static_cast<double>((p && !t).count());
    const auto fn = static_cast<double>((!p && t).count());
    return f1(tp, fp, fn);
}

double macro_f1(const Matrix& predicted, const Matrix& truth) {
    require_same_shape(predicted, truth);
    if (truth.cols() == 0) throw UndefinedMetricError("macro F1 with zero labels");
    double sum = 0.0;
    for (Eigen::Index j = 0; j < truth.cols(); ++j) {
        const auto p = predicted.col(j).array() != 0.0;
        const auto t = truth.col(j).array() != 0.0;
        sum += f1(static_cast<double>((p && t).count()), static_cast<double>((p && !t).count()),
                  static_cast<double>((!p && t).count()));
    }
    return sum / static_cast<double>(truth.cols());
}

MetricReport evaluate(const Matrix& scores, const Matrix& truth, double threshold) {
    require_same_shape(scores, truth);
    if (!scores.allFinite()) throw NumericError("scores contain non-finite entries");
    const Matrix predicted = threshold_scores(scores, threshold);
    MetricReport r;
    r.hamming_loss = hamming_loss(predicted, truth);
    r.ranking_loss = ranking_loss(scores, truth, &r.ranked_instances);
    r.average_precision = average_precision(scores, truth, &r.precision_instances);
    r.micro_f1 = micro_f1(predicted, truth);
    r.macro_f1 = macro_f1(predicted, truth);
    r.threshold_used = threshold;
    r.num_instances = truth.rows();
    r.num_labels = truth.cols();
    return r;
}

std::string to_flat_json(const MetricReport& r) {
    nlohmann::ordered_json j;
    j["hamming_loss"] = r.hamming_loss;
    j["ranking_loss"] = r.ranking_loss;
    j["average_precision"] = r.average_precision;
    j["micro_f1"] = r.micro_f1;
    j["macro_f1"] = r.macro_f1;
    j["threshold"] = r.threshold_used;
    j["num_instances"] = r.num_instances;
    j["num_labels"] = r.num_labels;
    j["ranked_instances"] = r.ranked_instances;
    j["precision_instances"] = r.precision_instances;
    return j.dump(2) + "\n";
}

}  // namespace splmll
