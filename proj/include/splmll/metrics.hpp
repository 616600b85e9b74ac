#pragma once

#include <string>

#include "splmll/dataset_io.hpp"

namespace splmll {

inline constexpr double kDefaultThreshold = 0.5;

struct MetricReport {
    double hamming_loss = 0.0;
    double ranking_loss = 0.0;
    double average_precision = 0.0;
    double micro_f1 = 0.0;
    double macro_f1 = 0.0;
    double threshold_used = kDefaultThreshold;
    Eigen::Index num_instances = 0;
    Eigen::Index num_labels = 0;
    Eigen::Index ranked_instances = 0;     // instances counted by ranking_loss
    Eigen::Index precision_instances = 0;  // instances counted by average_precision
};

// Entry 1 iff score >= threshold.
Matrix threshold_scores(const Matrix& scores, double threshold = kDefaultThreshold);

double hamming_loss(const Matrix& predicted, const Matrix& truth);

// Ties between a positive and a negative count as misordered. Instances
// without both a positive and a negative label are excluded; when none
// remain an UndefinedMetricError is thrown.
double ranking_loss(const Matrix& scores, const Matrix& truth, Eigen::Index* counted = nullptr);

// Ranks are 1-based by descending score with ties broken by ascending label
// index. Instances without a positive label are excluded.
double average_precision(const Matrix& scores, const Matrix& truth, Eigen::Index* counted = nullptr);

// 0/0 ratios are taken as 0.
double micro_f1(const Matrix& predicted, const Matrix& truth);
double macro_f1(const Matrix& predicted, const Matrix& truth);

MetricReport evaluate(const Matrix& scores, const Matrix& truth, double threshold = kDefaultThreshold);

// Flat JSON object: one key per metric plus threshold and counts.
std::string to_flat_json(const MetricReport& report);

}  // namespace splmll
