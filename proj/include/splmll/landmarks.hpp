#pragma once

#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "splmll/objective.hpp"

namespace splmll {

struct TopK {
    Eigen::Index k;
};

// Selects labels whose |B_ii| is strictly above the threshold.
struct Threshold {
    double value;
};

// Threshold at this fraction of the largest diagonal magnitude.
struct RelativeThreshold {
    double fraction = 0.5;
};

using SelectionRule = std::variant<TopK, Threshold, RelativeThreshold>;

struct RankedLabel {
    Eigen::Index index;
    std::string name;
    double magnitude;
};

struct LandmarkReport {
    std::vector<RankedLabel> ranked_labels;  // by magnitude, descending
    std::vector<Eigen::Index> selected;      // ascending
    SelectionRule rule;
    double threshold_applied = 0.0;  // meaningful for threshold rules
};

LandmarkReport select_landmarks(const SelectionMatrix& B, const SelectionRule& rule = RelativeThreshold{},
                                const std::vector<std::string>& label_names = {});

struct Cooccurrence {
    Eigen::Index count_both;
    Eigen::Index count_given;
    double probability;  // P(label j | label i)
};

Cooccurrence cooccurrence(const Matrix& Y, Eigen::Index i, Eigen::Index j);

// B A: column j holds each landmark's contribution when recovering label j.
Matrix recovery_weights(const SelectionMatrix& B, const CorrelationMatrix& A);

std::string landmark_report_json(const LandmarkReport& report);
std::string diagonal_csv(const SelectionMatrix& B, const std::vector<std::string>& label_names);
std::string matrix_csv(const Matrix& m, const std::vector<std::string>& label_names);

}  // namespace splmll
