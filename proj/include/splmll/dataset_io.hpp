#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace splmll {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

// Features X (N x D) and binary labels Y (N x C) stored as doubles so they
// feed the objective without conversion.
struct MultiLabelDataset {
    Matrix features;
    Matrix labels;
    std::vector<std::string> feature_names;
    std::vector<std::string> label_names;

    Eigen::Index num_instances() const { return features.rows(); }
    Eigen::Index num_features() const { return features.cols(); }
    Eigen::Index num_labels() const { return labels.cols(); }

    // Throws ValidationError when an invariant does not hold.
    void validate() const;

    MultiLabelDataset subset(const std::vector<Eigen::Index>& rows) const;
};

struct FoldAssignment {
    std::vector<int> fold_of_instance;
    int num_folds = 0;

    std::vector<Eigen::Index> members(int fold) const;
    std::vector<Eigen::Index> complement(int fold) const;
};

struct SynthesisConfig {
    Eigen::Index n_instances = 200;
    Eigen::Index n_features = 10;
    Eigen::Index n_labels = 6;
    Eigen::Index n_landmarks = 2;
    double noise_rate = 0.0;
    std::uint64_t seed = 20200823;

    void validate() const;
};

struct SynthesizedDataset {
    MultiLabelDataset dataset;
    std::vector<Eigen::Index> landmarks;  // ascending
};

// Per-feature affine transform (x - mean) / stddev. Columns whose stddev fell
// below the degeneracy cutoff carry scale 0 and map to zero.
struct FeatureScaler {
    RowVector mean;
    RowVector inv_stddev;

    Matrix apply(const Matrix& features) const;
};

struct StandardizedDataset {
    MultiLabelDataset dataset;
    FeatureScaler scaler;
};

inline constexpr double kDegenerateStddev = 1e-12;

std::vector<std::string> parse_label_header(std::string_view xml_text);

MultiLabelDataset parse_arff(std::string_view arff_text, const std::vector<std::string>& label_names);

// Reads both files from disk; IoError when either cannot be opened.
MultiLabelDataset load_mulan(const std::string& arff_path, const std::string& xml_path);

// Dense ARFF with features first, labels last as nominal {0,1}.
std::string to_dense_arff(const MultiLabelDataset& ds, std::string_view relation = "splmll");
std::string to_sparse_arff(const MultiLabelDataset& ds, std::string_view relation = "splmll");
std::string to_label_header(const std::vector<std::string>& label_names);

double label_cardinality(const MultiLabelDataset& ds);

FeatureScaler fit_scaler(const Matrix& features);
StandardizedDataset standardize_features(const MultiLabelDataset& ds);

FoldAssignment split_folds(Eigen::Index n, int k, std::uint64_t seed);
std::string folds_to_csv(const FoldAssignment& folds);

SynthesizedDataset synthesize(const SynthesisConfig& cfg);

}  // namespace splmll
