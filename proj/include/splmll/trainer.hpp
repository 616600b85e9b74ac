#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "splmll/embedding.hpp"
#include "splmll/metrics.hpp"
#include "splmll/objective.hpp"

namespace splmll {

inline constexpr std::uint64_t kDefaultSeed = 20200823;

struct TrainConfig {
    Hyperparams hp;
    double lr_theta = 1e-3;
    double lr_B = 1e-4;
    double lr_A = 1e-3;
    Eigen::Index batch_size = 64;
    std::size_t max_outer_iters = 500;
    double rel_tol = 1e-5;
    std::uint64_t seed = kDefaultSeed;
    Variant variant = Variant::mlp;
    std::vector<Eigen::Index> hidden_widths = kDefaultHiddenWidths;
    double leaky_slope = kDefaultLeakySlope;
    bool hard_diagonal = true;
    bool standardize = true;

    void validate() const;
};

struct ModelState {
    EmbeddingParams theta;
    SelectionMatrix B;
    CorrelationMatrix A;
    // Fitted on the training features when standardization is on; applied
    // by predict_scores before the embedding.
    std::optional<FeatureScaler> scaler;

    void validate() const;
};

struct IterationRecord {
    std::size_t iteration;  // 1-based
    double loss;
    double delta;    // loss minus previous loss
    double seconds;  // cumulative wall time
};

struct TrainReport {
    double initial_loss = 0.0;
    std::vector<double> loss_per_outer_iter;
    std::vector<IterationRecord> log;
    bool converged = false;
    std::size_t iters_run = 0;
    double wall_time = 0.0;
};

struct TrainResult {
    ModelState state;
    TrainReport report;
};

using IterationCallback = std::function<void(const IterationRecord&)>;

SelectionMatrix enforce_diagonal(const SelectionMatrix& B);

TrainResult train(const MultiLabelDataset& ds, const TrainConfig& cfg, const IterationCallback& on_iteration = {});

// Full-data objective at the current state; features are standardized with
// the state's scaler when present.
double objective_value(const ModelState& state, const MultiLabelDataset& ds, const Hyperparams& hp);

// scores = f(X; theta) B A, with X passed through state.scaler first when set.
Matrix predict_scores(const ModelState& state, const Matrix& features);

std::string training_log_csv(const TrainReport& report);

struct MetricSummary {
    MetricReport mean;
    MetricReport stddev;  // sample standard deviation across folds
};

struct CrossValidationReport {
    std::vector<MetricReport> folds;
    MetricSummary summary;
};

MetricSummary summarize(const std::vector<MetricReport>& folds);

// Folds run concurrently when workers > 1; results are ordered by fold.
CrossValidationReport cross_validate(const MultiLabelDataset& ds, const TrainConfig& cfg, int k,
                                     double threshold = kDefaultThreshold, int workers = 1);

// Long format: per metric, one row per fold then a "mean" row carrying the
// sample standard deviation in the std column.
std::string cross_validation_csv(const CrossValidationReport& report);

}  // namespace splmll
