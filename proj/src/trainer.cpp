#include "splmll/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "splmll/errors.hpp"

namespace splmll {

namespace {

// Independent deterministic streams for each consumer of the run seed.
enum class Stream : std::uint64_t { theta = 1, correlation = 2, batches = 3 };

std::mt19937_64 make_rng(std::uint64_t seed, Stream stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream)};
    return std::mt19937_64(seq);
}

std::uint64_t theta_seed(std::uint64_t seed) { return make_rng(seed, Stream::theta)(); }

Matrix rows_of(const Matrix& m, const std::vector<Eigen::Index>& idx, std::size_t begin, std::size_t end) {
    Matrix out(static_cast<Eigen::Index>(end - begin), m.cols());
    for (std::size_t i = begin; i < end; ++i) out.row(static_cast<Eigen::Index>(i - begin)) = m.row(idx[i]);
    return out;
}

[[noreturn]] void diverged(std::size_t iter, const char* rate_name, double rate, const char* what) {
    throw DivergenceError(fmt::format("training diverged at outer iteration {}: {} became non-finite ({} = {:g})", iter,
                                      what, rate_name, rate),
                          iter, rate_name, rate);
}

}  // namespace

void TrainConfig::validate() const {
    hp.validate();
    if (!(lr_theta > 0.0) || !(lr_B > 0.0) || !(lr_A > 0.0)) throw ArgumentError("learning rates must be positive");
    if (batch_size < 1) throw ArgumentError("batch_size must be >= 1");
    if (max_outer_iters < 1) throw ArgumentError("max_outer_iters must be >= 1");
    if (!(rel_tol >= 0.0)) throw ArgumentError("rel_tol must be >= 0");
    if (!(leaky_slope > 0.0 && leaky_slope < 1.0)) throw ArgumentError("leaky_slope must lie in (0, 1)");
}

void ModelState::validate() const {
    theta.validate();
    const auto c = theta.output_dim();
    if (B.rows() != c || B.cols() != c) throw ValidationError(fmt::format("B must be {}x{}", c, c));
    if (A.rows() != c || A.cols() != c) throw ValidationError(fmt::format("A must be {}x{}", c, c));
    if (!B.allFinite() || !A.allFinite()) throw ValidationError("B or A contains non-finite values");
    if (scaler && (scaler->mean.size() != theta.input_dim() || scaler->inv_stddev.size() != theta.input_dim())) {
        throw ValidationError("feature scaler does not match the embedding input dimension");
    }
}

SelectionMatrix enforce_diagonal(const SelectionMatrix& B) {
    if (B.rows() != B.cols()) throw ArgumentError("selection matrix must be square");
    SelectionMatrix out = SelectionMatrix::Zero(B.rows(), B.cols());
    out.diagonal() = B.diagonal();
    return out;
}

TrainResult train(const MultiLabelDataset& ds, const TrainConfig& cfg, const IterationCallback& on_iteration) {
    cfg.validate();
    ds.validate();
    const auto start = std::chrono::steady_clock::now();
    const auto n = ds.num_instances();
    const auto c = ds.num_labels();
    const Matrix& Y = ds.labels;

    TrainResult result;
    ModelState& state = result.state;
    TrainReport& report = result.report;

    Matrix X = ds.features;
    if (cfg.standardize) {
        state.scaler = fit_scaler(ds.features);
        X = state.scaler->apply(ds.features);
    }

    state.theta = init_params(cfg.variant, ds.num_features(), c, theta_seed(cfg.seed), cfg.hidden_widths,
                              cfg.leaky_slope);
    state.B = SelectionMatrix::Identity(c, c);
    {
        auto rng = make_rng(cfg.seed, Stream::correlation);
        std::normal_distribution<double> normal(0.0, 0.01);
        state.A.resize(c, c);
        for (Eigen::Index i = 0; i < c; ++i)
            for (Eigen::Index j = 0; j < c; ++j) state.A(i, j) = normal(rng);
    }
    auto batch_rng = make_rng(cfg.seed, Stream::batches);

    report.initial_loss = loss(embed(state.theta, X), Y, state.B, state.A, cfg.hp);
    double previous = report.initial_loss;

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    const auto batch = static_cast<std::size_t>(cfg.batch_size);

    for (std::size_t iter = 1; iter <= cfg.max_outer_iters; ++iter) {
        // (1) one epoch of minibatch updates on theta with B, A fixed
        std::iota(order.begin(), order.end(), Eigen::Index{0});
        std::shuffle(order.begin(), order.end(), batch_rng);
        for (std::size_t begin = 0; begin < order.size(); begin += batch) {
            const std::size_t end = std::min(order.size(), begin + batch);
            const Matrix xb = rows_of(X, order, begin, end);
            const Matrix yb = rows_of(Y, order, begin, end);
            const auto fwd = forward(state.theta, xb);
            const auto grads = backward(state.theta, fwd.cache, grad_F(fwd.output, yb, state.B));
            sgd_update(state.theta, grads, cfg.lr_theta);
        }
        if (!state.theta.all_finite()) diverged(iter, "lr_theta", cfg.lr_theta, "network parameters");
        Matrix F = embed(state.theta, X);
        if (!F.allFinite()) diverged(iter, "lr_theta", cfg.lr_theta, "network output");

        // (2) full-batch step on B
        state.B -= cfg.lr_B * grad_B(F, Y, state.B, state.A, cfg.hp);
        if (cfg.hard_diagonal) state.B = enforce_diagonal(state.B);
        if (!state.B.allFinite()) diverged(iter, "lr_B", cfg.lr_B, "selection matrix B");

        // (3) full-batch step on A
        state.A -= cfg.lr_A * grad_A(Y, state.B, state.A);
        if (!state.A.allFinite()) diverged(iter, "lr_A", cfg.lr_A, "correlation matrix A");

        const double current = loss(F, Y, state.B, state.A, cfg.hp);
        if (!std::isfinite(current)) diverged(iter, "lr_theta", cfg.lr_theta, "loss");
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const IterationRecord rec{iter, current, current - previous, seconds};
        report.loss_per_outer_iter.push_back(current);
        report.log.push_back(rec);
        report.iters_run = iter;
        if (on_iteration) on_iteration(rec);

        if (std::abs(current - previous) / std::max(previous, 1e-12) < cfg.rel_tol) {
            report.converged = true;
            break;
        }
        previous = current;
    }
    report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

double objective_value(const ModelState& state, const MultiLabelDataset& ds, const Hyperparams& hp) {
    const Matrix X = state.scaler ? state.scaler->apply(ds.features) : ds.features;
    return loss(embed(state.theta, X), ds.labels, state.B, state.A, hp);
}

Matrix predict_scores(const ModelState& state, const Matrix& features) {
    if (features.cols() != state.theta.input_dim()) {
        throw ArgumentError(fmt::format("model expects {} features, got {}", state.theta.input_dim(), features.cols()));
    }
    const Matrix F = state.scaler ? embed(state.theta, state.scaler->apply(features)) : embed(state.theta, features);
    Matrix scores = F * (state.B * state.A);
    if (!scores.allFinite()) throw NumericError("predicted scores are non-finite");
    return scores;
}

std::string training_log_csv(const TrainReport& report) {
    std::string out = "iter,loss,delta,seconds\n";
    for (const auto& r : report.log) out += fmt::format("{},{:.17g},{:.17g},{:.6f}\n", r.iteration, r.loss, r.delta, r.seconds);
    return out;
}

MetricSummary summarize(const std::vector<MetricReport>& folds) {
    if (folds.empty()) throw ArgumentError("cannot summarize zero folds");
    const double k = static_cast<double>(folds.size());
    MetricSummary s;
    auto stat = [&](double MetricReport::*field) {
        // shifted by the first fold so identical folds give exactly zero spread
        const double origin = folds.front().*field;
        double sum = 0.0, sq = 0.0;
        for (const auto& f : folds) {
            const double d = f.*field - origin;
            sum += d;
            sq += d * d;
        }
        s.mean.*field = origin + sum / k;
        const double ss = std::max(0.0, sq - sum * sum / k);
        s.stddev.*field = folds.size() > 1 ? std::sqrt(ss / (k - 1.0)) : 0.0;
    };
    stat(&MetricReport::hamming_loss);
    stat(&MetricReport::ranking_loss);
    stat(&MetricReport::average_precision);
    stat(&MetricReport::micro_f1);
    stat(&MetricReport::macro_f1);
    s.mean.threshold_used = s.stddev.threshold_used = folds.front().threshold_used;
    s.mean.num_labels = s.stddev.num_labels = folds.front().num_labels;
    for (const auto& f : folds) {
        s.mean.num_instances += f.num_instances;
        s.mean.ranked_instances += f.ranked_instances;
        s.mean.precision_instances += f.precision_instances;
    }
    return s;
}

CrossValidationReport cross_validate(const MultiLabelDataset& ds, const TrainConfig& cfg, int k, double threshold,
                                     int workers) {
    if (k < 2) throw ArgumentError("cross validation needs k >= 2");
    cfg.validate();
    ds.validate();
    const auto folds = split_folds(ds.num_instances(), k, cfg.seed);

    auto run_fold = [&](int fold) {
        const auto test_rows = folds.members(fold);
        const auto train_rows = folds.complement(fold);
        if (test_rows.empty() || train_rows.empty()) throw ArgumentError(fmt::format("fold {} has no instances", fold));
        TrainConfig fold_cfg = cfg;
        fold_cfg.seed = cfg.seed + static_cast<std::uint64_t>(fold);
        const auto trained = train(ds.subset(train_rows), fold_cfg);
        const auto test = ds.subset(test_rows);
        return evaluate(predict_scores(trained.state, test.features), test.labels, threshold);
    };

    CrossValidationReport report;
    report.folds.resize(static_cast<std::size_t>(k));
    if (workers <= 1) {
        for (int f = 0; f < k; ++f) report.folds[static_cast<std::size_t>(f)] = run_fold(f);
    } else {
        for (int first = 0; first < k; first += workers) {
            std::vector<std::future<MetricReport>> pending;
            for (int f = first; f < std::min(k, first + workers); ++f) {
                pending.push_back(std::async(std::launch::async, run_fold, f));
            }
            for (std::size_t i = 0; i < pending.size(); ++i) {
                report.folds[static_cast<std::size_t>(first) + i] = pending[i].get();
            }
        }
    }
    report.summary = summarize(report.folds);
    return report;
}

std::string cross_validation_csv(const CrossValidationReport& report) {
    std::string out = "metric,fold,value,std\n";
    auto group = [&](const char* name, double MetricReport::*field) {
        for (std::size_t f = 0; f < report.folds.size(); ++f) {
            out += fmt::format("{},{},{:.17g},\n", name, f, report.folds[f].*field);
        }
        out += fmt::format("{},mean,{:.17g},{:.17g}\n", name, report.summary.mean.*field, report.summary.stddev.*field);
    };
    group("hamming_loss", &MetricReport::hamming_loss);
    group("ranking_loss", &MetricReport::ranking_loss);
    group("average_precision", &MetricReport::average_precision);
    group("micro_f1", &MetricReport::micro_f1);
    group("macro_f1", &MetricReport::macro_f1);
    return out;
}

}  // namespace splmll
