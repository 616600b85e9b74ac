#include "splmll/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/format.h>
#include <json.hpp>

#include "splmll/errors.hpp"

namespace splmll {

namespace {

Matrix random_normal(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal(rng);
    return m;
}

Matrix random_binary(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
    std::bernoulli_distribution coin(0.5);
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = coin(rng) ? 1.0 : 0.0;
    return m;
}

// B with every row norm at least 1e-3, the smooth region of the l2,1 term.
Matrix random_selection(Eigen::Index c, std::mt19937_64& rng) {
    Matrix b = random_normal(c, c, rng);
    while (b.rowwise().norm().minCoeff() < 1e-3) b = random_normal(c, c, rng);
    return b;
}

void corrupt(Matrix& g) { g(0, 0) += 1e-3 * (1.0 + std::abs(g(0, 0))); }

// Flattens all embedding parameters into one column for finite differencing.
Matrix flatten(const std::vector<DenseLayer>& layers) {
    Eigen::Index total = 0;
    for (const auto& l : layers) total += l.weight.size() + l.bias.size();
    Matrix out(total, 1);
    Eigen::Index k = 0;
    for (const auto& l : layers) {
        for (Eigen::Index i = 0; i < l.weight.size(); ++i) out(k++, 0) = l.weight.data()[i];
        for (Eigen::Index i = 0; i < l.bias.size(); ++i) out(k++, 0) = l.bias.data()[i];
    }
    return out;
}

void unflatten(const Matrix& flat, std::vector<DenseLayer>& layers) {
    Eigen::Index k = 0;
    for (auto& l : layers) {
        for (Eigen::Index i = 0; i < l.weight.size(); ++i) l.weight.data()[i] = flat(k++, 0);
        for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias.data()[i] = flat(k++, 0);
    }
}

}  // namespace

std::string_view to_string(GradientKind kind) {
    switch (kind) {
        case GradientKind::B: return "B";
        case GradientKind::A: return "A";
        case GradientKind::F: return "F";
        case GradientKind::theta: return "theta";
    }
    return "?";
}

GradientKind parse_gradient_kind(std::string_view text) {
    if (text == "B") return GradientKind::B;
    if (text == "A") return GradientKind::A;
    if (text == "F") return GradientKind::F;
    if (text == "theta") return GradientKind::theta;
    throw ArgumentError(fmt::format("unknown gradient '{}' (expected B, A, F or theta)", text));
}

Matrix central_difference(const std::function<double(const Matrix&)>& f, const Matrix& x, double step) {
    Matrix grad(x.rows(), x.cols());
    Matrix probe = x;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            const double saved = probe(i, j);
            probe(i, j) = saved + step;
            const double up = f(probe);
            probe(i, j) = saved - step;
            const double down = f(probe);
            probe(i, j) = saved;
            grad(i, j) = (up - down) / (2.0 * step);
        }
    }
    return grad;
}

double max_relative_error(const Matrix& analytic, const Matrix& numeric) {
    if (analytic.rows() != numeric.rows() || analytic.cols() != numeric.cols()) {
        throw ArgumentError("gradient shapes differ");
    }
    double worst = 0.0;
    for (Eigen::Index i = 0; i < analytic.size(); ++i) {
        const double a = analytic.data()[i];
        const double n = numeric.data()[i];
        worst = std::max(worst, std::abs(a - n) / std::max({1.0, std::abs(a), std::abs(n)}));
    }
    return worst;
}

bool GradCheckReport::all_passed() const {
    return std::all_of(results.begin(), results.end(), [](const auto& r) { return r.passed; });
}

std::string GradCheckReport::to_json() const {
    nlohmann::ordered_json j;
    j["tolerance"] = tolerance;
    j["instances"] = instances.size();
    for (const auto& r : results) {
        j[fmt::format("grad_{}_max_rel_error", to_string(r.kind))] = r.max_rel_error;
        j[fmt::format("grad_{}_pass", to_string(r.kind))] = r.passed;
    }
    j["all_pass"] = all_passed();
    for (std::size_t i = 0; i < instances.size(); ++i) {
        const auto& d = instances[i];
        std::string hidden;
        for (auto h : d.hidden) hidden += (hidden.empty() ? "" : "x") + std::to_string(h);
        j[fmt::format("instance_{}_dims", i)] = fmt::format("N={} D={} C={} hidden={}", d.n, d.d, d.c, hidden);
    }
    return j.dump(2) + "\n";
}

GradCheckReport run_gradcheck(const GradCheckOptions& options) {
    if (options.instances < 1) throw ArgumentError("gradcheck needs at least one instance");
    std::mt19937_64 rng(options.seed);
    std::uniform_int_distribution<Eigen::Index> pick_n(2, 8), pick_d(1, 6), pick_c(2, 5), pick_h(2, 6);
    std::uniform_real_distribution<double> pick_lambda(0.0, 1.0);

    GradCheckReport report;
    report.tolerance = options.tolerance;
    double worst[4] = {0.0, 0.0, 0.0, 0.0};
    auto maybe_corrupt = [&](GradientKind kind, Matrix& g) {
        if (options.corrupt && *options.corrupt == kind) corrupt(g);
    };

    for (int inst = 0; inst < options.instances; ++inst) {
        GradCheckInstance dims{pick_n(rng), pick_d(rng), pick_c(rng), {pick_h(rng), pick_h(rng)}};
        report.instances.push_back(dims);
        const Hyperparams hp{pick_lambda(rng), pick_lambda(rng), 1e-8};
        const Matrix Y = random_binary(dims.n, dims.c, rng);
        const Matrix F = random_normal(dims.n, dims.c, rng);
        const Matrix B = random_selection(dims.c, rng);
        const Matrix A = random_normal(dims.c, dims.c, rng);
        const double h = options.step;

        Matrix gb = grad_B(F, Y, B, A, hp);
        maybe_corrupt(GradientKind::B, gb);
        const Matrix nb = central_difference([&](const Matrix& b) { return loss(F, Y, b, A, hp); }, B, h);
        worst[0] = std::max(worst[0], max_relative_error(gb, nb));

        Matrix ga = grad_A(Y, B, A);
        maybe_corrupt(GradientKind::A, ga);
        const Matrix na = central_difference([&](const Matrix& a) { return loss(F, Y, B, a, hp); }, A, h);
        worst[1] = std::max(worst[1], max_relative_error(ga, na));

        Matrix gf = grad_F(F, Y, B);
        maybe_corrupt(GradientKind::F, gf);
        const Matrix nf = central_difference([&](const Matrix& f) { return loss(f, Y, B, A, hp); }, F, h);
        worst[2] = std::max(worst[2], max_relative_error(gf, nf));

        // Full network: loss(f(X; theta)) through every layer.
        auto theta = init_params(Variant::mlp, dims.d, dims.c, rng(), dims.hidden);
        for (auto& layer : theta.layers) layer.bias = 0.1 * random_normal(1, layer.bias.size(), rng).row(0);
        const Matrix X = random_normal(dims.n, dims.d, rng);
        const auto fwd = forward(theta, X);
        const auto grads = backward(theta, fwd.cache, grad_F(fwd.output, Y, B));
        Matrix gt = flatten(grads.layers);
        maybe_corrupt(GradientKind::theta, gt);
        auto probe = theta;
        const Matrix nt = central_difference(
            [&](const Matrix& flat) {
                unflatten(flat, probe.layers);
                return loss(embed(probe, X), Y, B, A, hp);
            },
            flatten(theta.layers), h);
        worst[3] = std::max(worst[3], max_relative_error(gt, nt));
    }

    const GradientKind kinds[4] = {GradientKind::B, GradientKind::A, GradientKind::F, GradientKind::theta};
    for (int k = 0; k < 4; ++k) {
        report.results.push_back({kinds[k], worst[k], worst[k] <= options.tolerance});
    }
    return report;
}

}  // namespace splmll
