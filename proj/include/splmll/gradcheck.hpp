#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "splmll/embedding.hpp"
#include "splmll/objective.hpp"

namespace splmll {

enum class GradientKind { B, A, F, theta };

std::string_view to_string(GradientKind kind);
GradientKind parse_gradient_kind(std::string_view text);

// Central difference of a scalar function with respect to every entry of x.
Matrix central_difference(const std::function<double(const Matrix&)>& f, const Matrix& x, double step);

// |a - n| / max(1, |a|, |n|), maximised over entries.
double max_relative_error(const Matrix& analytic, const Matrix& numeric);

struct GradCheckOptions {
    std::uint64_t seed = 7;
    int instances = 20;
    double step = 1e-6;
    double tolerance = 1e-5;
    // Test hook: perturbs the analytic gradient of this kind before comparing.
    std::optional<GradientKind> corrupt;
};

struct GradCheckInstance {
    Eigen::Index n, d, c;
    std::vector<Eigen::Index> hidden;
};

struct GradCheckResult {
    GradientKind kind;
    double max_rel_error = 0.0;
    bool passed = false;
};

struct GradCheckReport {
    std::vector<GradCheckResult> results;  // B, A, F, theta
    std::vector<GradCheckInstance> instances;
    double tolerance = 0.0;

    bool all_passed() const;
    std::string to_json() const;
};

GradCheckReport run_gradcheck(const GradCheckOptions& options = {});

}  // namespace splmll
