#include "splmll/landmarks.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>
#include <json.hpp>

#include "splmll/errors.hpp"

namespace splmll {

namespace {

std::string label_name(const std::vector<std::string>& names, Eigen::Index i) {
    return i < static_cast<Eigen::Index>(names.size()) ? names[static_cast<std::size_t>(i)] : fmt::format("label_{}", i);
}

}  // namespace

LandmarkReport select_landmarks(const SelectionMatrix& B, const SelectionRule& rule,
                                const std::vector<std::string>& label_names) {
    if (B.rows() != B.cols()) throw ArgumentError("selection matrix must be square");
    const auto c = B.rows();
    if (!label_names.empty() && static_cast<Eigen::Index>(label_names.size()) != c) {
        throw ArgumentError(fmt::format("{} label names for a {}x{} selection matrix", label_names.size(), c, c));
    }
    LandmarkReport report;
    report.rule = rule;

    std::vector<Eigen::Index> order(static_cast<std::size_t>(c));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return std::abs(B(a, a)) > std::abs(B(b, b)); });
    for (auto i : order) report.ranked_labels.push_back({i, label_name(label_names, i), std::abs(B(i, i))});

    if (const auto* top = std::get_if<TopK>(&rule)) {
        if (top->k < 0 || top->k > c) throw ArgumentError(fmt::format("top_k = {} exceeds {} labels", top->k, c));
        report.selected.assign(order.begin(), order.begin() + top->k);
    } else {
        double cut = 0.0;
        if (const auto* t = std::get_if<Threshold>(&rule)) {
            cut = t->value;
        } else {
            const double fraction = std::get<RelativeThreshold>(rule).fraction;
            cut = fraction * (c > 0 ? report.ranked_labels.front().magnitude : 0.0);
        }
        report.threshold_applied = cut;
        for (const auto& r : report.ranked_labels) {
            if (r.magnitude > cut) report.selected.push_back(r.index);
        }
    }
    std::sort(report.selected.begin(), report.selected.end());
    return report;
}

Cooccurrence cooccurrence(const Matrix& Y, Eigen::Index i, Eigen::Index j) {
    const auto c = Y.cols();
    if (i < 0 || j < 0 || i >= c || j >= c) throw ArgumentError(fmt::format("label index out of range [0, {})", c));
    if (i == j) throw ArgumentError("co-occurrence needs two distinct labels");
    const auto given = Y.col(i).array() != 0.0;
    const auto both = given && (Y.col(j).array() != 0.0);
    Cooccurrence out{both.count(), given.count(), 0.0};
    if (out.count_given == 0) throw UndefinedMetricError(fmt::format("label {} never occurs", i));
    out.probability = static_cast<double>(out.count_both) / static_cast<double>(out.count_given);
    return out;
}

Matrix recovery_weights(const SelectionMatrix& B, const CorrelationMatrix& A) {
    if (B.cols() != A.rows()) throw ArgumentError("B and A dimensions do not match");
    return B * A;
}

std::string landmark_report_json(const LandmarkReport& report) {
    nlohmann::ordered_json j;
    if (const auto* top = std::get_if<TopK>(&report.rule)) {
        j["rule"] = "top_k";
        j["top_k"] = top->k;
    } else {
        j["rule"] = "threshold";
        j["threshold"] = report.threshold_applied;
    }
    j["num_selected"] = report.selected.size();
    std::vector<std::string> names;
    for (auto idx : report.selected) {
        const auto it = std::find_if(report.ranked_labels.begin(), report.ranked_labels.end(),
                                     [idx](const RankedLabel& r) { return r.index == idx; });
        names.push_back(it->name);
    }
    std::string joined;
    for (const auto& n : names) joined += (joined.empty() ? "" : ";") + n;
    j["selected"] = joined;
    for (std::size_t r = 0; r < report.ranked_labels.size(); ++r) {
        j[fmt::format("rank_{}", r + 1)] = report.ranked_labels[r].name;
        j[fmt::format("magnitude_{}", r + 1)] = report.ranked_labels[r].magnitude;
    }
    return j.dump(2) + "\n";
}

std::string diagonal_csv(const SelectionMatrix& B, const std::vector<std::string>& label_names) {
    std::string out = "label,diagonal\n";
    for (Eigen::Index i = 0; i < B.rows(); ++i) out += fmt::format("{},{:.17g}\n", label_name(label_names, i), B(i, i));
    return out;
}

std::string matrix_csv(const Matrix& m, const std::vector<std::string>& label_names) {
    std::string out = "label";
    for (Eigen::Index j = 0; j < m.cols(); ++j) out += "," + label_name(label_names, j);
    out += '\n';
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        out += label_name(label_names, i);
        for (Eigen::Index j = 0; j < m.cols(); ++j) out += fmt::format(",{:.17g}", m(i, j));
        out += '\n';
    }
    return out;
}

}  // namespace splmll
