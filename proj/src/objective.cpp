#include "splmll/objective.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "splmll/errors.hpp"

namespace splmll {

namespace {

void require_finite(const Matrix& m, const char* name) {
    if (!m.allFinite()) throw NumericError(fmt::format("{} contains non-finite entries", name));
}

void require_square(const Matrix& m, Eigen::Index c, const char* name) {
    if (m.rows() != c || m.cols() != c) {
        throw ArgumentError(fmt::format("{} is {}x{}, expected {}x{}", name, m.rows(), m.cols(), c, c));
    }
}

void require_same_shape(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw ArgumentError(fmt::format("F is {}x{} but Y is {}x{}", a.rows(), a.cols(), b.rows(), b.cols()));
    }
}

}  // namespace

void Hyperparams::validate() const {
    if (!(lambda1 >= 0.0)) throw ArgumentError("lambda1 must be >= 0");
    if (!(lambda2 >= 0.0)) throw ArgumentError("lambda2 must be >= 0");
    if (!(epsilon_row > 0.0)) throw ArgumentError("epsilon_row must be > 0");
}

double norm_21(const Matrix& m) { return m.rowwise().norm().sum(); }

LossTerms loss_terms(const Matrix& F, const Matrix& Y, const SelectionMatrix& B, const CorrelationMatrix& A,
                     const Hyperparams& hp) {
    require_same_shape(F, Y);
    require_square(B, Y.cols(), "B");
    require_square(A, Y.cols(), "A");
    require_finite(F, "F");
    require_finite(Y, "Y");
    require_finite(B, "B");
    require_finite(A, "A");
    const auto c = Y.cols();
    LossTerms t{};
    t.prediction = ((F - Y) * B).squaredNorm();
    t.recovery = (Y - Y * B * A).squaredNorm();
    t.identity = hp.lambda1 * (B - Matrix::Identity(c, c)).squaredNorm();
    t.sparsity = hp.lambda2 * norm_21(B);
    return t;
}

double loss(const Matrix& F, const Matrix& Y, const SelectionMatrix& B, const CorrelationMatrix& A,
            const Hyperparams& hp) {
    return loss_terms(F, Y, B, A, hp).total();
}

Matrix grad_B(const Matrix& F, const Matrix& Y, const SelectionMatrix& B, const CorrelationMatrix& A,
              const Hyperparams& hp) {
    require_same_shape(F, Y);
    require_square(B, Y.cols(), "B");
    require_square(A, Y.cols(), "A");
    require_finite(F, "F");
    require_finite(Y, "Y");
    require_finite(B, "B");
    require_finite(A, "A");
    const auto c = Y.cols();
    const Matrix residual = F - Y;
    const Matrix recovery = Y - Y * B * A;
    const Vector reweight = B.rowwise().norm().unaryExpr(
        [eps = hp.epsilon_row](double r) { return 1.0 / (2.0 * std::max(r, eps)); });

    Matrix g = 2.0 * (residual.transpose() * residual) * B;
    g.noalias() -= 2.0 * Y.transpose() * recovery * A.transpose();
    g += 2.0 * hp.lambda1 * (B - Matrix::Identity(c, c));
    g += 2.0 * hp.lambda2 * (reweight.asDiagonal() * B);
    return g;
}

Matrix grad_A(const Matrix& Y, const SelectionMatrix& B, const CorrelationMatrix& A) {
    require_square(B, Y.cols(), "B");
    require_square(A, Y.cols(), "A");
    require_finite(Y, "Y");
    require_finite(B, "B");
    require_finite(A, "A");
    return -2.0 * B.transpose() * Y.transpose() * (Y - Y * B * A);
}

Matrix grad_F(const Matrix& F, const Matrix& Y, const SelectionMatrix& B) {
    require_same_shape(F, Y);
    require_square(B, Y.cols(), "B");
    return 2.0 * (F - Y) * (B * B.transpose());
}

}  // namespace splmll
