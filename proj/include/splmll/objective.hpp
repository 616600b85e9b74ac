#pragma once

#include "splmll/dataset_io.hpp"

namespace splmll {

// The landmark selection matrix B and label correlation matrix A are plain
// C x C matrices; the diagonal structure of B is enforced by the trainer.
using SelectionMatrix = Matrix;
using CorrelationMatrix = Matrix;

struct Hyperparams {
    double lambda1 = 0.1;       // weight of ||B - I||_F^2
    double lambda2 = 0.1;       // weight of ||B||_{2,1}
    double epsilon_row = 1e-8;  // floor on row norms in the reweighting matrix

    void validate() const;
};

// Sum over rows of the row Euclidean norm.
double norm_21(const Matrix& m);

// The four terms of the objective, summed over instances (not averaged).
struct LossTerms {
    double prediction;  // ||(F - Y) B||_F^2
    double recovery;    // ||Y - Y B A||_F^2
    double identity;    // lambda1 ||B - I||_F^2
    double sparsity;    // lambda2 ||B||_{2,1}

    double total() const { return prediction + recovery + identity + sparsity; }
};

LossTerms loss_terms(const Matrix& F, const Matrix& Y, const SelectionMatrix& B, const CorrelationMatrix& A,
                     const Hyperparams& hp);
double loss(const Matrix& F, const Matrix& Y, const SelectionMatrix& B, const CorrelationMatrix& A,
            const Hyperparams& hp);

// dL/dB = 2 (F-Y)^T (F-Y) B - 2 Y^T (Y - YBA) A^T + 2 lambda1 (B - I) + 2 lambda2 D B,
// with D_ii = 1 / (2 max(||B_i||, epsilon_row)).
Matrix grad_B(const Matrix& F, const Matrix& Y, const SelectionMatrix& B, const CorrelationMatrix& A,
              const Hyperparams& hp);

// dL/dA = -2 B^T Y^T (Y - YBA).
Matrix grad_A(const Matrix& Y, const SelectionMatrix& B, const CorrelationMatrix& A);

// dL/dF = 2 (F - Y) B B^T.
Matrix grad_F(const Matrix& F, const Matrix& Y, const SelectionMatrix& B);

}  // namespace splmll
