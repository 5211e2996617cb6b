#pragma once

#include "aspca/spiked_model.hpp"
#include "aspca/types.hpp"

#include <span>

namespace aspca {

// H_nu(Sigma) = sum_{nu' != nu} theta_nu' theta_nu'^T / (lambda_nu' - lambda_nu)
//               - (I - Theta Theta^T) / lambda_nu,   nu 1-based.
Matrix h_nu_operator(const SpikedCovariance& model, int nu);

// Resolvent-style operator H_r(A) = sum_{s != r} p_s p_s^T / (lambda_s - lambda_r)
// of a symmetric matrix at its r-th largest eigenvalue (1-based).
Matrix h_r_operator(const Matrix& A, int r);

struct PerturbationRecord {
  Vector first_order;        // p_r(A) - H_r(A) B p_r(A)
  double Delta_r = 0.0;
  double Delta_bar_r = 0.0;
  double HBp_norm = 0.0;     // |H_r(A) B p_r(A)|
  double bound_bar = 0.0;    // 10 Delta_bar^2
  double bound_fine = 0.0;   // second branch (infinity when not applicable)
  bool fine_valid = false;   // Delta_r < (sqrt 5 - 1)/4
  double residual_bound = 0.0;
  double actual_residual = 0.0;
};

// First-order eigenvector expansion of A + B around A at index r (1-based),
// with the residual bounds and the residual measured from exact
// eigendecompositions.
PerturbationRecord perturbation_expand(const Matrix& A, const Matrix& B, int r);

// E |H_nu S theta_nu|^2 for S from n unit-noise observations:
// (N - M)/(n h(lambda_nu)) + (1/n) sum_{mu != nu} (1 + lambda_mu)(1 + lambda_nu)/(lambda_mu - lambda_nu)^2.
double first_order_expectation(double n, int N, std::span<const double> lambdas, int nu);

}  // namespace aspca
