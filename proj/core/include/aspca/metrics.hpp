#pragma once

#include "aspca/types.hpp"

#include <span>

namespace aspca {

// Sign-invariant loss 2(1 - |<a, b>|) = min(|a - b|^2, |a + b|^2).
// Inputs within 1e-8 of unit norm are renormalized; others are rejected.
double loss_L(const Vector& a, const Vector& b);

// Squared sine of the angle between a and b: 1 - <a, b>^2.
double loss_Ls(const Vector& a, const Vector& b);

// Kullback-Leibler discrepancy K(P_1, P_2) between n-sample Gaussian laws of two
// spiked models sharing the spectrum `lambdas` (unit noise), in closed form:
//   n [ 1/2 sum_nu eta_nu lambda_nu - 1/2 sum_{nu, nu'} eta_nu lambda_nu' <theta1_nu', theta2_nu>^2 ].
double kl_spiked(const Matrix& theta1, const Matrix& theta2, std::span<const double> lambdas, double n);

// Generic Gaussian KL, n/2 [tr(S2^-1 S1) - N + log det S2 - log det S1],
// via pivoted LDL^T. Used as an independent check on kl_spiked.
double kl_gaussian_oracle(const Matrix& sigma1, const Matrix& sigma2, double n);

}  // namespace aspca
