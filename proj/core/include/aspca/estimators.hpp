#pragma once

#include "aspca/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace aspca {

struct EstimatorConfig {
  double gamma1 = 4.0;
  double gamma1_bar = 9.0;
  double gamma1_prime = 3.0;
  double kappa = 2.1;
  double gamma2 = 2.1 * 1.224744871391589;  // sqrt(3/2) * kappa
  double gamma3 = 3.0;
  std::optional<int> M_known;
  std::optional<double> sigma2_known;
  // Subtract column means and divide by n - 1 instead of n.
  bool center = false;

  // gamma1 = -infinity switches off first-stage selection (every coordinate
  // is kept); gamma3 = 0 switches off thresholding.
  void validate() const;
};

// A sample covariance S = X^T X / n, held either densely or through the data
// matrix. With data, blocks are formed on demand so the full N x N matrix is
// never materialized. A scale factor (1/sigma^2 after noise estimation) is
// applied to every entry.
class CovarianceSource {
 public:
  static CovarianceSource from_matrix(Matrix S, int n);
  static CovarianceSource from_data(const Matrix& X, bool center = false);

  int dim() const noexcept { return dim_; }
  int n() const noexcept { return n_; }
  bool has_data() const noexcept { return has_data_; }
  double scale() const noexcept { return scale_; }

  const Vector& diagonal() const noexcept { return diag_; }
  Matrix block(const Indices& rows, const Indices& cols) const;
  Matrix full() const;
  // Data matrix with the normalization folded in: S = D^T D.
  Matrix normalized_data() const;

  void rescale(double factor);

 private:
  CovarianceSource() = default;

  bool has_data_ = false;
  Matrix store_;  // S, or the (centered) data matrix
  Vector diag_;
  double divisor_ = 1.0;
  double scale_ = 1.0;
  int dim_ = 0;
  int n_ = 0;
};

struct EstimationResult {
  int M_hat = 0;
  std::vector<double> lambda_tilde;          // l_hat_j - 1 on the rescaled data
  std::vector<double> eigenvalue_estimates;  // sigma2_hat * lambda_tilde
  Matrix eigvecs;                            // N x M_hat, zero-padded
  Matrix eigvecs_thresholded;                // N x M_hat
  Indices I1;
  Indices I2;
  double sigma2_hat = 1.0;
  bool fallback_used = false;
  std::string fallback_reason;
  std::vector<bool> threshold_skipped;     // lambda_tilde <= 0 at the thresholding step
  std::vector<bool> threshold_degenerate;  // every entry fell below the threshold
};

// S = X^T X / n with rows as observations.
Matrix sample_covariance(const Matrix& X);

// Median of diag(S).
double estimate_sigma2(const Vector& diagonal);
double estimate_sigma2(const Matrix& S);

// gamma * sqrt(log(max(n, N)) / n)
double selection_threshold(double gamma, int n, int N);

// 2 sqrt(p/n) + p/n + 6 max(p/n, 1) sqrt(log(max(n, p)) / max(n, p))
double alpha_n(int p, int n);

// Leading M eigenvectors of S, sign-normalized. Uses the n x n Gram matrix
// when the source holds data with N > n.
Matrix opca(const CovarianceSource& S, int M, Vector* eigenvalues = nullptr);
Matrix opca(const Matrix& S, int M);

// Diagonal thresholding at S_kk > 1 + gamma_n followed by eigenanalysis of
// the selected block. An empty (or too small) selection falls back to OPCA.
EstimationResult spca(const CovarianceSource& S, double gamma_n, int M);

int estimate_M(const CovarianceSource& S, const EstimatorConfig& config);

// The full two-stage selection, eigenanalysis and hard-thresholding pipeline.
// The source is rescaled by 1/sigma2 (known or estimated) before any step.
EstimationResult aspca(CovarianceSource S, const EstimatorConfig& config);

struct ThresholdResult {
  Vector vec;
  bool degenerate = false;
};

// Zero entries with |v_k| <= threshold and renormalize. If nothing survives,
// returns the basis vector of the largest-magnitude coordinate (flagged).
ThresholdResult hard_threshold(const Vector& v, double threshold);

}  // namespace aspca
