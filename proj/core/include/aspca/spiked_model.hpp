#pragma once

#include "aspca/random.hpp"
#include "aspca/types.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace aspca {

// The l_q parameter space for M orthonormal eigenvectors in R^N:
// every column satisfies sum_k |theta_k|^q <= C_nu^q.
struct LqSpaceSpec {
  double q = 1.0;
  std::vector<double> radii;  // C_1, ..., C_M, each >= 1
  int ambient_dim = 0;        // N
  int rank = 0;               // M

  void validate() const;
};

// Sigma = sum_nu lambda_nu theta_nu theta_nu^T + sigma2 * I.
class SpikedCovariance {
 public:
  // Throws unless lambdas are positive and strictly descending and theta has
  // orthonormal columns (Gram residual <= 1e-8). sigma2 = 0 is accepted and
  // yields noiseless samples.
  SpikedCovariance(std::vector<double> lambdas, Matrix theta, double sigma2 = 1.0);

  const std::vector<double>& lambdas() const noexcept { return lambdas_; }
  const Matrix& theta() const noexcept { return theta_; }
  double sigma2() const noexcept { return sigma2_; }
  int dim() const noexcept { return static_cast<int>(theta_.rows()); }
  int rank() const noexcept { return static_cast<int>(theta_.cols()); }

  Matrix covariance() const;

 private:
  std::vector<double> lambdas_;
  Matrix theta_;
  double sigma2_;
};

SpikedCovariance build_covariance(std::vector<double> lambdas, Matrix theta, double sigma2 = 1.0);

// Observations are rows: X_i = sum_nu sqrt(lambda_nu) v_{nu i} theta_nu + sigma Z_i.
struct Dataset {
  Matrix observations;  // n x N
  Matrix factors;       // n x M latent v_{nu i}
  std::uint64_t seed = 0;
  std::string generator;

  int n() const noexcept { return static_cast<int>(observations.rows()); }
  int dim() const noexcept { return static_cast<int>(observations.cols()); }
};

Dataset sample_dataset(const SpikedCovariance& model, int n, Rng& rng);

enum class SupportLayout { disjoint, overlapping };

struct BasisOptions {
  SupportLayout layout = SupportLayout::disjoint;
  // Entries +-1/sqrt(s) on the support instead of Gaussian draws.
  bool equal_weights = false;
  int max_retries = 100;
};

// Draws an orthonormal N x M frame whose column nu is supported on
// support_sizes[nu] coordinates and lies in the l_q ball of radius C_nu.
// Columns are orthogonalized by Gram-Schmidt restricted to each column's own
// support, so sparsity is preserved in both layouts.
Matrix make_sparse_basis(const LqSpaceSpec& spec, std::span<const int> support_sizes,
                         Rng& rng, const BasisOptions& options = {});

struct MembershipReport {
  std::vector<double> lq_norms;  // (sum_k |theta_k|^q)^(1/q) per column
  std::vector<double> lq_sums;   // sum_k |theta_k|^q per column
  std::vector<bool> column_member;
  double gram_residual = 0.0;
  bool member = false;
};

MembershipReport membership_report(const Matrix& theta, const LqSpaceSpec& spec);

// sum_k |x_k|^q
double lq_sum(const Vector& x, double q);

}  // namespace aspca
