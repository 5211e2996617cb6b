#include "aspca/perturbation.hpp"

#include "aspca/linalg.hpp"
#include "aspca/rates.hpp"

#include <cmath>
#include <limits>

namespace aspca {

Matrix h_nu_operator(const SpikedCovariance& model, int nu) {
  const int M = model.rank();
  const int N = model.dim();
  require(nu >= 1 && nu <= M, "h_nu_operator: spike index out of range");
  const auto& lambdas = model.lambdas();
  const Matrix& theta = model.theta();
  const double ln = lambdas[static_cast<std::size_t>(nu - 1)];
  Matrix h = -(Matrix::Identity(N, N) - theta * theta.transpose()) / ln;
  for (int mu = 1; mu <= M; ++mu) {
    if (mu == nu) continue;
    const double d = lambdas[static_cast<std::size_t>(mu - 1)] - ln;
    require(d != 0.0, "h_nu_operator: spikes must be distinct");
    h += theta.col(mu - 1) * theta.col(mu - 1).transpose() / d;
  }
  return h;
}

namespace {

constexpr double kGapTol = 1e-10;

Matrix resolvent(const EigenPairs& ep, int r) {
  const Eigen::Index t = ep.values.size();
  const double lr = ep.values(r - 1);
  Matrix h = Matrix::Zero(t, t);
  for (Eigen::Index s = 0; s < t; ++s) {
    if (s == r - 1) continue;
    h += ep.vectors.col(s) * ep.vectors.col(s).transpose() / (ep.values(s) - lr);
  }
  return h;
}

double min_gap(const Vector& values, int r) {
  double gap = std::numeric_limits<double>::infinity();
  for (Eigen::Index s = 0; s < values.size(); ++s) {
    if (s != r - 1) gap = std::min(gap, std::abs(values(s) - values(r - 1)));
  }
  return gap;
}

}  // namespace

Matrix h_r_operator(const Matrix& A, int r) {
  require(r >= 1 && r <= A.rows(), "h_r_operator: index out of range");
  const EigenPairs ep = sym_eigen(A);
  require(min_gap(ep.values, r) > kGapTol, "h_r_operator: eigenvalue is not simple");
  return resolvent(ep, r);
}

PerturbationRecord perturbation_expand(const Matrix& A, const Matrix& B, int r) {
  require(A.rows() == A.cols() && B.rows() == B.cols() && A.rows() == B.rows(),
          "perturbation_expand: matrices must be square and of equal size");
  require(r >= 1 && r <= A.rows(), "perturbation_expand: index out of range");
  const EigenPairs ea = sym_eigen(A);
  const EigenPairs eab = sym_eigen(A + B);
  const double gap = min_gap(ea.values, r);
  require(A.rows() == 1 || gap > kGapTol, "perturbation_expand: eigenvalue is not simple");

  PerturbationRecord out;
  const Matrix H = resolvent(ea, r);
  const Vector p = ea.vectors.col(r - 1);
  const Vector hbp = H * (B * p);
  out.first_order = p - hbp;
  out.HBp_norm = hbp.norm();
  const double shift = std::abs(eab.values(r - 1) - ea.values(r - 1));
  out.Delta_r = 0.5 * (spectral_norm(H * B) + shift * sym_spectral_norm(H));
  out.Delta_bar_r = A.rows() == 1 ? 0.0 : sym_spectral_norm(B) / gap;
  out.bound_bar = 10.0 * out.Delta_bar_r * out.Delta_bar_r;

  out.fine_valid = out.Delta_r < (std::sqrt(5.0) - 1.0) / 4.0;
  out.bound_fine = std::numeric_limits<double>::infinity();
  if (out.fine_valid) {
    const double a = 2.0 * out.Delta_r * (1.0 + 2.0 * out.Delta_r);
    out.bound_fine = out.HBp_norm * (a / (1.0 - a) + out.HBp_norm / ((1.0 - a) * (1.0 - a)));
  }
  out.residual_bound = std::min(out.bound_bar, out.bound_fine);

  Vector q = eab.vectors.col(r - 1);
  if (q.dot(p) < 0.0) q = -q;
  out.actual_residual = (q - p + hbp).norm();
  return out;
}

double first_order_expectation(double n, int N, std::span<const double> lambdas, int nu) {
  const int M = static_cast<int>(lambdas.size());
  require(nu >= 1 && nu <= M && N >= M && n >= 1.0, "first_order_expectation: invalid arguments");
  const double ln = lambdas[static_cast<std::size_t>(nu - 1)];
  double e = (N - M) / (n * eval_h(ln));
  for (int mu = 1; mu <= M; ++mu) {
    if (mu == nu) continue;
    const double lm = lambdas[static_cast<std::size_t>(mu - 1)];
    e += (1.0 + lm) * (1.0 + ln) / ((lm - ln) * (lm - ln)) / n;
  }
  return e;
}

}  // namespace aspca
