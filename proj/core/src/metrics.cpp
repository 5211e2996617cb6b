#include "aspca/metrics.hpp"

#include "aspca/rates.hpp"

#include <algorithm>
#include <cmath>

namespace aspca {

namespace {

double unit_inner(const Vector& a, const Vector& b) {
  require(a.size() == b.size(), "loss: vectors must have equal length");
  const double na = a.norm();
  const double nb = b.norm();
  require(na > 0.0 && nb > 0.0, "loss: zero vector");
  require(std::abs(na - 1.0) <= 1e-8 && std::abs(nb - 1.0) <= 1e-8, "loss: inputs must be unit vectors");
  const double c = a.dot(b) / (na * nb);
  return std::clamp(c, -1.0, 1.0);
}

}  // namespace

double loss_L(const Vector& a, const Vector& b) {
  return 2.0 * (1.0 - std::abs(unit_inner(a, b)));
}

double loss_Ls(const Vector& a, const Vector& b) {
  const double c = unit_inner(a, b);
  return 1.0 - c * c;
}

double kl_spiked(const Matrix& theta1, const Matrix& theta2, std::span<const double> lambdas, double n) {
  require(theta1.rows() == theta2.rows() && theta1.cols() == theta2.cols(), "kl_spiked: frames differ in shape");
  require(static_cast<Eigen::Index>(lambdas.size()) == theta1.cols(), "kl_spiked: one spike per column");
  require(n >= 1.0, "kl_spiked: n must be at least 1");
  const Matrix cross = theta1.transpose() * theta2;  // (nu', nu) -> <theta1_nu', theta2_nu>
  double diag = 0.0;
  double off = 0.0;
  for (std::size_t nu = 0; nu < lambdas.size(); ++nu) {
    const double eta = eval_eta(lambdas[nu]);
    diag += eta * lambdas[nu];
    for (std::size_t nup = 0; nup < lambdas.size(); ++nup) {
      const double c = cross(static_cast<Eigen::Index>(nup), static_cast<Eigen::Index>(nu));
      off += eta * lambdas[nup] * c * c;
    }
  }
  return std::max(0.0, n * 0.5 * (diag - off));
}

double kl_gaussian_oracle(const Matrix& sigma1, const Matrix& sigma2, double n) {
  require(sigma1.rows() == sigma1.cols() && sigma2.rows() == sigma2.cols() && sigma1.rows() == sigma2.rows(),
          "kl_gaussian_oracle: matrices must be square and of equal size");
  const auto dim = static_cast<double>(sigma1.rows());
  auto factor = [](const Matrix& s) {
    Eigen::LDLT<Matrix> ldlt(s);
    if (ldlt.info() != Eigen::Success) fail(ErrorKind::numerical, "kl_gaussian_oracle: factorization failed");
    const Vector d = ldlt.vectorD();
    const double dmax = d.cwiseAbs().maxCoeff();
    if (d.minCoeff() <= 1e-12 * std::max(1.0, dmax)) {
      fail(ErrorKind::numerical, "kl_gaussian_oracle: matrix is not positive definite");
    }
    return ldlt;
  };
  const auto l1 = factor(sigma1);
  const auto l2 = factor(sigma2);
  const double logdet1 = l1.vectorD().array().log().sum();
  const double logdet2 = l2.vectorD().array().log().sum();
  const double trace = l2.solve(sigma1).trace();
  return n * 0.5 * (trace - dim + logdet2 - logdet1);
}

}  // namespace aspca
