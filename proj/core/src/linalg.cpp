#include "aspca/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace aspca {

void normalize_sign(Eigen::Ref<Vector> v) {
  if (v.size() == 0) return;
  Eigen::Index best = 0;
  double best_abs = std::abs(v(0));
  for (Eigen::Index k = 1; k < v.size(); ++k) {
    // Strict comparison keeps the lowest index on ties.
    if (std::abs(v(k)) > best_abs) {
      best_abs = std::abs(v(k));
      best = k;
    }
  }
  if (v(best) < 0.0) v = -v;
}

EigenPairs sym_eigen(const Matrix& a) {
  require(a.rows() == a.cols(), "sym_eigen: matrix must be square");
  EigenPairs out;
  if (a.rows() == 0) return out;
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  const double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
  require(asym <= 1e-10 * scale, "sym_eigen: matrix is not symmetric");

  Eigen::SelfAdjointEigenSolver<Matrix> solver(a);
  if (solver.info() != Eigen::Success) fail(ErrorKind::numerical, "sym_eigen: eigensolver failed");

  const Eigen::Index t = a.rows();
  out.values = solver.eigenvalues().reverse();
  out.vectors = solver.eigenvectors().rowwise().reverse();
  for (Eigen::Index k = 0; k < t; ++k) normalize_sign(out.vectors.col(k));
  return out;
}

double sym_spectral_norm(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> solver(a, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

double spectral_norm(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(a);
  return svd.singularValues()(0);
}

double gram_residual(const Matrix& frame) {
  if (frame.cols() == 0) return 0.0;
  const Matrix gram = frame.transpose() * frame;
  return (gram - Matrix::Identity(frame.cols(), frame.cols())).cwiseAbs().maxCoeff();
}

Matrix principal_submatrix(const Matrix& a, const Indices& idx) {
  return a(idx, idx);
}

Indices complement(const Indices& idx, int dim) {
  Indices out;
  out.reserve(static_cast<std::size_t>(std::max(0, dim - static_cast<int>(idx.size()))));
  std::size_t j = 0;
  for (int k = 0; k < dim; ++k) {
    if (j < idx.size() && idx[j] == k) {
      ++j;
    } else {
      out.push_back(k);
    }
  }
  return out;
}

Vector zero_pad(const Vector& v, const Indices& idx, int dim) {
  Vector out = Vector::Zero(dim);
  for (std::size_t j = 0; j < idx.size(); ++j) out(idx[j]) = v(static_cast<Eigen::Index>(j));
  return out;
}

}  // namespace aspca
