#include "aspca/estimators.hpp"

#include "aspca/linalg.hpp"
#include "aspca/rates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace aspca {

void EstimatorConfig::validate() const {
  const bool gamma1_off = std::isinf(gamma1) && gamma1 < 0.0;
  require(gamma1_off || gamma1 > 0.0, "estimator config: gamma1 must be positive (or -inf to disable selection)");
  require(gamma1_prime > 0.0 && gamma1_bar > gamma1_prime, "estimator config: need gamma1_bar > gamma1_prime > 0");
  require(kappa > 2.0, "estimator config: kappa must exceed 2");
  require(gamma2 > 0.0, "estimator config: gamma2 must be positive");
  require(gamma3 >= 0.0, "estimator config: gamma3 must be nonnegative");
  if (M_known) require(*M_known >= 1, "estimator config: M_known must be positive");
  if (sigma2_known) require(*sigma2_known > 0.0, "estimator config: sigma2_known must be positive");
}

CovarianceSource CovarianceSource::from_matrix(Matrix S, int n) {
  require(S.rows() == S.cols() && S.rows() >= 1, "covariance source: matrix must be square and nonempty");
  require(n >= 1, "covariance source: n must be positive");
  CovarianceSource s;
  s.dim_ = static_cast<int>(S.rows());
  s.n_ = n;
  s.diag_ = S.diagonal();
  s.store_ = std::move(S);
  return s;
}

CovarianceSource CovarianceSource::from_data(const Matrix& X, bool center) {
  require(X.rows() >= 1 && X.cols() >= 1, "covariance source: empty dataset");
  CovarianceSource s;
  s.has_data_ = true;
  s.dim_ = static_cast<int>(X.cols());
  s.n_ = static_cast<int>(X.rows());
  s.store_ = X;
  if (center) {
    require(X.rows() >= 2, "covariance source: centering needs at least two observations");
    s.store_.rowwise() -= X.colwise().mean();
    s.divisor_ = static_cast<double>(X.rows() - 1);
  } else {
    s.divisor_ = static_cast<double>(X.rows());
  }
  s.diag_ = s.store_.colwise().squaredNorm().transpose() / s.divisor_;
  return s;
}

Matrix CovarianceSource::block(const Indices& rows, const Indices& cols) const {
  Matrix b;
  if (has_data_) {
    b.noalias() = store_(Eigen::all, rows).transpose() * store_(Eigen::all, cols);
    b *= scale_ / divisor_;
  } else {
    b = scale_ * store_(rows, cols);
  }
  if (rows == cols) b = 0.5 * (b + b.transpose()).eval();
  return b;
}

Matrix CovarianceSource::full() const {
  if (!has_data_) return scale_ * store_;
  Matrix s = (scale_ / divisor_) * (store_.transpose() * store_);
  return 0.5 * (s + s.transpose());
}

Matrix CovarianceSource::normalized_data() const {
  require(has_data_, "covariance source: no data matrix");
  return std::sqrt(scale_ / divisor_) * store_;
}

void CovarianceSource::rescale(double factor) {
  require(factor > 0.0 && std::isfinite(factor), "covariance source: rescale factor must be positive");
  scale_ *= factor;
  diag_ *= factor;
}

Matrix sample_covariance(const Matrix& X) {
  require(X.rows() >= 1 && X.cols() >= 1, "sample_covariance: empty dataset");
  Matrix s = X.transpose() * X / static_cast<double>(X.rows());
  return 0.5 * (s + s.transpose());
}

double estimate_sigma2(const Vector& diagonal) {
  require(diagonal.size() >= 1, "estimate_sigma2: empty diagonal");
  std::vector<double> d(diagonal.data(), diagonal.data() + diagonal.size());
  const std::size_t mid = d.size() / 2;
  std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(mid), d.end());
  const double upper = d[mid];
  if (d.size() % 2 == 1) return upper;
  const double lower = *std::max_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

double estimate_sigma2(const Matrix& S) { return estimate_sigma2(Vector(S.diagonal())); }

double selection_threshold(double gamma, int n, int N) {
  return gamma * std::sqrt(std::log(static_cast<double>(std::max(n, N))) / n);
}

double alpha_n(int p, int n) {
  require(n >= 1 && p >= 0, "alpha_n: need n >= 1 and p >= 0");
  const double r = static_cast<double>(p) / n;
  const double big = std::max(n, p);
  return 2.0 * std::sqrt(r) + r + 6.0 * std::max(r, 1.0) * std::sqrt(std::log(big) / big);
}

namespace {

Indices select_above(const Vector& diag, double level) {
  Indices out;
  for (Eigen::Index k = 0; k < diag.size(); ++k) {
    if (diag(k) > level) out.push_back(static_cast<int>(k));
  }
  return out;
}

Indices all_indices(int dim) {
  Indices out(static_cast<std::size_t>(dim));
  for (int k = 0; k < dim; ++k) out[static_cast<std::size_t>(k)] = k;
  return out;
}

// Leading `count` eigenpairs of the principal block on `idx`, lifted to R^N.
struct BlockEigen {
  Vector values;
  Matrix local;   // |idx| x count
  Matrix padded;  // N x count
};

BlockEigen block_eigen(const CovarianceSource& S, const Indices& idx, int count) {
  BlockEigen out;
  const EigenPairs ep = sym_eigen(S.block(idx, idx));
  out.values = ep.values.head(count);
  out.local = ep.vectors.leftCols(count);
  out.padded = Matrix::Zero(S.dim(), count);
  for (int j = 0; j < count; ++j) out.padded.col(j) = zero_pad(out.local.col(j), idx, S.dim());
  return out;
}

void fill_opca_fallback(EstimationResult& r, const CovarianceSource& S, int M, const std::string& reason) {
  r.fallback_used = true;
  r.fallback_reason = reason;
  r.M_hat = M;
  r.lambda_tilde.clear();
  r.eigvecs.resize(S.dim(), 0);
  if (M > 0) {
    Vector values;
    r.eigvecs = opca(S, M, &values);
    for (int j = 0; j < M; ++j) r.lambda_tilde.push_back(values(j) - 1.0);
  }
  r.eigvecs_thresholded = r.eigvecs;
  r.threshold_skipped.assign(static_cast<std::size_t>(M), true);
  r.threshold_degenerate.assign(static_cast<std::size_t>(M), false);
}

}  // namespace

Matrix opca(const CovarianceSource& S, int M, Vector* eigenvalues) {
  const int N = S.dim();
  const int n = S.n();
  require(M >= 1 && M <= std::min(n, N), "opca: M must lie in [1, min(n, N)]");
  if (S.has_data() && N > n) {
    const Matrix D = S.normalized_data();
    Matrix G = D * D.transpose();
    G = 0.5 * (G + G.transpose()).eval();
    const EigenPairs ep = sym_eigen(G);
    Matrix out(N, M);
    for (int j = 0; j < M; ++j) {
      if (!(ep.values(j) > 0.0)) fail(ErrorKind::numerical, "opca: sample covariance has rank below M");
      out.col(j) = D.transpose() * ep.vectors.col(j);
      out.col(j).normalize();
      normalize_sign(out.col(j));
    }
    if (eigenvalues) *eigenvalues = ep.values.head(M);
    return out;
  }
  const EigenPairs ep = sym_eigen(S.full());
  if (eigenvalues) *eigenvalues = ep.values.head(M);
  return ep.vectors.leftCols(M);
}

Matrix opca(const Matrix& S, int M) {
  require(S.rows() == S.cols(), "opca: matrix must be square");
  require(M >= 1 && M <= S.rows(), "opca: M out of range");
  return sym_eigen(S).vectors.leftCols(M);
}

EstimationResult spca(const CovarianceSource& S, double gamma_n, int M) {
  require(gamma_n > 0.0, "spca: threshold must be positive");
  require(M >= 1 && M <= std::min(S.n(), S.dim()), "spca: M must lie in [1, min(n, N)]");
  EstimationResult r;
  r.sigma2_hat = 1.0 / S.scale();
  r.I1 = select_above(S.diagonal(), 1.0 + gamma_n);
  const int m = std::min<int>(S.n(), static_cast<int>(r.I1.size()));
  if (m < M) {
    fill_opca_fallback(r, S, M, r.I1.empty() ? "no coordinate passed the variance threshold"
                                             : "fewer selected coordinates than components");
  } else {
    const BlockEigen be = block_eigen(S, r.I1, M);
    r.M_hat = M;
    r.eigvecs = be.padded;
    r.eigvecs_thresholded = be.padded;
    for (int j = 0; j < M; ++j) r.lambda_tilde.push_back(be.values(j) - 1.0);
    r.threshold_skipped.assign(static_cast<std::size_t>(M), true);
    r.threshold_degenerate.assign(static_cast<std::size_t>(M), false);
  }
  for (double l : r.lambda_tilde) r.eigenvalue_estimates.push_back(r.sigma2_hat * l);
  return r;
}

int estimate_M(const CovarianceSource& S, const EstimatorConfig& config) {
  const int n = S.n();
  const int N = S.dim();
  const Indices bar = select_above(S.diagonal(), 1.0 + selection_threshold(config.gamma1_bar, n, N));
  if (bar.empty()) return 0;
  const Indices prime = select_above(S.diagonal(), 1.0 + selection_threshold(config.gamma1_prime, n, N));
  const double level = 1.0 + alpha_n(static_cast<int>(prime.size()), n);
  const int m_bar = std::min<int>(n, static_cast<int>(bar.size()));
  Eigen::SelfAdjointEigenSolver<Matrix> solver(S.block(bar, bar), Eigen::EigenvaluesOnly);
  const Vector values = solver.eigenvalues().reverse();
  int M_hat = 0;
  for (int k = 0; k < m_bar; ++k) {
    if (values(k) > level) M_hat = k + 1;
  }
  return M_hat;
}

ThresholdResult hard_threshold(const Vector& v, double threshold) {
  require(threshold >= 0.0, "hard_threshold: threshold must be nonnegative");
  require(v.size() > 0 && v.norm() > 0.0, "hard_threshold: zero vector");
  ThresholdResult out;
  out.vec = v;
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    if (std::abs(v(k)) <= threshold) out.vec(k) = 0.0;
  }
  const double norm = out.vec.norm();
  if (norm > 0.0) {
    out.vec /= norm;
    return out;
  }
  Eigen::Index best = 0;
  v.cwiseAbs().maxCoeff(&best);
  out.vec.setZero();
  out.vec(best) = v(best) > 0.0 ? 1.0 : -1.0;
  out.degenerate = true;
  return out;
}

EstimationResult aspca(CovarianceSource S, const EstimatorConfig& config) {
  config.validate();
  const int n = S.n();
  const int N = S.dim();
  EstimationResult r;

  r.sigma2_hat = config.sigma2_known.value_or(estimate_sigma2(S.diagonal()));
  if (!(r.sigma2_hat > 0.0)) fail(ErrorKind::numerical, "aspca: noise variance estimate is not positive");
  S.rescale(1.0 / r.sigma2_hat);

  const double L = std::log(static_cast<double>(std::max(n, N)));
  const bool select_all = std::isinf(config.gamma1) && config.gamma1 < 0.0;

  // 1: coordinates with large sample variance.
  r.I1 = select_all ? all_indices(N) : select_above(S.diagonal(), 1.0 + selection_threshold(config.gamma1, n, N));

  // 3 (needed before 2 to know how many pairs to keep).
  const int M_hat = config.M_known.value_or(estimate_M(S, config));
  auto finish = [&] {
    for (double l : r.lambda_tilde) r.eigenvalue_estimates.push_back(r.sigma2_hat * l);
    return r;
  };

  if (r.I1.empty()) {
    fill_opca_fallback(r, S, std::min(M_hat, std::min(n, N)), "step 1: first-stage selection is empty");
    return finish();
  }
  if (M_hat == 0) {
    r.eigvecs.resize(N, 0);
    r.eigvecs_thresholded.resize(N, 0);
    return finish();
  }

  // 2: eigenanalysis of the selected block; at most min(n, |I1|) pairs exist.
  const int m1 = std::min<int>(n, static_cast<int>(r.I1.size()));
  const int k1 = std::min(M_hat, m1);
  const BlockEigen first = block_eigen(S, r.I1, k1);

  // 4-5: second-stage selection through the filter Q = S_{I1^c, I1} E.
  const Indices rest = complement(r.I1, N);
  if (!rest.empty() && first.values(k1 - 1) > 0.0) {
    Matrix E = first.local;
    for (int j = 0; j < k1; ++j) E.col(j) /= std::sqrt(first.values(j));
    const Matrix Q = S.block(rest, r.I1) * E;
    const Vector T = Q.rowwise().squaredNorm();
    const double g2 = config.gamma2 * (std::sqrt(L / n) + std::sqrt(static_cast<double>(M_hat) / n) / config.kappa);
    for (std::size_t i = 0; i < rest.size(); ++i) {
      if (T(static_cast<Eigen::Index>(i)) > g2 * g2) r.I2.push_back(rest[i]);
    }
  }

  // 6: eigenanalysis on the union.
  Indices I;
  I.reserve(r.I1.size() + r.I2.size());
  std::merge(r.I1.begin(), r.I1.end(), r.I2.begin(), r.I2.end(), std::back_inserter(I));
  if (std::min<int>(n, static_cast<int>(I.size())) < M_hat) {
    fill_opca_fallback(r, S, std::min(M_hat, std::min(n, N)), "step 6: fewer selected coordinates than components");
    return finish();
  }
  const BlockEigen second = block_eigen(S, I, M_hat);
  r.M_hat = M_hat;
  r.eigvecs = second.padded;
  for (int j = 0; j < M_hat; ++j) {
    r.lambda_tilde.push_back(j < k1 ? first.values(j) - 1.0 : second.values(j) - 1.0);
  }

  // 7: hard thresholding.
  r.eigvecs_thresholded = r.eigvecs;
  r.threshold_skipped.assign(static_cast<std::size_t>(M_hat), false);
  r.threshold_degenerate.assign(static_cast<std::size_t>(M_hat), false);
  for (int j = 0; j < M_hat; ++j) {
    const double lt = r.lambda_tilde[static_cast<std::size_t>(j)];
    if (!(lt > 0.0)) {
      r.threshold_skipped[static_cast<std::size_t>(j)] = true;
      continue;
    }
    const double g3 = config.gamma3 * std::sqrt(L / (n * eval_h(lt)));
    const ThresholdResult t = hard_threshold(r.eigvecs.col(j), g3);
    r.eigvecs_thresholded.col(j) = t.vec;
    r.threshold_degenerate[static_cast<std::size_t>(j)] = t.degenerate;
  }
  return finish();
}

}  // namespace aspca
