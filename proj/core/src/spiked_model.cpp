#include "aspca/spiked_model.hpp"

#include "aspca/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace aspca {

void LqSpaceSpec::validate() const {
  require(q > 0.0 && q < 2.0, "l_q space: q must lie in (0, 2)");
  require(rank >= 1, "l_q space: rank must be at least 1");
  require(rank < ambient_dim, "l_q space: rank must be below the ambient dimension");
  require(static_cast<int>(radii.size()) == rank, "l_q space: need one radius per eigenvector");
  for (double c : radii) require(c >= 1.0, "l_q space: every radius must be >= 1");
}

SpikedCovariance::SpikedCovariance(std::vector<double> lambdas, Matrix theta, double sigma2)
    : lambdas_(std::move(lambdas)), theta_(std::move(theta)), sigma2_(sigma2) {
  require(!lambdas_.empty(), "spiked model: need at least one spike");
  require(static_cast<Eigen::Index>(lambdas_.size()) == theta_.cols(),
          "spiked model: one eigenvector per spike");
  require(theta_.rows() >= theta_.cols(), "spiked model: more spikes than dimensions");
  require(sigma2_ >= 0.0, "spiked model: noise variance must be nonnegative");
  for (std::size_t k = 0; k < lambdas_.size(); ++k) {
    require(lambdas_[k] > 0.0, "spiked model: spikes must be positive");
    if (k > 0) require(lambdas_[k] < lambdas_[k - 1], "spiked model: spikes must be strictly descending");
  }
  require(gram_residual(theta_) <= 1e-8, "spiked model: eigenvectors are not orthonormal");
}

Matrix SpikedCovariance::covariance() const {
  Matrix sigma = sigma2_ * Matrix::Identity(dim(), dim());
  for (int nu = 0; nu < rank(); ++nu) {
    sigma.noalias() += lambdas_[nu] * theta_.col(nu) * theta_.col(nu).transpose();
  }
  return sigma;
}

SpikedCovariance build_covariance(std::vector<double> lambdas, Matrix theta, double sigma2) {
  return SpikedCovariance(std::move(lambdas), std::move(theta), sigma2);
}

Dataset sample_dataset(const SpikedCovariance& model, int n, Rng& rng) {
  require(n >= 1, "sample_dataset: n must be positive");
  const int big_n = model.dim();
  const int m = model.rank();
  Dataset out;
  out.seed = rng.seed();
  out.generator = std::string(Rng::generator_name);
  out.factors.resize(n, m);
  out.observations.resize(n, big_n);
  // Row-major draw order (factors then noise, per observation) keeps datasets
  // reproducible independent of Eigen's storage order.
  Matrix noise(n, big_n);
  for (int i = 0; i < n; ++i) {
    for (int nu = 0; nu < m; ++nu) out.factors(i, nu) = rng.normal();
    for (int k = 0; k < big_n; ++k) noise(i, k) = rng.normal();
  }
  Matrix scaled_theta = model.theta();
  for (int nu = 0; nu < m; ++nu) scaled_theta.col(nu) *= std::sqrt(model.lambdas()[nu]);
  out.observations.noalias() = out.factors * scaled_theta.transpose();
  out.observations += std::sqrt(model.sigma2()) * noise;
  return out;
}

double lq_sum(const Vector& x, double q) {
  double s = 0.0;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    if (x(k) != 0.0) s += std::pow(std::abs(x(k)), q);
  }
  return s;
}

MembershipReport membership_report(const Matrix& theta, const LqSpaceSpec& spec) {
  require(theta.cols() == spec.rank, "membership_report: column count must equal rank");
  require(static_cast<int>(spec.radii.size()) == spec.rank, "membership_report: one radius per column");
  MembershipReport report;
  report.gram_residual = gram_residual(theta);
  report.member = report.gram_residual <= 1e-8 && theta.rows() == spec.ambient_dim;
  for (Eigen::Index nu = 0; nu < theta.cols(); ++nu) {
    const double s = lq_sum(theta.col(nu), spec.q);
    const double cap = std::pow(spec.radii[nu], spec.q);
    const bool ok = s <= cap * (1.0 + 1e-12);
    report.lq_sums.push_back(s);
    report.lq_norms.push_back(std::pow(s, 1.0 / spec.q));
    report.column_member.push_back(ok);
    report.member = report.member && ok;
  }
  return report;
}

namespace {

// Partial Fisher-Yates over `pool`; returns the first `size` entries, sorted.
Indices draw_subset(int size, Rng& rng, std::vector<int>& pool) {
  for (int j = 0; j < size; ++j) {
    std::uniform_int_distribution<int> pick(j, static_cast<int>(pool.size()) - 1);
    std::swap(pool[j], pool[pick(rng.engine())]);
  }
  Indices out(pool.begin(), pool.begin() + size);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

Matrix make_sparse_basis(const LqSpaceSpec& spec, std::span<const int> support_sizes,
                         Rng& rng, const BasisOptions& options) {
  spec.validate();
  const int big_n = spec.ambient_dim;
  const int m = spec.rank;
  require(static_cast<int>(support_sizes.size()) == m, "make_sparse_basis: one support size per column");
  int total = 0;
  for (int nu = 0; nu < m; ++nu) {
    const int s = support_sizes[nu];
    require(s >= 1, "make_sparse_basis: support sizes must be positive");
    if (s > big_n) fail(ErrorKind::infeasible, "make_sparse_basis: support larger than ambient dimension");
    total += s;
    const double cap = std::pow(spec.radii[nu], spec.q);
    // Any unit vector with s >= 2 nonzeros has sum |x|^q > 1, so C = 1 admits poles only.
    if (s >= 2 && cap <= 1.0) {
      fail(ErrorKind::infeasible, "make_sparse_basis: radius 1 admits only poles");
    }
    if (options.equal_weights && std::pow(static_cast<double>(s), 1.0 - spec.q / 2.0) > cap * (1.0 + 1e-12)) {
      fail(ErrorKind::infeasible, "make_sparse_basis: equal-weight column exceeds the l_q radius");
    }
  }
  if (options.layout == SupportLayout::disjoint && total > big_n) {
    fail(ErrorKind::infeasible, "make_sparse_basis: disjoint supports do not fit");
  }

  std::vector<int> pool(big_n);
  for (int attempt = 0; attempt < options.max_retries; ++attempt) {
    std::iota(pool.begin(), pool.end(), 0);
    std::vector<Indices> supports(m);
    if (options.layout == SupportLayout::disjoint) {
      draw_subset(total, rng, pool);
      int offset = 0;
      for (int nu = 0; nu < m; ++nu) {
        supports[nu].assign(pool.begin() + offset, pool.begin() + offset + support_sizes[nu]);
        std::sort(supports[nu].begin(), supports[nu].end());
        offset += support_sizes[nu];
      }
    } else {
      for (int nu = 0; nu < m; ++nu) {
        std::iota(pool.begin(), pool.end(), 0);
        supports[nu] = draw_subset(support_sizes[nu], rng, pool);
      }
    }

    Matrix theta = Matrix::Zero(big_n, m);
    bool ok = true;
    for (int nu = 0; nu < m && ok; ++nu) {
      const Indices& sup = supports[nu];
      const auto s = static_cast<Eigen::Index>(sup.size());
      Vector v(s);
      for (Eigen::Index j = 0; j < s; ++j) {
        v(j) = options.equal_weights ? ((rng.uniform() < 0.5 ? -1.0 : 1.0) / std::sqrt(static_cast<double>(s)))
                                     : rng.normal();
      }
      // Earlier columns restricted to this support, orthonormalized among
      // themselves; projecting v off their span keeps supp(v) inside `sup`.
      std::vector<Vector> basis;
      for (int mu = 0; mu < nu; ++mu) {
        Vector w = theta(sup, mu);
        for (const Vector& b : basis) w -= b.dot(w) * b;
        const double wn = w.norm();
        if (wn > 1e-12) basis.push_back(w / wn);
      }
      for (int pass = 0; pass < 2; ++pass) {
        for (const Vector& b : basis) v -= b.dot(v) * b;
      }
      const double norm = v.norm();
      if (norm < 1e-8) {
        ok = false;
        break;
      }
      v /= norm;
      for (Eigen::Index j = 0; j < s; ++j) theta(sup[j], nu) = v(j);
    }
    if (!ok) continue;
    if (gram_residual(theta) > 1e-10) continue;
    if (membership_report(theta, spec).member) return theta;
  }
  fail(ErrorKind::retry_exhausted, "make_sparse_basis: could not satisfy the l_q constraint");
}

}  // namespace aspca
