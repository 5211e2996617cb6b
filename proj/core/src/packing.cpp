#include "aspca/packing.hpp"

#include "aspca/metrics.hpp"
#include "aspca/spiked_model.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace aspca {

namespace {

// Advance `c` (sorted, values in [0, n)) to the next k-combination in
// lexicographic order; false when exhausted.
bool next_combination(std::vector<int>& c, int n) {
  const int k = static_cast<int>(c.size());
  int i = k - 1;
  while (i >= 0 && c[static_cast<std::size_t>(i)] == n - k + i) --i;
  if (i < 0) return false;
  ++c[static_cast<std::size_t>(i)];
  for (int j = i + 1; j < k; ++j) c[static_cast<std::size_t>(j)] = c[static_cast<std::size_t>(j - 1)] + 1;
  return true;
}

std::vector<int> first_combination(int k) {
  std::vector<int> c(static_cast<std::size_t>(k));
  std::iota(c.begin(), c.end(), 0);
  return c;
}

Matrix identity_frame(int N, int M) { return Matrix::Identity(N, M); }

LqSpaceSpec space_of(double q, std::span<const double> Cs, int N, int M) {
  LqSpaceSpec s;
  s.q = q;
  s.radii.assign(Cs.begin(), Cs.end());
  s.ambient_dim = N;
  s.rank = M;
  s.validate();
  return s;
}

void check_common(int N, int M, int nu, std::span<const double> Cs, std::span<const double> lambdas) {
  require(M >= 1 && N > M, "packing: need N > M >= 1");
  require(nu >= 1 && nu <= M, "packing: spike index out of range");
  require(static_cast<int>(Cs.size()) == M && static_cast<int>(lambdas.size()) == M,
          "packing: need one radius and one spike per component");
}

// Fill KL-to-base, pairwise loss, separation-independent diagnostics and membership.
void finalize(PackingFamily& f, double q, std::span<const double> Cs, std::span<const double> lambdas, double n) {
  const int N = static_cast<int>(f.base_point.rows());
  const int M = static_cast<int>(f.base_point.cols());
  const LqSpaceSpec space = space_of(q, Cs, N, M);
  f.members_in_space = membership_report(f.base_point, space).member;
  f.kl_to_base.clear();
  for (const Matrix& theta : f.members) {
    f.members_in_space = f.members_in_space && membership_report(theta, space).member;
    f.kl_to_base.push_back(kl_spiked(theta, f.base_point, lambdas, n));
  }
  constexpr std::size_t kPairLimit = 6000;
  const std::size_t count = f.members.size();
  f.pairwise_checked = count >= 2 && count <= kPairLimit;
  f.min_pairwise_loss = 0.0;
  if (f.pairwise_checked) {
    Matrix cols(N, static_cast<Eigen::Index>(count));
    for (std::size_t j = 0; j < count; ++j) cols.col(static_cast<Eigen::Index>(j)) = f.members[j].col(f.nu - 1);
    const Matrix gram = cols.transpose() * cols;
    double worst = 0.0;
    for (Eigen::Index i = 0; i < gram.rows(); ++i) {
      for (Eigen::Index j = i + 1; j < gram.cols(); ++j) worst = std::max(worst, std::abs(gram(i, j)));
    }
    f.min_pairwise_loss = 2.0 * (1.0 - std::min(worst, 1.0));
  }
}

// Members sqrt(1 - r^2) e_nu + r * z placed on `coords` (zero-based, |coords| = m).
void add_packing_members(PackingFamily& f, const SpherePacking& y, const Indices& coords, double r) {
  const double a = std::sqrt(1.0 - r * r);
  const double w = r / std::sqrt(static_cast<double>(y.m0));
  for (const auto& pt : y.points) {
    Matrix theta = f.base_point;
    theta.col(f.nu - 1).setZero();
    theta(f.nu - 1, f.nu - 1) = a;
    for (std::size_t i = 0; i < pt.coords.size(); ++i) {
      theta(coords[static_cast<std::size_t>(pt.coords[i])], f.nu - 1) = w * pt.signs[i];
    }
    f.members.push_back(std::move(theta));
  }
}

}  // namespace

Vector SpherePacking::dense(std::size_t j) const {
  Vector v = Vector::Zero(m);
  const auto& pt = points.at(j);
  const double w = 1.0 / std::sqrt(static_cast<double>(m0));
  for (std::size_t i = 0; i < pt.coords.size(); ++i) v(pt.coords[i]) = w * pt.signs[i];
  return v;
}

SpherePacking build_Ym_star(int m, const PackingLimits& limits) {
  SpherePacking out;
  out.m = m;
  out.m0 = (2 * m) / 9;
  require(out.m0 >= 1, "build_Ym_star: m too small (floor(2m/9) = 0)");
  require(out.m0 <= 62, "build_Ym_star: m too large for sign enumeration");
  const int k = out.m0;
  std::vector<std::vector<std::int8_t>> dense;  // accepted points as +-1/0 patterns
  std::vector<int> support = first_combination(k);
  std::uint64_t examined = 0;
  std::vector<std::int8_t> signs(static_cast<std::size_t>(k));
  do {
    for (std::uint64_t pattern = 0; pattern < (std::uint64_t{1} << k); ++pattern) {
      if (out.points.size() >= limits.max_points || examined >= limits.max_candidates) {
        out.capped = true;
        return out;
      }
      ++examined;
      for (int i = 0; i < k; ++i) {
        signs[static_cast<std::size_t>(i)] = (pattern >> (k - 1 - i)) & 1U ? std::int8_t{-1} : std::int8_t{1};
      }
      // <z, z'> <= 1/2  <=>  2 * sum over shared coordinates of s s' <= m0.
      bool ok = true;
      for (auto it = dense.rbegin(); it != dense.rend() && ok; ++it) {
        int dot = 0;
        for (int i = 0; i < k; ++i) {
          dot += (*it)[static_cast<std::size_t>(support[static_cast<std::size_t>(i)])] * signs[static_cast<std::size_t>(i)];
        }
        ok = 2 * dot <= k;
      }
      if (!ok) continue;
      std::vector<std::int8_t> d(static_cast<std::size_t>(m), 0);
      for (int i = 0; i < k; ++i) d[static_cast<std::size_t>(support[static_cast<std::size_t>(i)])] = signs[static_cast<std::size_t>(i)];
      dense.push_back(std::move(d));
      out.points.push_back({support, signs});
    }
  } while (next_combination(support, m));
  return out;
}

SupportFamily build_support_family(int N_pool, int m, int max_overlap, const PackingLimits& limits) {
  require(m >= 1, "build_support_family: m must be positive");
  if (m > N_pool) fail(ErrorKind::infeasible, "build_support_family: m exceeds the pool size");
  require(max_overlap >= 0, "build_support_family: overlap must be nonnegative");
  SupportFamily out;
  // Depth-first walk over combinations in lexicographic order. A prefix that
  // already shares more than max_overlap coordinates with an accepted set
  // cannot complete, so its subtree is skipped; the accepted family is the
  // same as plain greedy enumeration would produce.
  std::vector<std::vector<char>> member;
  std::vector<int> shared;  // per accepted set, overlap with the current prefix
  std::vector<int> c;
  c.reserve(static_cast<std::size_t>(m));
  std::uint64_t visited = 0;
  bool stop = false;

  std::function<void(int)> descend = [&](int from) {
    if (stop) return;
    if (static_cast<int>(c.size()) == m) {
      std::vector<char> bits(static_cast<std::size_t>(N_pool), 0);
      for (int x : c) bits[static_cast<std::size_t>(x)] = 1;
      member.push_back(std::move(bits));
      shared.push_back(m);
      out.sets.push_back(c);
      if (out.sets.size() >= limits.max_points) {
        out.capped = true;
        stop = true;
      }
      return;
    }
    const int remaining = m - static_cast<int>(c.size());
    for (int x = from; x <= N_pool - remaining && !stop; ++x) {
      if (++visited > limits.max_candidates) {
        out.capped = true;
        stop = true;
        return;
      }
      const std::size_t known = member.size();
      bool ok = true;
      for (std::size_t k = 0; k < known; ++k) {
        shared[k] += member[k][static_cast<std::size_t>(x)];
        ok = ok && shared[k] <= max_overlap;
      }
      c.push_back(x);
      if (ok) descend(x + 1);
      c.pop_back();
      for (std::size_t k = 0; k < known; ++k) shared[k] -= member[k][static_cast<std::size_t>(x)];
      // A set accepted inside this subtree contains the prefix plus x; once
      // the prefix is popped its overlap bookkeeping must restart from the prefix.
      for (std::size_t k = known; k < member.size(); ++k) {
        int s = 0;
        for (int y : c) s += member[k][static_cast<std::size_t>(y)];
        shared[k] = s;
      }
    }
  };
  descend(0);
  return out;
}

std::string to_string(FamilyKind kind) {
  switch (kind) {
    case FamilyKind::single_coordinate: return "single-coordinate";
    case FamilyKind::sphere_packing: return "sphere-packing";
    case FamilyKind::log_sparse: return "log-sparse";
    case FamilyKind::two_point: return "two-point";
  }
  return "single-coordinate";
}

PackingFamily build_family_a(int N, int M, int nu, double q, std::span<const double> Cs,
                             std::span<const double> lambdas, double n) {
  check_common(N, M, nu, Cs, lambdas);
  const double cq = std::pow(Cs[static_cast<std::size_t>(nu - 1)], q);
  auto excess = [&](double r) { return std::pow(1.0 - r * r, q / 2.0) + std::pow(r, q) - cq; };
  const double top = std::sqrt(0.5);
  double r = 0.999;
  if (excess(top) > 0.0) {
    double lo = 0.0;
    double hi = top;
    while (hi - lo > 1e-13) {
      const double mid = 0.5 * (lo + hi);
      (excess(mid) <= 0.0 ? lo : hi) = mid;
    }
    r = lo;
  }
  if (!(r > 0.0)) fail(ErrorKind::infeasible, "build_family_a: radius C_nu admits no spread (C_nu = 1)");

  PackingFamily f;
  f.kind = FamilyKind::single_coordinate;
  f.nu = nu;
  f.base_point = identity_frame(N, M);
  f.radius_r = r;
  f.sphere_dim_m = 1;
  f.separation = 2.0 * r * r;
  const double a = std::sqrt(1.0 - r * r);
  for (int j = M; j < N; ++j) {
    Matrix theta = f.base_point;
    theta.col(nu - 1).setZero();
    theta(nu - 1, nu - 1) = a;
    theta(j, nu - 1) = r;
    f.members.push_back(std::move(theta));
  }
  finalize(f, q, Cs, lambdas, n);
  return f;
}

PackingFamily build_family_b(double n, int N, int M, int nu, std::span<const double> lambdas, double q,
                             std::span<const double> Cs, RegimeTag regime, std::optional<double> alpha,
                             const PackingLimits& limits) {
  check_common(N, M, nu, Cs, lambdas);
  const double nh = n * eval_h(lambdas[static_cast<std::size_t>(nu - 1)]);
  const double cbar = std::pow(Cs[static_cast<std::size_t>(nu - 1)], q) - 1.0;
  if (!(cbar > 0.0)) fail(ErrorKind::infeasible, "build_family_b: need C_nu > 1");
  const double c1 = std::log(9.0 / 8.0);
  const double e = 1.0 - q / 2.0;

  double m_real = 0.0;
  double r2 = 0.0;
  switch (regime) {
    case RegimeTag::bounded_below:
      m_real = std::floor(nh);
      r2 = c1;
      break;
    case RegimeTag::n_dominated:
      m_real = N - M;
      r2 = c1 * (N - M) / nh;
      break;
    case RegimeTag::sparsity_dominated:
      m_real = std::floor(std::pow(c1, -q / 2.0) * std::pow(4.5, e) * cbar * std::pow(nh, q / 2.0));
      r2 = c1 * m_real / nh;
      break;
    case RegimeTag::log_sparse: {
      require(alpha && *alpha > 0.0 && *alpha < 1.0, "build_family_b: log-sparse family needs alpha in (0, 1)");
      require(N > 1, "build_family_b: log-sparse family needs N > 1");
      const double logN = std::log(static_cast<double>(N));
      m_real = std::floor(std::pow(*alpha / 9.0, -q / 2.0) * std::pow(4.5, e) * cbar * std::pow(nh, q / 2.0) *
                          std::pow(logN, -q / 2.0));
      r2 = (*alpha / 9.0) * m_real / nh;
      break;
    }
    case RegimeTag::inconsistent:
      fail(ErrorKind::infeasible, "build_family_b: no family for an inconsistent regime");
  }
  if (m_real < 5.0) fail(ErrorKind::infeasible, "build_family_b: sphere dimension m < 5 in this regime");
  if (m_real > N - M) fail(ErrorKind::infeasible, "build_family_b: sphere dimension exceeds N - M");
  if (!(r2 > 0.0 && r2 < 1.0)) fail(ErrorKind::infeasible, "build_family_b: radius r must lie in (0, 1)");
  const int m = static_cast<int>(m_real);

  PackingFamily f;
  f.kind = regime == RegimeTag::log_sparse ? FamilyKind::log_sparse : FamilyKind::sphere_packing;
  f.regime = regime;
  f.nu = nu;
  f.base_point = identity_frame(N, M);
  f.radius_r = std::sqrt(r2);
  f.sphere_dim_m = m;
  f.separation = r2;

  const SpherePacking y = build_Ym_star(m, limits);
  f.m0 = y.m0;
  f.packing_size = y.points.size();
  f.capped = y.capped;
  if (regime == RegimeTag::log_sparse) {
    const SupportFamily supports = build_support_family(N - M, m, y.m0 / 2, limits);
    f.support_count = supports.sets.size();
    f.capped = f.capped || supports.capped;
    for (const Indices& s : supports.sets) {
      if (f.members.size() + y.points.size() > limits.max_points) {
        f.capped = true;
        break;
      }
      Indices coords(s.size());
      for (std::size_t i = 0; i < s.size(); ++i) coords[i] = s[i] + M;
      add_packing_members(f, y, coords, f.radius_r);
    }
  } else {
    Indices coords(static_cast<std::size_t>(m));
    for (int l = 0; l < m; ++l) coords[static_cast<std::size_t>(l)] = M + l;
    f.support_count = 1;
    add_packing_members(f, y, coords, f.radius_r);
  }
  finalize(f, q, Cs, lambdas, n);
  if (!f.members_in_space) fail(ErrorKind::infeasible, "build_family_b: constructed members leave the l_q ball");
  return f;
}

PackingFamily build_two_point_c(double n, int M, int mu, int nu, std::span<const double> lambdas, double q,
                                std::span<const double> Cs, int N) {
  check_common(N, M, nu, Cs, lambdas);
  require(M > 1, "build_two_point_c: needs at least two spikes");
  require(mu >= 1 && mu <= M && mu != nu, "build_two_point_c: partner index must differ from nu");
  const double g = eval_g(lambdas[static_cast<std::size_t>(mu - 1)], lambdas[static_cast<std::size_t>(nu - 1)]);
  const double r2 = 2.0 / (n * g);
  if (!(r2 < 1.0)) fail(ErrorKind::infeasible, "build_two_point_c: r >= 1; n g(lambda_mu, lambda_nu) too small");
  const double r = std::sqrt(r2);
  const double a = std::sqrt(1.0 - r2);

  PackingFamily f;
  f.kind = FamilyKind::two_point;
  f.nu = nu;
  f.mu = mu;
  f.base_point = identity_frame(N, M);
  f.radius_r = r;
  f.sphere_dim_m = 1;
  f.separation = r2;
  Matrix second = f.base_point;
  second.col(nu - 1).setZero();
  second(nu - 1, nu - 1) = a;
  second(mu - 1, nu - 1) = r;
  second.col(mu - 1).setZero();
  second(nu - 1, mu - 1) = -r;
  second(mu - 1, mu - 1) = a;
  f.members = {f.base_point, second};
  finalize(f, q, Cs, lambdas, n);
  if (!f.members_in_space) fail(ErrorKind::infeasible, "build_two_point_c: rotated frame leaves the l_q ball");
  return f;
}

FanoRecord fano_bound(const PackingFamily& family, std::span<const double> lambdas, double n, double delta) {
  require(family.members.size() >= 2, "fano_bound: family needs at least two members");
  require(delta >= 0.0, "fano_bound: delta must be nonnegative");
  FanoRecord out;
  out.delta = delta;
  out.log_card = std::log(static_cast<double>(family.members.size()));
  if (family.members.size() == 2) {
    const double k12 = kl_spiked(family.members[0], family.members[1], lambdas, n);
    const double k21 = kl_spiked(family.members[1], family.members[0], lambdas, n);
    out.sym_kl = k12 + k21;
    out.avg_kl = 0.5 * out.sym_kl;
    out.max_kl = std::max(k12, k21);
    out.bound_value = delta * 0.25 * std::exp(-out.sym_kl / 2.0);
    return out;
  }
  double sum = 0.0;
  for (const Matrix& theta : family.members) {
    const double k = kl_spiked(theta, family.base_point, lambdas, n);
    sum += k;
    out.max_kl = std::max(out.max_kl, k);
  }
  out.avg_kl = sum / static_cast<double>(family.members.size());
  out.bound_value = delta * std::max(0.0, 1.0 - (out.avg_kl + std::log(2.0)) / out.log_card);
  return out;
}

FanoRecord fano_certificate(const PackingFamily& family, std::span<const double> lambdas, double n) {
  return fano_bound(family, lambdas, n, family.separation / 4.0);
}

}  // namespace aspca
