#include "aspca/rates.hpp"

#include "aspca/types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace aspca {

namespace {

constexpr double kTol = 1e-12;

void check_spikes(std::span<const double> lambdas, int nu) {
  require(!lambdas.empty(), "spike list is empty");
  require(nu >= 1 && nu <= static_cast<int>(lambdas.size()), "spike index out of range");
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    require(lambdas[i] > 0.0 && std::isfinite(lambdas[i]), "spikes must be positive and finite");
    if (i > 0) require(lambdas[i] < lambdas[i - 1], "spikes must be strictly descending");
  }
}

double log_nN(double n, double N) { return std::log(std::max(n, N)); }

double lambda_at(std::span<const double> lambdas, int nu) { return lambdas[static_cast<std::size_t>(nu - 1)]; }

}  // namespace

double eval_h(double lambda) {
  require(lambda >= 0.0, "h: negative spike");
  return lambda * lambda / (1.0 + lambda);
}

double eval_eta(double lambda) {
  require(lambda >= 0.0, "eta: negative spike");
  return lambda / (1.0 + lambda);
}

double eval_g(double lambda, double tau) {
  require(lambda > 0.0 && tau > 0.0, "g: arguments must be positive");
  const double d = lambda - tau;
  return d * d / ((1.0 + lambda) * (1.0 + tau));
}

int sphere_dim_m_C(double q, double C) {
  require(q > 0.0 && q < 2.0, "sphere_dim_m_C: q must lie in (0, 2)");
  require(C >= 1.0, "sphere_dim_m_C: C must be at least 1");
  const double e = 1.0 - q / 2.0;
  const double cq = std::pow(C, q);
  const double cap = cq * (1.0 + kTol);
  auto fits = [&](double m) { return std::pow(m, e) <= cap; };
  double m = std::max(1.0, std::floor(std::pow(cq, 1.0 / e)));
  require(m < static_cast<double>(std::numeric_limits<int>::max()), "sphere_dim_m_C: dimension overflows");
  while (m > 1.0 && !fits(m)) m -= 1.0;
  while (fits(m + 1.0)) m += 1.0;
  return static_cast<int>(m);
}

double polar_radius(double q, double C, int m) {
  require(q > 0.0 && q < 2.0, "polar_radius: q must lie in (0, 2)");
  require(C >= 1.0, "polar_radius: C must be at least 1");
  require(m >= 1, "polar_radius: m must be positive");
  const double cq = std::pow(C, q);
  const double a = std::pow(static_cast<double>(m), 1.0 - q / 2.0);
  auto f = [&](double r) { return std::pow(1.0 - r * r, q / 2.0) + a * std::pow(r, q) - cq; };
  const double r_star = std::sqrt(static_cast<double>(m) / (m + 1.0));
  const double f_max = std::pow(m + 1.0, 1.0 - q / 2.0) - cq;
  const double tol = kTol * std::max(1.0, cq);
  if (f_max < -tol) return 1.0;
  if (std::abs(f_max) <= tol) return r_star;
  if (f(0.0) >= -tol) return 0.0;
  double lo = 0.0;
  double hi = r_star;
  while (hi - lo > kTol) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double rho_q_C(std::span<const double> rhos, double q, std::span<const double> Cs) {
  require(!rhos.empty(), "rho_q_C: empty input");
  require(rhos.size() == Cs.size(), "rho_q_C: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < rhos.size(); ++i) {
    require(rhos[i] > 0.0 && Cs[i] >= 1.0, "rho_q_C: rho must be positive and C at least 1");
    s += std::pow(rhos[i], q / 2.0) * std::pow(Cs[i], q);
  }
  return s;
}

double opca_risk(double n, double N, int M, std::span<const double> lambdas, int nu) {
  check_spikes(lambdas, nu);
  require(static_cast<int>(lambdas.size()) == M, "opca_risk: need one spike per component");
  require(n >= 1.0 && N >= M, "opca_risk: need n >= 1 and N >= M");
  const double ln = lambda_at(lambdas, nu);
  double r = (N - M) / (n * eval_h(ln));
  for (int mu = 1; mu <= M; ++mu) {
    if (mu == nu) continue;
    const double lm = lambda_at(lambdas, mu);
    r += (lm + 1.0) * (ln + 1.0) / ((ln - lm) * (ln - lm)) / n;
  }
  return r;
}

std::string to_string(RegimeTag tag) {
  switch (tag) {
    case RegimeTag::bounded_below: return "bounded-below";
    case RegimeTag::n_dominated: return "N-dominated";
    case RegimeTag::sparsity_dominated: return "sparsity-dominated";
    case RegimeTag::log_sparse: return "log-sparse";
    case RegimeTag::inconsistent: return "inconsistent";
  }
  return "inconsistent";
}

RegimeClassification minimax_delta(double n, double N, int M, std::span<const double> lambdas, int nu,
                                   double q, double C_nu, std::optional<double> alpha, double K) {
  check_spikes(lambdas, nu);
  require(q > 0.0 && q < 2.0, "minimax_delta: q must lie in (0, 2)");
  RegimeClassification out;
  auto& k = out.constants;
  k.c1 = std::log(9.0 / 8.0);
  k.A_q = std::pow(4.5 * k.c1, 1.0 - q / 2.0);
  k.K = K;
  if (alpha) {
    require(*alpha > 0.0 && *alpha < 1.0, "minimax_delta: alpha must lie in (0, 1)");
    k.alpha = *alpha;
    k.A_q_alpha = std::pow(*alpha / 2.0, 1.0 - q / 2.0);
    k.c_q_alpha = std::pow(*alpha / 9.0, 1.0 - q / 2.0);
  }
  const double nh = n * eval_h(lambda_at(lambdas, nu));
  const double cbar = std::pow(C_nu, q) - 1.0;
  out.nh = nh;
  out.C_bar_q = cbar;
  out.delta_n = k.c1;
  if (!(std::isfinite(nh) && std::isfinite(cbar) && std::isfinite(N)) || cbar <= 0.0 || nh <= 0.0) {
    out.case_tag = RegimeTag::inconsistent;
    return out;
  }
  const double e = 1.0 - q / 2.0;
  if (alpha && N > 1.0) {
    const double logN = std::log(N);
    const double lhs = k.A_q_alpha * cbar * std::pow(nh / logN, q / 2.0);
    if (lhs <= std::min(nh / logN, K * std::pow(N, 1.0 - *alpha))) {
      out.case_tag = RegimeTag::log_sparse;
      out.delta_n = k.c_q_alpha * cbar * std::pow(logN, e) / std::pow(nh, e);
      return out;
    }
  }
  const double a = nh;
  const double b = k.c1 * (N - M);
  const double c = k.A_q * cbar * std::pow(nh, q / 2.0);
  if (a <= std::min(b, c)) {
    out.case_tag = RegimeTag::bounded_below;
    out.delta_n = k.c1;
  } else if (b <= std::min(a, c)) {
    out.case_tag = RegimeTag::n_dominated;
    out.delta_n = k.c1 * (N - M) / nh;
  } else if (c <= std::min(a, b)) {
    out.case_tag = RegimeTag::sparsity_dominated;
    out.delta_n = k.A_q * cbar / std::pow(nh, e);
  } else {
    out.case_tag = RegimeTag::inconsistent;
  }
  return out;
}

double minimax_delta_bar(double n, std::span<const double> lambdas, int nu) {
  check_spikes(lambdas, nu);
  require(lambdas.size() > 1, "minimax_delta_bar: needs at least two spikes");
  double worst = 0.0;
  for (int mu = 1; mu <= static_cast<int>(lambdas.size()); ++mu) {
    if (mu == nu) continue;
    worst = std::max(worst, 1.0 / eval_g(lambda_at(lambdas, mu), lambda_at(lambdas, nu)));
  }
  return worst / n;
}

RateGammas default_rate_gammas(double gamma2) { return {1.25 * gamma2, 0.75 * gamma2}; }

RateBreakdown aspca_rate(double n, double N, int M, std::span<const double> lambdas, double q,
                         std::span<const double> Cs, int nu, const RateGammas& gammas,
                         std::optional<double> log_factor) {
  check_spikes(lambdas, nu);
  require(static_cast<int>(lambdas.size()) == M && static_cast<int>(Cs.size()) == M,
          "aspca_rate: need one spike and one radius per component");
  require(q > 0.0 && q < 2.0, "aspca_rate: q must lie in (0, 2)");
  require(gammas.gamma2_plus > gammas.gamma2_minus && gammas.gamma2_minus > 0.0,
          "aspca_rate: need gamma2_plus > gamma2_minus > 0");
  const double L = log_factor.value_or(log_nN(n, N));
  require(L > 0.0, "aspca_rate: log factor must be positive");
  const double e = 1.0 - q / 2.0;
  const double cq = 2.0 / (2.0 - q);
  const double hn = eval_h(lambda_at(lambdas, nu));
  RateBreakdown out;
  out.tau_bar_sq = cq * std::pow(gammas.gamma2_plus, 2.0 - q) * std::pow(Cs[static_cast<std::size_t>(nu - 1)], q) *
                   std::pow(L, e) / std::pow(n * hn, e);
  double weighted = 0.0;
  for (int mu = 0; mu < M; ++mu) weighted += std::pow(eval_h(lambdas[mu]), q / 2.0) * std::pow(Cs[mu], q);
  const double j2 = std::pow(gammas.gamma2_minus, -q) * std::pow(static_cast<double>(M), q / 2.0) * weighted *
                    std::pow(n / L, q / 2.0);
  out.j2_capped = j2 > N;
  out.j2_plus = std::min(j2, N);
  out.j2_plus_term = out.j2_plus / (n * hn);
  out.total = out.tau_bar_sq + out.j2_plus_term;
  for (int mu = 1; mu <= M; ++mu) {
    if (mu == nu) continue;
    const double term = 1.0 / (n * eval_g(lambda_at(lambdas, mu), lambda_at(lambdas, nu)));
    out.cross_terms.push_back(term);
    out.total += term;
  }
  return out;
}

double aspca_upper_bound(double n, double N, int M, std::span<const double> lambdas,
                         std::span<const double> rhos, double q, std::span<const double> Cs, int nu, double K,
                         double K_prime, std::optional<double> log_factor) {
  check_spikes(lambdas, nu);
  require(static_cast<int>(lambdas.size()) == M && static_cast<int>(Cs.size()) == M &&
              static_cast<int>(rhos.size()) == M,
          "aspca_upper_bound: need one spike, rho and radius per component");
  const double L = log_factor.value_or(log_nN(n, N));
  require(L > 0.0, "aspca_upper_bound: log factor must be positive");
  const auto i = static_cast<std::size_t>(nu - 1);
  const double lead = std::pow(Cs[i], q) + K_prime * std::pow(rhos[i], -q) * rho_q_C(rhos, q, Cs) / L;
  double out = K * lead * std::pow(L / (n * eval_h(lambdas[i])), 1.0 - q / 2.0);
  for (int mu = 1; mu <= M; ++mu) {
    if (mu == nu) continue;
    out += 1.0 / (n * eval_g(lambda_at(lambdas, mu), lambda_at(lambdas, nu)));
  }
  return out;
}

ConditionDiagnostics condition_diagnostics(double n, double N, std::span<const double> lambdas, double q,
                                           std::span<const double> Cs) {
  require(!lambdas.empty() && lambdas.size() == Cs.size(), "condition_diagnostics: one radius per spike");
  require(q > 0.0 && q < 2.0, "condition_diagnostics: q must lie in (0, 2)");
  ConditionDiagnostics d;
  const double l1 = lambdas[0];
  const double c1 = std::log(9.0 / 8.0);
  const double A_q = std::pow(4.5 * c1, 1.0 - q / 2.0);
  d.l2_ratio = N / (n * eval_h(l1));
  d.rhos_strictly_descending = true;
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    d.rhos.push_back(lambdas[i] / l1);
    if (i > 0 && !(lambdas[i] < lambdas[i - 1])) d.rhos_strictly_descending = false;
    const double nh = n * eval_h(lambdas[i]);
    d.nh.push_back(nh);
    const double cbar = std::pow(Cs[i], q) - 1.0;
    d.C_bar_q.push_back(cbar);
    d.opca_optimal_ratio.push_back(cbar * std::pow(nh, q / 2.0) / N);
  }
  if (lambdas.size() > 1) {
    for (std::size_t nu = 0; nu < lambdas.size(); ++nu) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t mu = 0; mu < lambdas.size(); ++mu) {
        if (mu != nu) best = std::min(best, n * eval_g(lambdas[mu], lambdas[nu]));
      }
      d.min_ng.push_back(best);
    }
  }
  d.log_ratio = std::log(N) / std::log(n);
  d.c2_ratio = std::log(n) * std::log(n) / (n * l1 * l1);
  double rq = 0.0;
  for (std::size_t i = 0; i < lambdas.size(); ++i) rq += std::pow(d.rhos[i], q / 2.0) * std::pow(Cs[i], q);
  const double e = 0.5 - q / 4.0;
  d.c3_ratio = rq * std::pow(std::log(N), e) / (std::pow(l1, 1.0 - q / 2.0) * std::pow(n, e));
  d.opca_optimal_threshold = std::pow(c1, q / 2.0) / A_q;
  return d;
}

std::string to_string(BoundKind kind) {
  switch (kind) {
    case BoundKind::chi2_upper: return "chi2_upper";
    case BoundKind::chi2_lower: return "chi2_lower";
    case BoundKind::chi2_upper_sharp: return "chi2_upper_sharp";
    case BoundKind::cross_product: return "cross_product";
    case BoundKind::wishart_deviation: return "wishart_deviation";
    case BoundKind::singular_max: return "singular_max";
    case BoundKind::singular_min: return "singular_min";
    case BoundKind::eigen_max: return "eigen_max";
  }
  return "chi2_upper";
}

BoundKind bound_kind_from_string(const std::string& name) {
  for (auto k : {BoundKind::chi2_upper, BoundKind::chi2_lower, BoundKind::chi2_upper_sharp,
                 BoundKind::cross_product, BoundKind::wishart_deviation, BoundKind::singular_max,
                 BoundKind::singular_min, BoundKind::eigen_max}) {
    if (to_string(k) == name) return k;
  }
  fail(ErrorKind::invalid_argument, "unknown bound kind '" + name + "'");
}

BoundRecord concentration_bounds(BoundKind kind, const BoundParams& p) {
  BoundRecord out;
  out.kind = kind;
  out.value = std::numeric_limits<double>::quiet_NaN();
  auto domain = [&](bool ok, const char* note) {
    out.in_domain = ok;
    if (!ok) out.note = note;
    return ok;
  };
  switch (kind) {
    case BoundKind::chi2_upper: {
      const double n = p.n;
      out.threshold = n * (1.0 + p.eps);
      if (domain(p.n >= 1 && p.eps > 0.0 && p.eps < 0.5, "requires n >= 1 and 0 < eps < 1/2"))
        out.value = std::exp(-3.0 * n * p.eps * p.eps / 16.0);
      break;
    }
    case BoundKind::chi2_lower: {
      const double n = p.n;
      out.threshold = n * (1.0 - p.eps);
      if (domain(p.n >= 1 && p.eps > 0.0 && p.eps < 1.0, "requires n >= 1 and 0 < eps < 1"))
        out.value = std::exp(-n * p.eps * p.eps / 4.0);
      break;
    }
    case BoundKind::chi2_upper_sharp: {
      const double n = p.n;
      out.threshold = n * (1.0 + p.eps);
      if (domain(p.n >= 16 && p.eps > 0.0 && p.eps < std::pow(n, 1.0 / 16.0),
                 "requires n >= 16 and 0 < eps < n^(1/16)"))
        out.value = std::sqrt(2.0) / (p.eps * std::sqrt(n)) * std::exp(-n * p.eps * p.eps / 4.0);
      break;
    }
    case BoundKind::cross_product: {
      const double n = p.n;
      out.threshold = p.n >= 1 ? std::sqrt(p.b / n) : 0.0;
      if (domain(p.n >= 1 && p.b > 0.0 && p.b <= std::sqrt(n) / 10.0,
                 "requires 0 < b <= sqrt(n)/10; the O(b^2/n) correction is dropped")) {
        out.value = 2.0 * std::exp(-1.5 * p.b);
        // The limiting tail is 2 P(Z > sqrt b), which exceeds 2 e^{-3b/2} for b > 1.4428.
        if (p.b > 1.4427) out.note = "dropping the correction makes this bound fall below the Gaussian limit for b > 1.44";
      }
      break;
    }
    case BoundKind::wishart_deviation: {
      if (!domain(p.n >= 1 && p.N >= 1 && p.c > 0.0, "requires n, N >= 1 and c > 0")) break;
      const double n = p.n;
      const double N = p.N;
      const double big = std::max(n, N);
      const double t_n = 6.0 * std::max(N / n, 1.0) * std::sqrt(std::log(big) / big);
      out.threshold = 2.0 * std::sqrt(N / n) + N / n + p.c * t_n;
      out.value = 2.0 * std::pow(big, -p.c * p.c);
      out.note = "holds for n beyond an unspecified n_c";
      break;
    }
    case BoundKind::singular_max:
    case BoundKind::singular_min: {
      if (!domain(p.p >= 1 && p.q >= p.p && p.t > 0.0, "requires 1 <= p <= q and t > 0")) break;
      const double ratio = std::sqrt(static_cast<double>(p.p) / p.q);
      out.threshold = kind == BoundKind::singular_max ? 1.0 + ratio + p.t : 1.0 - ratio - p.t;
      out.value = std::exp(-p.q * p.t * p.t / 2.0);
      break;
    }
    case BoundKind::eigen_max: {
      if (!domain(p.p >= 1 && p.q >= p.p && p.t > 0.0, "requires 1 <= p <= q and t > 0")) break;
      const double m1 = std::pow(1.0 + std::sqrt(static_cast<double>(p.p) / p.q), 2.0);
      out.threshold = m1 + p.t;
      const double d = std::sqrt(p.t + m1) - std::sqrt(m1);
      out.value = std::exp(-p.q / 2.0 * d * d);
      break;
    }
  }
  if (out.in_domain) out.value = std::min(out.value, 1.0);
  return out;
}

}  // namespace aspca
