#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace aspca {

// Signal-strength functions.
double eval_h(double lambda);                  // lambda^2 / (1 + lambda)
double eval_eta(double lambda);                // lambda / (1 + lambda)
double eval_g(double lambda, double tau);      // (lambda - tau)^2 / ((1 + lambda)(1 + tau))

// Largest m with m^(1-q/2) <= C^q: the dimension of the biggest unit sphere
// fitting inside the l_q ball of radius C.
int sphere_dim_m_C(double q, double C);

// Radius r of the polar sphere of dimension m inside the l_q ball:
// (1 - r^2)^(q/2) + m^(1-q/2) r^q = C^q. Returns 1 when the whole unit sphere
// fits, i.e. iff C^q > (m + 1)^(1-q/2); at the tangent point it returns
// sqrt(m / (m + 1)).
double polar_radius(double q, double C, int m);

// sum_nu rho_nu^(q/2) C_nu^q
double rho_q_C(std::span<const double> rhos, double q, std::span<const double> Cs);

// Leading-order OPCA risk for spike nu (1-based):
// (N - M)/(n h(lambda_nu)) + (1/n) sum_{mu != nu} (1 + lambda_mu)(1 + lambda_nu)/(lambda_nu - lambda_mu)^2.
double opca_risk(double n, double N, int M, std::span<const double> lambdas, int nu);

struct LowerBoundConstants {
  double c1 = 0.0;
  double A_q = 0.0;
  double A_q_alpha = 0.0;
  double c_q_alpha = 0.0;
  double alpha = 0.0;  // 0 when not supplied
  double K = 1.0;
};

enum class RegimeTag { bounded_below, n_dominated, sparsity_dominated, log_sparse, inconsistent };

std::string to_string(RegimeTag tag);

struct RegimeClassification {
  RegimeTag case_tag = RegimeTag::inconsistent;
  double delta_n = 0.0;
  LowerBoundConstants constants;
  double nh = 0.0;         // n h(lambda_nu)
  double C_bar_q = 0.0;    // C_nu^q - 1
};

// The minimax lower-bound rate delta_n for spike nu (1-based). Ties between
// branches go to the branch listed first (bounded-below, N-dominated,
// sparsity-dominated). When alpha in (0,1) is supplied and the log-sparse
// condition holds, the log-sparse rate is returned instead. C_nu^q <= 1 or
// non-finite input yields `inconsistent` with delta_n = c1.
RegimeClassification minimax_delta(double n, double N, int M, std::span<const double> lambdas, int nu,
                                   double q, double C_nu, std::optional<double> alpha = std::nullopt,
                                   double K = 1.0);

// (1/n) max_{mu != nu} 1 / g(lambda_mu, lambda_nu)
double minimax_delta_bar(double n, std::span<const double> lambdas, int nu);

struct RateGammas {
  double gamma2_plus = 0.0;
  double gamma2_minus = 0.0;
};

// gamma2_plus = 1.25 gamma2, gamma2_minus = 0.75 gamma2.
RateGammas default_rate_gammas(double gamma2);

struct RateBreakdown {
  double tau_bar_sq = 0.0;
  double j2_plus = 0.0;        // J_2^+ itself, capped at N
  double j2_plus_term = 0.0;   // J_2^+ / (n h(lambda_nu))
  std::vector<double> cross_terms;
  double total = 0.0;
  bool j2_capped = false;
};

// ASPCA risk decomposition for spike nu (1-based). `log_factor` overrides
// log(max(n, N)) so scaling checks can hold it fixed.
RateBreakdown aspca_rate(double n, double N, int M, std::span<const double> lambdas, double q,
                         std::span<const double> Cs, int nu, const RateGammas& gammas,
                         std::optional<double> log_factor = std::nullopt);

// K (C_nu^q + K' rho_nu^-q rho_q(C) / L) (L / (n h))^(1-q/2) + sum_{mu != nu} 1/(n g)
// with L = log(max(n, N)) unless overridden.
double aspca_upper_bound(double n, double N, int M, std::span<const double> lambdas,
                         std::span<const double> rhos, double q, std::span<const double> Cs, int nu,
                         double K = 1.0, double K_prime = 1.0,
                         std::optional<double> log_factor = std::nullopt);

// Finite-sample values of the ratios governing the asymptotic conditions.
// Small values of l2_ratio, c2_ratio and c3_ratio, large values of nh and ng,
// and positive C_bar_q indicate the conditions are plausibly met.
struct ConditionDiagnostics {
  double l2_ratio = 0.0;                 // N / (n h(lambda_1))
  std::vector<double> rhos;              // lambda_nu / lambda_1
  bool rhos_strictly_descending = false;
  std::vector<double> nh;                // n h(lambda_nu)
  std::vector<double> min_ng;            // min_{mu != nu} n g(lambda_mu, lambda_nu); empty if M = 1
  std::vector<double> C_bar_q;           // C_nu^q - 1
  double log_ratio = 0.0;                // log N / log n
  double c2_ratio = 0.0;                 // (log n)^2 / (n lambda_1^2)
  double c3_ratio = 0.0;                 // rho_q(C) (log N)^(1/2-q/4) / (lambda_1^(1-q/2) n^(1/2-q/4))
  std::vector<double> opca_optimal_ratio;  // C_bar_nu^q (n h)^(q/2) / N
  double opca_optimal_threshold = 0.0;     // c1^(q/2) / A_q
};

ConditionDiagnostics condition_diagnostics(double n, double N, std::span<const double> lambdas, double q,
                                           std::span<const double> Cs);

enum class BoundKind {
  chi2_upper,        // P(chi2_n > n(1+eps)) <= exp(-3 n eps^2 / 16),       0 < eps < 1/2
  chi2_lower,        // P(chi2_n < n(1-eps)) <= exp(-n eps^2 / 4),          0 < eps < 1
  chi2_upper_sharp,  // P(chi2_n > n(1+eps)) <= sqrt(2)/(eps sqrt n) e^{-n eps^2/4}, eps < n^(1/16), n >= 16
  cross_product,     // P(|n^-1 sum y1 y2| > sqrt(b/n)) <= 2 exp(-3b/2),   0 < b <= sqrt(n)/10
  wishart_deviation, // P(|Z Z^T/n - I| > 2 sqrt(N/n) + N/n + c t_n) <= 2 (n v N)^(-c^2)
  singular_max,      // P(s_max(Z/sqrt q) > 1 + sqrt(p/q) + t) <= exp(-q t^2/2), p <= q
  singular_min,      // P(s_min(Z/sqrt q) < 1 - sqrt(p/q) - t) <= exp(-q t^2/2), p <= q
  eigen_max,         // P(l_1(Z Z^T/q) - m_1 > t) <= exp(-q/2 (sqrt(t + m_1) - sqrt(m_1))^2)
};

std::string to_string(BoundKind kind);
BoundKind bound_kind_from_string(const std::string& name);

// Only the fields relevant to a kind are read: n and eps (chi2), n and b
// (cross_product), n, N and c (wishart_deviation), p, q and t (the rest).
struct BoundParams {
  int n = 0;
  int N = 0;
  int p = 0;
  int q = 0;
  double eps = 0.0;
  double b = 0.0;
  double c = 0.0;
  double t = 0.0;
};

struct BoundRecord {
  BoundKind kind = BoundKind::chi2_upper;
  double value = 0.0;      // bound on the tail probability (NaN when out of domain)
  double threshold = 0.0;  // the deviation level in the event, in the statistic's units
  bool in_domain = false;
  std::string note;
};

BoundRecord concentration_bounds(BoundKind kind, const BoundParams& params);

}  // namespace aspca
