#pragma once

#include "aspca/estimators.hpp"
#include "aspca/rates.hpp"
#include "aspca/spiked_model.hpp"
#include "aspca/types.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace aspca {

// Runs body(i) for i in [0, count) on up to `threads` workers. Each index is
// processed exactly once; callers write results into slot i so reductions in
// index order are independent of scheduling.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body);

enum class ModelKind {
  sparse,         // Gaussian weights on random supports
  equal_weights,  // +-1/sqrt(s) on random supports
  spread,         // sqrt(1 - r^2) e_nu plus r spread evenly over m coordinates
};

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

struct ModelRecipe {
  ModelKind kind = ModelKind::equal_weights;
  int N = 100;
  std::vector<double> lambdas{1.0};
  double q = 1.0;
  std::vector<double> radii;        // empty: the smallest radius admitting the construction
  std::vector<int> support_sizes;   // sparse / equal_weights
  int spread_m = 0;                 // spread: coordinates per column (0: min(N/M - 1, 32))
  double spread_r = 0.0;            // spread: radius (0: the largest admissible, capped at 0.95)
  double sigma2 = 1.0;
  // When nonempty (N x M), used verbatim instead of a random construction.
  Matrix fixed_theta;

  int rank() const noexcept { return static_cast<int>(lambdas.size()); }
  LqSpaceSpec space() const;
};

// Builds the model for a recipe. Randomness (supports, signs, weights) comes
// from `rng`; the spread construction is deterministic apart from signs.
SpikedCovariance build_model(const ModelRecipe& recipe, Rng& rng);

enum class EstimatorName { opca, spca, aspca, aspca_unthresholded };

std::string to_string(EstimatorName name);
EstimatorName estimator_from_string(const std::string& name);

struct EstimatorSpec {
  EstimatorName name = EstimatorName::opca;
  EstimatorConfig config;  // spca reads gamma1, M_known and sigma2_known
};

struct RiskRow {
  int n = 0;
  int N = 0;
  std::string estimator;
  int nu = 1;
  int reps = 0;
  int ok_reps = 0;        // reps contributing to mean_loss
  int fallback_reps = 0;  // estimator fell back to OPCA (counted separately)
  int failed_reps = 0;    // no estimate for component nu
  double mean_loss = 0.0;
  double std_error = 0.0;
  double median_loss = 0.0;  // over ok reps
  double theory = 0.0;       // opca_risk for opca, aspca_rate total otherwise (NaN for spca)
  bool aborted = false;      // more than half the reps failed
  std::uint64_t seed = 0;    // stream seed for this grid point
  std::vector<double> losses;  // per rep, NaN on failure; fallback reps keep their loss
  std::vector<bool> fallback;
};

struct RiskReport {
  std::vector<std::pair<int, int>> grid;  // (n, N)
  std::vector<RiskRow> rows;
  std::uint64_t master_seed = 0;
  std::string config_hash;

  std::string to_csv() const;
  std::string to_json() const;  // summary document
};

struct RiskOptions {
  int nu = 1;
  int reps = 100;
  std::uint64_t master_seed = 0;
  int threads = 1;
  // Use S = Sigma exactly instead of sampling (noise-free fixture).
  bool exact_covariance = false;
  std::string config_hash;
};

// Seeds: the model at grid point g is drawn from Rng(derive_seed(splitmix64(master), g));
// replication i at grid point g uses Rng::stream(derive_seed(master, g), i).
RiskReport run_risk_mc(const ModelRecipe& recipe, const std::vector<EstimatorSpec>& estimators,
                       const std::vector<std::pair<int, int>>& grid, const RiskOptions& options);

struct BracketReport {
  int reps = 0;
  int stage = 1;
  double freq_lower = 0.0;  // I^- subset of I_hat
  double freq_upper = 0.0;  // I_hat subset of I^+
  double freq_both = 0.0;
  Indices I_minus;
  Indices I_plus;
  std::string definition;
};

struct BracketOptions {
  int n = 1000;
  int reps = 100;
  std::uint64_t seed = 0;
  int stage = 1;
  double a_plus = 1.75;
  double a_minus = 0.25;
  std::optional<double> gamma2_plus;   // default 1.25 gamma2
  std::optional<double> gamma2_minus;  // default 0.75 gamma2
  int threads = 1;
};

// Stage 1 compares I_hat_1 with {zeta_k > a_-+ gamma_1n}, zeta_k = sum lambda theta_k^2.
// Stage 2 compares I_hat_1 u I_hat_2 with {zeta~_k > gamma_{2,-+}^2 log(max(n,N))/n},
// zeta~_k = sum h(lambda) theta_k^2.
BracketReport selection_bracketing(const SpikedCovariance& model, const EstimatorConfig& config,
                                   const BracketOptions& options);

struct ConcentrationResult {
  BoundRecord bound;
  int reps = 0;
  double empirical_tail = 0.0;
  double std_error = 0.0;
  bool holds = false;  // empirical <= bound + 3 SE
};

ConcentrationResult concentration_mc(BoundKind kind, const BoundParams& params, int reps, std::uint64_t seed,
                                     int threads = 1);

struct FirstOrderResult {
  int reps = 0;
  std::vector<double> loss;
  std::vector<double> first_order_sq;  // |H_nu S theta_nu|^2
  std::vector<double> delta_bar;
  double mean_first_order_sq = 0.0;
  double expected_first_order_sq = 0.0;
  double sandwich_fraction = 0.0;  // reps with the loss inside the (1 -+ 3 delta_bar)^2 sandwich
};

// OPCA at sample size n; set exact_covariance to replace S by Sigma.
FirstOrderResult first_order_validation(const SpikedCovariance& model, int nu, int n, int reps,
                                        std::uint64_t seed, int threads = 1, bool exact_covariance = false);

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
  int used = 0;
  int excluded = 0;  // nonpositive or non-finite points
};

// OLS of log(y) on log(x).
SlopeFit log_log_fit(const std::vector<double>& x, const std::vector<double>& y);

enum class Predictor { n_over_nh, opca_risk, aspca_shape };

Predictor predictor_from_string(const std::string& name);

// Regresses log mean loss of `estimator` on the log of the named predictor:
// N/(n h(lambda_nu)), opca_risk, or (log(max(n,N))/(n h(lambda_nu)))^(1-q/2).
SlopeFit rate_regression(const RiskReport& report, const std::string& estimator, Predictor predictor,
                         const ModelRecipe& recipe, int nu = 1);

}  // namespace aspca
