#include "aspca/metrics.hpp"
#include "aspca/simulation.hpp"

#include <doctest.h>

#include <atomic>
#include <cmath>
#include <stdexcept>

using namespace aspca;

namespace {

ModelRecipe small_recipe() {
  ModelRecipe r;
  r.kind = ModelKind::equal_weights;
  r.N = 40;
  r.lambdas = {5.0};
  r.support_sizes = {4};
  return r;
}

std::vector<EstimatorSpec> all_estimators() {
  return {{EstimatorName::opca, {}},
          {EstimatorName::spca, {}},
          {EstimatorName::aspca, {}},
          {EstimatorName::aspca_unthresholded, {}}};
}

}  // namespace

TEST_CASE("parallel_for visits every index once and rethrows") {
  std::vector<std::atomic<int>> seen(100);
  parallel_for(100, 4, [&](std::size_t i) { ++seen[i]; });
  for (auto& s : seen) CHECK(s.load() == 1);
  CHECK_THROWS_AS(parallel_for(10, 3, [](std::size_t i) { if (i == 7) throw std::runtime_error("x"); }),
                  std::runtime_error);
}

TEST_CASE("seed streams are stable") {
  CHECK(derive_seed(1, 2) == derive_seed(1, 2));
  CHECK(derive_seed(1, 2) != derive_seed(2, 1));
  Rng a = Rng::stream(5, 3), b = Rng::stream(5, 3);
  CHECK(a.normal() == b.normal());
}

TEST_CASE("noise-free fixture gives zero loss everywhere") {
  RiskOptions opt;
  opt.reps = 2;
  opt.exact_covariance = true;
  const RiskReport rep = run_risk_mc(small_recipe(), all_estimators(), {{1000, 40}, {4000, 40}}, opt);
  REQUIRE(rep.rows.size() == 8);
  for (const RiskRow& row : rep.rows) CHECK(row.mean_loss < 1e-10);
}

TEST_CASE("risk reports are reproducible and thread-count independent") {
  RiskOptions opt;
  opt.reps = 6;
  opt.master_seed = 42;
  const auto grid = std::vector<std::pair<int, int>>{{60, 40}, {120, 40}};
  const RiskReport a = run_risk_mc(small_recipe(), all_estimators(), grid, opt);
  const RiskReport b = run_risk_mc(small_recipe(), all_estimators(), grid, opt);
  opt.threads = 3;
  const RiskReport c = run_risk_mc(small_recipe(), all_estimators(), grid, opt);
  CHECK(a.to_csv() == b.to_csv());
  CHECK(a.to_csv() == c.to_csv());
  CHECK(a.to_json() == c.to_json());

  // Adding replications leaves the earlier ones untouched.
  opt.reps = 9;
  const RiskReport d = run_risk_mc(small_recipe(), all_estimators(), grid, opt);
  for (std::size_t k = 0; k < a.rows.size(); ++k)
    for (int i = 0; i < 6; ++i) {
      const double x = a.rows[k].losses[i], y = d.rows[k].losses[i];
      CHECK((x == y || (std::isnan(x) && std::isnan(y))));
    }
}

TEST_CASE("single replication gives one row per estimator") {
  RiskOptions opt;
  opt.reps = 1;
  const RiskReport r = run_risk_mc(small_recipe(), {{EstimatorName::opca, {}}}, {{50, 40}}, opt);
  REQUIRE(r.rows.size() == 1);
  CHECK(std::isfinite(r.rows[0].mean_loss));
  CHECK(std::isnan(r.rows[0].std_error));
}

TEST_CASE("log-log regression recovers exact powers") {
  std::vector<double> x{1.0, 2.0, 5.0, 11.0, 40.0}, y;
  for (double v : x) y.push_back(3.0 * std::pow(v, 1.7));
  const SlopeFit f = log_log_fit(x, y);
  CHECK(std::abs(f.slope - 1.7) < 1e-12);
  CHECK(std::abs(f.intercept - std::log(3.0)) < 1e-12);
  x.push_back(-1.0);
  y.push_back(2.0);
  CHECK(log_log_fit(x, y).excluded == 1);
}

TEST_CASE("bracketing with well separated coordinates") {
  Matrix th = Matrix::Zero(200, 1);
  for (int k = 0; k < 4; ++k) th(k, 0) = 0.5;
  const SpikedCovariance model({12.0}, th);
  for (int stage : {1, 2}) {
    BracketOptions opt;
    opt.n = 800;
    opt.reps = 30;
    opt.stage = stage;
    const BracketReport r = selection_bracketing(model, EstimatorConfig{}, opt);
    CHECK(r.freq_lower == 1.0);
    CHECK(r.freq_upper == 1.0);
    CHECK(r.I_minus == Indices{0, 1, 2, 3});
  }
}

TEST_CASE("concentration Monte Carlo") {
  BoundParams p;
  p.n = 100;
  p.eps = 0.3;
  const ConcentrationResult r = concentration_mc(BoundKind::chi2_upper, p, 20000, 1);
  CHECK(r.holds);
  CHECK(r.empirical_tail < r.bound.value);
  CHECK(r.bound.value == doctest::Approx(0.18498).epsilon(1e-4));

  p.eps = 1e-3;
  CHECK(concentration_bounds(BoundKind::chi2_upper, p).value > 0.99);

  BoundParams out;
  out.n = 50;
  out.eps = 1.0;
  CHECK_THROWS_AS(concentration_mc(BoundKind::chi2_lower, out, 100, 1), Error);
}

TEST_CASE("first-order validation with the exact covariance") {
  Matrix th = Matrix::Identity(10, 2);
  const SpikedCovariance model({5.0, 2.0}, th);
  const FirstOrderResult r = first_order_validation(model, 1, 100, 3, 1, 1, true);
  for (int i = 0; i < 3; ++i) {
    CHECK(r.loss[i] < 1e-12);
    CHECK(r.first_order_sq[i] < 1e-24);
  }
}

TEST_CASE("first-order sandwich") {
  Matrix th = Matrix::Zero(50, 2);
  th(0, 0) = th(1, 1) = 1.0;
  const SpikedCovariance model({8.0, 3.0}, th);
  const FirstOrderResult r = first_order_validation(model, 1, 5000, 100, 11);
  CHECK(r.sandwich_fraction >= 0.99);
}

TEST_CASE("name conversions") {
  for (auto e : {EstimatorName::opca, EstimatorName::spca, EstimatorName::aspca, EstimatorName::aspca_unthresholded})
    CHECK(estimator_from_string(to_string(e)) == e);
  for (auto k : {ModelKind::sparse, ModelKind::equal_weights, ModelKind::spread})
    CHECK(model_kind_from_string(to_string(k)) == k);
  CHECK_THROWS_AS(estimator_from_string("pca"), Error);
}
