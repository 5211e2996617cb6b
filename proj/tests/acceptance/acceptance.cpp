// Acceptance suite: one PASS/FAIL line per criterion. Pass criterion numbers
// as arguments to run a subset.

#include "aspca/estimators.hpp"
#include "aspca/linalg.hpp"
#include "aspca/metrics.hpp"
#include "aspca/packing.hpp"
#include "aspca/perturbation.hpp"
#include "aspca/random.hpp"
#include "aspca/rates.hpp"
#include "aspca/simulation.hpp"
#include "aspca/spiked_model.hpp"
#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

using namespace aspca;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

Matrix random_frame(int N, int M, Rng& rng) {
  Matrix g(N, M);
  for (int j = 0; j < M; ++j)
    for (int i = 0; i < N; ++i) g(i, j) = rng.normal();
  Eigen::HouseholderQR<Matrix> qr(g);
  return qr.householderQ() * Matrix::Identity(N, M);
}

Matrix covariance_of(const Matrix& theta, const std::vector<double>& lambdas) {
  Matrix s = Matrix::Identity(theta.rows(), theta.rows());
  for (std::size_t k = 0; k < lambdas.size(); ++k) {
    const auto c = theta.col(static_cast<Eigen::Index>(k));
    s += lambdas[k] * c * c.transpose();
  }
  return s;
}

std::vector<double> descending_spikes(int M, double lo, double hi, Rng& rng) {
  for (;;) {
    std::vector<double> l(static_cast<std::size_t>(M));
    for (double& x : l) x = lo + (hi - lo) * rng.uniform();
    std::sort(l.rbegin(), l.rend());
    bool distinct = true;
    for (std::size_t i = 1; i < l.size(); ++i) distinct = distinct && l[i - 1] - l[i] > 1e-3;
    if (distinct) return l;
  }
}

double median_of(std::vector<double> v) {
  v.erase(std::remove_if(v.begin(), v.end(), [](double x) { return !std::isfinite(x); }), v.end());
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const std::size_t k = v.size() / 2;
  return v.size() % 2 ? v[k] : 0.5 * (v[k - 1] + v[k]);
}

// ---------------------------------------------------------------------------

Outcome kl_oracle() {
  Rng rng(20240101);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const int N = 2 + static_cast<int>(rng.uniform() * 49);
    const int M = 1 + static_cast<int>(rng.uniform() * std::min(3, N - 1));
    const auto lambdas = descending_spikes(M, 0.5, 10.0, rng);
    const Matrix t1 = random_frame(N, M, rng);
    const Matrix t2 = random_frame(N, M, rng);
    const double n = 1.0 + std::floor(rng.uniform() * 1000.0);
    const double a = kl_spiked(t1, t2, lambdas, n);
    const double b = kl_gaussian_oracle(covariance_of(t1, lambdas), covariance_of(t2, lambdas), n);
    worst = std::max(worst, std::abs(a - b) / std::max(std::abs(b), 1e-300));
  }
  return {worst <= 1e-8, "max relative error " + fmt("%.3g", worst) + " over 100 random pairs"};
}

Outcome algebraic_identities() {
  double worst = 0.0;
  for (int i = 0; i <= 400; ++i) {
    for (int j = 0; j <= 400; ++j) {
      const double l = 0.05 * (i + 1);
      const double t = 0.05 * (j + 1);
      const double g = eval_g(l, t);
      const double alt = (l - t) * (eval_eta(l) - eval_eta(t));
      worst = std::max(worst, std::abs(g - alt) / std::max(1.0, std::abs(g)));
    }
    const double l = 0.05 * (i + 1);
    worst = std::max(worst, std::abs(eval_h(l) - l * eval_eta(l)) / std::max(1.0, eval_h(l)));
  }
  Rng rng(7);
  for (int k = 0; k < 1000; ++k) {
    const int N = 2 + k % 20;
    Vector a(N), b(N);
    for (int i = 0; i < N; ++i) {
      a(i) = rng.normal();
      b(i) = rng.normal();
    }
    // Near-parallel and near-antiparallel pairs exercise both branches of the min.
    if (k % 3 == 1) b = a + 0.01 * b;
    if (k % 3 == 2) b = -a + 0.01 * b;
    a.normalize();
    b.normalize();
    const double L = loss_L(a, b);
    const double direct = std::min((a - b).squaredNorm(), (a + b).squaredNorm());
    worst = std::max(worst, std::abs(L - direct));
    worst = std::max(worst, std::abs(loss_Ls(a, b) - (L - L * L / 4.0)));
  }
  return {worst <= 1e-12, "max deviation " + fmt("%.3g", worst) + " (g, h grids; 1000 unit pairs)"};
}

Outcome exact_expectation() {
  const std::vector<double> lambdas{8.0, 3.0};
  Matrix theta = Matrix::Zero(50, 2);
  Rng rng(31);
  theta = random_frame(50, 2, rng);
  const SpikedCovariance model(lambdas, theta);
  const FirstOrderResult r = first_order_validation(model, 1, 5000, 1000, 3003);
  const double expect = (50.0 - 2.0) / (5000.0 * eval_h(8.0)) + (1.0 / 5000.0) * (3.0 + 1.0) * (8.0 + 1.0) / 25.0;
  const double rel = std::abs(r.mean_first_order_sq - expect) / expect;
  return {rel <= 0.05, "MC mean " + fmt("%.6g", r.mean_first_order_sq) + " vs " + fmt("%.6g", expect) +
                           ", relative gap " + fmt("%.3f", rel)};
}

Outcome opca_risk_check() {
  ModelRecipe recipe;
  recipe.kind = ModelKind::sparse;
  recipe.lambdas = {8.0};
  recipe.q = 1.0;
  recipe.N = 400;
  recipe.support_sizes = {10};
  std::vector<EstimatorSpec> specs{{EstimatorName::opca, {}}};
  RiskOptions opt;
  opt.reps = 400;
  opt.master_seed = 4004;
  const RiskReport single = run_risk_mc(recipe, specs, {{2000, 100}}, opt);
  const double theory = opca_risk(2000, 100, 1, recipe.lambdas, 1);
  const double mean = single.rows.front().mean_loss;
  const double rel = std::abs(mean - theory) / theory;

  const RiskReport sweep = run_risk_mc(recipe, specs, {{2000, 50}, {2000, 100}, {2000, 200}, {2000, 400}}, opt);
  const SlopeFit fit = rate_regression(sweep, "opca", Predictor::n_over_nh, recipe, 1);
  const bool ok = rel <= 0.20 && std::abs(fit.slope - 1.0) <= 0.15;
  return {ok, "mean loss " + fmt("%.5g", mean) + " vs theory " + fmt("%.5g", theory) + " (rel " + fmt("%.3f", rel) +
                  "), slope " + fmt("%.3f", fit.slope)};
}

Outcome aspca_dominance() {
  ModelRecipe recipe;
  recipe.kind = ModelKind::equal_weights;
  recipe.N = 2000;
  recipe.lambdas = {5.0};
  recipe.q = 1.0;
  recipe.support_sizes = {20};
  EstimatorConfig tuned;
  tuned.gamma1 = 1.0;
  tuned.M_known = 1;
  tuned.sigma2_known = 1.0;
  std::vector<EstimatorSpec> specs{{EstimatorName::opca, tuned},
                                   {EstimatorName::spca, tuned},
                                   {EstimatorName::aspca_unthresholded, tuned},
                                   {EstimatorName::aspca, tuned}};
  RiskOptions opt;
  opt.reps = 100;
  opt.master_seed = 5005;
  const RiskReport rep = run_risk_mc(recipe, specs, {{400, 2000}}, opt);
  double med[4];
  for (int k = 0; k < 4; ++k) med[k] = median_of(rep.rows[static_cast<std::size_t>(k)].losses);
  const bool ok = med[2] < med[0] && med[2] < med[1];
  return {ok, "median loss: opca " + fmt("%.4f", med[0]) + ", spca " + fmt("%.4f", med[1]) + ", aspca " +
                  fmt("%.4f", med[2]) + " (after hard thresholding " + fmt("%.4f", med[3]) + ")"};
}

Outcome m_hat_consistency() {
  ModelRecipe recipe;
  recipe.kind = ModelKind::equal_weights;
  recipe.N = 500;
  recipe.lambdas = {10.0, 5.0};
  recipe.q = 1.0;
  recipe.support_sizes = {4, 2};
  Rng mrng(6006);
  const SpikedCovariance model = build_model(recipe, mrng);
  const int reps = 200;
  std::vector<int> hit(reps, 0);
  parallel_for(reps, 1, [&](std::size_t i) {
    Rng rng = Rng::stream(6007, i);
    const Dataset d = sample_dataset(model, 500, rng);
    hit[i] = aspca::aspca(CovarianceSource::from_data(d.observations), EstimatorConfig{}).M_hat == 2;
  });
  const double freq = static_cast<double>(std::count(hit.begin(), hit.end(), 1)) / reps;
  return {freq >= 0.95, "P(M_hat = 2) = " + fmt("%.3f", freq) + " over 200 reps"};
}

Outcome bracketing() {
  ModelRecipe recipe;
  recipe.kind = ModelKind::equal_weights;
  recipe.N = 1000;
  recipe.lambdas = {6.0};
  recipe.q = 1.0;
  recipe.support_sizes = {10};
  Rng mrng(7007);
  const SpikedCovariance model = build_model(recipe, mrng);
  BracketOptions opt;
  opt.n = 1000;
  opt.reps = 200;
  opt.seed = 7008;
  opt.stage = 1;
  const BracketReport s1 = selection_bracketing(model, EstimatorConfig{}, opt);
  opt.stage = 2;
  opt.seed = 7009;
  const BracketReport s2 = selection_bracketing(model, EstimatorConfig{}, opt);
  return {s1.freq_both >= 0.95 && s2.freq_both >= 0.95,
          "stage 1 " + fmt("%.3f", s1.freq_both) + ", stage 2 " + fmt("%.3f", s2.freq_both) + " over 200 reps"};
}

// Independent checks of one constructed family.
bool check_family(const PackingFamily& f, const LqSpaceSpec& space, const std::vector<double>& lambdas, double n,
                  bool exact_2r2, std::string& why) {
  const int nu = f.nu - 1;
  const double r2 = f.radius_r * f.radius_r;
  const double kl_expected = 0.5 * n * eval_h(lambdas[static_cast<std::size_t>(nu)]) * r2;
  if (f.members.size() < 2) {
    why = "fewer than two members";
    return false;
  }
  if (!membership_report(f.base_point, space).member) {
    why = "base point outside the parameter space";
    return false;
  }
  for (std::size_t i = 0; i < f.members.size(); ++i) {
    const Matrix& th = f.members[i];
    if (!membership_report(th, space).member) {
      why = "member " + std::to_string(i) + " outside the parameter space";
      return false;
    }
    for (int mu = 0; mu < th.cols(); ++mu) {
      if (mu != nu && f.kind != FamilyKind::two_point && (th.col(mu) - f.base_point.col(mu)).norm() != 0.0) {
        why = "column mu changed";
        return false;
      }
    }
    if (f.kind != FamilyKind::two_point) {
      const double kl = kl_spiked(th, f.base_point, lambdas, n);
      if (std::abs(kl - kl_expected) > 1e-10 * kl_expected) {
        why = "KL to base " + fmt("%.12g", kl) + " vs " + fmt("%.12g", kl_expected);
        return false;
      }
    }
    for (std::size_t j = 0; j < i; ++j) {
      const double L = loss_L(th.col(nu), f.members[j].col(nu));
      if (exact_2r2 ? std::abs(L - 2.0 * r2) > 1e-12 : L < r2 - 1e-12) {
        why = "pairwise loss " + fmt("%.6g", L) + " against r^2 " + fmt("%.6g", r2);
        return false;
      }
    }
  }
  return true;
}

Outcome packing_certificates() {
  std::vector<std::string> failures;
  const double q = 1.0;

  {  // single coordinate
    const std::vector<double> lambdas{3.0, 1.0}, Cs{1.2, 1.2};
    const PackingFamily f = build_family_a(30, 2, 1, q, Cs, lambdas, 10.0);
    std::string why;
    if (f.members.size() != 28 || !check_family(f, {q, Cs, 30, 2}, lambdas, 10.0, true, why))
      failures.push_back("part a: " + why);
  }
  struct Case {
    const char* name;
    double n;
    int N;
    double C;
    RegimeTag tag;
    std::optional<double> alpha;
  };
  const Case cases[] = {{"bounded-below", 18.0, 20, 2.0, RegimeTag::bounded_below, std::nullopt},
                        {"n-dominated", 20.0, 12, 2.0, RegimeTag::n_dominated, std::nullopt},
                        {"sparsity-dominated", 18.0, 20, 1.5, RegimeTag::sparsity_dominated, std::nullopt},
                        {"log-sparse", 32.0, 40, 1.5, RegimeTag::log_sparse, 0.5}};
  for (const Case& c : cases) {
    const std::vector<double> lambdas{1.0}, Cs{c.C};
    try {
      const PackingFamily f = build_family_b(c.n, c.N, 1, 1, lambdas, q, Cs, c.tag, c.alpha);
      std::string why;
      if (!check_family(f, {q, Cs, c.N, 1}, lambdas, c.n, false, why)) failures.push_back(std::string(c.name) + ": " + why);
      if (c.tag == RegimeTag::log_sparse && f.support_count < 2) failures.push_back("log-sparse: a single support");
      for (const Matrix& th : f.members) {
        int nz = 0;
        for (Eigen::Index k = 0; k < th.rows(); ++k) nz += th(k, 0) != 0.0;
        if (nz != f.m0 + 1) {
          failures.push_back(std::string(c.name) + ": member support is not m0 + 1");
          break;
        }
      }
    } catch (const Error& e) {
      failures.push_back(std::string(c.name) + ": " + e.what());
    }
  }
  {  // Y*_9 against exhaustive enumeration: every candidate is compatible with every other
    std::vector<Vector> cand;
    for (int i = 0; i < 9; ++i)
      for (int j = i + 1; j < 9; ++j)
        for (int si : {1, -1})
          for (int sj : {1, -1}) {
            Vector v = Vector::Zero(9);
            v(i) = si / std::sqrt(2.0);
            v(j) = sj / std::sqrt(2.0);
            cand.push_back(v);
          }
    bool all_far = true;
    for (std::size_t i = 0; i < cand.size(); ++i)
      for (std::size_t j = 0; j < i; ++j) all_far = all_far && (cand[i] - cand[j]).norm() >= 1.0 - 1e-12;
    const SpherePacking y = build_Ym_star(9);
    if (!all_far || cand.size() != 144 || y.points.size() != cand.size())
      failures.push_back("|Y*_9| = " + std::to_string(y.points.size()) + ", oracle " + std::to_string(cand.size()));
  }
  {  // two point
    const std::vector<double> lambdas{6.0, 2.0}, Cs{1.5, 1.5};
    const double n = 50.0;
    const PackingFamily f = build_two_point_c(n, 2, 2, 1, lambdas, q, Cs, 10);
    std::string why;
    if (!check_family(f, {q, Cs, 10, 2}, lambdas, n, false, why)) failures.push_back("part c: " + why);
    const double sym = kl_spiked(f.members[0], f.members[1], lambdas, n) + kl_spiked(f.members[1], f.members[0], lambdas, n);
    const double expect = n * eval_g(2.0, 6.0) * f.radius_r * f.radius_r;
    if (std::abs(sym - expect) > 1e-10 * expect) failures.push_back("part c: symmetric KL " + fmt("%.12g", sym));
    if (std::abs(f.members[1].col(0).dot(f.members[1].col(1))) > 1e-15) failures.push_back("part c: not orthogonal");
  }
  std::string detail = failures.empty() ? "parts a, b (3 regimes), log-sparse, c; |Y*_9| = 144" : "";
  for (const auto& s : failures) detail += (detail.empty() ? "" : "; ") + s;
  return {failures.empty(), detail};
}

Outcome concentration() {
  std::vector<std::pair<BoundKind, BoundParams>> points;
  auto chi = [&](BoundKind k, int n, double eps) {
    BoundParams p;
    p.n = n;
    p.eps = eps;
    points.push_back({k, p});
  };
  chi(BoundKind::chi2_upper, 50, 0.3);
  chi(BoundKind::chi2_upper, 200, 0.2);
  chi(BoundKind::chi2_upper_sharp, 100, 0.3);
  chi(BoundKind::chi2_lower, 50, 0.3);
  chi(BoundKind::chi2_lower, 200, 0.2);
  chi(BoundKind::chi2_lower, 100, 0.5);
  for (double b : {0.25, 0.5, 1.0, 1.2}) {
    BoundParams p;
    p.n = 400;
    p.b = b;
    points.push_back({BoundKind::cross_product, p});
  }
  for (auto [n, N, c] : {std::tuple{40, 40, 1.0}, std::tuple{60, 30, 0.8}}) {
    BoundParams p;
    p.n = n;
    p.N = N;
    p.c = c;
    points.push_back({BoundKind::wishart_deviation, p});
  }
  for (BoundKind k : {BoundKind::singular_max, BoundKind::singular_min}) {
    BoundParams p;
    p.p = 10;
    p.q = 40;
    p.t = 0.2;
    points.push_back({k, p});
  }
  int bad = 0;
  double worst_margin = -1.0;
  std::string which;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const ConcentrationResult r = concentration_mc(points[i].first, points[i].second, 100000, derive_seed(9009, i));
    if (!r.bound.in_domain) {
      ++bad;
      which += " " + to_string(points[i].first) + "(out of domain)";
      continue;
    }
    const double margin = (r.empirical_tail - r.bound.value) / std::max(r.std_error, 1e-300);
    if (margin > worst_margin) worst_margin = margin;
    if (!r.holds) {
      ++bad;
      which += " " + to_string(points[i].first);
    }
  }
  return {bad == 0, std::to_string(points.size()) + " points at 1e5 reps, " + std::to_string(bad) + " violated" +
                        which};
}

Outcome perturbation_residual() {
  Rng rng(10010);
  int tested = 0;
  int violated = 0;
  const double limit = (std::sqrt(5.0) - 1.0) / 4.0;
  while (tested < 1000) {
    const int T = 2 + static_cast<int>(rng.uniform() * 9);
    const Matrix Q = random_frame(T, T, rng);
    Vector d(T);
    for (int i = 0; i < T; ++i) d(i) = 10.0 * rng.uniform();
    const Matrix A = Q * d.asDiagonal() * Q.transpose();
    Matrix B(T, T);
    for (int i = 0; i < T; ++i)
      for (int j = 0; j <= i; ++j) B(i, j) = B(j, i) = rng.normal();
    B *= std::pow(10.0, -3.0 + 2.5 * rng.uniform());
    const int r = 1 + static_cast<int>(rng.uniform() * T);
    std::vector<double> sorted(d.data(), d.data() + T);
    std::sort(sorted.rbegin(), sorted.rend());
    double gap = 1e300;
    if (r > 1) gap = std::min(gap, sorted[r - 2] - sorted[r - 1]);
    if (r < T) gap = std::min(gap, sorted[r - 1] - sorted[r]);
    if (gap <= 1e-10) continue;
    const PerturbationRecord p = perturbation_expand(A, B, r);
    if (!(p.Delta_r < limit)) continue;
    ++tested;
    const double bound = std::min(10.0 * p.Delta_bar_r * p.Delta_bar_r, p.bound_fine);
    if (p.actual_residual > bound + 1e-12) ++violated;
  }
  return {violated == 0, std::to_string(violated) + " of 1000 qualifying pairs exceed the bound"};
}

// Runs one CLI command into `dir`, returning every output file's bytes.
std::vector<std::pair<std::string, std::string>> run_cli(std::vector<std::string> args, const fs::path& dir, int& rc) {
  fs::remove_all(dir);
  args.insert(args.begin(), "aspca");
  args.push_back("--out");
  args.push_back(dir.string());
  std::ostringstream out, err;
  rc = cli::run(args, out, err);
  std::vector<std::pair<std::string, std::string>> files;
  if (!fs::exists(dir)) return files;
  for (const auto& e : fs::directory_iterator(dir)) {
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    files.emplace_back(e.path().filename().string(), s.str());
  }
  std::sort(files.begin(), files.end());
  return files;
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / ("aspca-accept-" + std::to_string(::getpid()));
  fs::create_directories(root);
  {
    ModelRecipe recipe;
    recipe.N = 60;
    recipe.lambdas = {8.0};
    recipe.support_sizes = {5};
    Rng rng(11);
    const SpikedCovariance model = build_model(recipe, rng);
    const Dataset d = sample_dataset(model, 80, rng);
    std::ofstream csv(root / "data.csv");
    csv.precision(17);
    for (Eigen::Index i = 0; i < d.observations.rows(); ++i) {
      for (Eigen::Index j = 0; j < d.observations.cols(); ++j) csv << (j ? "," : "") << d.observations(i, j);
      csv << '\n';
    }
  }
  {
    std::ofstream(root / "sim.json") << R"({"model": {"kind": "equal_weights", "N": 80, "lambdas": [6, 3],
      "support_sizes": [6, 4]}, "estimators": ["opca", "spca", "aspca"], "grid": [[100, 80], [150, 80]],
      "reps": 6, "seed": 99})";
    std::ofstream(root / "conc.json") << R"({"reps": 500, "seed": 5, "checks": [{"kind": "chi2_upper", "n": 40,
      "eps": 0.3}, {"kind": "singular_max", "p": 5, "q": 20, "t": 0.3}]})";
  }
  const std::vector<std::pair<std::string, std::vector<std::string>>> commands{
      {"estimate", {"estimate", "--input", (root / "data.csv").string(), "--override", "estimator.gamma1=2"}},
      {"simulate-risk", {"simulate-risk", "--config", (root / "sim.json").string(), "--threads", "2"}},
      {"lower-bound", {"lower-bound", "--override", "part=b", "--override", "regime=bounded-below", "--override", "n=18",
                       "--override", "N=20", "--override", "lambdas=[1]", "--override", "radii=[2]"}},
      {"concentration-check", {"concentration-check", "--config", (root / "conc.json").string()}},
      {"packing", {"packing", "--override", "m=12", "--override", "include_points=true"}}};
  std::vector<std::string> failures;
  for (const auto& [name, args] : commands) {
    int rc1 = 0, rc2 = 0;
    const auto a = run_cli(args, root / (name + "-1"), rc1);
    const auto b = run_cli(args, root / (name + "-2"), rc2);
    if (rc1 != 0 || rc2 != 0 || a.empty()) {
      failures.push_back(name + " exited " + std::to_string(rc1));
    } else if (a != b) {
      failures.push_back(name + " outputs differ");
    }
  }
  fs::remove_all(root);
  std::string detail = failures.empty() ? "5 commands rerun, outputs byte-identical" : "";
  for (const auto& s : failures) detail += (detail.empty() ? "" : "; ") + s;
  return {failures.empty(), detail};
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "kl-oracle-equivalence", 10, kl_oracle},
      {2, "algebraic-identities", 5, algebraic_identities},
      {3, "first-order-expectation", 120, exact_expectation},
      {4, "opca-risk-and-slope", 300, opca_risk_check},
      {5, "aspca-dominance", 600, aspca_dominance},
      {6, "rank-estimate-consistency", 300, m_hat_consistency},
      {7, "selection-bracketing", 600, bracketing},
      {8, "packing-certificates", 60, packing_certificates},
      {9, "concentration-bounds", 600, concentration},
      {10, "perturbation-residual", 30, perturbation_residual},
      {11, "cli-determinism", 600, determinism},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failed = 0;
  for (const Criterion& c : all) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > c.budget_s) {
      o.pass = false;
      o.detail += "; over the " + fmt("%.0f", c.budget_s) + " s budget";
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << c.id << " " << c.name << ": " << o.detail << " ["
              << fmt("%.1f", secs) << " s]" << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
