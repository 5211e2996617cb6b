#include "aspca/simulation.hpp"

#include "aspca/format.hpp"
#include "aspca/linalg.hpp"
#include "aspca/metrics.hpp"
#include "aspca/perturbation.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

namespace aspca {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double median_of(std::vector<double> v) {
  if (v.empty()) return kNaN;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  return 0.5 * (upper + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
}

std::vector<double> scaled_lambdas(const SpikedCovariance& model) {
  std::vector<double> out = model.lambdas();
  if (model.sigma2() > 0.0) {
    for (double& l : out) l /= model.sigma2();
  }
  return out;
}

std::vector<double> resolved_radii(const ModelRecipe& r) {
  if (!r.radii.empty()) return r.radii;
  std::vector<double> out;
  const int M = r.rank();
  if (r.fixed_theta.cols() > 0) {
    for (int nu = 0; nu < r.fixed_theta.cols(); ++nu) {
      const double sum = lq_sum(r.fixed_theta.col(nu), r.q);
      out.push_back(std::max(1.0, std::pow(sum * (1.0 + 1e-9), 1.0 / r.q)));
    }
    return out;
  }
  for (int nu = 0; nu < M; ++nu) {
    double sum = 1.0;  // l_q sum of the column, bounded above
    if (r.kind == ModelKind::spread) {
      const int m = r.spread_m > 0 ? r.spread_m : std::min((r.N - M) / M, 32);
      const double rad = r.spread_r > 0.0 ? r.spread_r : 0.5;
      sum = std::pow(1.0 - rad * rad, r.q / 2.0) + std::pow(static_cast<double>(m), 1.0 - r.q / 2.0) * std::pow(rad, r.q);
    } else {
      const int s = nu < static_cast<int>(r.support_sizes.size()) ? r.support_sizes[static_cast<std::size_t>(nu)] : 1;
      sum = std::pow(static_cast<double>(s), 1.0 - r.q / 2.0);
    }
    out.push_back(std::max(1.0, std::pow(sum * (1.0 + 1e-9), 1.0 / r.q)));
  }
  return out;
}

}  // namespace

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body) {
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers == 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::atomic<bool> failed{false};
  auto run = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count || failed.load()) return;
      try {
        body(i);
      } catch (...) {
        if (!failed.exchange(true)) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::min(workers, count); ++w) pool.emplace_back(run);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::sparse: return "sparse";
    case ModelKind::equal_weights: return "equal_weights";
    case ModelKind::spread: return "spread";
  }
  return "sparse";
}

ModelKind model_kind_from_string(const std::string& name) {
  for (auto k : {ModelKind::sparse, ModelKind::equal_weights, ModelKind::spread}) {
    if (to_string(k) == name) return k;
  }
  fail(ErrorKind::invalid_argument, "unknown model kind '" + name + "'");
}

LqSpaceSpec ModelRecipe::space() const {
  LqSpaceSpec s;
  s.q = q;
  s.radii = resolved_radii(*this);
  s.ambient_dim = N;
  s.rank = rank();
  return s;
}

SpikedCovariance build_model(const ModelRecipe& recipe, Rng& rng) {
  const LqSpaceSpec space = recipe.space();
  space.validate();
  const int M = recipe.rank();
  const int N = recipe.N;
  if (recipe.fixed_theta.cols() > 0) {
    require(recipe.fixed_theta.rows() == N && recipe.fixed_theta.cols() == M,
            "build_model: fixed eigenvectors must be N x M");
    if (!membership_report(recipe.fixed_theta, space).member) {
      fail(ErrorKind::infeasible, "build_model: fixed eigenvectors leave the l_q ball");
    }
    return SpikedCovariance(recipe.lambdas, recipe.fixed_theta, recipe.sigma2);
  }
  if (recipe.kind != ModelKind::spread) {
    std::vector<int> sizes = recipe.support_sizes;
    require(static_cast<int>(sizes.size()) == M, "build_model: need one support size per spike");
    BasisOptions opt;
    opt.layout = SupportLayout::disjoint;
    opt.equal_weights = recipe.kind == ModelKind::equal_weights;
    return SpikedCovariance(recipe.lambdas, make_sparse_basis(space, sizes, rng, opt), recipe.sigma2);
  }
  const int m = recipe.spread_m > 0 ? recipe.spread_m : std::min((N - M) / M, 32);
  require(m >= 1 && M + M * m <= N, "build_model: spread blocks do not fit in N coordinates");
  Matrix theta = Matrix::Zero(N, M);
  for (int nu = 0; nu < M; ++nu) {
    double r = recipe.spread_r;
    if (r <= 0.0) {
      r = recipe.radii.empty() ? 0.5 : std::min(0.95, polar_radius(recipe.q, space.radii[static_cast<std::size_t>(nu)], m));
    }
    require(r > 0.0 && r < 1.0, "build_model: spread radius must lie in (0, 1)");
    theta(nu, nu) = std::sqrt(1.0 - r * r);
    const double w = r / std::sqrt(static_cast<double>(m));
    for (int l = 0; l < m; ++l) theta(M + nu * m + l, nu) = rng.uniform() < 0.5 ? -w : w;
  }
  const MembershipReport rep = membership_report(theta, space);
  if (!rep.member) fail(ErrorKind::infeasible, "build_model: spread model leaves the l_q ball");
  return SpikedCovariance(recipe.lambdas, std::move(theta), recipe.sigma2);
}

std::string to_string(EstimatorName name) {
  switch (name) {
    case EstimatorName::opca: return "opca";
    case EstimatorName::spca: return "spca";
    case EstimatorName::aspca: return "aspca";
    case EstimatorName::aspca_unthresholded: return "aspca_unthresholded";
  }
  return "opca";
}

EstimatorName estimator_from_string(const std::string& name) {
  for (auto e : {EstimatorName::opca, EstimatorName::spca, EstimatorName::aspca, EstimatorName::aspca_unthresholded}) {
    if (to_string(e) == name) return e;
  }
  fail(ErrorKind::invalid_argument, "unknown estimator '" + name + "'");
}

namespace {

struct RepOutcome {
  double loss = kNaN;
  bool fallback = false;
};

RepOutcome run_estimator(const EstimatorSpec& spec, const CovarianceSource& source, const SpikedCovariance& model,
                         int nu) {
  RepOutcome out;
  const Vector truth = model.theta().col(nu - 1);
  const int n = source.n();
  const int N = source.dim();
  try {
    switch (spec.name) {
      case EstimatorName::opca: {
        const int M = std::max(nu, spec.config.M_known.value_or(nu));
        const Matrix v = opca(source, std::min(M, std::min(n, N)));
        out.loss = loss_L(v.col(nu - 1), truth);
        break;
      }
      case EstimatorName::spca: {
        CovarianceSource s = source;
        const double sigma2 = spec.config.sigma2_known.value_or(estimate_sigma2(s.diagonal()));
        s.rescale(1.0 / sigma2);
        const int M = std::max(nu, spec.config.M_known.value_or(nu));
        const EstimationResult r = spca(s, selection_threshold(spec.config.gamma1, n, N), M);
        out.fallback = r.fallback_used;
        out.loss = loss_L(r.eigvecs.col(nu - 1), truth);
        break;
      }
      case EstimatorName::aspca:
      case EstimatorName::aspca_unthresholded: {
        const EstimationResult r = aspca(source, spec.config);
        out.fallback = r.fallback_used;
        if (r.M_hat < nu) break;
        const Matrix& v = spec.name == EstimatorName::aspca ? r.eigvecs_thresholded : r.eigvecs;
        out.loss = loss_L(v.col(nu - 1), truth);
        break;
      }
    }
  } catch (const Error&) {
    out.loss = kNaN;
  }
  return out;
}

double theory_for(const EstimatorSpec& spec, const ModelRecipe& recipe, const SpikedCovariance& model, int n, int N,
                  int nu) {
  const std::vector<double> lam = scaled_lambdas(model);
  const int M = model.rank();
  switch (spec.name) {
    case EstimatorName::opca: return opca_risk(n, N, M, lam, nu);
    case EstimatorName::spca: return kNaN;
    case EstimatorName::aspca:
    case EstimatorName::aspca_unthresholded: {
      const std::vector<double> radii = resolved_radii(recipe);
      return aspca_rate(n, N, M, lam, recipe.q, radii, nu, default_rate_gammas(spec.config.gamma2)).total;
    }
  }
  return kNaN;
}

}  // namespace

RiskReport run_risk_mc(const ModelRecipe& recipe, const std::vector<EstimatorSpec>& estimators,
                       const std::vector<std::pair<int, int>>& grid, const RiskOptions& options) {
  require(options.reps >= 1, "run_risk_mc: need at least one replication");
  require(!estimators.empty() && !grid.empty(), "run_risk_mc: need estimators and grid points");
  require(options.nu >= 1 && options.nu <= recipe.rank(), "run_risk_mc: spike index out of range");
  RiskReport report;
  report.grid = grid;
  report.master_seed = options.master_seed;
  report.config_hash = options.config_hash;
  const auto reps = static_cast<std::size_t>(options.reps);

  for (std::size_t g = 0; g < grid.size(); ++g) {
    const auto [n, N] = grid[g];
    require(n >= 1 && N > recipe.rank(), "run_risk_mc: grid point needs n >= 1 and N > M");
    ModelRecipe rg = recipe;
    rg.N = N;
    Rng model_rng(derive_seed(splitmix64(options.master_seed), g));
    const SpikedCovariance model = build_model(rg, model_rng);
    const std::uint64_t point_seed = derive_seed(options.master_seed, g);
    const Matrix sigma = options.exact_covariance ? model.covariance() : Matrix();

    std::vector<std::vector<RepOutcome>> outcomes(estimators.size(), std::vector<RepOutcome>(reps));
    parallel_for(reps, options.threads, [&](std::size_t i) {
      Rng rng = Rng::stream(point_seed, i);
      const CovarianceSource source = options.exact_covariance
                                          ? CovarianceSource::from_matrix(sigma, n)
                                          : CovarianceSource::from_data(sample_dataset(model, n, rng).observations);
      for (std::size_t e = 0; e < estimators.size(); ++e) {
        outcomes[e][i] = run_estimator(estimators[e], source, model, options.nu);
      }
    });

    for (std::size_t e = 0; e < estimators.size(); ++e) {
      RiskRow row;
      row.n = n;
      row.N = N;
      row.estimator = to_string(estimators[e].name);
      row.nu = options.nu;
      row.reps = options.reps;
      row.seed = point_seed;
      std::vector<double> ok;
      for (const RepOutcome& o : outcomes[e]) {
        row.losses.push_back(o.loss);
        row.fallback.push_back(o.fallback);
        if (std::isnan(o.loss)) {
          ++row.failed_reps;
        } else if (o.fallback) {
          ++row.fallback_reps;
        } else {
          ok.push_back(o.loss);
        }
      }
      row.ok_reps = static_cast<int>(ok.size());
      row.aborted = 2 * row.failed_reps > row.reps;
      row.mean_loss = kNaN;
      row.std_error = kNaN;
      row.median_loss = kNaN;
      if (!row.aborted && !ok.empty()) {
        double sum = 0.0;
        for (double x : ok) sum += x;
        row.mean_loss = sum / static_cast<double>(ok.size());
        if (ok.size() >= 2) {
          double ss = 0.0;
          for (double x : ok) ss += (x - row.mean_loss) * (x - row.mean_loss);
          row.std_error = std::sqrt(ss / static_cast<double>(ok.size() - 1)) / std::sqrt(static_cast<double>(ok.size()));
        }
        row.median_loss = median_of(ok);
      }
      row.theory = theory_for(estimators[e], rg, model, n, N, options.nu);
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

std::string RiskReport::to_csv() const {
  std::ostringstream os;
  os << "n,N,estimator,nu,reps,ok_reps,fallback_reps,failed_reps,mean_loss,std_error,median_loss,theory,aborted,"
        "seed,master_seed,config_hash\n";
  for (const RiskRow& r : rows) {
    os << r.n << ',' << r.N << ',' << r.estimator << ',' << r.nu << ',' << r.reps << ',' << r.ok_reps << ','
       << r.fallback_reps << ',' << r.failed_reps << ',' << format_double(r.mean_loss) << ','
       << format_double(r.std_error) << ',' << format_double(r.median_loss) << ',' << format_double(r.theory) << ','
       << (r.aborted ? 1 : 0) << ',' << r.seed << ',' << master_seed << ',' << config_hash << '\n';
  }
  return os.str();
}

std::string RiskReport::to_json() const {
  nlohmann::ordered_json doc;
  doc["master_seed"] = master_seed;
  doc["config_hash"] = config_hash;
  auto& g = doc["grid"] = nlohmann::ordered_json::array();
  for (const auto& [n, N] : grid) g.push_back({{"n", n}, {"N", N}});
  auto& rs = doc["rows"] = nlohmann::ordered_json::array();
  for (const RiskRow& r : rows) {
    nlohmann::ordered_json j;
    j["n"] = r.n;
    j["N"] = r.N;
    j["estimator"] = r.estimator;
    j["nu"] = r.nu;
    j["reps"] = r.reps;
    j["ok_reps"] = r.ok_reps;
    j["fallback_reps"] = r.fallback_reps;
    j["failed_reps"] = r.failed_reps;
    j["mean_loss"] = format_double(r.mean_loss);
    j["std_error"] = format_double(r.std_error);
    j["median_loss"] = format_double(r.median_loss);
    j["theory"] = format_double(r.theory);
    j["aborted"] = r.aborted;
    j["seed"] = r.seed;
    rs.push_back(std::move(j));
  }
  return doc.dump(2) + "\n";
}

BracketReport selection_bracketing(const SpikedCovariance& model, const EstimatorConfig& config,
                                   const BracketOptions& options) {
  require(options.stage == 1 || options.stage == 2, "selection_bracketing: stage must be 1 or 2");
  require(options.reps >= 1 && options.n >= 1, "selection_bracketing: need reps >= 1 and n >= 1");
  require(options.a_minus > 0.0 && options.a_minus < 1.0 && options.a_plus > 1.0,
          "selection_bracketing: need 0 < a_minus < 1 < a_plus");
  const int n = options.n;
  const int N = model.dim();
  const double L = std::log(static_cast<double>(std::max(n, N)));
  const std::vector<double> lam = scaled_lambdas(model);

  BracketReport rep;
  rep.reps = options.reps;
  rep.stage = options.stage;
  Vector score = Vector::Zero(N);
  double lower_level = 0.0;
  double upper_level = 0.0;
  if (options.stage == 1) {
    for (int nu = 0; nu < model.rank(); ++nu) score += lam[static_cast<std::size_t>(nu)] * model.theta().col(nu).cwiseAbs2();
    const double g1 = selection_threshold(config.gamma1, n, N);
    lower_level = options.a_plus * g1;   // I^- = {zeta > a_+ gamma_1n}
    upper_level = options.a_minus * g1;  // I^+ = {zeta > a_- gamma_1n}
    rep.definition = "zeta_k = sum lambda theta_k^2; I- = {zeta > a+ gamma1n}; I+ = {zeta > a- gamma1n}";
  } else {
    for (int nu = 0; nu < model.rank(); ++nu) {
      score += eval_h(lam[static_cast<std::size_t>(nu)]) * model.theta().col(nu).cwiseAbs2();
    }
    const double gp = options.gamma2_plus.value_or(1.25 * config.gamma2);
    const double gm = options.gamma2_minus.value_or(0.75 * config.gamma2);
    require(gp > config.gamma2 && config.gamma2 > gm && gm > 0.0,
            "selection_bracketing: need gamma2_plus > gamma2 > gamma2_minus > 0");
    lower_level = gp * gp * L / n;
    upper_level = gm * gm * L / n;
    rep.definition = "zeta~_k = sum h(lambda) theta_k^2; I- = {zeta~ > g2+^2 L/n}; I+ = {zeta~ > g2-^2 L/n}";
  }
  for (int k = 0; k < N; ++k) {
    if (score(k) > lower_level) rep.I_minus.push_back(k);
    if (score(k) > upper_level) rep.I_plus.push_back(k);
  }

  std::vector<char> lower(static_cast<std::size_t>(options.reps), 0);
  std::vector<char> upper(static_cast<std::size_t>(options.reps), 0);
  parallel_for(static_cast<std::size_t>(options.reps), options.threads, [&](std::size_t i) {
    Rng rng = Rng::stream(options.seed, i);
    const Dataset d = sample_dataset(model, n, rng);
    const EstimationResult r = aspca(CovarianceSource::from_data(d.observations, config.center), config);
    Indices sel = r.I1;
    if (options.stage == 2) {
      sel.clear();
      std::merge(r.I1.begin(), r.I1.end(), r.I2.begin(), r.I2.end(), std::back_inserter(sel));
    }
    lower[i] = std::includes(sel.begin(), sel.end(), rep.I_minus.begin(), rep.I_minus.end());
    upper[i] = std::includes(rep.I_plus.begin(), rep.I_plus.end(), sel.begin(), sel.end());
  });
  int lo = 0, up = 0, both = 0;
  for (std::size_t i = 0; i < lower.size(); ++i) {
    lo += lower[i];
    up += upper[i];
    both += lower[i] && upper[i];
  }
  rep.freq_lower = static_cast<double>(lo) / options.reps;
  rep.freq_upper = static_cast<double>(up) / options.reps;
  rep.freq_both = static_cast<double>(both) / options.reps;
  return rep;
}

namespace {

Matrix gaussian(int rows, int cols, Rng& rng) {
  Matrix z(rows, cols);
  for (int j = 0; j < cols; ++j) {
    for (int i = 0; i < rows; ++i) z(i, j) = rng.normal();
  }
  return z;
}

Vector gram_eigenvalues(const Matrix& z, double divisor) {
  // Nonzero spectrum of Z Z^T / divisor through the smaller Gram matrix.
  const Matrix g = z.rows() <= z.cols() ? Matrix(z * z.transpose()) : Matrix(z.transpose() * z);
  Eigen::SelfAdjointEigenSolver<Matrix> solver(g / divisor, Eigen::EigenvaluesOnly);
  return solver.eigenvalues();  // ascending
}

bool exceeds(BoundKind kind, const BoundParams& p, double threshold, Rng& rng) {
  switch (kind) {
    case BoundKind::chi2_upper:
    case BoundKind::chi2_upper_sharp: return rng.chi_squared(p.n) > threshold;
    case BoundKind::chi2_lower: return rng.chi_squared(p.n) < threshold;
    case BoundKind::cross_product: {
      double s = 0.0;
      for (int i = 0; i < p.n; ++i) {
        const double a = rng.normal();
        s += a * rng.normal();
      }
      return std::abs(s / p.n) > threshold;
    }
    case BoundKind::wishart_deviation: {
      const Matrix z = gaussian(p.N, p.n, rng);
      const Vector ev = gram_eigenvalues(z, p.n);
      const double top = ev(ev.size() - 1);
      const double bottom = p.N > p.n ? 0.0 : ev(0);
      return std::max(top - 1.0, 1.0 - bottom) > threshold;
    }
    case BoundKind::singular_max:
    case BoundKind::singular_min:
    case BoundKind::eigen_max: {
      const Matrix z = gaussian(p.p, p.q, rng);
      const Vector ev = gram_eigenvalues(z, p.q);
      if (kind == BoundKind::eigen_max) return ev(ev.size() - 1) > threshold;
      if (kind == BoundKind::singular_max) return std::sqrt(ev(ev.size() - 1)) > threshold;
      return std::sqrt(std::max(0.0, ev(0))) < threshold;
    }
  }
  return false;
}

}  // namespace

ConcentrationResult concentration_mc(BoundKind kind, const BoundParams& params, int reps, std::uint64_t seed,
                                     int threads) {
  require(reps >= 1, "concentration_mc: need at least one replication");
  ConcentrationResult out;
  out.bound = concentration_bounds(kind, params);
  if (!out.bound.in_domain) {
    fail(ErrorKind::invalid_argument, "concentration_mc: " + to_string(kind) + " parameters out of domain (" +
                                          out.bound.note + ")");
  }
  out.reps = reps;
  std::vector<char> hit(static_cast<std::size_t>(reps), 0);
  parallel_for(hit.size(), threads, [&](std::size_t i) {
    Rng rng = Rng::stream(seed, i);
    hit[i] = exceeds(kind, params, out.bound.threshold, rng);
  });
  int count = 0;
  for (char h : hit) count += h;
  out.empirical_tail = static_cast<double>(count) / reps;
  out.std_error = std::sqrt(out.empirical_tail * (1.0 - out.empirical_tail) / reps);
  out.holds = out.empirical_tail <= out.bound.value + 3.0 * out.std_error;
  return out;
}

FirstOrderResult first_order_validation(const SpikedCovariance& model, int nu, int n, int reps, std::uint64_t seed,
                                        int threads, bool exact_covariance) {
  const int M = model.rank();
  const int N = model.dim();
  require(nu >= 1 && nu <= M, "first_order_validation: spike index out of range");
  require(reps >= 1 && n >= 1, "first_order_validation: need reps >= 1 and n >= 1");
  const Matrix sigma = model.covariance();
  const Matrix H = h_nu_operator(model, nu);
  const Vector theta = model.theta().col(nu - 1);
  const std::vector<double> lam = model.lambdas();
  double gap = N > M ? lam[static_cast<std::size_t>(nu - 1)] : std::numeric_limits<double>::infinity();
  for (int mu = 1; mu <= M; ++mu) {
    if (mu != nu) gap = std::min(gap, std::abs(lam[static_cast<std::size_t>(mu - 1)] - lam[static_cast<std::size_t>(nu - 1)]));
  }

  FirstOrderResult out;
  out.reps = reps;
  out.loss.assign(static_cast<std::size_t>(reps), 0.0);
  out.first_order_sq.assign(static_cast<std::size_t>(reps), 0.0);
  out.delta_bar.assign(static_cast<std::size_t>(reps), 0.0);
  parallel_for(static_cast<std::size_t>(reps), threads, [&](std::size_t i) {
    Matrix S;
    if (exact_covariance) {
      S = sigma;
    } else {
      Rng rng = Rng::stream(seed, i);
      S = sample_covariance(sample_dataset(model, n, rng).observations);
    }
    const EigenPairs ep = sym_eigen(S);
    out.loss[i] = loss_L(ep.vectors.col(nu - 1), theta);
    out.first_order_sq[i] = (H * (S * theta)).squaredNorm();
    out.delta_bar[i] = sym_spectral_norm(S - sigma) / gap;
  });
  double sum = 0.0;
  int inside = 0;
  for (int i = 0; i < reps; ++i) {
    const auto k = static_cast<std::size_t>(i);
    sum += out.first_order_sq[k];
    const double d = 3.0 * out.delta_bar[k];
    const double lo = out.first_order_sq[k] * std::pow(std::max(0.0, 1.0 - d), 2.0);
    const double hi = out.first_order_sq[k] * (1.0 + d) * (1.0 + d);
    const double tol = 1e-14;
    inside += out.loss[k] >= lo - tol && out.loss[k] <= hi + tol;
  }
  out.mean_first_order_sq = sum / reps;
  std::vector<double> scaled = lam;
  for (double& l : scaled) l /= model.sigma2();
  out.expected_first_order_sq = first_order_expectation(n, N, scaled, nu);
  out.sandwich_fraction = static_cast<double>(inside) / reps;
  return out;
}

SlopeFit log_log_fit(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size(), "log_log_fit: length mismatch");
  std::vector<double> lx, ly;
  SlopeFit fit;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] > 0.0 && y[i] > 0.0 && std::isfinite(x[i]) && std::isfinite(y[i])) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(y[i]));
    } else {
      ++fit.excluded;
    }
  }
  fit.used = static_cast<int>(lx.size());
  require(fit.used >= 2, "log_log_fit: need at least two usable points");
  const double k = fit.used;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= k;
  my /= k;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  require(sxx > 0.0, "log_log_fit: predictor has no spread");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (fit.used > 2) {
    double ssr = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      const double e = ly[i] - fit.intercept - fit.slope * lx[i];
      ssr += e * e;
    }
    fit.slope_se = std::sqrt(ssr / (k - 2.0) / sxx);
  } else {
    fit.slope_se = kNaN;
  }
  return fit;
}

Predictor predictor_from_string(const std::string& name) {
  if (name == "n_over_nh") return Predictor::n_over_nh;
  if (name == "opca_risk") return Predictor::opca_risk;
  if (name == "aspca_shape") return Predictor::aspca_shape;
  fail(ErrorKind::invalid_argument, "unknown predictor '" + name + "'");
}

SlopeFit rate_regression(const RiskReport& report, const std::string& estimator, Predictor predictor,
                         const ModelRecipe& recipe, int nu) {
  std::vector<double> x, y;
  std::vector<double> lam = recipe.lambdas;
  for (double& l : lam) l /= recipe.sigma2;
  const double hn = eval_h(lam.at(static_cast<std::size_t>(nu - 1)));
  for (const RiskRow& r : report.rows) {
    if (r.estimator != estimator) continue;
    double p = 0.0;
    switch (predictor) {
      case Predictor::n_over_nh: p = r.N / (r.n * hn); break;
      case Predictor::opca_risk: p = opca_risk(r.n, r.N, recipe.rank(), lam, nu); break;
      case Predictor::aspca_shape:
        p = std::pow(std::log(static_cast<double>(std::max(r.n, r.N))) / (r.n * hn), 1.0 - recipe.q / 2.0);
        break;
    }
    x.push_back(p);
    y.push_back(r.aborted ? kNaN : r.mean_loss);
  }
  require(x.size() >= 4, "rate_regression: need at least four grid points");
  return log_log_fit(x, y);
}

}  // namespace aspca
