#include "cli.hpp"

#include "aspca/estimators.hpp"
#include "aspca/format.hpp"
#include "aspca/model_io.hpp"
#include "aspca/packing.hpp"
#include "aspca/random.hpp"
#include "aspca/rates.hpp"
#include "aspca/simulation.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

namespace aspca::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

constexpr const char* kManifest = "run.json";

// Allowed keys per config object; nested objects get their own schema.
struct Schema {
  std::set<std::string> keys;
  std::map<std::string, Schema> objects;
  std::map<std::string, Schema> arrays_of_objects;
};

Schema estimator_schema() {
  return {{"gamma1", "gamma1_bar", "gamma1_prime", "kappa", "gamma2", "gamma3", "M_known", "sigma2_known", "center"}, {}, {}};
}

Schema schema_for(const std::string& command) {
  if (command == "estimate") return {{"input", "header", "estimator"}, {{"estimator", estimator_schema()}}, {}};
  if (command == "simulate-risk") {
    Schema model{{"kind", "N", "lambdas", "q", "radii", "support_sizes", "spread_m", "spread_r", "sigma2"}, {}, {}};
    Schema regression{{"estimator", "predictor"}, {}, {}};
    return {{"seed", "reps", "nu", "exact_covariance", "model", "model_file", "estimators", "estimator", "grid",
             "regression"},
            {{"model", model}, {"estimator", estimator_schema()}, {"regression", regression}},
            {}};
  }
  if (command == "lower-bound") {
    return {{"part", "n", "N", "M", "nu", "mu", "lambdas", "q", "radii", "regime", "alpha", "K", "max_points"}, {}, {}};
  }
  if (command == "concentration-check") {
    Schema check{{"kind", "n", "N", "p", "q", "eps", "b", "c", "t"}, {}, {}};
    return {{"seed", "reps", "checks"}, {}, {{"checks", check}}};
  }
  if (command == "packing") {
    Schema support{{"N_pool", "m", "max_overlap"}, {}, {}};
    return {{"m", "support", "max_points", "max_candidates", "include_points"}, {{"support", support}}, {}};
  }
  fail(ErrorKind::invalid_argument, "unknown command '" + command + "'");
}

void check_keys(const json& obj, const Schema& schema, const std::string& where) {
  if (!obj.is_object()) fail(ErrorKind::parse, where + " must be a JSON object");
  for (const auto& [key, value] : obj.items()) {
    if (!schema.keys.count(key)) fail(ErrorKind::parse, "unknown config key '" + where + key + "'");
    if (auto it = schema.objects.find(key); it != schema.objects.end()) {
      check_keys(value, it->second, where + key + ".");
    }
    if (auto it = schema.arrays_of_objects.find(key); it != schema.arrays_of_objects.end()) {
      if (!value.is_array()) fail(ErrorKind::parse, "config key '" + where + key + "' must be an array");
      for (std::size_t i = 0; i < value.size(); ++i) {
        check_keys(value[i], it->second, where + key + "[" + std::to_string(i) + "].");
      }
    }
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::parse, "cannot read '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorKind::parse, what + ": " + e.what());
  }
}

void set_path(json& root, const std::string& dotted, const json& value) {
  json* node = &root;
  std::size_t start = 0;
  for (;;) {
    const std::size_t dot = dotted.find('.', start);
    const std::string key = dotted.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) fail(ErrorKind::parse, "malformed override key '" + dotted + "'");
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    json& child = (*node)[key];
    if (child.is_null()) child = json::object();
    if (!child.is_object()) fail(ErrorKind::parse, "override '" + dotted + "' descends into a non-object");
    node = &child;
    start = dot + 1;
  }
}

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> reps;
  std::string out_dir = "aspca-out";
  int threads = 1;
  std::vector<std::string> overrides;
};

// Merged configuration: file, then --seed/--reps, then --override entries.
json effective_config(const std::string& command, const CommonFlags& flags, const json& extra) {
  json cfg = flags.config_path.empty() ? json::object() : parse_json(read_file(flags.config_path), "config");
  if (!cfg.is_object()) fail(ErrorKind::parse, "config must be a JSON object");
  for (const auto& [k, v] : extra.items()) cfg[k] = v;
  const Schema schema = schema_for(command);
  if (flags.seed) {
    if (!schema.keys.count("seed")) fail(ErrorKind::parse, "--seed is not used by '" + command + "'");
    cfg["seed"] = *flags.seed;
  }
  if (flags.reps) {
    if (!schema.keys.count("reps")) fail(ErrorKind::parse, "--reps is not used by '" + command + "'");
    cfg["reps"] = *flags.reps;
  }
  for (const std::string& ov : flags.overrides) {
    const std::size_t eq = ov.find('=');
    if (eq == std::string::npos) fail(ErrorKind::parse, "override '" + ov + "' is not key=value");
    const std::string text = ov.substr(eq + 1);
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;
    set_path(cfg, ov.substr(0, eq), value);
  }
  check_keys(cfg, schema, "");
  return cfg;
}

std::string config_hash(const json& cfg) { return fnv1a_hex(cfg.dump()); }

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(ErrorKind::parse, std::string("config key '") + key + "': " + e.what());
  }
}

template <typename T>
T get_req(const json& obj, const char* key) {
  if (!obj.contains(key)) fail(ErrorKind::parse, std::string("missing config key '") + key + "'");
  return get_or<T>(obj, key, T{});
}

EstimatorConfig estimator_config(const json& obj) {
  EstimatorConfig c;
  if (obj.is_null()) return c;
  c.gamma1 = get_or(obj, "gamma1", c.gamma1);
  c.gamma1_bar = get_or(obj, "gamma1_bar", c.gamma1_bar);
  c.gamma1_prime = get_or(obj, "gamma1_prime", c.gamma1_prime);
  c.kappa = get_or(obj, "kappa", c.kappa);
  c.gamma2 = get_or(obj, "gamma2", std::sqrt(1.5) * c.kappa);
  c.gamma3 = get_or(obj, "gamma3", c.gamma3);
  if (obj.contains("M_known")) c.M_known = get_req<int>(obj, "M_known");
  if (obj.contains("sigma2_known")) c.sigma2_known = get_req<double>(obj, "sigma2_known");
  c.center = get_or(obj, "center", false);
  c.validate();
  return c;
}

// Writes the files and the manifest; every path is inside out_dir.
void emit(const std::string& out_dir, const std::string& command, const json& cfg,
          const std::vector<std::pair<std::string, std::string>>& files) {
  fs::create_directories(out_dir);
  ojson manifest;
  manifest["command"] = command;
  manifest["config"] = cfg;
  manifest["config_hash"] = config_hash(cfg);
  manifest["generator"] = std::string(Rng::generator_name);
  ojson hashes = ojson::object();
  for (const auto& [name, body] : files) {
    std::ofstream f(fs::path(out_dir) / name, std::ios::binary);
    if (!f) fail(ErrorKind::invalid_argument, "cannot write '" + name + "' in '" + out_dir + "'");
    f << body;
    hashes[name] = fnv1a_hex(body);
  }
  manifest["files"] = hashes;
  std::ofstream m(fs::path(out_dir) / kManifest, std::ios::binary);
  m << manifest.dump(2) << '\n';
}

ojson sparse_columns(const Matrix& v) {
  ojson cols = ojson::array();
  for (Eigen::Index j = 0; j < v.cols(); ++j) {
    ojson col = ojson::array();
    for (Eigen::Index k = 0; k < v.rows(); ++k) {
      if (v(k, j) != 0.0) col.push_back(ojson::array({k, v(k, j)}));
    }
    cols.push_back(std::move(col));
  }
  return cols;
}

ojson number_or_null(double x) { return std::isfinite(x) ? ojson(x) : ojson(nullptr); }

// ---- estimate -------------------------------------------------------------

Matrix read_csv_matrix(const std::string& text, bool header) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  bool skipped = !header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    if (!skipped) {
      skipped = true;
      continue;
    }
    std::vector<double> row;
    std::size_t start = 0;
    for (;;) {
      const std::size_t comma = line.find(',', start);
      std::string cell = line.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      const auto b = cell.find_first_not_of(" \t");
      const auto e = cell.find_last_not_of(" \t");
      cell = b == std::string::npos ? std::string() : cell.substr(b, e - b + 1);
      double v = 0.0;
      const char* first = cell.data();
      const char* last = cell.data() + cell.size();
      if (!cell.empty() && *first == '+') ++first;
      const auto res = std::from_chars(first, last, v);
      if (cell.empty() || res.ec != std::errc() || res.ptr != last || !std::isfinite(v)) {
        fail(ErrorKind::parse, "input line " + std::to_string(line_no) + ": '" + cell + "' is not a number");
      }
      row.push_back(v);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      fail(ErrorKind::parse, "input line " + std::to_string(line_no) + ": ragged row");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) fail(ErrorKind::parse, "input holds no observations");
  Matrix X(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  return X;
}

int cmd_estimate(const json& cfg, const CommonFlags& flags, std::ostream& out, std::ostream& err) {
  const std::string input = get_req<std::string>(cfg, "input");
  const Matrix X = read_csv_matrix(read_file(input), get_or(cfg, "header", false));
  const EstimatorConfig ec = estimator_config(cfg.value("estimator", json()));
  if (X.rows() < 2) fail(ErrorKind::infeasible, "estimate: need at least two observations");
  if (X.cols() < 2) fail(ErrorKind::infeasible, "estimate: need at least two coordinates (N >= 2)");

  const EstimationResult r = aspca(CovarianceSource::from_data(X, ec.center), ec);
  ojson doc;
  doc["command"] = "estimate";
  doc["config_hash"] = config_hash(cfg);
  doc["n"] = X.rows();
  doc["N"] = X.cols();
  doc["M_hat"] = r.M_hat;
  doc["sigma2_hat"] = r.sigma2_hat;
  doc["lambda_tilde"] = r.lambda_tilde;
  doc["eigenvalue_estimates"] = r.eigenvalue_estimates;
  doc["I1"] = r.I1;
  doc["I2"] = r.I2;
  doc["fallback_used"] = r.fallback_used;
  doc["fallback_reason"] = r.fallback_reason;
  doc["threshold_skipped"] = r.threshold_skipped;
  doc["threshold_degenerate"] = r.threshold_degenerate;
  doc["eigvecs"] = sparse_columns(r.eigvecs);
  doc["eigvecs_thresholded"] = sparse_columns(r.eigvecs_thresholded);
  emit(flags.out_dir, "estimate", cfg, {{"estimate.json", doc.dump(2) + "\n"}});
  out << "M_hat=" << r.M_hat << " |I1|=" << r.I1.size() << " |I2|=" << r.I2.size() << '\n';
  if (r.fallback_used && !ec.M_known) {
    err << "estimate: " << r.fallback_reason << "; no M supplied, so no components were estimated\n";
    return exit_fallback_without_M;
  }
  return exit_ok;
}

// ---- simulate-risk --------------------------------------------------------

int cmd_simulate(const json& cfg, const CommonFlags& flags, std::ostream& out, std::ostream&) {
  ModelRecipe recipe;
  if (cfg.contains("model_file")) {
    if (cfg.contains("model")) fail(ErrorKind::parse, "give either 'model' or 'model_file', not both");
    const ModelDocument doc = read_model(read_file(get_req<std::string>(cfg, "model_file")));
    recipe.N = doc.space.ambient_dim;
    recipe.q = doc.space.q;
    recipe.radii = doc.space.radii;
    recipe.lambdas = doc.model.lambdas();
    recipe.sigma2 = doc.model.sigma2();
    recipe.fixed_theta = doc.model.theta();
  } else {
    const json m = cfg.value("model", json::object());
    recipe.kind = model_kind_from_string(get_or<std::string>(m, "kind", "equal_weights"));
    recipe.N = get_or(m, "N", recipe.N);
    recipe.lambdas = get_or(m, "lambdas", recipe.lambdas);
    recipe.q = get_or(m, "q", recipe.q);
    recipe.radii = get_or(m, "radii", std::vector<double>{});
    recipe.support_sizes = get_or(m, "support_sizes", std::vector<int>(recipe.lambdas.size(), 10));
    recipe.spread_m = get_or(m, "spread_m", 0);
    recipe.spread_r = get_or(m, "spread_r", 0.0);
    recipe.sigma2 = get_or(m, "sigma2", 1.0);
  }
  const EstimatorConfig ec = estimator_config(cfg.value("estimator", json()));
  std::vector<EstimatorSpec> specs;
  for (const std::string& name : get_or(cfg, "estimators", std::vector<std::string>{"opca", "aspca"})) {
    specs.push_back({estimator_from_string(name), ec});
  }
  std::vector<std::pair<int, int>> grid;
  for (const auto& p : get_or(cfg, "grid", std::vector<std::vector<int>>{{200, recipe.N}})) {
    if (p.size() != 2) fail(ErrorKind::parse, "grid entries must be [n, N] pairs");
    grid.emplace_back(p[0], p[1]);
  }
  RiskOptions opt;
  opt.nu = get_or(cfg, "nu", 1);
  opt.reps = get_or(cfg, "reps", 100);
  opt.master_seed = get_or<std::uint64_t>(cfg, "seed", 0);
  opt.threads = flags.threads;
  opt.exact_covariance = get_or(cfg, "exact_covariance", false);
  opt.config_hash = config_hash(cfg);
  if (opt.reps < 1) fail(ErrorKind::infeasible, "simulate-risk: reps must be positive");

  const RiskReport report = run_risk_mc(recipe, specs, grid, opt);
  ojson summary = ojson::parse(report.to_json());
  if (cfg.contains("regression")) {
    const json& rg = cfg.at("regression");
    const std::string est = get_or<std::string>(rg, "estimator", "opca");
    const SlopeFit fit = rate_regression(report, est, predictor_from_string(get_or<std::string>(rg, "predictor", "n_over_nh")),
                                         recipe, opt.nu);
    summary["regression"] = {{"estimator", est},
                             {"slope", number_or_null(fit.slope)},
                             {"slope_se", number_or_null(fit.slope_se)},
                             {"intercept", number_or_null(fit.intercept)},
                             {"used", fit.used},
                             {"excluded", fit.excluded}};
  }
  emit(flags.out_dir, "simulate-risk", cfg, {{"risk.csv", report.to_csv()}, {"risk.json", summary.dump(2) + "\n"}});
  out << "wrote " << report.rows.size() << " rows\n";
  return exit_ok;
}

// ---- lower-bound ----------------------------------------------------------

RegimeTag regime_from_string(const std::string& s) {
  for (auto t : {RegimeTag::bounded_below, RegimeTag::n_dominated, RegimeTag::sparsity_dominated, RegimeTag::log_sparse}) {
    if (to_string(t) == s) return t;
  }
  fail(ErrorKind::parse, "unknown regime '" + s + "'");
}

int cmd_lower_bound(const json& cfg, const CommonFlags& flags, std::ostream& out, std::ostream&) {
  const std::string part = get_req<std::string>(cfg, "part");
  const double n = get_req<double>(cfg, "n");
  const int N = get_req<int>(cfg, "N");
  const auto lambdas = get_req<std::vector<double>>(cfg, "lambdas");
  const int M = get_or(cfg, "M", static_cast<int>(lambdas.size()));
  const int nu = get_or(cfg, "nu", 1);
  const double q = get_or(cfg, "q", 1.0);
  const auto radii = get_or(cfg, "radii", std::vector<double>(lambdas.size(), 2.0));
  std::optional<double> alpha;
  if (cfg.contains("alpha")) alpha = get_req<double>(cfg, "alpha");
  PackingLimits limits;
  limits.max_points = get_or<std::size_t>(cfg, "max_points", limits.max_points);

  PackingFamily fam;
  ojson rate;
  if (part == "a") {
    fam = build_family_a(N, M, nu, q, radii, lambdas, n);
  } else if (part == "b") {
    const RegimeTag tag = regime_from_string(get_req<std::string>(cfg, "regime"));
    fam = build_family_b(n, N, M, nu, lambdas, q, radii, tag, alpha, limits);
  } else if (part == "c") {
    fam = build_two_point_c(n, M, get_or(cfg, "mu", nu == 1 ? 2 : 1), nu, lambdas, q, radii, N);
  } else {
    fail(ErrorKind::parse, "part must be one of a, b, c");
  }
  if (part == "c") {
    rate["delta_bar_n"] = minimax_delta_bar(n, lambdas, nu);
  } else {
    const RegimeClassification rc =
        minimax_delta(n, N, M, lambdas, nu, q, radii.at(static_cast<std::size_t>(nu - 1)), alpha, get_or(cfg, "K", 1.0));
    rate["case"] = to_string(rc.case_tag);
    rate["delta_n"] = rc.delta_n;
    rate["c1"] = rc.constants.c1;
    rate["A_q"] = rc.constants.A_q;
    if (alpha) {
      rate["A_q_alpha"] = rc.constants.A_q_alpha;
      rate["c_q_alpha"] = rc.constants.c_q_alpha;
    }
  }
  const FanoRecord fano = fano_certificate(fam, lambdas, n);
  double max_kl = 0.0;
  for (double k : fam.kl_to_base) max_kl = std::max(max_kl, k);

  ojson doc;
  doc["command"] = "lower-bound";
  doc["config_hash"] = config_hash(cfg);
  doc["family"] = {{"kind", to_string(fam.kind)},
                   {"regime", fam.kind == FamilyKind::sphere_packing || fam.kind == FamilyKind::log_sparse
                                  ? ojson(to_string(fam.regime))
                                  : ojson(nullptr)},
                   {"nu", fam.nu},
                   {"m", fam.sphere_dim_m},
                   {"m0", fam.m0},
                   {"r", fam.radius_r},
                   {"r_squared", fam.radius_r * fam.radius_r},
                   {"separation", fam.separation},
                   {"cardinality", fam.members.size()},
                   {"packing_size", fam.packing_size},
                   {"support_count", fam.support_count},
                   {"capped", fam.capped},
                   {"members_in_space", fam.members_in_space},
                   {"min_pairwise_loss", fam.pairwise_checked ? ojson(fam.min_pairwise_loss) : ojson(nullptr)},
                   {"max_kl_to_base", max_kl}};
  doc["fano"] = {{"delta", fano.delta},
                 {"avg_kl", fano.avg_kl},
                 {"max_kl", fano.max_kl},
                 {"log_cardinality", fano.log_card},
                 {"symmetric_kl", fano.sym_kl},
                 {"bound", fano.bound_value}};
  doc["rate"] = rate;
  emit(flags.out_dir, "lower-bound", cfg, {{"certificate.json", doc.dump(2) + "\n"}});
  out << "bound=" << format_double(fano.bound_value) << " |F|=" << fam.members.size() << '\n';
  return exit_ok;
}

// ---- concentration-check --------------------------------------------------

int cmd_concentration(const json& cfg, const CommonFlags& flags, std::ostream& out, std::ostream&) {
  const int reps = get_or(cfg, "reps", 10000);
  const auto seed = get_or<std::uint64_t>(cfg, "seed", 0);
  if (reps < 1) fail(ErrorKind::infeasible, "concentration-check: reps must be positive");
  const json checks = cfg.value("checks", json::array());
  if (!checks.is_array() || checks.empty()) fail(ErrorKind::parse, "concentration-check: 'checks' must be a nonempty array");
  std::ostringstream csv;
  csv << "kind,n,N,p,q,eps,b,c,t,in_domain,bound,threshold,reps,empirical_tail,std_error,holds,seed,config_hash\n";
  ojson rows = ojson::array();
  const std::string hash = config_hash(cfg);
  int violated = 0;
  for (std::size_t i = 0; i < checks.size(); ++i) {
    const json& c = checks[i];
    const BoundKind kind = bound_kind_from_string(get_req<std::string>(c, "kind"));
    BoundParams p;
    p.n = get_or(c, "n", 0);
    p.N = get_or(c, "N", 0);
    p.p = get_or(c, "p", 0);
    p.q = get_or(c, "q", 0);
    p.eps = get_or(c, "eps", 0.0);
    p.b = get_or(c, "b", 0.0);
    p.c = get_or(c, "c", 0.0);
    p.t = get_or(c, "t", 0.0);
    const std::uint64_t s = derive_seed(seed, i);
    const BoundRecord bound = concentration_bounds(kind, p);
    double emp = std::nan("");
    double se = std::nan("");
    bool holds = false;
    if (bound.in_domain) {
      const ConcentrationResult r = concentration_mc(kind, p, reps, s, flags.threads);
      emp = r.empirical_tail;
      se = r.std_error;
      holds = r.holds;
      violated += !holds;
    }
    csv << to_string(kind) << ',' << p.n << ',' << p.N << ',' << p.p << ',' << p.q << ',' << format_double(p.eps) << ','
        << format_double(p.b) << ',' << format_double(p.c) << ',' << format_double(p.t) << ',' << (bound.in_domain ? 1 : 0)
        << ',' << format_double(bound.value) << ',' << format_double(bound.threshold) << ',' << reps << ','
        << format_double(emp) << ',' << format_double(se) << ',' << (holds ? 1 : 0) << ',' << s << ',' << hash << '\n';
    rows.push_back({{"kind", to_string(kind)},
                    {"in_domain", bound.in_domain},
                    {"note", bound.note},
                    {"bound", number_or_null(bound.value)},
                    {"threshold", number_or_null(bound.threshold)},
                    {"empirical_tail", number_or_null(emp)},
                    {"std_error", number_or_null(se)},
                    {"holds", holds},
                    {"seed", s}});
  }
  ojson doc;
  doc["command"] = "concentration-check";
  doc["config_hash"] = hash;
  doc["master_seed"] = seed;
  doc["reps"] = reps;
  doc["checks"] = rows;
  emit(flags.out_dir, "concentration-check", cfg, {{"concentration.csv", csv.str()}, {"concentration.json", doc.dump(2) + "\n"}});
  out << checks.size() << " checks, " << violated << " violated\n";
  return exit_ok;
}

// ---- packing --------------------------------------------------------------

int cmd_packing(const json& cfg, const CommonFlags& flags, std::ostream& out, std::ostream&) {
  PackingLimits limits;
  limits.max_points = get_or<std::size_t>(cfg, "max_points", limits.max_points);
  limits.max_candidates = get_or<std::uint64_t>(cfg, "max_candidates", limits.max_candidates);
  const bool include_points = get_or(cfg, "include_points", false);
  if (!cfg.contains("m") && !cfg.contains("support")) fail(ErrorKind::parse, "packing: give 'm' and/or 'support'");
  ojson doc;
  doc["command"] = "packing";
  doc["config_hash"] = config_hash(cfg);
  if (cfg.contains("m")) {
    const SpherePacking y = build_Ym_star(get_req<int>(cfg, "m"), limits);
    ojson ys = {{"m", y.m}, {"m0", y.m0}, {"count", y.points.size()}, {"capped", y.capped},
                {"log_count_over_m", std::log(static_cast<double>(y.points.size())) / y.m},
                {"log_9_8", std::log(9.0 / 8.0)}};
    if (include_points) {
      ojson pts = ojson::array();
      for (const auto& pt : y.points) {
        ojson one = ojson::array();
        for (std::size_t i = 0; i < pt.coords.size(); ++i) one.push_back(ojson::array({pt.coords[i], pt.signs[i]}));
        pts.push_back(std::move(one));
      }
      ys["points"] = pts;
    }
    doc["Y_star"] = ys;
    out << "|Y*_" << y.m << "| = " << y.points.size() << (y.capped ? " (capped)" : "") << '\n';
  }
  if (cfg.contains("support")) {
    const json& s = cfg.at("support");
    const SupportFamily f = build_support_family(get_req<int>(s, "N_pool"), get_req<int>(s, "m"),
                                                 get_req<int>(s, "max_overlap"), limits);
    ojson sets = ojson::array();
    if (include_points) {
      for (const auto& set : f.sets) sets.push_back(set);
    }
    doc["supports"] = {{"count", f.sets.size()}, {"capped", f.capped}};
    if (include_points) doc["supports"]["sets"] = sets;
    out << "supports: " << f.sets.size() << (f.capped ? " (capped)" : "") << '\n';
  }
  emit(flags.out_dir, "packing", cfg, {{"packing.json", doc.dump(2) + "\n"}});
  return exit_ok;
}

// ---- verify ---------------------------------------------------------------

int cmd_verify(const CommonFlags& flags, std::ostream& out, std::ostream& err) {
  const fs::path dir(flags.out_dir);
  const json manifest = parse_json(read_file((dir / kManifest).string()), "manifest");
  const std::string command = manifest.at("command").get<std::string>();
  const json& cfg = manifest.at("config");
  bool ok = true;
  if (config_hash(cfg) != manifest.at("config_hash").get<std::string>()) {
    err << "verify: embedded config does not match its hash\n";
    ok = false;
  }
  if (!flags.config_path.empty() || flags.seed || flags.reps || !flags.overrides.empty()) {
    const json expected = effective_config(command, flags, json::object());
    if (config_hash(expected) != manifest.at("config_hash").get<std::string>()) {
      err << "verify: supplied config hashes to " << config_hash(expected) << ", outputs were produced from "
          << manifest.at("config_hash").get<std::string>() << '\n';
      ok = false;
    }
  }
  for (const auto& [name, hash] : manifest.at("files").items()) {
    std::ifstream probe(dir / name, std::ios::binary);
    if (!probe) {
      err << "verify: missing output '" << name << "'\n";
      ok = false;
      continue;
    }
    if (fnv1a_hex(read_file((dir / name).string())) != hash.get<std::string>()) {
      err << "verify: '" << name << "' was modified\n";
      ok = false;
    }
  }
  out << (ok ? "verified " : "MISMATCH ") << command << ' ' << manifest.at("config_hash").get<std::string>() << '\n';
  return ok ? exit_ok : exit_other;
}

int exit_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::parse: return exit_parse;
    case ErrorKind::invalid_argument:
    case ErrorKind::infeasible: return exit_infeasible;
    case ErrorKind::retry_exhausted:
    case ErrorKind::numerical: return exit_other;
  }
  return exit_other;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sparse principal component estimation, risk simulation and lower-bound certificates", "aspca"};
  app.require_subcommand(1);
  CommonFlags flags;
  std::uint64_t seed = 0;
  int reps = 0;
  std::string input;
  bool header = false;

  auto add_common = [&](CLI::App* sub, bool with_seed) {
    sub->add_option("--config", flags.config_path, "JSON config file");
    if (with_seed) {
      sub->add_option("--seed", seed, "master seed (overrides config 'seed')");
      sub->add_option("--reps", reps, "replications (overrides config 'reps')");
    }
    sub->add_option("--out", flags.out_dir, "output directory")->capture_default_str();
    sub->add_option("--threads", flags.threads, "worker threads (results do not depend on it)")->check(CLI::PositiveNumber);
    sub->add_option("--override", flags.overrides, "key=value config override, dotted keys for nesting");
  };
  CLI::App* est = app.add_subcommand("estimate", "run the two-stage sparse PCA pipeline on a CSV data matrix");
  add_common(est, false);
  est->add_option("--input,input", input, "CSV file, rows are observations");
  est->add_flag("--header", header, "skip the first CSV line");
  CLI::App* sim = app.add_subcommand("simulate-risk", "Monte Carlo risk of estimators against theory");
  add_common(sim, true);
  CLI::App* lb = app.add_subcommand("lower-bound", "build a packing family and its Fano certificate");
  add_common(lb, false);
  CLI::App* conc = app.add_subcommand("concentration-check", "compare concentration bounds with empirical tails");
  add_common(conc, true);
  CLI::App* pack = app.add_subcommand("packing", "greedy sphere-packing and support-family sizes");
  add_common(pack, false);
  CLI::App* ver = app.add_subcommand("verify", "check an output directory against its manifest");
  ver->add_option("--out", flags.out_dir, "output directory to check")->required();
  ver->add_option("--config", flags.config_path, "config expected to have produced the outputs");
  ver->add_option("--seed", seed, "expected seed");
  ver->add_option("--reps", reps, "expected replications");
  ver->add_option("--override", flags.overrides, "key=value config override");

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  if (!argv_rev.empty()) argv_rev.pop_back();
  try {
    app.parse(argv_rev);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return exit_ok;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help();
    return exit_ok;
  } catch (const CLI::ParseError& e) {
    err << "aspca: " << e.what() << '\n';
    return exit_parse;
  }
  CLI::App* active = app.get_subcommands().front();
  if (active->get_option_no_throw("--seed") && active->count("--seed")) flags.seed = seed;
  if (active->get_option_no_throw("--reps") && active->count("--reps")) flags.reps = reps;

  try {
    const std::string command = active->get_name();
    if (command == "verify") return cmd_verify(flags, out, err);
    json extra = json::object();
    if (command == "estimate") {
      if (!input.empty()) extra["input"] = input;
      if (header) extra["header"] = true;
    }
    const json cfg = effective_config(command, flags, extra);
    if (command == "estimate") return cmd_estimate(cfg, flags, out, err);
    if (command == "simulate-risk") return cmd_simulate(cfg, flags, out, err);
    if (command == "lower-bound") return cmd_lower_bound(cfg, flags, out, err);
    if (command == "concentration-check") return cmd_concentration(cfg, flags, out, err);
    if (command == "packing") return cmd_packing(cfg, flags, out, err);
    err << "aspca: unknown command\n";
    return exit_other;
  } catch (const Error& e) {
    err << "aspca: " << e.what() << '\n';
    return exit_for(e.kind());
  } catch (const json::exception& e) {
    err << "aspca: config: " << e.what() << '\n';
    return exit_parse;
  } catch (const fs::filesystem_error& e) {
    err << "aspca: " << e.what() << '\n';
    return exit_other;
  }
}

}  // namespace aspca::cli
