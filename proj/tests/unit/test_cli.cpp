#include "aspca/model_io.hpp"
#include "aspca/rates.hpp"
#include "aspca/simulation.hpp"
#include "aspca/spiked_model.hpp"
#include "cli.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

using namespace aspca;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() / ("aspca-cli-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

int run(std::vector<std::string> args, std::string* out = nullptr) {
  args.insert(args.begin(), "aspca");
  std::ostringstream o, e;
  const int rc = cli::run(args, o, e);
  if (out) *out = o.str() + e.str();
  return rc;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_csv(const fs::path& p, const Matrix& x) {
  std::ofstream f(p);
  f.precision(17);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) f << (j ? "," : "") << x(i, j);
    f << '\n';
  }
}

}  // namespace

TEST_CASE("estimate recovers a sparse spike end to end") {
  TempDir t;
  Matrix th = Matrix::Zero(80, 1);
  for (int k = 0; k < 5; ++k) th(3 * k, 0) = 1.0 / std::sqrt(5.0);
  const SpikedCovariance model({12.0}, th);
  Rng rng(3);
  write_csv(t.path / "x.csv", sample_dataset(model, 400, rng).observations);
  const fs::path out = t.path / "o";
  REQUIRE(run({"estimate", "--input", (t.path / "x.csv").string(), "--out", out.string()}) == cli::exit_ok);
  const json doc = json::parse(slurp(out / "estimate.json"));
  CHECK(doc["M_hat"] == 1);
  int outside = 0;
  for (const auto& entry : doc["eigvecs_thresholded"][0]) outside += entry[0].get<int>() % 3 != 0 || entry[0] > 12;
  CHECK(outside <= 2);
  CHECK(run({"verify", "--out", out.string()}) == cli::exit_ok);
}

TEST_CASE("estimate exit codes") {
  TempDir t;
  std::ofstream(t.path / "bad.csv") << "1,2\n3,x\n";
  CHECK(run({"estimate", "--input", (t.path / "bad.csv").string(), "--out", (t.path / "o").string()}) ==
        cli::exit_parse);
  std::ofstream(t.path / "ragged.csv") << "1,2\n3\n";
  CHECK(run({"estimate", "--input", (t.path / "ragged.csv").string(), "--out", (t.path / "o").string()}) ==
        cli::exit_parse);
  std::ofstream(t.path / "one.csv") << "1\n2\n3\n";
  CHECK(run({"estimate", "--input", (t.path / "one.csv").string(), "--out", (t.path / "o").string()}) ==
        cli::exit_infeasible);

  Rng rng(1);
  Matrix noise(50, 20);
  for (int i = 0; i < 50; ++i)
    for (int j = 0; j < 20; ++j) noise(i, j) = rng.normal();
  write_csv(t.path / "noise.csv", noise);
  CHECK(run({"estimate", "--input", (t.path / "noise.csv").string(), "--out", (t.path / "o").string()}) ==
        cli::exit_fallback_without_M);
  CHECK(run({"estimate", "--input", (t.path / "noise.csv").string(), "--override", "estimator.M_known=1", "--out",
             (t.path / "o").string()}) == cli::exit_ok);
}

TEST_CASE("config validation") {
  TempDir t;
  CHECK(run({"packing", "--override", "m=9", "--override", "bogus=1", "--out", t.path.string()}) == cli::exit_parse);
  std::ofstream(t.path / "c.json") << "{\"m\": 9, \"extra\": true}";
  CHECK(run({"packing", "--config", (t.path / "c.json").string(), "--out", t.path.string()}) == cli::exit_parse);
  std::ofstream(t.path / "broken.json") << "{";
  CHECK(run({"packing", "--config", (t.path / "broken.json").string(), "--out", t.path.string()}) == cli::exit_parse);
  CHECK(run({"no-such-command"}) == cli::exit_parse);
  CHECK(run({"packing", "--override", "m=3", "--out", t.path.string()}) == cli::exit_infeasible);
}

TEST_CASE("simulate with one replication and one grid point") {
  TempDir t;
  std::ofstream(t.path / "s.json") << R"({"model": {"N": 30, "lambdas": [4], "support_sizes": [3]},
    "estimators": ["opca"], "grid": [[40, 30]], "reps": 1, "seed": 2})";
  REQUIRE(run({"simulate-risk", "--config", (t.path / "s.json").string(), "--out", (t.path / "o").string()}) ==
          cli::exit_ok);
  std::istringstream csv(slurp(t.path / "o" / "risk.csv"));
  std::string line;
  int lines = 0;
  while (std::getline(csv, line)) ++lines;
  CHECK(lines == 2);
}

TEST_CASE("simulate from a model file") {
  TempDir t;
  Matrix th = Matrix::Zero(30, 1);
  th(0, 0) = th(1, 0) = 1.0 / std::sqrt(2.0);
  std::ofstream(t.path / "m.json") << write_model({1.0, {2.0}, 30, 1}, SpikedCovariance({6.0}, th));
  std::ofstream(t.path / "s.json") << "{\"model_file\": \"" << (t.path / "m.json").string()
                                    << "\", \"estimators\": [\"opca\", \"aspca\"], \"grid\": [[50, 30]], \"reps\": 3}";
  CHECK(run({"simulate-risk", "--config", (t.path / "s.json").string(), "--out", (t.path / "o").string()}) ==
        cli::exit_ok);
}

TEST_CASE("lower-bound part c matches the two-point constant") {
  TempDir t;
  const fs::path out = t.path / "o";
  REQUIRE(run({"lower-bound", "--override", "part=c", "--override", "n=50", "--override", "N=10", "--override",
               "lambdas=[6,2]", "--override", "radii=[1.5,1.5]", "--out", out.string()}) == cli::exit_ok);
  const json doc = json::parse(slurp(out / "certificate.json"));
  const double expect = 1.0 / (8.0 * std::exp(1.0) * 50.0 * eval_g(2.0, 6.0));
  CHECK(doc["fano"]["bound"].get<double>() == doctest::Approx(expect));
  CHECK(doc["family"]["cardinality"] == 2);
}

TEST_CASE("seed override and verify") {
  TempDir t;
  std::ofstream(t.path / "c.json") << R"({"reps": 200, "seed": 1, "checks": [{"kind": "chi2_lower", "n": 30, "eps": 0.4}]})";
  const fs::path out = t.path / "o";
  const std::string cfg = (t.path / "c.json").string();
  REQUIRE(run({"concentration-check", "--config", cfg, "--seed", "9", "--out", out.string()}) == cli::exit_ok);
  CHECK(json::parse(slurp(out / "run.json"))["config"]["seed"] == 9);
  CHECK(run({"verify", "--out", out.string(), "--config", cfg, "--seed", "9"}) == cli::exit_ok);
  CHECK(run({"verify", "--out", out.string(), "--config", cfg}) == cli::exit_other);
  std::ofstream(out / "concentration.csv", std::ios::app) << "tampered\n";
  CHECK(run({"verify", "--out", out.string()}) == cli::exit_other);
}

TEST_CASE("thread count does not change outputs") {
  TempDir t;
  std::ofstream(t.path / "s.json") << R"({"model": {"N": 40, "lambdas": [5], "support_sizes": [4]},
    "estimators": ["opca", "aspca"], "grid": [[60, 40]], "reps": 5, "seed": 3})";
  const std::string cfg = (t.path / "s.json").string();
  REQUIRE(run({"simulate-risk", "--config", cfg, "--out", (t.path / "a").string()}) == 0);
  REQUIRE(run({"simulate-risk", "--config", cfg, "--threads", "3", "--out", (t.path / "b").string()}) == 0);
  CHECK(slurp(t.path / "a" / "risk.csv") == slurp(t.path / "b" / "risk.csv"));
  CHECK(slurp(t.path / "a" / "run.json") == slurp(t.path / "b" / "run.json"));
}
