#include "aspca/linalg.hpp"
#include "aspca/model_io.hpp"
#include "aspca/spiked_model.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <cmath>

using namespace aspca;

TEST_CASE("sparse basis with singleton supports is a pair of poles") {
  Rng rng(1);
  const int sizes[] = {1, 1};
  const Matrix th = make_sparse_basis({1.0, {2.0, 2.0}, 10, 2}, sizes, rng);
  CHECK(gram_residual(th) < 1e-12);
  for (int j = 0; j < 2; ++j) {
    CHECK(th.col(j).cwiseAbs().maxCoeff() == doctest::Approx(1.0));
    CHECK(th.col(j).lpNorm<1>() == doctest::Approx(1.0));
  }
}

TEST_CASE("two-sparse columns always fit an l1 ball of radius just over sqrt 2") {
  const LqSpaceSpec spec{1.0, {std::sqrt(2.0) + 1e-9}, 4, 1};
  const int sizes[] = {2};
  for (std::uint64_t s = 0; s < 50; ++s) {
    Rng rng(s);
    const Matrix th = make_sparse_basis(spec, sizes, rng);
    CHECK(membership_report(th, spec).member);
    CHECK((th.col(0).array() != 0.0).count() == 2);
  }
}

TEST_CASE("radius one with q < 2 admits only poles") {
  Rng rng(3);
  const int sizes[] = {2};
  CHECK_THROWS_AS(make_sparse_basis({0.5, {1.0}, 5, 1}, sizes, rng), Error);
}

TEST_CASE("overlapping supports stay sparse and orthonormal") {
  Rng rng(4);
  const int sizes[] = {6, 6, 6};
  BasisOptions opt;
  opt.layout = SupportLayout::overlapping;
  const Matrix th = make_sparse_basis({1.0, {5.0, 5.0, 5.0}, 30, 3}, sizes, rng, opt);
  CHECK(gram_residual(th) < 1e-10);
  for (int j = 0; j < 3; ++j) CHECK((th.col(j).array() != 0.0).count() <= 6);
}

TEST_CASE("covariance construction") {
  Matrix e1 = Matrix::Zero(2, 1);
  e1(0, 0) = 1.0;
  const Matrix s = build_covariance({2.0}, e1).covariance();
  CHECK(s(0, 0) == doctest::Approx(3.0));
  CHECK(s(1, 1) == doctest::Approx(1.0));
  CHECK(s(0, 1) == doctest::Approx(0.0));

  const Matrix th2 = Matrix::Identity(3, 2);
  const EigenPairs ep = sym_eigen(build_covariance({2.0, 1.0}, th2).covariance());
  CHECK(ep.values(0) == doctest::Approx(3.0));
  CHECK(ep.values(1) == doctest::Approx(2.0));
  CHECK(ep.values(2) == doctest::Approx(1.0));

  Matrix diag(2, 1);
  diag << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
  const Matrix s3 = build_covariance({1.0}, diag).covariance();
  CHECK(s3(0, 0) == doctest::Approx(1.5));
  CHECK(s3(0, 1) == doctest::Approx(0.5));
  CHECK(s3(1, 1) == doctest::Approx(1.5));
}

TEST_CASE("model validation rejects bad spectra and frames") {
  CHECK_THROWS_AS(build_covariance({1.0, 2.0}, Matrix::Identity(3, 2)), Error);
  CHECK_THROWS_AS(build_covariance({-1.0}, Matrix::Identity(3, 1)), Error);
  Matrix bad = Matrix::Identity(3, 2);
  bad(0, 1) = 0.1;
  CHECK_THROWS_AS(build_covariance({2.0, 1.0}, bad), Error);
}

TEST_CASE("noiseless samples lie on the spike") {
  Matrix th(3, 1);
  th << 0.6, 0.8, 0.0;
  const SpikedCovariance model({1.0}, th, 0.0);
  Rng rng(5);
  const Dataset d = sample_dataset(model, 20, rng);
  for (int i = 0; i < d.n(); ++i) {
    const Vector x = d.observations.row(i).transpose();
    CHECK((x - x.dot(th.col(0)) * th.col(0)).norm() < 1e-14);
  }
}

TEST_CASE("sampling is reproducible from the seed") {
  const SpikedCovariance model({3.0}, Matrix::Identity(4, 1));
  Rng a(77), b(77);
  CHECK(sample_dataset(model, 30, a).observations == sample_dataset(model, 30, b).observations);
}

TEST_CASE("large-sample covariance eigenvalues approach lambda + 1") {
  Matrix th = Matrix::Zero(2, 1);
  th(0, 0) = 1.0;
  const SpikedCovariance model({3.0}, th);
  Rng rng(9);
  const Dataset d = sample_dataset(model, 50000, rng);
  const Matrix S = d.observations.transpose() * d.observations / 50000.0;
  const EigenPairs ep = sym_eigen(S);
  CHECK(std::abs(ep.values(0) - 4.0) / 4.0 < 0.05);
  CHECK(std::abs(ep.values(1) - 1.0) < 0.05);
}

TEST_CASE("membership report") {
  const LqSpaceSpec poles{1.0, {1.0, 1.0}, 5, 2};
  const MembershipReport r = membership_report(Matrix::Identity(5, 2), poles);
  CHECK(r.member);
  CHECK(r.lq_norms[0] == doctest::Approx(1.0));

  // The flat vector belongs once C^q >= N^(1 - q/2).
  const int N = 16;
  const Matrix flat = Matrix::Constant(N, 1, 1.0 / 4.0);
  CHECK(membership_report(flat, {1.0, {4.0}, N, 1}).member);
  CHECK_FALSE(membership_report(flat, {1.0, {3.9}, N, 1}).member);

  Matrix two = Matrix::Zero(6, 1);
  two(0, 0) = two(3, 0) = 1.0 / std::sqrt(2.0);
  CHECK(membership_report(two, {1.0, {2.0}, 6, 1}).lq_norms[0] == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("model documents round-trip exactly") {
  Rng rng(12);
  const int sizes[] = {5, 3};
  const LqSpaceSpec spec{1.0, {3.0, 3.0}, 20, 2};
  const SpikedCovariance model({4.0, 1.5}, make_sparse_basis(spec, sizes, rng), 1.25);
  for (ThetaLayout layout : {ThetaLayout::dense, ThetaLayout::sparse}) {
    const ModelDocument back = read_model(write_model(spec, model, layout));
    CHECK(back.model.theta() == model.theta());
    CHECK(back.model.lambdas() == model.lambdas());
    CHECK(back.model.sigma2() == model.sigma2());
    CHECK(back.space.radii == spec.radii);
  }
  CHECK_THROWS_AS(read_model("{\"format\": \"other\"}"), Error);
  CHECK_THROWS_AS(read_model("not json"), Error);
}
