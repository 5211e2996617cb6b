#pragma once

#include "aspca/rates.hpp"
#include "aspca/types.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace aspca {

// A point of Y*_m stored sparsely: m0 sorted coordinates, each carrying +-1/sqrt(m0).
struct SignedSupport {
  std::vector<int> coords;
  std::vector<std::int8_t> signs;
};

struct SpherePacking {
  int m = 0;
  int m0 = 0;
  std::vector<SignedSupport> points;
  bool capped = false;  // enumeration stopped at a size or work limit

  Vector dense(std::size_t j) const;
};

struct PackingLimits {
  std::size_t max_points = 4096;
  std::uint64_t max_candidates = 20'000'000;
};

// Greedy packing over lexicographically ordered candidates (support first,
// then sign pattern with + before -): every accepted pair has inner product
// <= 1/2, i.e. Euclidean distance >= 1.
SpherePacking build_Ym_star(int m, const PackingLimits& limits = {});

struct SupportFamily {
  std::vector<Indices> sets;  // zero-based subsets of {0, ..., N_pool - 1}
  bool capped = false;
};

// Greedy family of m-subsets with pairwise intersections of at most max_overlap.
SupportFamily build_support_family(int N_pool, int m, int max_overlap, const PackingLimits& limits = {});

enum class FamilyKind { single_coordinate, sphere_packing, log_sparse, two_point };

std::string to_string(FamilyKind kind);

struct PackingFamily {
  FamilyKind kind = FamilyKind::single_coordinate;
  RegimeTag regime = RegimeTag::inconsistent;  // for sphere packing families
  std::vector<Matrix> members;
  Matrix base_point;
  double radius_r = 0.0;
  int sphere_dim_m = 0;
  int m0 = 0;
  int nu = 1;  // 1-based
  int mu = 0;  // partner spike of the two-point family, 1-based
  std::vector<double> kl_to_base;
  double min_pairwise_loss = 0.0;
  bool pairwise_checked = false;
  // Guaranteed lower bound on the pairwise loss in column nu (2 r^2 for the
  // single-coordinate family, r^2 otherwise); delta = separation / 4.
  double separation = 0.0;
  std::size_t packing_size = 0;  // |Y*_m|
  std::size_t support_count = 0; // number of supports in the log-sparse family
  bool capped = false;
  bool members_in_space = false;
};

// theta_nu^(j) = sqrt(1 - r^2) e_nu + r e_j, j = M+1..N, with the largest r in
// (0, 1/sqrt 2] keeping the l_q sum within C_nu^q (0.999 if every r fits).
PackingFamily build_family_a(int N, int M, int nu, double q, std::span<const double> Cs,
                             std::span<const double> lambdas, double n);

// Sphere-packing family for one of the three regimes, or the log-sparse union
// over supports when regime == log_sparse (alpha required).
PackingFamily build_family_b(double n, int N, int M, int nu, std::span<const double> lambdas, double q,
                             std::span<const double> Cs, RegimeTag regime,
                             std::optional<double> alpha = std::nullopt, const PackingLimits& limits = {});

// Two-point family rotating theta_nu towards theta_mu by r^2 = 2/(n g(lambda_mu, lambda_nu)).
PackingFamily build_two_point_c(double n, int M, int mu, int nu, std::span<const double> lambdas, double q,
                                std::span<const double> Cs, int N);

struct FanoRecord {
  double bound_value = 0.0;
  double delta = 0.0;
  double avg_kl = 0.0;
  double max_kl = 0.0;
  double log_card = 0.0;
  double sym_kl = 0.0;  // K12 + K21 for two-point families
};

// |F| > 2: delta * max(0, 1 - (avg KL + log 2) / log |F|).
// |F| = 2: delta / 4 * exp(-(K12 + K21) / 2).
FanoRecord fano_bound(const PackingFamily& family, std::span<const double> lambdas, double n, double delta);

// fano_bound with delta = separation / 4.
FanoRecord fano_certificate(const PackingFamily& family, std::span<const double> lambdas, double n);

}  // namespace aspca
