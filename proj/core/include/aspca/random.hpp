#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace aspca {

// Seeded normal generator used for every random draw in the library.
//
// Replication streams are derived as stream(master, i) = Rng(derive_seed(master, i)),
// where derive_seed applies two rounds of splitmix64 to (master, i). Stream i
// depends only on (master, i), so adding replications never perturbs earlier ones.
class Rng {
 public:
  static constexpr std::string_view generator_name =
      "mt19937_64+std::normal_distribution";

  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  static Rng stream(std::uint64_t master, std::uint64_t index);

  double normal() { return normal_(engine_); }
  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  double chi_squared(double dof) { return std::chi_squared_distribution<double>(dof)(engine_); }

  std::uint64_t seed() const noexcept { return seed_; }
  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

}  // namespace aspca
