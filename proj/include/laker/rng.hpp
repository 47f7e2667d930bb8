#pragma once

#include <cstdint>
#include <vector>

namespace laker {

// Deterministic generator (xoshiro256** seeded through splitmix64). All random
// choices in the toolkit go through this so identical (seed, stream) pairs
// replay exactly, independent of the platform's <random> distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  // Independent stream for work item `stream` under a global seed.
  static Rng derive(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next();

  // Uniform in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n);

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform();

  double normal(double mean = 0.0, double stddev = 1.0);

  bool bernoulli(double p);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    if (v.size() < 2) return;
    for (std::size_t i = v.size() - 1; i > 0; --i) {
      std::size_t j = static_cast<std::size_t>(below(i + 1));
      std::swap(v[i], v[j]);
    }
  }

  // k distinct indices drawn uniformly from [0, n), in draw order.
  std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k);

 private:
  std::uint64_t state_[4];
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace laker
