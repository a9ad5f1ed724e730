#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>
#include <vector>

namespace crowdspan {

/// SplitMix64 finalizer. Used to derive independent stream seeds.
std::uint64_t splitmix64(std::uint64_t x);

/// FNV-1a 64-bit hash of a byte string.
std::uint64_t hash_string(std::string_view text);

/// Folds a list of values into one seed with SplitMix64.
std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts);

/// Seeded generator with platform-independent output.
///
/// The engine is MT19937-64, whose output sequence is fixed by the C++
/// standard. The standard distributions are implementation-defined, so every
/// draw used by the library goes through the helpers here instead.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, n). n must be positive.
  std::size_t uniform_index(std::size_t n);

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01();

  bool bernoulli(double p);

  std::size_t poisson(double lambda);

  double normal();

  double gamma(double shape);

  double beta(double a, double b);

  /// Fisher-Yates shuffle using uniform_index.
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = uniform_index(i);
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace crowdspan
