#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace clreg {

/// Seeded random stream with a fixed, implementation-independent draw recipe.
///
/// Engine: std::mt19937_64 (its output sequence is fixed by the standard).
/// Uniforms take the top 53 bits of one engine output. Normals use the
/// Box-Muller cosine branch and consume exactly two uniforms each; no value
/// is cached, so the stream position after k normals is always 2k uniforms.
/// The std::*_distribution adaptors are avoided on purpose because their
/// algorithms differ between standard library implementations.
///
/// A stream is not shareable across threads.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Child seed for a named sub-stream. Adding a new label never shifts the
  /// draws of existing ones.
  static std::uint64_t derive(std::uint64_t seed, std::string_view label);
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t index);

  static Rng substream(std::uint64_t seed, std::string_view label) {
    return Rng(derive(seed, label));
  }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal.
  double normal();

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  bool bernoulli(double p) { return uniform() < p; }

  /// Uniform index in [0, n). n must be positive.
  std::size_t index(std::size_t n);

  /// Fisher-Yates permutation of 0..n-1.
  std::vector<std::size_t> permutation(std::size_t n);

 private:
  std::mt19937_64 engine_;
};

}  // namespace clreg
