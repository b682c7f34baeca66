#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace umprobe {

/// Seeded random source whose output is fully specified across platforms.
///
/// The engine is std::mt19937_64, whose sequence is fixed by the standard.
/// The standard distributions are implementation-defined, so uniforms,
/// normals and bounded integers are derived here from raw engine output:
/// uniforms take the top 53 bits, normals use the Box-Muller transform,
/// bounded integers use rejection sampling.
class Rng {
public:
  static constexpr std::string_view algorithm =
      "mt19937_64 + box-muller (53-bit uniforms)";

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1).
  double uniform();
  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal.
  double normal();
  /// Uniform integer in [0, bound).
  std::uint64_t index(std::uint64_t bound);

  /// `count` distinct indices from [0, n), returned in increasing order.
  std::vector<std::size_t> sample_without_replacement(std::size_t n,
                                                      std::size_t count);

private:
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

/// Deterministically derives an independent stream seed from a base seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

} // namespace umprobe
