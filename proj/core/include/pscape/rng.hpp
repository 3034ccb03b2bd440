#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace pscape {

/// Seeded generator that can derive named, independent child streams.
///
/// Every random draw in the library goes through an Rng handed in by the
/// caller; there is no global generator. `split("name")` is a pure function of
/// (seed, name), so adding a new consumer never shifts the streams of others.
class Rng {
public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t seed() const noexcept { return seed_; }
  Rng split(std::string_view name) const;

  double uniform(double lo = 0.0, double hi = 1.0);
  double normal(double mean = 0.0, double stddev = 1.0);
  /// Inclusive range [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  bool bernoulli(double p);

  std::mt19937_64& engine() noexcept { return engine_; }

private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

} // namespace pscape
