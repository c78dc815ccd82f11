#ifndef CNBDA_RANDOM_HPP
#define CNBDA_RANDOM_HPP

#include <cstdint>
#include <initializer_list>
#include <random>

namespace cnbda {

/// SplitMix64 finalizer. Used only to derive independent stream seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept
{
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed splitting rule shared by every Monte-Carlo component.
///
/// The child seed for path (p1, p2, ...) under `base` is
///   h0 = splitmix64(base),  h_{k} = splitmix64(h_{k-1} ^ splitmix64(p_k + 1)).
/// A replicate's streams therefore depend only on (base, cell, replicate, role),
/// never on scheduling, so threaded and serial runs agree bit for bit.
constexpr std::uint64_t derive_seed(std::uint64_t base,
                                    std::initializer_list<std::uint64_t> path) noexcept
{
  std::uint64_t h = splitmix64(base);
  for (std::uint64_t p : path)
    h = splitmix64(h ^ splitmix64(p + 1));
  return h;
}

/// Seeded 64-bit Mersenne Twister with portable uniform draws.
///
/// std::uniform_real_distribution is implementation-defined, so doubles are
/// produced from the top 53 bits directly.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  std::uint64_t next() { return engine_(); }

private:
  std::mt19937_64 engine_;
};

} // namespace cnbda

#endif // CNBDA_RANDOM_HPP
