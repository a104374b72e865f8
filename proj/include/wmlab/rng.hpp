#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

// Deterministic random utilities. Everything that draws randomness in this
// project goes through Rng / hash64 so that results are bit-reproducible
// across runs and platforms (no std::*_distribution, whose output is
// implementation-defined).

namespace wmlab {

// splitmix64 finalizer; good avalanche, used for seeding and hashing.
constexpr std::uint64_t mix64(std::uint64_t x)
{
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t hash64(std::uint64_t a)
{
  return mix64(a);
}

template <typename... Rest>
constexpr std::uint64_t hash64(std::uint64_t first, Rest... rest)
{
  return mix64(first ^ (hash64(static_cast<std::uint64_t>(rest)...) + 0x9e3779b97f4a7c15ULL));
}

// FNV-1a, for mixing tag strings into seed chains.
constexpr std::uint64_t hash_str(std::string_view s)
{
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s)
    {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ULL;
    }
  return h;
}

// xoshiro256** with splitmix64 seeding.
class Rng
{
public:
  explicit Rng(std::uint64_t seed)
  {
    std::uint64_t sm = seed;
    for (auto& word : state_)
      {
        sm += 0x9e3779b97f4a7c15ULL;
        word = mix64(sm);
      }
  }

  std::uint64_t next_u64()
  {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // uniform in [0, 1), 53-bit resolution
  double uniform()
  {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi)
  {
    return lo + (hi - lo) * uniform();
  }

  // inclusive range
  int uniform_int(int lo, int hi)
  {
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(next_u64() % span);
  }

  bool coin(double p = 0.5)
  {
    return uniform() < p;
  }

  // Box-Muller; the spare is cached so draws stay aligned with the stream.
  double gaussian()
  {
    if (have_spare_)
      {
        have_spare_ = false;
        return spare_;
      }
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0)
      u1 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k)
  {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t state_[4] = {};
  double spare_ = 0.0;
  bool have_spare_ = false;
};

} // namespace wmlab
