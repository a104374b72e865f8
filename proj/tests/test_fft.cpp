#include "wmlab/fft.hpp"
#include "wmlab/rng.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

using namespace wmlab;

namespace {

std::vector<double>
random_vec(std::size_t n, std::uint64_t seed)
{
  std::vector<double> x(n);
  Rng rng(seed);
  for (auto& v : x)
    v = rng.uniform(-1.0, 1.0);
  return x;
}

// direct O(n^2) orthonormal DCT-II, the independent reference
std::vector<double>
dct_ii_direct(const std::vector<double>& x)
{
  const std::size_t n = x.size();
  std::vector<double> out(n, 0.0);
  for (std::size_t k = 0; k < n; k++)
    {
      double acc = 0.0;
      for (std::size_t j = 0; j < n; j++)
        acc += x[j] * std::cos(M_PI * (2.0 * j + 1.0) * k / (2.0 * n));
      const double s = k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
      out[k] = s * acc;
    }
  return out;
}

} // namespace

TEST_CASE("real fft inverse round trip")
{
  for (std::size_t n : {16, 256, 1024, 1000})
    {
      const auto x = random_vec(n, n);
      const auto bins = fft::real_fft(x);
      REQUIRE(bins.size() == n / 2 + 1);
      const auto back = fft::inverse_real_fft(bins, n);
      for (std::size_t i = 0; i < n; i++)
        REQUIRE_THAT(back[i], Catch::Matchers::WithinAbs(x[i], 1e-12));
    }
}

TEST_CASE("fft of a pure tone peaks at its bin")
{
  const std::size_t n = 1024;
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; i++)
    x[i] = std::sin(2.0 * M_PI * 32.0 * i / double(n));
  const auto bins = fft::real_fft(x);
  std::size_t peak = 0;
  for (std::size_t k = 1; k < bins.size(); k++)
    if (std::abs(bins[k]) > std::abs(bins[peak]))
      peak = k;
  REQUIRE(peak == 32);
}

TEST_CASE("dct of a constant vector is concentrated in coefficient 0")
{
  const std::size_t n = 64;
  const double c = 0.37;
  std::vector<double> x(n, c);
  const auto coeffs = fft::dct_ii(x);
  REQUIRE_THAT(coeffs[0], Catch::Matchers::WithinAbs(c * std::sqrt(double(n)), 1e-12));
  for (std::size_t k = 1; k < n; k++)
    REQUIRE_THAT(coeffs[k], Catch::Matchers::WithinAbs(0.0, 1e-12));
}

TEST_CASE("dct matches the direct transform")
{
  const auto x = random_vec(16, 99);
  const auto fast = fft::dct_ii(x);
  const auto direct = dct_ii_direct(x);
  for (std::size_t k = 0; k < x.size(); k++)
    REQUIRE_THAT(fast[k], Catch::Matchers::WithinAbs(direct[k], 1e-12));
}

TEST_CASE("dct round trip and Parseval at block size 2048")
{
  const auto x = random_vec(2048, 2048);
  const auto coeffs = fft::dct_ii(x);
  const auto back = fft::idct(coeffs);

  double max_err = 0.0;
  for (std::size_t i = 0; i < x.size(); i++)
    max_err = std::max(max_err, std::fabs(back[i] - x[i]));
  REQUIRE(max_err < 1e-9);

  double ex = 0.0, ec = 0.0;
  for (double v : x)
    ex += v * v;
  for (double v : coeffs)
    ec += v * v;
  REQUIRE(std::fabs(std::sqrt(ex) - std::sqrt(ec)) < 1e-9);
}

TEST_CASE("real cepstrum of white noise has no structural peak")
{
  auto x = random_vec(4096, 5);
  const auto ceps = fft::real_cepstrum(x);
  // away from the origin the cepstrum should be small
  double max_tail = 0.0;
  for (std::size_t q = 64; q < 1024; q++)
    max_tail = std::max(max_tail, std::fabs(ceps[q]));
  REQUIRE(max_tail < 0.2);
}
