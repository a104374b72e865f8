#include "wmlab/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <mutex>
#include <stdexcept>

namespace wmlab::fft {

namespace {

// FFTW plan creation is not thread-safe; execution with the new-array API is.
// Plans are created once per (kind, size) on fftw_malloc'd buffers and kept
// for the process lifetime, so concurrent callers share identical algorithms.
std::mutex g_plan_mutex;

struct PlanSlot
{
  fftw_plan plan = nullptr;
  double* rbuf = nullptr;
  fftw_complex* cbuf = nullptr;
};

enum class Kind { r2c, c2r, redft10, redft01 };

PlanSlot&
get_plan(Kind kind, std::size_t n)
{
  static std::map<std::pair<int, std::size_t>, PlanSlot> cache;
  std::lock_guard<std::mutex> lock(g_plan_mutex);
  auto key = std::make_pair(int(kind), n);
  auto it = cache.find(key);
  if (it != cache.end())
    return it->second;

  PlanSlot slot;
  slot.rbuf = fftw_alloc_real(n);
  slot.cbuf = fftw_alloc_complex(n / 2 + 1);
  switch (kind)
    {
    case Kind::r2c:
      slot.plan = fftw_plan_dft_r2c_1d(int(n), slot.rbuf, slot.cbuf, FFTW_ESTIMATE);
      break;
    case Kind::c2r:
      slot.plan = fftw_plan_dft_c2r_1d(int(n), slot.cbuf, slot.rbuf, FFTW_ESTIMATE);
      break;
    case Kind::redft10:
      slot.plan = fftw_plan_r2r_1d(int(n), slot.rbuf, slot.rbuf, FFTW_REDFT10, FFTW_ESTIMATE);
      break;
    case Kind::redft01:
      slot.plan = fftw_plan_r2r_1d(int(n), slot.rbuf, slot.rbuf, FFTW_REDFT01, FFTW_ESTIMATE);
      break;
    }
  if (!slot.plan)
    throw std::runtime_error("fftw plan creation failed");
  return cache.emplace(key, slot).first->second;
}

// per-thread scratch so concurrent transforms do not share buffers;
// std::complex<double> is layout-compatible with fftw_complex
struct Scratch
{
  std::vector<double> real;
  std::vector<std::complex<double>> cplx;

  void ensure(std::size_t n)
  {
    if (real.size() < n)
      real.resize(n);
    if (cplx.size() < n / 2 + 1)
      cplx.resize(n / 2 + 1);
  }

  fftw_complex* cplx_ptr() { return reinterpret_cast<fftw_complex*>(cplx.data()); }
};

thread_local Scratch t_scratch;

} // namespace

std::vector<std::complex<double>>
real_fft(std::span<const double> x)
{
  const std::size_t n = x.size();
  if (n < 2)
    throw std::invalid_argument("real_fft: need at least 2 samples");
  auto& slot = get_plan(Kind::r2c, n);
  auto& scratch = t_scratch;
  scratch.ensure(n);
  std::memcpy(scratch.real.data(), x.data(), n * sizeof(double));
  fftw_execute_dft_r2c(slot.plan, scratch.real.data(), scratch.cplx_ptr());
  return {scratch.cplx.begin(), scratch.cplx.begin() + std::ptrdiff_t(n / 2 + 1)};
}

std::vector<double>
inverse_real_fft(std::span<const std::complex<double>> bins, std::size_t n)
{
  if (bins.size() != n / 2 + 1)
    throw std::invalid_argument("inverse_real_fft: bin count does not match length");
  auto& slot = get_plan(Kind::c2r, n);
  auto& scratch = t_scratch;
  scratch.ensure(n);
  std::copy(bins.begin(), bins.end(), scratch.cplx.begin());
  fftw_execute_dft_c2r(slot.plan, scratch.cplx_ptr(), scratch.real.data());
  std::vector<double> out(n);
  const double inv_n = 1.0 / double(n);
  for (std::size_t i = 0; i < n; i++)
    out[i] = scratch.real[i] * inv_n;
  return out;
}

std::vector<double>
dct_ii(std::span<const double> x)
{
  const std::size_t n = x.size();
  if (n < 2)
    throw std::invalid_argument("dct_ii: need at least 2 samples");
  auto& slot = get_plan(Kind::redft10, n);
  auto& scratch = t_scratch;
  scratch.ensure(n);
  std::memcpy(scratch.real.data(), x.data(), n * sizeof(double));
  fftw_execute_r2r(slot.plan, scratch.real.data(), scratch.real.data());
  // FFTW REDFT10 gives Y[k] = 2 sum x[j] cos(pi (j+1/2) k / n); rescale to orthonormal
  std::vector<double> out(n);
  const double s0 = 0.5 / std::sqrt(double(n));
  const double sk = 1.0 / std::sqrt(2.0 * double(n));
  out[0] = scratch.real[0] * s0;
  for (std::size_t k = 1; k < n; k++)
    out[k] = scratch.real[k] * sk;
  return out;
}

std::vector<double>
idct(std::span<const double> coeffs)
{
  const std::size_t n = coeffs.size();
  if (n < 2)
    throw std::invalid_argument("idct: need at least 2 coefficients");
  auto& slot = get_plan(Kind::redft01, n);
  auto& scratch = t_scratch;
  scratch.ensure(n);
  const double s0 = 1.0 / std::sqrt(double(n));
  const double sk = 1.0 / std::sqrt(2.0 * double(n));
  scratch.real[0] = coeffs[0] * s0;
  for (std::size_t k = 1; k < n; k++)
    scratch.real[k] = coeffs[k] * sk;
  fftw_execute_r2r(slot.plan, scratch.real.data(), scratch.real.data());
  return {scratch.real.begin(), scratch.real.begin() + std::ptrdiff_t(n)};
}

std::vector<double>
real_cepstrum(std::span<const double> x, double floor_eps)
{
  auto bins = real_fft(x);
  std::vector<std::complex<double>> logmag(bins.size());
  for (std::size_t k = 0; k < bins.size(); k++)
    logmag[k] = {std::log(std::abs(bins[k]) + floor_eps), 0.0};
  return inverse_real_fft(logmag, x.size());
}

} // namespace wmlab::fft
