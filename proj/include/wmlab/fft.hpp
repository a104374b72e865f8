#pragma once

#include <complex>
#include <span>
#include <vector>

// Thin wrapper over FFTW: real FFT pairs, orthonormal DCT-II/III and the
// real cepstrum. Plans are cached per size behind a mutex; execution is
// thread-safe and bit-reproducible (FFTW_ESTIMATE plans only).

namespace wmlab::fft {

// size n input -> n/2 + 1 bins
std::vector<std::complex<double>> real_fft(std::span<const double> x);

// n/2 + 1 bins -> size n output, scaled by 1/n (true inverse)
std::vector<double> inverse_real_fft(std::span<const std::complex<double>> bins, std::size_t n);

// orthonormal DCT-II; for a constant vector c of length n, coefficient 0 is c*sqrt(n)
std::vector<double> dct_ii(std::span<const double> x);

// exact inverse of dct_ii (orthonormal DCT-III)
std::vector<double> idct(std::span<const double> coeffs);

// IFFT of log(|FFT(x)| + floor_eps); peaks at echo lags
std::vector<double> real_cepstrum(std::span<const double> x, double floor_eps = 1e-10);

} // namespace wmlab::fft
