#pragma once

#include "wmlab/matrix.hpp"
#include "wmlab/stft.hpp"

namespace wmlab {

enum class FeatureKind { log_mel, mfcc };

struct FeatureMatrix
{
  Matrix values; // [frames x dim]
  FeatureKind kind = FeatureKind::log_mel;
  FrameSpec frame;
  int sample_rate = 0;
};

// Triangular filters on the HTK mel scale, 0 Hz to Nyquist; each filter's
// weights over the FFT bins sum to 1.
Matrix mel_filterbank(int n_mels, int frame_len, int sample_rate);

// natural log of (mel-filtered power + 1e-10)
FeatureMatrix log_mel(const Spectrogram& spg, int n_mels);

// Orthonormal DCT-II over each log-mel row, keeping coefficients 1..n_coeffs
// (coefficient 0 dropped to discount loudness).
FeatureMatrix mfcc(const FeatureMatrix& logmel, int n_coeffs);

constexpr double kMelFloor = 1e-10;

} // namespace wmlab
