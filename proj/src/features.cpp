#include "wmlab/features.hpp"

#include "wmlab/fft.hpp"

#include <cmath>
#include <stdexcept>

namespace wmlab {

namespace {

double
hz_to_mel(double hz)
{
  return 2595.0 * std::log10(1.0 + hz / 700.0);
}

double
mel_to_hz(double mel)
{
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

} // namespace

Matrix
mel_filterbank(int n_mels, int frame_len, int sample_rate)
{
  const int num_bins = frame_len / 2 + 1;
  if (n_mels < 1 || n_mels > num_bins)
    throw std::invalid_argument("mel_filterbank: n_mels out of range");

  const double nyquist = sample_rate / 2.0;
  const double mel_hi = hz_to_mel(nyquist);
  std::vector<double> edges(n_mels + 2);
  for (int i = 0; i < n_mels + 2; i++)
    edges[i] = mel_to_hz(mel_hi * i / (n_mels + 1));

  Matrix fb(n_mels, num_bins);
  for (int m = 0; m < n_mels; m++)
    {
      const double lo = edges[m];
      const double center = edges[m + 1];
      const double hi = edges[m + 2];
      double sum = 0.0;
      for (int b = 0; b < num_bins; b++)
        {
          const double f = double(b) * sample_rate / frame_len;
          double w = 0.0;
          if (f > lo && f < center && center > lo)
            w = (f - lo) / (center - lo);
          else if (f >= center && f < hi && hi > center)
            w = (hi - f) / (hi - center);
          else if (f == center)
            w = 1.0;
          fb.at(m, b) = w;
          sum += w;
        }
      if (sum > 0.0)
        for (int b = 0; b < num_bins; b++)
          fb.at(m, b) /= sum;
    }
  return fb;
}

FeatureMatrix
log_mel(const Spectrogram& spg, int n_mels)
{
  const Matrix fb = mel_filterbank(n_mels, spg.spec.frame_len, spg.sample_rate);

  FeatureMatrix out;
  out.kind = FeatureKind::log_mel;
  out.frame = spg.spec;
  out.sample_rate = spg.sample_rate;
  out.values = Matrix(spg.frames, n_mels);
  for (int t = 0; t < spg.frames; t++)
    {
      for (int m = 0; m < n_mels; m++)
        {
          double acc = 0.0;
          for (int b = 0; b < spg.bins; b++)
            {
              const double mag = std::abs(spg.at(t, b));
              acc += fb.at(m, b) * mag * mag;
            }
          out.values.at(t, m) = std::log(acc + kMelFloor);
        }
    }
  return out;
}

FeatureMatrix
mfcc(const FeatureMatrix& logmel, int n_coeffs)
{
  if (logmel.kind != FeatureKind::log_mel)
    throw std::invalid_argument("mfcc: input must be a log-mel matrix");
  if (n_coeffs < 1 || n_coeffs >= logmel.values.cols)
    throw std::invalid_argument("mfcc: n_coeffs out of range");

  FeatureMatrix out;
  out.kind = FeatureKind::mfcc;
  out.frame = logmel.frame;
  out.sample_rate = logmel.sample_rate;
  out.values = Matrix(logmel.values.rows, n_coeffs);
  for (int t = 0; t < logmel.values.rows; t++)
    {
      auto coeffs = fft::dct_ii(logmel.values.row(t));
      for (int c = 0; c < n_coeffs; c++)
        out.values.at(t, c) = coeffs[std::size_t(c) + 1];
    }
  return out;
}

} // namespace wmlab
