#include "wmlab/stft.hpp"

#include "wmlab/fft.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace wmlab {

std::vector<double>
make_window(const FrameSpec& spec)
{
  std::vector<double> w(spec.frame_len, 1.0);
  if (spec.window == Window::hann)
    {
      // periodic hann, the STFT-friendly variant
      for (int n = 0; n < spec.frame_len; n++)
        w[n] = 0.5 - 0.5 * std::cos(2.0 * 3.14159265358979323846 * n / spec.frame_len);
    }
  return w;
}

bool
FrameSpec::cola_ok(double rel_tol) const
{
  if (hop <= 0 || frame_len <= 0 || hop > frame_len)
    return false;
  const auto w = make_window(*this);
  // steady-state overlap sum is periodic in hop
  double lo = 1e300, hi = -1e300;
  for (int n = 0; n < hop; n++)
    {
      double s = 0.0;
      for (int start = n; start < frame_len; start += hop)
        s += w[start];
      lo = std::min(lo, s);
      hi = std::max(hi, s);
    }
  if (lo <= 0.0)
    return false;
  return (hi - lo) / hi <= rel_tol;
}

int
num_frames(std::size_t num_samples, const FrameSpec& spec)
{
  if (num_samples < std::size_t(spec.frame_len))
    return 0;
  return int((num_samples - std::size_t(spec.frame_len)) / std::size_t(spec.hop)) + 1;
}

std::size_t
istft_length(int frames, const FrameSpec& spec)
{
  if (frames <= 0)
    return 0;
  return std::size_t(frames - 1) * std::size_t(spec.hop) + std::size_t(spec.frame_len);
}

Spectrogram
stft(const AudioBuffer& buf, const FrameSpec& spec)
{
  if (spec.frame_len < 2 || spec.hop < 1 || spec.hop > spec.frame_len)
    throw std::invalid_argument("stft: invalid frame spec");
  const int frames = num_frames(buf.samples.size(), spec);
  if (frames == 0)
    throw std::invalid_argument("stft: buffer shorter than one frame");

  const auto w = make_window(spec);
  Spectrogram spg;
  spg.frames = frames;
  spg.bins = spec.num_bins();
  spg.spec = spec;
  spg.sample_rate = buf.sample_rate;
  spg.data.resize(std::size_t(frames) * spg.bins);

  std::vector<double> frame(spec.frame_len);
  for (int t = 0; t < frames; t++)
    {
      const std::size_t off = std::size_t(t) * spec.hop;
      for (int n = 0; n < spec.frame_len; n++)
        frame[n] = buf.samples[off + n] * w[n];
      auto bins = fft::real_fft(frame);
      for (int b = 0; b < spg.bins; b++)
        spg.at(t, b) = bins[b];
    }
  return spg;
}

AudioBuffer
istft(const Spectrogram& spg)
{
  const FrameSpec& spec = spg.spec;
  if (!spec.cola_ok())
    throw std::invalid_argument("istft: frame spec does not satisfy overlap-add constancy");
  if (spg.bins != spec.num_bins())
    throw std::invalid_argument("istft: bin count does not match frame spec");

  const auto w = make_window(spec);
  const std::size_t out_len = istft_length(spg.frames, spec);
  std::vector<double> acc(out_len, 0.0);
  std::vector<double> den(out_len, 0.0);

  std::vector<std::complex<double>> bins(spg.bins);
  for (int t = 0; t < spg.frames; t++)
    {
      for (int b = 0; b < spg.bins; b++)
        bins[b] = spg.at(t, b);
      auto frame = fft::inverse_real_fft(bins, std::size_t(spec.frame_len));
      const std::size_t off = std::size_t(t) * spec.hop;
      for (int n = 0; n < spec.frame_len; n++)
        {
          acc[off + n] += w[n] * frame[n];
          den[off + n] += w[n] * w[n];
        }
    }

  // Floor the normalizer at a fraction of its steady-state value: at the
  // outermost samples only a window tail contributes, and dividing by a
  // near-zero sum would blow up frames whose spectra were modified. Edges
  // fade out instead; the fully covered region is reconstructed exactly.
  double den_max = 0.0;
  for (double d : den)
    den_max = std::max(den_max, d);
  const double den_floor = 1e-2 * den_max;

  AudioBuffer out;
  out.sample_rate = spg.sample_rate;
  out.samples.resize(out_len);
  for (std::size_t i = 0; i < out_len; i++)
    out.samples[i] = den_max > 0.0 ? acc[i] / std::max(den[i], den_floor) : 0.0;
  return out;
}

Matrix
magnitude(const Spectrogram& spg)
{
  Matrix m(spg.frames, spg.bins);
  for (int t = 0; t < spg.frames; t++)
    for (int b = 0; b < spg.bins; b++)
      m.at(t, b) = std::abs(spg.at(t, b));
  return m;
}

Spectrogram
combine(const Matrix& mag, const Matrix& phase, const FrameSpec& spec, int sample_rate)
{
  if (mag.rows != phase.rows || mag.cols != phase.cols)
    throw std::invalid_argument("combine: magnitude/phase shape mismatch");
  Spectrogram spg;
  spg.frames = mag.rows;
  spg.bins = mag.cols;
  spg.spec = spec;
  spg.sample_rate = sample_rate;
  spg.data.resize(std::size_t(mag.rows) * mag.cols);
  for (int t = 0; t < mag.rows; t++)
    for (int b = 0; b < mag.cols; b++)
      spg.at(t, b) = std::polar(mag.at(t, b), phase.at(t, b));
  return spg;
}

} // namespace wmlab
