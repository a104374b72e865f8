#include "wmlab/pitch.hpp"

#include "wmlab/fft.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

namespace wmlab {

int
PitchTrack::voiced_count() const
{
  int n = 0;
  for (bool v : voicing)
    n += v ? 1 : 0;
  return n;
}

PitchTrack
estimate_f0(const AudioBuffer& buf, const FrameSpec& spec)
{
  const int frames = num_frames(buf.samples.size(), spec);
  PitchTrack track;
  track.f0.assign(std::size_t(std::max(frames, 0)), 0.0);
  track.voicing.assign(std::size_t(std::max(frames, 0)), false);

  const int sr = buf.sample_rate;
  const int lag_min = std::max(1, sr / 500);
  const int lag_max = std::min(spec.frame_len - 1, sr / 50);
  if (lag_max <= lag_min)
    return track;

  const int n = spec.frame_len;
  std::size_t fft_len = 1;
  while (fft_len < 2 * std::size_t(n))
    fft_len <<= 1;

  std::vector<double> padded(fft_len);
  std::vector<double> cumsq(std::size_t(n) + 1);
  for (int t = 0; t < frames; t++)
    {
      const std::size_t off = std::size_t(t) * spec.hop;
      std::fill(padded.begin(), padded.end(), 0.0);
      cumsq[0] = 0.0;
      for (int i = 0; i < n; i++)
        {
          const double s = buf.samples[off + std::size_t(i)];
          padded[std::size_t(i)] = s;
          cumsq[std::size_t(i) + 1] = cumsq[std::size_t(i)] + s * s;
        }
      const double energy = cumsq[std::size_t(n)];
      const double rms = std::sqrt(energy / n);
      if (rms <= 1e-4)
        continue;

      // linear autocorrelation via the zero-padded power spectrum
      auto bins = fft::real_fft(padded);
      for (auto& b : bins)
        b = std::norm(b);
      const auto ac = fft::inverse_real_fft(bins, fft_len);

      // normalized cross-correlation of the frame with its lagged self
      auto norm_corr = [&](int lag) {
        const double e0 = cumsq[std::size_t(n - lag)];
        const double e1 = energy - cumsq[std::size_t(lag)];
        const double den = std::sqrt(e0 * e1);
        return den > 1e-30 ? ac[std::size_t(lag)] / den : 0.0;
      };

      double best = 0.0;
      int best_lag = 0;
      for (int lag = lag_min; lag <= lag_max; lag++)
        {
          const double r = norm_corr(lag);
          if (r > best)
            {
              best = r;
              best_lag = lag;
            }
        }
      if (best <= 0.5 || best_lag == 0)
        continue;

      // octave correction: a multiple of the true period correlates just as
      // well, so prefer the shortest lag that is nearly as strong
      for (;;)
        {
          int shorter = 0;
          for (int div = 2; div <= 4; div++)
            {
              const int cand = int(std::lround(double(best_lag) / div));
              if (cand >= lag_min && cand < best_lag && norm_corr(cand) >= 0.9 * best)
                {
                  shorter = cand;
                  break;
                }
            }
          if (shorter == 0)
            break;
          best_lag = shorter;
        }

      // parabolic refinement around the peak
      double lag_refined = best_lag;
      if (best_lag > lag_min && best_lag < lag_max)
        {
          const double rm = norm_corr(best_lag - 1);
          const double rp = norm_corr(best_lag + 1);
          const double denom = rm - 2.0 * best + rp;
          if (std::fabs(denom) > 1e-12)
            {
              const double delta = 0.5 * (rm - rp) / denom;
              if (std::fabs(delta) <= 1.0)
                lag_refined = best_lag + delta;
            }
        }

      track.f0[std::size_t(t)] = std::clamp(double(sr) / lag_refined, 50.0, 500.0);
      track.voicing[std::size_t(t)] = true;
    }
  return track;
}

} // namespace wmlab
