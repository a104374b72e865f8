#include "wmlab/griffin_lim.hpp"

#include "wmlab/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace wmlab {

namespace {

double
sc_of(const Spectrogram& spg, const Matrix& target)
{
  double num = 0.0, den = 0.0;
  for (int t = 0; t < spg.frames; t++)
    for (int b = 0; b < spg.bins; b++)
      {
        const double d = std::abs(spg.at(t, b)) - target.at(t, b);
        num += d * d;
        den += target.at(t, b) * target.at(t, b);
      }
  if (den == 0.0)
    return num == 0.0 ? 0.0 : 1e300;
  return std::sqrt(num / den);
}

Matrix
phase_of(const Spectrogram& spg)
{
  Matrix phase(spg.frames, spg.bins);
  for (int t = 0; t < spg.frames; t++)
    for (int b = 0; b < spg.bins; b++)
      phase.at(t, b) = std::arg(spg.at(t, b));
  return phase;
}

} // namespace

AudioBuffer
griffin_lim(const Matrix& target_magnitude, const FrameSpec& spec, int sample_rate,
            int iterations, std::uint64_t seed)
{
  if (iterations < 1)
    throw std::invalid_argument("griffin_lim: iterations must be >= 1");
  if (target_magnitude.cols != spec.num_bins())
    throw std::invalid_argument("griffin_lim: magnitude bins do not match frame spec");
  if (target_magnitude.rows < 1)
    throw std::invalid_argument("griffin_lim: empty magnitude");

  const int frames = target_magnitude.rows;
  const int bins = target_magnitude.cols;

  Matrix phase(frames, bins);
  Rng rng(hash64(seed, hash_str("griffin_lim")));
  for (double& p : phase.data)
    p = rng.uniform() * 2.0 * 3.14159265358979323846;

  // Accelerated alternating projection with a monotonicity guard: the
  // momentum candidate is kept only when the spectral-convergence error
  // improves; otherwise the plain update (which never increases the error)
  // is taken from the last accepted iterate.
  const double momentum = 0.999;

  AudioBuffer current = istft(combine(target_magnitude, phase, spec, sample_rate));
  double sc_current = sc_of(stft(current, spec), target_magnitude);
  AudioBuffer best = current;
  double sc_best = sc_current;
  AudioBuffer prev_proj = current;
  AudioBuffer overshoot;
  bool have_momentum = false;

  for (int it = 0; it < iterations; it++)
    {
      const AudioBuffer& source = have_momentum ? overshoot : current;
      phase = phase_of(stft(source, spec));
      AudioBuffer cand = istft(combine(target_magnitude, phase, spec, sample_rate));
      double sc_cand = sc_of(stft(cand, spec), target_magnitude);

      if (have_momentum && sc_cand > sc_current)
        {
          // overshoot hurt; redo the step from the plain iterate
          phase = phase_of(stft(current, spec));
          cand = istft(combine(target_magnitude, phase, spec, sample_rate));
          sc_cand = sc_of(stft(cand, spec), target_magnitude);
          have_momentum = false;
        }

      overshoot = cand;
      for (std::size_t i = 0; i < overshoot.samples.size(); i++)
        overshoot.samples[i] += momentum * (cand.samples[i] - prev_proj.samples[i]);
      have_momentum = true;
      prev_proj = cand;
      current = std::move(cand);
      sc_current = sc_cand;

      if (sc_cand <= sc_best)
        {
          best = current;
          sc_best = sc_cand;
        }
    }
  return best;
}

double
spectral_convergence(const AudioBuffer& x, const Matrix& target_magnitude, const FrameSpec& spec)
{
  const Spectrogram spg = stft(x, spec);
  if (spg.frames != target_magnitude.rows || spg.bins != target_magnitude.cols)
    throw std::invalid_argument("spectral_convergence: shape mismatch");
  return sc_of(spg, target_magnitude);
}

} // namespace wmlab
