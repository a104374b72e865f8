#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace wmlab {

// Every pipeline stage operates on this: mono samples, nominal range [-1, 1].
struct AudioBuffer
{
  std::vector<double> samples;
  int sample_rate = 0;

  std::size_t size() const { return samples.size(); }
  double duration_s() const { return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0; }
  double rms() const;
  double peak() const;
};

// Internal processing rate; file inputs are resampled to this on ingestion.
constexpr int kCanonicalRate = 16000;

enum class WavEncoding { pcm16, float32 };

// RIFF/WAVE reader: PCM16 or IEEE float32, 1 or 2 channels. Stereo is
// averaged to mono, 16-bit samples are scaled by 1/32768.
AudioBuffer load_wav(const std::string& path);

void save_wav(const AudioBuffer& buf, const std::string& path, WavEncoding encoding);

// Kaiser-windowed sinc (beta = 8.6, 64 zero crossings per side at the lower
// rate), polyphase. Output length = round(len * target / source).
AudioBuffer resample(const AudioBuffer& buf, int target_rate);

// Resample to the canonical rate unless already there.
AudioBuffer to_canonical_rate(const AudioBuffer& buf);

} // namespace wmlab
