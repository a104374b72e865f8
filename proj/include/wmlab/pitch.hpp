#pragma once

#include "wmlab/audio.hpp"
#include "wmlab/stft.hpp"

#include <vector>

namespace wmlab {

struct PitchTrack
{
  std::vector<double> f0;        // Hz, 0 when unvoiced
  std::vector<bool> voicing;

  int frames() const { return int(f0.size()); }
  int voiced_count() const;
};

// Per-frame normalized autocorrelation, lags limited to 50..500 Hz. A frame
// is voiced when the peak exceeds 0.5 and the frame RMS exceeds 1e-4.
PitchTrack estimate_f0(const AudioBuffer& buf, const FrameSpec& spec);

} // namespace wmlab
