#pragma once

#include "wmlab/audio.hpp"
#include "wmlab/matrix.hpp"

#include <complex>
#include <vector>

namespace wmlab {

enum class Window { hann, rect };

struct FrameSpec
{
  int frame_len = 1024;
  int hop = 256;
  Window window = Window::hann;

  int num_bins() const { return frame_len / 2 + 1; }

  // constant-overlap-add constancy of the window at this hop
  bool cola_ok(double rel_tol = 1e-6) const;
};

std::vector<double> make_window(const FrameSpec& spec);

// number of full frames that fit; 0 when the buffer is shorter than one frame
int num_frames(std::size_t num_samples, const FrameSpec& spec);

struct Spectrogram
{
  std::vector<std::complex<double>> data; // row-major [frames x bins]
  int frames = 0;
  int bins = 0;
  FrameSpec spec;
  int sample_rate = 0;

  std::complex<double>& at(int t, int b) { return data[std::size_t(t) * bins + b]; }
  std::complex<double> at(int t, int b) const { return data[std::size_t(t) * bins + b]; }
};

Spectrogram stft(const AudioBuffer& buf, const FrameSpec& spec);

// Weighted overlap-add inverse; exact on unmodified spectra wherever the
// window-square sum is nonzero. Rejects non-COLA specs.
AudioBuffer istft(const Spectrogram& spg);

// length of istft output for a given frame count
std::size_t istft_length(int frames, const FrameSpec& spec);

Matrix magnitude(const Spectrogram& spg);

// istft of (mag, phase) without building an intermediate Spectrogram caller-side
Spectrogram combine(const Matrix& mag, const Matrix& phase, const FrameSpec& spec, int sample_rate);

} // namespace wmlab
