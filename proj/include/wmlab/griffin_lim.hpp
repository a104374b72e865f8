#pragma once

#include "wmlab/matrix.hpp"
#include "wmlab/stft.hpp"

#include <cstdint>

namespace wmlab {

// Iterative phase reconstruction from an STFT magnitude target. Initial
// phases are drawn uniformly in [0, 2pi) from the seed; the classical update
// (no momentum) keeps the spectral-convergence error non-increasing.
AudioBuffer griffin_lim(const Matrix& target_magnitude, const FrameSpec& spec, int sample_rate,
                        int iterations, std::uint64_t seed);

// ||  |STFT(x)| - M ||_F / ||M||_F, the convergence measure for griffin_lim
double spectral_convergence(const AudioBuffer& x, const Matrix& target_magnitude,
                            const FrameSpec& spec);

} // namespace wmlab
