#pragma once

#include "wmlab/audio.hpp"
#include "wmlab/features.hpp"
#include "wmlab/matrix.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace wmlab {

enum class PoolMode { separate_reference, same_utterance_excluded };
enum class KnnDistance { cosine, l2 };
enum class ResynthMode { griffin_lim, unit_ola };

struct SelfVcConfig
{
  int k = 4;
  PoolMode pool_mode = PoolMode::separate_reference;
  int exclusion_window = 10; // frames; same_utterance_excluded only
  KnnDistance distance = KnnDistance::cosine;
  ResynthMode resynth = ResynthMode::griffin_lim;
  int gl_iterations = 60;
  int n_mels = 40;
  int n_mfcc = 20;
  FrameSpec frame{1024, 256, Window::hann};
};

struct NormStats
{
  std::vector<double> mean;
  std::vector<double> stddev;
};

// Reference-side frame representations searched during conversion: normalized
// MFCC features, frame-aligned magnitudes, and the raw samples (for unit OLA).
struct MatchingPool
{
  Matrix features;   // [frames x n_mfcc], normalized by norm_stats
  Matrix magnitudes; // [frames x bins]
  NormStats norm_stats;
  std::vector<double> source_samples;
  int sample_rate = 0;
  FrameSpec frame;
  std::string source_id;

  int size() const { return features.rows; }
};

MatchingPool build_pool(const AudioBuffer& reference, const SelfVcConfig& cfg,
                        const std::string& source_id = "");

// normalize raw MFCC rows with the pool's recorded statistics
Matrix apply_norm_stats(const Matrix& raw_features, const NormStats& stats);

// For each source frame take the mean magnitude of its k nearest pool frames.
// Query index i only matters in same_utterance_excluded mode, where candidates
// j with |i - j| <= exclusion_window are skipped. Ties break to the lower
// pool index.
Matrix knn_convert(const Matrix& source_features, const MatchingPool& pool,
                   const SelfVcConfig& cfg);

// The attack: decompose to frame features, substitute frames by matching
// against the pool, resynthesize. Output is trimmed/padded to the input
// length. `reference` is required in separate_reference mode.
AudioBuffer self_vc_attack(const AudioBuffer& buf, const AudioBuffer* reference,
                           const SelfVcConfig& cfg, std::uint64_t seed);

// Magnitude-only resynthesis baseline: keeps |STFT|, rebuilds phase from the
// seed. Destroys phase-borne information while preserving magnitude content.
AudioBuffer copy_synthesis_attack(const AudioBuffer& buf, int gl_iterations, std::uint64_t seed);

struct QualityReport
{
  double mcd_db = 0.0;
  double lsd_db = 0.0;
  std::optional<double> f0_corr; // absent when < 10 jointly voiced frames
  double voiced_overlap = 0.0;
  double snr_db = 0.0;
};

// Frame-synchronous comparison of equal-length signals.
QualityReport quality_report(const AudioBuffer& original, const AudioBuffer& transformed);

} // namespace wmlab
