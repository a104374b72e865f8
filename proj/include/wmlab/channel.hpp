#pragma once

#include "wmlab/audio.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace wmlab {

enum class NoiseKind { white, pink, babble_proxy };

std::string_view noise_kind_name(NoiseKind k);

struct ChannelStage
{
  enum class Kind { gaussian_noise, background_noise, resample_chain, codec_proxy };

  Kind kind = Kind::gaussian_noise;
  NoiseKind noise = NoiseKind::white; // background_noise only
  double snr_db = 20.0;               // noise stages
  int intermediate_rate = 22050;      // resample_chain
  int bitrate_kbps = 128;             // codec_proxy

  std::string describe() const;
};

struct ChannelSpec
{
  bool enabled = true;
  // When set, stage parameters are drawn per utterance the way the harness's
  // compound distortion works: one noise stage, an optional resample hop
  // (p = 0.5) and one codec stage, in that order.
  bool random_compound = true;
  std::vector<ChannelStage> stages; // used when random_compound is false
};

// Mix noise into the signal so the resulting SNR is exactly snr_db (powers
// measured as mean squared amplitude over the whole length). The noise is
// tiled or trimmed to the signal length.
AudioBuffer add_noise_at_snr(const AudioBuffer& buf, const AudioBuffer& noise, double snr_db);

AudioBuffer make_noise(NoiseKind kind, std::size_t length, int sample_rate, std::uint64_t seed);

// down to intermediate_rate and back; output trimmed/padded to input length
AudioBuffer resample_chain(const AudioBuffer& buf, int intermediate_rate);

// Lossy-coding stand-in: per-frame top-K magnitude survival, bitrate-scaled
// lowpass and log-magnitude quantization, phases untouched. The seed is
// accepted for interface stability; the current proxy is fully deterministic.
AudioBuffer codec_proxy(const AudioBuffer& buf, int bitrate_kbps, std::uint64_t seed = 0);

struct ChannelResult
{
  AudioBuffer audio;
  std::vector<ChannelStage> draws; // stages actually applied, with drawn params
};

// Apply the channel. All randomness (stage draws and noise realizations)
// derives from hash64(global_seed, utterance_index), so reruns are
// bit-identical.
ChannelResult apply_channel(const AudioBuffer& buf, const ChannelSpec& spec,
                            std::uint64_t utterance_index, std::uint64_t global_seed);

std::string describe_stages(const std::vector<ChannelStage>& stages);

} // namespace wmlab
