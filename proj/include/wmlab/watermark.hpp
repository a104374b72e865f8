#pragma once

#include "wmlab/audio.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace wmlab {

// Multi-bit message embedded into audio and recovered by the detectors.
struct Payload
{
  std::vector<std::uint8_t> bits; // 0/1

  std::size_t size() const { return bits.size(); }

  static Payload random(std::size_t length, std::uint64_t seed);
  // MSB-first hex; length must be a multiple of 4 bits
  static Payload from_hex(std::string_view hex, std::size_t length);
  std::string to_hex() const;
};

struct WatermarkKey
{
  std::uint64_t seed = 0;
};

struct DctNormConfig
{
  int block_len = 2048;
  int coeff_lo = 4;
  int coeff_hi = 132;
  double alpha = 0.1;       // quantizer step relative to block RMS
  double delta_min = 1e-3;  // absolute step floor
  int smooth_len = 64;      // crossfade across block boundaries
  bool energy_compensation = true;
};

struct SpreadSpectrumConfig
{
  int block_len = 2048;
  int band_lo = 32;
  int band_hi = 512;
  double beta = 0.05; // chip amplitude relative to band RMS
};

struct EchoConfig
{
  int block_len = 4096;
  int delay0 = 100;
  int delay1 = 150;
  double echo_gain = 0.3;
  int taper = 128; // raised-cosine ramp at block edges
};

struct DetectionResult
{
  Payload bits;
  std::vector<double> soft_scores; // signed margin per bit; positive means 1
  int erasures = 0;                // degenerate blocks skipped
};

struct EmbedStats
{
  int blocks = 0;
  int erasures = 0;
};

// Detection is blind: only (audio, key, config, payload length) go in.

AudioBuffer embed_dct_norm(const AudioBuffer& buf, const Payload& payload, WatermarkKey key,
                           const DctNormConfig& cfg = {}, EmbedStats* stats = nullptr);
DetectionResult detect_dct_norm(const AudioBuffer& buf, WatermarkKey key, std::size_t payload_len,
                                const DctNormConfig& cfg = {});

AudioBuffer embed_spread_spectrum(const AudioBuffer& buf, const Payload& payload, WatermarkKey key,
                                  const SpreadSpectrumConfig& cfg = {}, EmbedStats* stats = nullptr);
DetectionResult detect_spread_spectrum(const AudioBuffer& buf, WatermarkKey key,
                                       std::size_t payload_len,
                                       const SpreadSpectrumConfig& cfg = {});

AudioBuffer embed_echo(const AudioBuffer& buf, const Payload& payload, WatermarkKey key,
                       const EchoConfig& cfg = {}, EmbedStats* stats = nullptr);
DetectionResult detect_echo(const AudioBuffer& buf, WatermarkKey key, std::size_t payload_len,
                            const EchoConfig& cfg = {});

// fraction of matching bit positions
double bitwise_accuracy(const Payload& expected, const Payload& got);

// 1 - accuracy; 0 means perfect extraction, 0.5 chance level
double attacker_performance(double accuracy);

// 10*log10(P_ref / P_diff), capped; the imperceptibility proxy
double snr_db(const AudioBuffer& reference, const AudioBuffer& test, double cap_db = 120.0);

// ---- scheme dispatch for the harness and CLI ----

enum class Scheme { dct_norm, spread_spectrum, echo };

std::string_view scheme_name(Scheme s);
std::optional<Scheme> parse_scheme(std::string_view name);

struct SchemeConfig
{
  Scheme scheme = Scheme::dct_norm;
  DctNormConfig dct;
  SpreadSpectrumConfig ss;
  EchoConfig echo;

  int block_len() const;
};

AudioBuffer embed(const AudioBuffer& buf, const Payload& payload, WatermarkKey key,
                  const SchemeConfig& cfg, EmbedStats* stats = nullptr);
DetectionResult detect(const AudioBuffer& buf, WatermarkKey key, std::size_t payload_len,
                       const SchemeConfig& cfg);

} // namespace wmlab
