#include "wmlab/watermark.hpp"

#include "wmlab/fft.hpp"
#include "wmlab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <stdexcept>

namespace wmlab {

Payload
Payload::random(std::size_t length, std::uint64_t seed)
{
  if (length < 1 || length > 256)
    throw std::invalid_argument("payload length must be in [1, 256]");
  Payload p;
  p.bits.resize(length);
  Rng rng(hash64(seed, hash_str("payload")));
  for (auto& b : p.bits)
    b = rng.coin() ? 1 : 0;
  return p;
}

Payload
Payload::from_hex(std::string_view hex, std::size_t length)
{
  if (length < 1 || length > 256)
    throw std::invalid_argument("payload length must be in [1, 256]");
  if (length % 4 != 0 || hex.size() * 4 != length)
    throw std::invalid_argument("hex payload must encode exactly " + std::to_string(length) + " bits");
  Payload p;
  p.bits.reserve(length);
  for (char c : hex)
    {
      int v;
      if (c >= '0' && c <= '9')
        v = c - '0';
      else if (c >= 'a' && c <= 'f')
        v = c - 'a' + 10;
      else if (c >= 'A' && c <= 'F')
        v = c - 'A' + 10;
      else
        throw std::invalid_argument("invalid hex digit in payload");
      for (int i = 3; i >= 0; i--)
        p.bits.push_back(std::uint8_t((v >> i) & 1));
    }
  return p;
}

std::string
Payload::to_hex() const
{
  if (bits.empty() || bits.size() % 4 != 0)
    throw std::invalid_argument("payload length must be a multiple of 4 for hex output");
  std::string out;
  out.reserve(bits.size() / 4);
  for (std::size_t i = 0; i < bits.size(); i += 4)
    {
      const int v = bits[i] << 3 | bits[i + 1] << 2 | bits[i + 2] << 1 | bits[i + 3];
      out.push_back("0123456789ABCDEF"[v]);
    }
  return out;
}

double
bitwise_accuracy(const Payload& expected, const Payload& got)
{
  if (expected.size() != got.size())
    throw std::invalid_argument("bitwise_accuracy: payload lengths differ");
  if (expected.size() == 0)
    throw std::invalid_argument("bitwise_accuracy: empty payloads");
  std::size_t match = 0;
  for (std::size_t i = 0; i < expected.size(); i++)
    if ((expected.bits[i] != 0) == (got.bits[i] != 0))
      match++;
  return double(match) / double(expected.size());
}

double
attacker_performance(double accuracy)
{
  if (accuracy < 0.0 || accuracy > 1.0)
    throw std::invalid_argument("attacker_performance: accuracy outside [0, 1]");
  return 1.0 - accuracy;
}

double
snr_db(const AudioBuffer& reference, const AudioBuffer& test, double cap_db)
{
  if (reference.samples.size() != test.samples.size())
    throw std::invalid_argument("snr_db: length mismatch");
  double p_ref = 0.0, p_diff = 0.0;
  for (std::size_t i = 0; i < reference.samples.size(); i++)
    {
      const double r = reference.samples[i];
      const double d = test.samples[i] - r;
      p_ref += r * r;
      p_diff += d * d;
    }
  if (p_ref <= 0.0)
    throw std::invalid_argument("snr_db: reference signal is silent");
  if (p_diff <= 0.0)
    return cap_db;
  return std::min(cap_db, 10.0 * std::log10(p_ref / p_diff));
}

namespace {

constexpr double kDegenerateNorm = 1e-12;

// Payload bits are spread over blocks in a key-seeded pseudorandom order,
// cycling through the payload; repetitions are soft-combined at detection.
std::vector<int>
bit_assignment(WatermarkKey key, int num_blocks, std::size_t payload_len)
{
  std::vector<int> order(static_cast<std::size_t>(num_blocks), 0);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(hash64(key.seed, hash_str("block_order"), std::uint64_t(num_blocks)));
  for (int i = num_blocks - 1; i > 0; i--)
    {
      const int j = rng.uniform_int(0, i);
      std::swap(order[std::size_t(i)], order[std::size_t(j)]);
    }
  std::vector<int> bit_of_block(static_cast<std::size_t>(num_blocks), 0);
  for (int i = 0; i < num_blocks; i++)
    bit_of_block[std::size_t(order[std::size_t(i)])] = int(std::size_t(i) % payload_len);
  return bit_of_block;
}

void
check_embed_preconditions(const AudioBuffer& buf, const Payload& payload, int block_len)
{
  if (payload.size() < 1 || payload.size() > 256)
    throw std::invalid_argument("payload length must be in [1, 256]");
  if (buf.samples.size() < payload.size() * std::size_t(block_len))
    throw std::invalid_argument("buffer too short for payload: need at least " +
                                std::to_string(payload.size() * std::size_t(block_len)) +
                                " samples");
}

int
full_blocks(const AudioBuffer& buf, int block_len)
{
  return int(buf.samples.size() / std::size_t(block_len));
}

DetectionResult
finalize_detection(std::vector<double> scores, int erasures)
{
  DetectionResult res;
  res.soft_scores = std::move(scores);
  res.erasures = erasures;
  res.bits.bits.resize(res.soft_scores.size());
  for (std::size_t i = 0; i < res.soft_scores.size(); i++)
    res.bits.bits[i] = res.soft_scores[i] > 0.0 ? 1 : 0;
  return res;
}

double
block_rms(std::span<const double> block)
{
  double acc = 0.0;
  for (double s : block)
    acc += s * s;
  return std::sqrt(acc / double(block.size()));
}

double
band_norm(std::span<const double> coeffs, int lo, int hi)
{
  double acc = 0.0;
  for (int i = lo; i < hi; i++)
    acc += coeffs[std::size_t(i)] * coeffs[std::size_t(i)];
  return std::sqrt(acc);
}

// nearest quantizer point of parity `bit` on the step-delta coset lattice
double
nearest_coset(double n, double delta, int bit)
{
  long m = std::lround((n / delta - bit) / 2.0);
  m = std::max(m, 0L);
  return delta * double(2 * m + bit);
}

void
validate_dct_cfg(const DctNormConfig& cfg)
{
  if (cfg.block_len < 2 || cfg.coeff_lo < 0 || cfg.coeff_lo >= cfg.coeff_hi ||
      cfg.coeff_hi > cfg.block_len)
    throw std::invalid_argument("dct_norm: invalid coefficient band");
  if (cfg.alpha <= 0.0 || cfg.delta_min <= 0.0)
    throw std::invalid_argument("dct_norm: alpha and delta_min must be positive");
  if (cfg.smooth_len < 0 || cfg.smooth_len >= cfg.block_len / 2)
    throw std::invalid_argument("dct_norm: smooth_len out of range");
}

} // namespace

AudioBuffer
embed_dct_norm(const AudioBuffer& buf, const Payload& payload, WatermarkKey key,
               const DctNormConfig& cfg, EmbedStats* stats)
{
  validate_dct_cfg(cfg);
  check_embed_preconditions(buf, payload, cfg.block_len);

  const int blocks = full_blocks(buf, cfg.block_len);
  const auto bit_of_block = bit_assignment(key, blocks, payload.size());
  const int band_width = cfg.coeff_hi - cfg.coeff_lo;
  const int half_ramp = cfg.smooth_len / 2;

  AudioBuffer out = buf;
  int erasures = 0;
  std::vector<double> block(static_cast<std::size_t>(cfg.block_len), 0.0);
  for (int b = 0; b < blocks; b++)
    {
      const std::size_t off = std::size_t(b) * std::size_t(cfg.block_len);
      std::copy_n(buf.samples.begin() + std::ptrdiff_t(off), cfg.block_len, block.begin());

      auto coeffs = fft::dct_ii(block);
      const double n = band_norm(coeffs, cfg.coeff_lo, cfg.coeff_hi);
      if (n < kDegenerateNorm)
        {
          erasures++;
          continue;
        }
      const double rms = block_rms(block);
      const double delta =
          std::max(cfg.alpha * rms * std::sqrt(double(band_width)), cfg.delta_min);
      const int bit = payload.bits[std::size_t(bit_of_block[std::size_t(b)])] ? 1 : 0;
      double n_q = nearest_coset(n, delta, bit);

      double e_out = 0.0;
      for (int i = 0; i < cfg.block_len; i++)
        if (i < cfg.coeff_lo || i >= cfg.coeff_hi)
          e_out += coeffs[std::size_t(i)] * coeffs[std::size_t(i)];

      // If raising the norm would need more energy than the rest of the block
      // holds, step down to a lower point of the same coset: it decodes to the
      // same bit and keeps the block energy (hence the detector's delta) intact.
      if (cfg.energy_compensation)
        while (n_q * n_q > n * n + e_out && n_q - 2.0 * delta >= bit * delta - 1e-12)
          n_q -= 2.0 * delta;

      const double scale = n_q / n;
      for (int i = cfg.coeff_lo; i < cfg.coeff_hi; i++)
        coeffs[std::size_t(i)] *= scale;

      // rescale out-of-band coefficients so the block's total energy is
      // unchanged by the norm quantization
      if (cfg.energy_compensation)
        {
          const double target_out = e_out + n * n - n_q * n_q;
          if (e_out > 1e-30 && target_out >= 0.0)
            {
              const double g = std::sqrt(target_out / e_out);
              for (int i = 0; i < cfg.block_len; i++)
                if (i < cfg.coeff_lo || i >= cfg.coeff_hi)
                  coeffs[std::size_t(i)] *= g;
            }
        }

      auto modified = fft::idct(coeffs);
      // transition smoothing: the watermark difference is crossfaded in and
      // out near block edges so adjacent blocks join without discontinuities
      for (int i = 0; i < cfg.block_len; i++)
        {
          double ramp = 1.0;
          if (half_ramp > 0)
            {
              if (i < half_ramp)
                ramp = 0.5 - 0.5 * std::cos(3.14159265358979323846 * (i + 0.5) / half_ramp);
              else if (i >= cfg.block_len - half_ramp)
                ramp = 0.5 -
                       0.5 * std::cos(3.14159265358979323846 *
                                      (cfg.block_len - i - 0.5) / half_ramp);
            }
          const double diff = modified[std::size_t(i)] - block[std::size_t(i)];
          out.samples[off + std::size_t(i)] = block[std::size_t(i)] + ramp * diff;
        }
    }
  if (stats)
    *stats = {blocks, erasures};
  return out;
}

DetectionResult
detect_dct_norm(const AudioBuffer& buf, WatermarkKey key, std::size_t payload_len,
                const DctNormConfig& cfg)
{
  validate_dct_cfg(cfg);
  if (payload_len < 1 || payload_len > 256)
    throw std::invalid_argument("payload length must be in [1, 256]");
  const int blocks = full_blocks(buf, cfg.block_len);
  if (blocks < 1)
    throw std::invalid_argument("buffer shorter than one block");

  const auto bit_of_block = bit_assignment(key, blocks, payload_len);
  const int band_width = cfg.coeff_hi - cfg.coeff_lo;

  std::vector<double> scores(payload_len, 0.0);
  int erasures = 0;
  std::vector<double> block(static_cast<std::size_t>(cfg.block_len), 0.0);
  for (int b = 0; b < blocks; b++)
    {
      const std::size_t off = std::size_t(b) * std::size_t(cfg.block_len);
      std::copy_n(buf.samples.begin() + std::ptrdiff_t(off), cfg.block_len, block.begin());
      auto coeffs = fft::dct_ii(block);
      const double n = band_norm(coeffs, cfg.coeff_lo, cfg.coeff_hi);
      if (n < kDegenerateNorm)
        {
          erasures++;
          continue;
        }
      const double rms = block_rms(block);
      const double delta =
          std::max(cfg.alpha * rms * std::sqrt(double(band_width)), cfg.delta_min);
      const double d0 = std::fabs(n - nearest_coset(n, delta, 0));
      const double d1 = std::fabs(n - nearest_coset(n, delta, 1));
      scores[std::size_t(bit_of_block[std::size_t(b)])] += (d0 - d1) / delta;
    }
  return finalize_detection(std::move(scores), erasures);
}

namespace {

void
validate_ss_cfg(const SpreadSpectrumConfig& cfg)
{
  if (cfg.block_len < 2 || cfg.band_lo < 0 || cfg.band_lo >= cfg.band_hi ||
      cfg.band_hi > cfg.block_len)
    throw std::invalid_argument("spread_spectrum: invalid band");
  if (cfg.beta <= 0.0)
    throw std::invalid_argument("spread_spectrum: beta must be positive");
}

std::vector<double>
pn_sequence(WatermarkKey key, int band_width)
{
  Rng rng(hash64(key.seed, hash_str("ss_pn")));
  std::vector<double> pn(static_cast<std::size_t>(band_width), 0.0);
  for (auto& c : pn)
    c = rng.coin() ? 1.0 : -1.0;
  return pn;
}

} // namespace

AudioBuffer
embed_spread_spectrum(const AudioBuffer& buf, const Payload& payload, WatermarkKey key,
                      const SpreadSpectrumConfig& cfg, EmbedStats* stats)
{
  validate_ss_cfg(cfg);
  check_embed_preconditions(buf, payload, cfg.block_len);

  const int blocks = full_blocks(buf, cfg.block_len);
  const auto bit_of_block = bit_assignment(key, blocks, payload.size());
  const int bw = cfg.band_hi - cfg.band_lo;
  const auto pn = pn_sequence(key, bw);

  AudioBuffer out = buf;
  int erasures = 0;
  std::vector<double> block(static_cast<std::size_t>(cfg.block_len), 0.0);
  for (int b = 0; b < blocks; b++)
    {
      const std::size_t off = std::size_t(b) * std::size_t(cfg.block_len);
      std::copy_n(buf.samples.begin() + std::ptrdiff_t(off), cfg.block_len, block.begin());
      auto coeffs = fft::dct_ii(block);

      double e_band = 0.0, proj = 0.0;
      for (int i = 0; i < bw; i++)
        {
          const double c = coeffs[std::size_t(cfg.band_lo + i)];
          e_band += c * c;
          proj += c * pn[std::size_t(i)];
        }
      const double rms_band = std::sqrt(e_band / bw);
      if (rms_band < kDegenerateNorm)
        {
          erasures++;
          continue;
        }
      // Dead-zone host suppression: the cover signal's own correlation with
      // the chip pattern is left alone unless it opposes the message bit by
      // more than three quarters of the chip margin, in which case only the excess is
      // removed. Clean detection then has a guaranteed positive margin at a
      // fraction of the distortion full interference cancellation would cost.
      const double sign = payload.bits[std::size_t(bit_of_block[std::size_t(b)])] ? 1.0 : -1.0;
      const double margin = cfg.beta * rms_band * double(bw); // chip's correlation
      double adjust = 0.0;
      if (sign * proj < -0.75 * margin)
        adjust = (-sign * 0.75 * margin - proj) / double(bw);
      const double chip = sign * cfg.beta * rms_band;
      for (int i = 0; i < bw; i++)
        coeffs[std::size_t(cfg.band_lo + i)] += (chip + adjust) * pn[std::size_t(i)];

      auto modified = fft::idct(coeffs);
      std::copy_n(modified.begin(), cfg.block_len, out.samples.begin() + std::ptrdiff_t(off));
    }
  if (stats)
    *stats = {blocks, erasures};
  return out;
}

DetectionResult
detect_spread_spectrum(const AudioBuffer& buf, WatermarkKey key, std::size_t payload_len,
                       const SpreadSpectrumConfig& cfg)
{
  validate_ss_cfg(cfg);
  if (payload_len < 1 || payload_len > 256)
    throw std::invalid_argument("payload length must be in [1, 256]");
  const int blocks = full_blocks(buf, cfg.block_len);
  if (blocks < 1)
    throw std::invalid_argument("buffer shorter than one block");

  const auto bit_of_block = bit_assignment(key, blocks, payload_len);
  const int bw = cfg.band_hi - cfg.band_lo;
  const auto pn = pn_sequence(key, bw);

  std::vector<double> scores(payload_len, 0.0);
  int erasures = 0;
  std::vector<double> block(static_cast<std::size_t>(cfg.block_len), 0.0);
  for (int b = 0; b < blocks; b++)
    {
      const std::size_t off = std::size_t(b) * std::size_t(cfg.block_len);
      std::copy_n(buf.samples.begin() + std::ptrdiff_t(off), cfg.block_len, block.begin());
      auto coeffs = fft::dct_ii(block);

      double e_band = 0.0, proj = 0.0;
      for (int i = 0; i < bw; i++)
        {
          const double c = coeffs[std::size_t(cfg.band_lo + i)];
          e_band += c * c;
          proj += c * pn[std::size_t(i)];
        }
      if (std::sqrt(e_band / bw) < kDegenerateNorm)
        {
          erasures++;
          continue;
        }
      // normalized correlation with the chip pattern
      scores[std::size_t(bit_of_block[std::size_t(b)])] +=
          proj / (std::sqrt(e_band) * std::sqrt(double(bw)));
    }
  return finalize_detection(std::move(scores), erasures);
}

namespace {

void
validate_echo_cfg(const EchoConfig& cfg)
{
  if (cfg.block_len < 8)
    throw std::invalid_argument("echo: block too short");
  if (cfg.delay0 == cfg.delay1 || cfg.delay0 < 1 || cfg.delay1 < 1 ||
      cfg.delay0 >= cfg.block_len / 4 || cfg.delay1 >= cfg.block_len / 4)
    throw std::invalid_argument("echo: delays must differ and stay below block_len/4");
  if (cfg.echo_gain <= 0.0 || cfg.echo_gain >= 1.0)
    throw std::invalid_argument("echo: gain must be in (0, 1)");
  if (cfg.taper < 0 || cfg.taper > cfg.block_len / 2)
    throw std::invalid_argument("echo: taper out of range");
}

} // namespace

AudioBuffer
embed_echo(const AudioBuffer& buf, const Payload& payload, WatermarkKey key, const EchoConfig& cfg,
           EmbedStats* stats)
{
  validate_echo_cfg(cfg);
  check_embed_preconditions(buf, payload, cfg.block_len);

  const int blocks = full_blocks(buf, cfg.block_len);
  const auto bit_of_block = bit_assignment(key, blocks, payload.size());

  // raised-cosine ramps confine the added echo inside each block
  std::vector<double> ramp(std::size_t(cfg.block_len), 1.0);
  for (int i = 0; i < cfg.taper; i++)
    {
      const double r = 0.5 - 0.5 * std::cos(3.14159265358979323846 * (i + 0.5) / cfg.taper);
      ramp[std::size_t(i)] = r;
      ramp[std::size_t(cfg.block_len - 1 - i)] = r;
    }

  AudioBuffer out = buf;
  int erasures = 0;
  for (int b = 0; b < blocks; b++)
    {
      const std::size_t off = std::size_t(b) * std::size_t(cfg.block_len);
      const std::span<const double> block(buf.samples.data() + off, std::size_t(cfg.block_len));
      if (block_rms(block) < kDegenerateNorm)
        {
          erasures++;
          continue;
        }
      const int bit = payload.bits[std::size_t(bit_of_block[std::size_t(b)])] ? 1 : 0;
      const int delay = bit ? cfg.delay1 : cfg.delay0;
      for (int i = delay; i < cfg.block_len; i++)
        out.samples[off + std::size_t(i)] +=
            ramp[std::size_t(i)] * cfg.echo_gain * block[std::size_t(i - delay)];
    }
  if (stats)
    *stats = {blocks, erasures};
  return out;
}

DetectionResult
detect_echo(const AudioBuffer& buf, WatermarkKey key, std::size_t payload_len, const EchoConfig& cfg)
{
  validate_echo_cfg(cfg);
  if (payload_len < 1 || payload_len > 256)
    throw std::invalid_argument("payload length must be in [1, 256]");
  const int blocks = full_blocks(buf, cfg.block_len);
  if (blocks < 1)
    throw std::invalid_argument("buffer shorter than one block");

  const auto bit_of_block = bit_assignment(key, blocks, payload_len);

  std::vector<double> scores(payload_len, 0.0);
  int erasures = 0;
  for (int b = 0; b < blocks; b++)
    {
      const std::size_t off = std::size_t(b) * std::size_t(cfg.block_len);
      const std::span<const double> block(buf.samples.data() + off, std::size_t(cfg.block_len));
      if (block_rms(block) < kDegenerateNorm)
        {
          erasures++;
          continue;
        }
      const auto ceps = fft::real_cepstrum(block);
      const double c0 = std::fabs(ceps[std::size_t(cfg.delay0)]);
      const double c1 = std::fabs(ceps[std::size_t(cfg.delay1)]);
      scores[std::size_t(bit_of_block[std::size_t(b)])] += c1 - c0;
    }
  return finalize_detection(std::move(scores), erasures);
}

std::string_view
scheme_name(Scheme s)
{
  switch (s)
    {
    case Scheme::dct_norm: return "dct_norm";
    case Scheme::spread_spectrum: return "spread_spectrum";
    case Scheme::echo: return "echo";
    }
  return "?";
}

std::optional<Scheme>
parse_scheme(std::string_view name)
{
  if (name == "dct_norm" || name == "dct")
    return Scheme::dct_norm;
  if (name == "spread_spectrum" || name == "ss")
    return Scheme::spread_spectrum;
  if (name == "echo")
    return Scheme::echo;
  return std::nullopt;
}

int
SchemeConfig::block_len() const
{
  switch (scheme)
    {
    case Scheme::dct_norm: return dct.block_len;
    case Scheme::spread_spectrum: return ss.block_len;
    case Scheme::echo: return echo.block_len;
    }
  return 0;
}

AudioBuffer
embed(const AudioBuffer& buf, const Payload& payload, WatermarkKey key, const SchemeConfig& cfg,
      EmbedStats* stats)
{
  switch (cfg.scheme)
    {
    case Scheme::dct_norm: return embed_dct_norm(buf, payload, key, cfg.dct, stats);
    case Scheme::spread_spectrum: return embed_spread_spectrum(buf, payload, key, cfg.ss, stats);
    case Scheme::echo: return embed_echo(buf, payload, key, cfg.echo, stats);
    }
  throw std::logic_error("embed: unknown scheme");
}

DetectionResult
detect(const AudioBuffer& buf, WatermarkKey key, std::size_t payload_len, const SchemeConfig& cfg)
{
  switch (cfg.scheme)
    {
    case Scheme::dct_norm: return detect_dct_norm(buf, key, payload_len, cfg.dct);
    case Scheme::spread_spectrum: return detect_spread_spectrum(buf, key, payload_len, cfg.ss);
    case Scheme::echo: return detect_echo(buf, key, payload_len, cfg.echo);
    }
  throw std::logic_error("detect: unknown scheme");
}

} // namespace wmlab
