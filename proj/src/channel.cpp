#include "wmlab/channel.hpp"

#include "wmlab/fft.hpp"
#include "wmlab/rng.hpp"
#include "wmlab/stft.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <numeric>
#include <stdexcept>

namespace wmlab {

std::string_view
noise_kind_name(NoiseKind k)
{
  switch (k)
    {
    case NoiseKind::white: return "white";
    case NoiseKind::pink: return "pink";
    case NoiseKind::babble_proxy: return "babble_proxy";
    }
  return "?";
}

std::string
ChannelStage::describe() const
{
  char buf[128];
  switch (kind)
    {
    case Kind::gaussian_noise:
      std::snprintf(buf, sizeof buf, "gaussian_noise(snr=%.2fdB)", snr_db);
      break;
    case Kind::background_noise:
      std::snprintf(buf, sizeof buf, "background_noise(%s snr=%.2fdB)",
                    std::string(noise_kind_name(noise)).c_str(), snr_db);
      break;
    case Kind::resample_chain:
      std::snprintf(buf, sizeof buf, "resample_chain(%d)", intermediate_rate);
      break;
    case Kind::codec_proxy:
      std::snprintf(buf, sizeof buf, "codec_proxy(%dkbps)", bitrate_kbps);
      break;
    }
  return buf;
}

std::string
describe_stages(const std::vector<ChannelStage>& stages)
{
  std::string out;
  for (std::size_t i = 0; i < stages.size(); i++)
    {
      if (i)
        out += " -> ";
      out += stages[i].describe();
    }
  return out;
}

AudioBuffer
add_noise_at_snr(const AudioBuffer& buf, const AudioBuffer& noise, double snr_db)
{
  if (buf.samples.empty())
    throw std::invalid_argument("add_noise_at_snr: empty signal");
  if (noise.samples.empty())
    throw std::invalid_argument("add_noise_at_snr: empty noise");

  const std::size_t n = buf.samples.size();
  double p_sig = 0.0;
  for (double s : buf.samples)
    p_sig += s * s;
  p_sig /= double(n);
  if (p_sig <= 0.0)
    throw std::invalid_argument("add_noise_at_snr: signal is silent, SNR undefined");

  // tile/trim the noise to the signal length
  std::vector<double> tiled(n);
  for (std::size_t i = 0; i < n; i++)
    tiled[i] = noise.samples[i % noise.samples.size()];

  double p_noise = 0.0;
  for (double s : tiled)
    p_noise += s * s;
  p_noise /= double(n);
  if (p_noise <= 0.0)
    throw std::invalid_argument("add_noise_at_snr: noise is silent");

  const double target_noise_power = p_sig / std::pow(10.0, snr_db / 10.0);
  const double gain = std::sqrt(target_noise_power / p_noise);

  AudioBuffer out = buf;
  for (std::size_t i = 0; i < n; i++)
    out.samples[i] += gain * tiled[i];
  return out;
}

namespace {

std::vector<double>
white_gaussian(std::size_t length, std::uint64_t seed, double sigma)
{
  Rng rng(seed);
  std::vector<double> x(length);
  for (auto& s : x)
    s = sigma * rng.gaussian();
  return x;
}

// -3 dB/octave shaping of seeded white noise, plus an optional band mask
std::vector<double>
shaped_noise(std::size_t length, std::uint64_t seed, bool pink, double band_lo_hz,
             double band_hi_hz, int sample_rate)
{
  auto x = white_gaussian(length, seed, 1.0);
  auto bins = fft::real_fft(x);
  const double bin_hz = double(sample_rate) / double(length);
  for (std::size_t k = 0; k < bins.size(); k++)
    {
      const double f = double(k) * bin_hz;
      double g = 1.0;
      if (pink)
        g = (k == 0) ? 0.0 : 1.0 / std::sqrt(double(k));
      if (band_hi_hz > band_lo_hz)
        {
          // raised-cosine band edges, 100 Hz transitions
          const double t = 100.0;
          if (f < band_lo_hz - t || f > band_hi_hz + t)
            g = 0.0;
          else if (f < band_lo_hz)
            g *= 0.5 - 0.5 * std::cos(3.14159265358979323846 * (f - (band_lo_hz - t)) / t);
          else if (f > band_hi_hz)
            g *= 0.5 + 0.5 * std::cos(3.14159265358979323846 * (f - band_hi_hz) / t);
        }
      bins[k] *= g;
    }
  auto shaped = fft::inverse_real_fft(bins, length);
  double p = 0.0;
  for (double s : shaped)
    p += s * s;
  p = std::sqrt(p / double(length));
  const double target_rms = 0.3;
  if (p > 1e-30)
    for (auto& s : shaped)
      s *= target_rms / p;
  return shaped;
}

} // namespace

AudioBuffer
make_noise(NoiseKind kind, std::size_t length, int sample_rate, std::uint64_t seed)
{
  if (length == 0)
    throw std::invalid_argument("make_noise: length must be positive");

  AudioBuffer out;
  out.sample_rate = sample_rate;
  switch (kind)
    {
    case NoiseKind::white:
      out.samples = white_gaussian(length, hash64(seed, hash_str("white")), 0.3);
      break;
    case NoiseKind::pink:
      out.samples = shaped_noise(length, hash64(seed, hash_str("pink")), true, 0.0, 0.0, sample_rate);
      break;
    case NoiseKind::babble_proxy:
      {
        // six independent speech-band pink streams summed
        out.samples.assign(length, 0.0);
        for (int v = 0; v < 6; v++)
          {
            auto s = shaped_noise(length, hash64(seed, hash_str("babble"), std::uint64_t(v)), true,
                                  300.0, 3400.0, sample_rate);
            for (std::size_t i = 0; i < length; i++)
              out.samples[i] += s[i];
          }
        double p = 0.0;
        for (double s : out.samples)
          p += s * s;
        p = std::sqrt(p / double(length));
        if (p > 1e-30)
          for (auto& s : out.samples)
            s *= 0.3 / p;
        break;
      }
    }
  return out;
}

AudioBuffer
resample_chain(const AudioBuffer& buf, int intermediate_rate)
{
  if (intermediate_rate <= 0)
    throw std::invalid_argument("resample_chain: invalid rate");
  AudioBuffer down = resample(buf, intermediate_rate);
  AudioBuffer back = resample(down, buf.sample_rate);
  back.samples.resize(buf.samples.size(), 0.0); // trim/pad to the input length
  return back;
}

AudioBuffer
codec_proxy(const AudioBuffer& buf, int bitrate_kbps, std::uint64_t /*seed*/)
{
  if (bitrate_kbps < 64 || bitrate_kbps > 192)
    throw std::invalid_argument("codec_proxy: bitrate outside [64, 192] kbps");

  const FrameSpec spec{1024, 256, Window::hann};
  if (buf.samples.size() < std::size_t(spec.frame_len))
    return buf; // too short to transform; pass through

  const double t = double(bitrate_kbps - 64) / 128.0;
  const double cutoff_hz = 4000.0 + t * 3500.0;
  const double keep_frac = 0.3 + 0.5 * t;
  const double step_db = 2.0 - 1.25 * t;

  Spectrogram spg = stft(buf, spec);
  const int keep = int(std::lround(keep_frac * spg.bins));
  const double bin_hz = double(buf.sample_rate) / spec.frame_len;

  std::vector<std::pair<double, int>> order(std::size_t(spg.bins));
  for (int f = 0; f < spg.frames; f++)
    {
      for (int b = 0; b < spg.bins; b++)
        {
          const bool above_cutoff = double(b) * bin_hz > cutoff_hz;
          const double mag = above_cutoff ? 0.0 : std::abs(spg.at(f, b));
          order[std::size_t(b)] = {mag, b};
          if (above_cutoff)
            spg.at(f, b) = 0.0;
        }
      // keep the K strongest bins; ties broken by lower bin index
      std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first)
          return a.first > b.first;
        return a.second < b.second;
      });
      for (int r = 0; r < spg.bins; r++)
        {
          const int b = order[std::size_t(r)].second;
          if (r >= keep || order[std::size_t(r)].first <= 0.0)
            {
              spg.at(f, b) = 0.0;
              continue;
            }
          const double mag = order[std::size_t(r)].first;
          const double mag_db = 20.0 * std::log10(mag + 1e-12);
          const double q_db = std::round(mag_db / step_db) * step_db;
          spg.at(f, b) *= std::pow(10.0, q_db / 20.0) / mag;
        }
    }

  AudioBuffer out = istft(spg);
  out.samples.resize(buf.samples.size(), 0.0);
  return out;
}

ChannelResult
apply_channel(const AudioBuffer& buf, const ChannelSpec& spec, std::uint64_t utterance_index,
              std::uint64_t global_seed)
{
  ChannelResult result;
  result.audio = buf;
  if (!spec.enabled)
    return result;

  Rng rng(hash64(global_seed, utterance_index));

  std::vector<ChannelStage> stages;
  if (spec.random_compound)
    {
      ChannelStage noise;
      const int kind = rng.uniform_int(0, 2);
      if (kind == 0)
        {
          noise.kind = ChannelStage::Kind::gaussian_noise;
          noise.noise = NoiseKind::white;
        }
      else
        {
          noise.kind = ChannelStage::Kind::background_noise;
          noise.noise = kind == 1 ? NoiseKind::pink : NoiseKind::babble_proxy;
        }
      noise.snr_db = rng.uniform(10.0, 30.0);
      stages.push_back(noise);

      if (rng.coin())
        {
          static const int rates[] = {8000, 11025, 22050, 44100};
          ChannelStage rs;
          rs.kind = ChannelStage::Kind::resample_chain;
          rs.intermediate_rate = rates[rng.uniform_int(0, 3)];
          stages.push_back(rs);
        }

      ChannelStage codec;
      codec.kind = ChannelStage::Kind::codec_proxy;
      codec.bitrate_kbps = rng.uniform_int(64, 192);
      stages.push_back(codec);
    }
  else
    {
      stages = spec.stages;
    }

  for (const auto& stage : stages)
    {
      switch (stage.kind)
        {
        case ChannelStage::Kind::gaussian_noise:
        case ChannelStage::Kind::background_noise:
          {
            if (stage.snr_db < 10.0 || stage.snr_db > 30.0)
              throw std::invalid_argument("channel: snr_db outside [10, 30]");
            const auto noise = make_noise(stage.noise, result.audio.samples.size(),
                                          result.audio.sample_rate, rng.next_u64());
            result.audio = add_noise_at_snr(result.audio, noise, stage.snr_db);
            break;
          }
        case ChannelStage::Kind::resample_chain:
          {
            static const int allowed[] = {8000, 11025, 22050, 44100};
            if (std::find(std::begin(allowed), std::end(allowed), stage.intermediate_rate) ==
                std::end(allowed))
              throw std::invalid_argument("channel: unsupported intermediate rate");
            result.audio = resample_chain(result.audio, stage.intermediate_rate);
            break;
          }
        case ChannelStage::Kind::codec_proxy:
          result.audio = codec_proxy(result.audio, stage.bitrate_kbps, rng.next_u64());
          break;
        }
    }
  result.draws = stages;
  return result;
}

} // namespace wmlab
