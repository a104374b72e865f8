#include "wmlab/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace wmlab {

double
AudioBuffer::rms() const
{
  if (samples.empty())
    return 0.0;
  double acc = 0.0;
  for (double s : samples)
    acc += s * s;
  return std::sqrt(acc / static_cast<double>(samples.size()));
}

double
AudioBuffer::peak() const
{
  double p = 0.0;
  for (double s : samples)
    p = std::max(p, std::fabs(s));
  return p;
}

namespace {

std::uint32_t
read_u32(const unsigned char* p)
{
  return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 | std::uint32_t(p[3]) << 24;
}

std::uint16_t
read_u16(const unsigned char* p)
{
  return std::uint16_t(p[0]) | std::uint16_t(p[1]) << 8;
}

void
put_u32(std::string& out, std::uint32_t v)
{
  out.push_back(char(v & 0xff));
  out.push_back(char((v >> 8) & 0xff));
  out.push_back(char((v >> 16) & 0xff));
  out.push_back(char((v >> 24) & 0xff));
}

void
put_u16(std::string& out, std::uint16_t v)
{
  out.push_back(char(v & 0xff));
  out.push_back(char((v >> 8) & 0xff));
}

} // namespace

AudioBuffer
load_wav(const std::string& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw std::runtime_error("cannot open wav file: " + path);

  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad())
    throw std::runtime_error("read error on wav file: " + path);
  const auto* data = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::size_t n = bytes.size();

  if (n < 12 || std::memcmp(data, "RIFF", 4) != 0 || std::memcmp(data + 8, "WAVE", 4) != 0)
    throw std::runtime_error("not a RIFF/WAVE file: " + path);

  int format = -1;
  int channels = 0;
  int sample_rate = 0;
  int bits = 0;
  std::size_t data_off = 0;
  std::size_t data_len = 0;
  bool have_fmt = false;
  bool have_data = false;

  std::size_t pos = 12;
  while (pos + 8 <= n)
    {
      const char* id = bytes.data() + pos;
      const std::uint32_t chunk_len = read_u32(data + pos + 4);
      pos += 8;
      if (std::memcmp(id, "fmt ", 4) == 0)
        {
          if (chunk_len < 16 || pos + 16 > n)
            throw std::runtime_error("truncated fmt chunk: " + path);
          format = read_u16(data + pos);
          channels = read_u16(data + pos + 2);
          sample_rate = int(read_u32(data + pos + 4));
          bits = read_u16(data + pos + 14);
          have_fmt = true;
        }
      else if (std::memcmp(id, "data", 4) == 0)
        {
          data_off = pos;
          data_len = std::min<std::size_t>(chunk_len, n - pos);
          have_data = true;
        }
      pos += chunk_len + (chunk_len & 1); // chunks are word-aligned
    }

  if (!have_fmt || !have_data)
    throw std::runtime_error("missing fmt or data chunk: " + path);
  if (sample_rate <= 0)
    throw std::runtime_error("invalid sample rate in wav header: " + path);
  if (channels < 1 || channels > 2)
    throw std::runtime_error("unsupported channel count (" + std::to_string(channels) + "): " + path);

  const bool pcm16 = (format == 1 && bits == 16);
  const bool f32 = (format == 3 && bits == 32);
  if (!pcm16 && !f32)
    throw std::runtime_error("unsupported wav encoding (format=" + std::to_string(format) +
                             ", bits=" + std::to_string(bits) + "): " + path);
  if (data_len == 0)
    throw std::runtime_error("wav data chunk is empty: " + path);

  const std::size_t bytes_per_sample = pcm16 ? 2 : 4;
  const std::size_t frame_bytes = bytes_per_sample * std::size_t(channels);
  const std::size_t num_frames = data_len / frame_bytes;
  if (num_frames == 0)
    throw std::runtime_error("wav data chunk is empty: " + path);

  AudioBuffer buf;
  buf.sample_rate = sample_rate;
  buf.samples.resize(num_frames);
  const unsigned char* p = data + data_off;
  for (std::size_t i = 0; i < num_frames; i++)
    {
      double acc = 0.0;
      for (int c = 0; c < channels; c++)
        {
          const unsigned char* sp = p + i * frame_bytes + std::size_t(c) * bytes_per_sample;
          if (pcm16)
            {
              const std::int16_t v = std::int16_t(read_u16(sp));
              acc += double(v) / 32768.0;
            }
          else
            {
              std::uint32_t raw = read_u32(sp);
              float f;
              std::memcpy(&f, &raw, 4);
              acc += double(f);
            }
        }
      buf.samples[i] = acc / channels;
    }
  return buf;
}

void
save_wav(const AudioBuffer& buf, const std::string& path, WavEncoding encoding)
{
  if (buf.samples.empty())
    throw std::invalid_argument("save_wav: empty buffer");
  if (buf.sample_rate <= 0)
    throw std::invalid_argument("save_wav: invalid sample rate");

  const bool pcm16 = (encoding == WavEncoding::pcm16);
  const std::uint32_t bytes_per_sample = pcm16 ? 2 : 4;
  const std::uint32_t data_bytes = std::uint32_t(buf.samples.size()) * bytes_per_sample;

  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  put_u32(out, 36 + data_bytes);
  out += "WAVE";
  out += "fmt ";
  put_u32(out, 16);
  put_u16(out, pcm16 ? 1 : 3);
  put_u16(out, 1); // mono
  put_u32(out, std::uint32_t(buf.sample_rate));
  put_u32(out, std::uint32_t(buf.sample_rate) * bytes_per_sample);
  put_u16(out, std::uint16_t(bytes_per_sample));
  put_u16(out, std::uint16_t(bytes_per_sample * 8));
  out += "data";
  put_u32(out, data_bytes);

  for (double s : buf.samples)
    {
      if (pcm16)
        {
          // round half away from zero, clip to int16 range
          long v = std::lround(s * 32768.0);
          v = std::clamp(v, -32768L, 32767L);
          put_u16(out, std::uint16_t(std::int16_t(v)));
        }
      else
        {
          const float f = float(s);
          std::uint32_t raw;
          std::memcpy(&raw, &f, 4);
          put_u32(out, raw);
        }
    }

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os)
    throw std::runtime_error("cannot open for writing: " + path);
  os.write(out.data(), std::streamsize(out.size()));
  if (!os)
    throw std::runtime_error("write failed: " + path);
}

namespace {

// I0 via its power series; converges quickly for the arguments we use.
double
bessel_i0(double x)
{
  double sum = 1.0;
  double term = 1.0;
  const double half_sq = 0.25 * x * x;
  for (int k = 1; k < 64; k++)
    {
      term *= half_sq / (double(k) * double(k));
      sum += term;
      if (term < 1e-18 * sum)
        break;
    }
  return sum;
}

double
sinc(double x)
{
  if (std::fabs(x) < 1e-12)
    return 1.0;
  const double px = 3.14159265358979323846 * x;
  return std::sin(px) / px;
}

} // namespace

AudioBuffer
resample(const AudioBuffer& buf, int target_rate)
{
  if (target_rate <= 0)
    throw std::invalid_argument("resample: target rate must be positive");
  if (buf.samples.empty())
    throw std::invalid_argument("resample: empty buffer");
  if (target_rate == buf.sample_rate)
    return buf;

  const int src_rate = buf.sample_rate;
  const long long g = std::gcd(static_cast<long long>(target_rate), static_cast<long long>(src_rate));
  const long long up = target_rate / g;   // L
  const long long down = src_rate / g;    // M

  // cutoff as a fraction of the input Nyquist; kernel half-width covers
  // 64 zero crossings at the lower of the two rates
  const double fc = std::min(1.0, double(target_rate) / double(src_rate));
  const double half_width = 64.0 / fc;
  const int taps_side = int(std::ceil(half_width)) + 1;
  const double beta = 8.6;
  const double i0_beta = bessel_i0(beta);

  // one filter per output phase r: center offset r/L input samples
  const int num_phases = int(up);
  const int taps_total = 2 * taps_side + 1;
  std::vector<double> filters(std::size_t(num_phases) * taps_total);
  for (int r = 0; r < num_phases; r++)
    {
      const double frac = double(r) * double(down) / double(up);
      const double center = frac - std::floor(frac); // in [0,1)
      double* h = filters.data() + std::size_t(r) * taps_total;
      double sum = 0.0;
      for (int d = -taps_side; d <= taps_side; d++)
        {
          const double u = double(d) - center;
          double w = 0.0;
          if (std::fabs(u) <= half_width)
            {
              const double t = u / half_width;
              w = bessel_i0(beta * std::sqrt(std::max(0.0, 1.0 - t * t))) / i0_beta;
            }
          h[d + taps_side] = fc * sinc(fc * u) * w;
          sum += h[d + taps_side];
        }
      // normalize per phase so DC passes exactly
      if (sum != 0.0)
        for (int j = 0; j < taps_total; j++)
          h[j] /= sum;
    }

  const std::size_t in_len = buf.samples.size();
  const std::size_t out_len =
      std::size_t(std::llround(double(in_len) * double(target_rate) / double(src_rate)));

  AudioBuffer out;
  out.sample_rate = target_rate;
  out.samples.resize(out_len, 0.0);
  for (std::size_t nn = 0; nn < out_len; nn++)
    {
      const long long num = static_cast<long long>(nn) * down;
      const long long base = num / up;                 // floor of input-time position
      const int phase = int(static_cast<long long>(nn) % up);
      const double* h = filters.data() + std::size_t(phase) * taps_total;
      double acc = 0.0;
      for (int d = -taps_side; d <= taps_side; d++)
        {
          const long long m = base + d;
          if (m < 0 || m >= static_cast<long long>(in_len))
            continue;
          acc += buf.samples[std::size_t(m)] * h[d + taps_side];
        }
      out.samples[nn] = acc;
    }
  return out;
}

AudioBuffer
to_canonical_rate(const AudioBuffer& buf)
{
  if (buf.sample_rate == kCanonicalRate)
    return buf;
  return resample(buf, kCanonicalRate);
}

} // namespace wmlab
