#include "wmlab/watermark.hpp"

#include "wmlab/channel.hpp"
#include "wmlab/eval.hpp"
#include "wmlab/fft.hpp"
#include "wmlab/rng.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

using namespace wmlab;

namespace {

AudioBuffer
noise_buffer(std::size_t n, std::uint64_t seed, double amp = 0.4)
{
  AudioBuffer buf;
  buf.sample_rate = 16000;
  buf.samples.resize(n);
  Rng rng(seed);
  for (auto& s : buf.samples)
    s = rng.uniform(-amp, amp);
  return buf;
}

// small speech-like corpus shared by the round-trip and robustness checks
const std::vector<AudioBuffer>&
test_corpus()
{
  static const std::vector<AudioBuffer> corpus = gen_test_corpus(8, 4.0, 777);
  return corpus;
}

} // namespace

TEST_CASE("payload hex conversions")
{
  const Payload p = Payload::from_hex("DEADBEEF", 32);
  REQUIRE(p.size() == 32);
  REQUIRE(p.to_hex() == "DEADBEEF");
  REQUIRE(p.bits[0] == 1); // D = 1101, MSB first
  REQUIRE(p.bits[1] == 1);
  REQUIRE(p.bits[2] == 0);
  REQUIRE(p.bits[3] == 1);

  REQUIRE_THROWS_AS(Payload::from_hex("XYZ1", 16), std::invalid_argument);
  REQUIRE_THROWS_AS(Payload::from_hex("ABC", 16), std::invalid_argument);
  REQUIRE_THROWS_AS(Payload::from_hex("AB", 7), std::invalid_argument);
}

TEST_CASE("bitwise accuracy counts matching positions")
{
  Payload a, b;
  a.bits = {1, 0, 1, 0};
  b.bits = {1, 0, 0, 0};
  REQUIRE(bitwise_accuracy(a, a) == 1.0);
  REQUIRE(bitwise_accuracy(a, b) == 0.75);
  Payload c = a;
  for (auto& bit : c.bits)
    bit ^= 1;
  REQUIRE(bitwise_accuracy(a, c) == 0.0);
  REQUIRE_THROWS_AS(bitwise_accuracy(a, Payload{{1, 0}}), std::invalid_argument);
}

TEST_CASE("attacker performance is one minus accuracy")
{
  REQUIRE(attacker_performance(1.0) == 0.0);
  REQUIRE(attacker_performance(0.5) == 0.5);
  REQUIRE_THAT(attacker_performance(0.852), Catch::Matchers::WithinAbs(0.148, 1e-12));
  REQUIRE_THROWS_AS(attacker_performance(1.5), std::invalid_argument);
}

TEST_CASE("dct_norm clean round trip recovers every bit")
{
  const auto corpus = gen_test_corpus(2, 5.0, 4242);
  for (std::size_t u = 0; u < corpus.size(); u++)
    {
      const Payload payload = Payload::random(32, 1000 + u);
      const WatermarkKey key{2000 + u};
      const AudioBuffer marked = embed_dct_norm(corpus[u], payload, key);
      const DetectionResult det = detect_dct_norm(marked, key, 32);
      REQUIRE(bitwise_accuracy(payload, det.bits) == 1.0);
    }
}

TEST_CASE("single block lands exactly on a coset point")
{
  DctNormConfig cfg;
  cfg.smooth_len = 0; // no edge crossfade so the quantized norm is untouched
  AudioBuffer buf = noise_buffer(std::size_t(cfg.block_len), 55);

  Payload payload;
  payload.bits = {1};
  const AudioBuffer marked = embed_dct_norm(buf, payload, WatermarkKey{9}, cfg);

  const auto coeffs = fft::dct_ii(marked.samples);
  double norm = 0.0;
  for (int i = cfg.coeff_lo; i < cfg.coeff_hi; i++)
    norm += coeffs[std::size_t(i)] * coeffs[std::size_t(i)];
  norm = std::sqrt(norm);

  double rms = 0.0;
  for (double s : marked.samples)
    rms += s * s;
  rms = std::sqrt(rms / double(marked.samples.size()));
  const double delta =
      std::max(cfg.alpha * rms * std::sqrt(double(cfg.coeff_hi - cfg.coeff_lo)), cfg.delta_min);

  // norm / delta should sit on an odd integer (bit 1)
  const double pos = norm / delta;
  const double nearest_odd = 2.0 * std::round((pos - 1.0) / 2.0) + 1.0;
  REQUIRE_THAT(pos, Catch::Matchers::WithinAbs(nearest_odd, 1e-6));
}

TEST_CASE("energy compensation preserves block energy")
{
  DctNormConfig cfg;
  cfg.smooth_len = 0;
  const AudioBuffer buf = noise_buffer(std::size_t(cfg.block_len) * 4, 77);
  Payload payload;
  payload.bits = {1, 0, 1, 0};
  const AudioBuffer marked = embed_dct_norm(buf, payload, WatermarkKey{3}, cfg);

  for (int b = 0; b < 4; b++)
    {
      double e_in = 0.0, e_out = 0.0;
      for (int i = 0; i < cfg.block_len; i++)
        {
          const std::size_t idx = std::size_t(b) * std::size_t(cfg.block_len) + std::size_t(i);
          e_in += buf.samples[idx] * buf.samples[idx];
          e_out += marked.samples[idx] * marked.samples[idx];
        }
      REQUIRE_THAT(e_out / e_in, Catch::Matchers::WithinAbs(1.0, 1e-6));
    }
}

TEST_CASE("embedding perturbation stays below the quantizer bound")
{
  DctNormConfig cfg;
  for (const auto& utt : test_corpus())
    {
      const Payload payload = Payload::random(12, 1);
      const AudioBuffer marked = embed_dct_norm(utt, payload, WatermarkKey{4}, cfg);
      double diff = 0.0, ref = 0.0;
      for (std::size_t i = 0; i < utt.samples.size(); i++)
        {
          const double d = marked.samples[i] - utt.samples[i];
          diff += d * d;
          ref += utt.samples[i] * utt.samples[i];
        }
      REQUIRE(std::sqrt(diff / ref) <= cfg.alpha + 0.05);
    }
}

TEST_CASE("dct_norm on unwatermarked noise decodes at chance level")
{
  double acc_sum = 0.0;
  const int trials = 100;
  for (int t = 0; t < trials; t++)
    {
      const AudioBuffer buf = noise_buffer(66000, 10000 + std::uint64_t(t));
      const Payload expected = Payload::random(32, 500 + std::uint64_t(t));
      const DetectionResult det = detect_dct_norm(buf, WatermarkKey{std::uint64_t(t)}, 32);
      acc_sum += bitwise_accuracy(expected, det.bits);
    }
  const double mean = acc_sum / trials;
  REQUIRE(mean > 0.4);
  REQUIRE(mean < 0.6);
}

TEST_CASE("dct_norm with the wrong key decodes at chance level")
{
  double acc_sum = 0.0;
  const int trials = 100;
  for (int t = 0; t < trials; t++)
    {
      const AudioBuffer buf = noise_buffer(66000, 20000 + std::uint64_t(t));
      const Payload payload = Payload::random(32, 600 + std::uint64_t(t));
      const AudioBuffer marked = embed_dct_norm(buf, payload, WatermarkKey{std::uint64_t(t)});
      const DetectionResult det =
          detect_dct_norm(marked, WatermarkKey{std::uint64_t(t) + 7777}, 32);
      acc_sum += bitwise_accuracy(payload, det.bits);
    }
  const double mean = acc_sum / trials;
  REQUIRE(mean > 0.4);
  REQUIRE(mean < 0.6);
}

TEST_CASE("spread spectrum clean round trip recovers every bit")
{
  for (const auto& utt : test_corpus())
    {
      const Payload payload = Payload::random(12, 31);
      const WatermarkKey key{17};
      const AudioBuffer marked = embed_spread_spectrum(utt, payload, key);
      const DetectionResult det = detect_spread_spectrum(marked, key, 12);
      REQUIRE(bitwise_accuracy(payload, det.bits) == 1.0);
    }
}

TEST_CASE("independent chip sequences are near orthogonal")
{
  const SpreadSpectrumConfig cfg;
  const double bound = 3.0 / std::sqrt(double(cfg.band_hi - cfg.band_lo));
  double acc = 0.0;
  int count = 0;
  for (int t = 0; t < 100; t++)
    {
      // one block per bit so soft scores are raw per-block correlations
      const AudioBuffer buf = noise_buffer(std::size_t(cfg.block_len) * 4, 40000 + std::uint64_t(t));
      const Payload payload = Payload::random(4, 700 + std::uint64_t(t));
      const AudioBuffer marked =
          embed_spread_spectrum(buf, payload, WatermarkKey{std::uint64_t(t)}, cfg);
      const DetectionResult det =
          detect_spread_spectrum(marked, WatermarkKey{std::uint64_t(t) + 90001}, 4, cfg);
      for (double s : det.soft_scores)
        {
          acc += std::fabs(s);
          count++;
        }
    }
  REQUIRE(acc / count < bound);
}

TEST_CASE("spread spectrum survives 20 dB additive noise")
{
  double acc_sum = 0.0;
  int n = 0;
  for (const auto& utt : test_corpus())
    {
      const Payload payload = Payload::random(12, 900 + std::uint64_t(n));
      const WatermarkKey key{std::uint64_t(n) + 5};
      const AudioBuffer marked = embed_spread_spectrum(utt, payload, key);
      const AudioBuffer noise =
          make_noise(NoiseKind::white, marked.samples.size(), 16000, 123 + std::uint64_t(n));
      const AudioBuffer noisy = add_noise_at_snr(marked, noise, 20.0);
      const DetectionResult det = detect_spread_spectrum(noisy, key, 12);
      acc_sum += bitwise_accuracy(payload, det.bits);
      n++;
    }
  REQUIRE(acc_sum / n >= 0.95);
}

TEST_CASE("echo hiding clean round trip reaches 0.97 accuracy")
{
  double acc_sum = 0.0;
  int n = 0;
  for (const auto& utt : test_corpus())
    {
      const Payload payload = Payload::random(8, 1100 + std::uint64_t(n));
      const WatermarkKey key{std::uint64_t(n) + 40};
      const AudioBuffer marked = embed_echo(utt, payload, key);
      const DetectionResult det = detect_echo(marked, key, 8);
      acc_sum += bitwise_accuracy(payload, det.bits);
      n++;
    }
  REQUIRE(acc_sum / n >= 0.97);
}

TEST_CASE("all-zero audio is recorded as erasures, not a crash")
{
  AudioBuffer buf;
  buf.sample_rate = 16000;
  buf.samples.assign(4096 * 2, 0.0);
  Payload payload;
  payload.bits = {1, 0};
  EmbedStats stats;
  const AudioBuffer marked = embed_echo(buf, payload, WatermarkKey{1}, {}, &stats);
  REQUIRE(stats.erasures == 2);
  REQUIRE(marked.samples == buf.samples);

  const DetectionResult det = detect_echo(buf, WatermarkKey{1}, 2);
  REQUIRE(det.erasures == 2);
  REQUIRE(det.soft_scores[0] == 0.0);
  REQUIRE(det.bits.bits[0] == 0);
}

TEST_CASE("cepstrum shows a local peak at the echo lag")
{
  const int n = 4096, d = 137;
  const double gain = 0.3;
  AudioBuffer x = noise_buffer(std::size_t(n), 3131);
  std::vector<double> y(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; i++)
    y[std::size_t(i)] = x.samples[std::size_t(i)] +
                        (i >= d ? gain * x.samples[std::size_t(i - d)] : 0.0);
  const auto ceps = fft::real_cepstrum(y);

  // the echo lag must dominate its neighborhood
  double neighborhood = 0.0;
  for (int q = d - 40; q <= d + 40; q++)
    if (q != d)
      neighborhood = std::max(neighborhood, std::fabs(ceps[std::size_t(q)]));
  REQUIRE(std::fabs(ceps[std::size_t(d)]) > neighborhood);
  REQUIRE(ceps[std::size_t(d)] > 0.1); // roughly gain/2 for a small echo
}

TEST_CASE("embedding is deterministic for every scheme")
{
  const AudioBuffer utt = test_corpus()[0];
  const Payload payload = Payload::random(8, 2);
  for (Scheme scheme : {Scheme::dct_norm, Scheme::spread_spectrum, Scheme::echo})
    {
      SchemeConfig cfg;
      cfg.scheme = scheme;
      const AudioBuffer a = embed(utt, payload, WatermarkKey{5}, cfg);
      const AudioBuffer b = embed(utt, payload, WatermarkKey{5}, cfg);
      REQUIRE(a.samples == b.samples);
    }
}

TEST_CASE("key separation holds for every scheme")
{
  for (Scheme scheme : {Scheme::dct_norm, Scheme::spread_spectrum, Scheme::echo})
    {
      SchemeConfig cfg;
      cfg.scheme = scheme;
      const std::size_t len = scheme == Scheme::echo ? 8 * 4096 : 8 * 2048;
      double acc_sum = 0.0;
      const int trials = 100;
      for (int t = 0; t < trials; t++)
        {
          const AudioBuffer buf = noise_buffer(len, 60000 + std::uint64_t(t));
          const Payload payload = Payload::random(8, 1500 + std::uint64_t(t));
          const AudioBuffer marked = embed(buf, payload, WatermarkKey{std::uint64_t(t)}, cfg);
          const DetectionResult det =
              detect(marked, WatermarkKey{std::uint64_t(t) + 424242}, 8, cfg);
          acc_sum += bitwise_accuracy(payload, det.bits);
        }
      const double mean = acc_sum / trials;
      INFO("scheme " << scheme_name(scheme));
      REQUIRE(mean > 0.4);
      REQUIRE(mean < 0.6);
    }
}

TEST_CASE("embedding noise floor: dct and spread spectrum stay above 25 dB SNR")
{
  struct Tally
  {
    double e_ref = 0.0, e_diff = 0.0, utt_min = 1e9;

    void add(const AudioBuffer& ref, const AudioBuffer& marked)
    {
      double er = 0.0, ed = 0.0;
      for (std::size_t i = 0; i < ref.samples.size(); i++)
        {
          er += ref.samples[i] * ref.samples[i];
          const double d = marked.samples[i] - ref.samples[i];
          ed += d * d;
        }
      e_ref += er;
      e_diff += ed;
      utt_min = std::min(utt_min, 10.0 * std::log10(er / ed));
    }

    double corpus_db() const { return 10.0 * std::log10(e_ref / e_diff); }
  };

  Tally dct, ss, echo;
  int n = 0;
  for (const auto& utt : test_corpus())
    {
      const Payload payload = Payload::random(12, 1600 + std::uint64_t(n));
      const WatermarkKey key{std::uint64_t(n)};
      dct.add(utt, embed_dct_norm(utt, payload, key));
      ss.add(utt, embed_spread_spectrum(utt, payload, key));
      echo.add(utt, embed_echo(utt, payload, key));
      n++;
    }
  // corpus-level embedding SNR; single utterances dip a little lower when a
  // block keeps nearly all its energy inside the quantized band
  REQUIRE(dct.corpus_db() >= 25.0);
  REQUIRE(ss.corpus_db() >= 25.0);
  REQUIRE(dct.utt_min >= 22.0);
  REQUIRE(ss.utt_min >= 24.0);
  // echo at the default 0.3 gain is inherently louder; it relies on temporal
  // masking rather than amplitude for transparency
  REQUIRE(echo.corpus_db() >= 9.0);
}

TEST_CASE("detected bits agree with the sign of their soft scores")
{
  const AudioBuffer utt = test_corpus()[1];
  const Payload payload = Payload::random(12, 3);
  for (Scheme scheme : {Scheme::dct_norm, Scheme::spread_spectrum, Scheme::echo})
    {
      SchemeConfig cfg;
      cfg.scheme = scheme;
      const AudioBuffer marked = embed(utt, payload, WatermarkKey{6}, cfg);
      const DetectionResult det = detect(marked, WatermarkKey{6}, 12, cfg);
      for (std::size_t i = 0; i < det.soft_scores.size(); i++)
        REQUIRE(det.bits.bits[i] == (det.soft_scores[i] > 0.0 ? 1 : 0));
    }
}

TEST_CASE("too-short buffers are rejected with the required length")
{
  const AudioBuffer buf = noise_buffer(4096, 1);
  const Payload payload = Payload::random(32, 1);
  REQUIRE_THROWS_WITH(embed_dct_norm(buf, payload, WatermarkKey{1}),
                      Catch::Matchers::ContainsSubstring("65536"));
  AudioBuffer tiny;
  tiny.sample_rate = 16000;
  tiny.samples.assign(100, 0.1);
  REQUIRE_THROWS_AS(detect_dct_norm(tiny, WatermarkKey{1}, 8), std::invalid_argument);
}
