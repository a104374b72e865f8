#include "wmlab/selfvc.hpp"

#include "wmlab/griffin_lim.hpp"
#include "wmlab/pitch.hpp"
#include "wmlab/watermark.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace wmlab {

namespace {

Matrix
raw_mfcc(const AudioBuffer& buf, const SelfVcConfig& cfg)
{
  const Spectrogram spg = stft(buf, cfg.frame);
  return mfcc(log_mel(spg, cfg.n_mels), cfg.n_mfcc).values;
}

// Reflection padding keeps the resynthesis edges inside the fully covered
// overlap-add region; pad_len samples are cut back off afterwards.
AudioBuffer
reflect_pad(const AudioBuffer& buf, int pad_len)
{
  const std::ptrdiff_t n = std::ptrdiff_t(buf.samples.size());
  AudioBuffer out;
  out.sample_rate = buf.sample_rate;
  out.samples.reserve(buf.samples.size() + 2 * std::size_t(pad_len));
  for (std::ptrdiff_t i = pad_len; i > 0; i--)
    out.samples.push_back(buf.samples[std::size_t(std::min(i, n - 1))]);
  out.samples.insert(out.samples.end(), buf.samples.begin(), buf.samples.end());
  for (std::ptrdiff_t i = 0; i < pad_len; i++)
    out.samples.push_back(buf.samples[std::size_t(std::max<std::ptrdiff_t>(n - 2 - i, 0))]);
  return out;
}

void
validate_cfg(const SelfVcConfig& cfg)
{
  if (cfg.k < 1)
    throw std::invalid_argument("self_vc: k must be >= 1");
  if (cfg.exclusion_window < 1)
    throw std::invalid_argument("self_vc: exclusion_window must be >= 1");
  if (cfg.gl_iterations < 1)
    throw std::invalid_argument("self_vc: gl_iterations must be >= 1");
}

} // namespace

MatchingPool
build_pool(const AudioBuffer& reference, const SelfVcConfig& cfg, const std::string& source_id)
{
  validate_cfg(cfg);
  if (reference.duration_s() < 1.0)
    throw std::invalid_argument("build_pool: reference shorter than 1 s");

  const Spectrogram spg = stft(reference, cfg.frame);

  MatchingPool pool;
  pool.sample_rate = reference.sample_rate;
  pool.frame = cfg.frame;
  pool.source_id = source_id;
  pool.source_samples = reference.samples;
  pool.magnitudes = magnitude(spg);

  Matrix raw = mfcc(log_mel(spg, cfg.n_mels), cfg.n_mfcc).values;
  pool.norm_stats.mean.assign(std::size_t(raw.cols), 0.0);
  pool.norm_stats.stddev.assign(std::size_t(raw.cols), 0.0);
  for (int t = 0; t < raw.rows; t++)
    for (int d = 0; d < raw.cols; d++)
      pool.norm_stats.mean[std::size_t(d)] += raw.at(t, d);
  for (auto& m : pool.norm_stats.mean)
    m /= double(raw.rows);
  for (int t = 0; t < raw.rows; t++)
    for (int d = 0; d < raw.cols; d++)
      {
        const double c = raw.at(t, d) - pool.norm_stats.mean[std::size_t(d)];
        pool.norm_stats.stddev[std::size_t(d)] += c * c;
      }
  for (auto& s : pool.norm_stats.stddev)
    s = std::max(std::sqrt(s / double(raw.rows)), 1e-8);

  pool.features = apply_norm_stats(raw, pool.norm_stats);
  return pool;
}

Matrix
apply_norm_stats(const Matrix& raw_features, const NormStats& stats)
{
  if (std::size_t(raw_features.cols) != stats.mean.size() ||
      std::size_t(raw_features.cols) != stats.stddev.size())
    throw std::invalid_argument("apply_norm_stats: dimension mismatch");
  Matrix out = raw_features;
  for (int t = 0; t < out.rows; t++)
    for (int d = 0; d < out.cols; d++)
      out.at(t, d) = (out.at(t, d) - stats.mean[std::size_t(d)]) / stats.stddev[std::size_t(d)];
  return out;
}

namespace {

double
knn_distance(std::span<const double> a, std::span<const double> b, KnnDistance kind)
{
  if (kind == KnnDistance::l2)
    {
      double acc = 0.0;
      for (std::size_t i = 0; i < a.size(); i++)
        {
          const double d = a[i] - b[i];
          acc += d * d;
        }
      return acc;
    }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); i++)
    {
      dot += a[i] * b[i];
      na += a[i] * a[i];
      nb += b[i] * b[i];
    }
  return 1.0 - dot / (std::sqrt(na) * std::sqrt(nb) + 1e-12);
}

} // namespace

Matrix
knn_convert(const Matrix& source_features, const MatchingPool& pool, const SelfVcConfig& cfg)
{
  validate_cfg(cfg);
  if (source_features.cols != pool.features.cols)
    throw std::invalid_argument("knn_convert: feature dimension mismatch");
  const bool exclude = cfg.pool_mode == PoolMode::same_utterance_excluded;
  if (exclude && cfg.k > pool.size() - (2 * cfg.exclusion_window + 1))
    throw std::invalid_argument("knn_convert: k too large for pool with exclusion window");
  if (!exclude && cfg.k > pool.size())
    throw std::invalid_argument("knn_convert: k larger than pool");

  Matrix out(source_features.rows, pool.magnitudes.cols);
  std::vector<std::pair<double, int>> candidates;
  candidates.reserve(std::size_t(pool.size()));
  for (int i = 0; i < source_features.rows; i++)
    {
      candidates.clear();
      for (int j = 0; j < pool.size(); j++)
        {
          if (exclude && std::abs(i - j) <= cfg.exclusion_window)
            continue;
          candidates.emplace_back(
              knn_distance(source_features.row(i), pool.features.row(j), cfg.distance), j);
        }
      if (candidates.size() < std::size_t(cfg.k))
        throw std::invalid_argument("knn_convert: empty candidate set after exclusion");
      std::partial_sort(candidates.begin(), candidates.begin() + cfg.k, candidates.end());

      for (int n = 0; n < cfg.k; n++)
        {
          const auto src = pool.magnitudes.row(candidates[std::size_t(n)].second);
          for (int b = 0; b < out.cols; b++)
            out.at(i, b) += src[std::size_t(b)];
        }
      for (int b = 0; b < out.cols; b++)
        out.at(i, b) /= double(cfg.k);
    }
  return out;
}

namespace {

// overlap-add of raw pool frames selected per query, used for the unit_ola
// resynthesis path
AudioBuffer
unit_ola_resynth(const Matrix& source_features, const MatchingPool& pool, const SelfVcConfig& cfg)
{
  const FrameSpec& spec = pool.frame;
  const auto w = make_window(spec);
  const std::size_t out_len = istft_length(source_features.rows, spec);
  std::vector<double> acc(out_len, 0.0), den(out_len, 0.0);

  const bool exclude = cfg.pool_mode == PoolMode::same_utterance_excluded;

  std::vector<std::pair<double, int>> candidates;
  for (int i = 0; i < source_features.rows; i++)
    {
      candidates.clear();
      for (int j = 0; j < pool.size(); j++)
        {
          if (exclude && std::abs(i - j) <= cfg.exclusion_window)
            continue;
          candidates.emplace_back(
              knn_distance(source_features.row(i), pool.features.row(j), cfg.distance), j);
        }
      if (candidates.empty())
        throw std::invalid_argument("self_vc: empty candidate set after exclusion");
      const int best =
          std::min_element(candidates.begin(), candidates.end())->second;

      const std::size_t src_off = std::size_t(best) * std::size_t(spec.hop);
      const std::size_t dst_off = std::size_t(i) * std::size_t(spec.hop);
      for (int n = 0; n < spec.frame_len; n++)
        {
          const std::size_t s = src_off + std::size_t(n);
          if (s >= pool.source_samples.size())
            break;
          acc[dst_off + std::size_t(n)] += w[std::size_t(n)] * pool.source_samples[s];
          den[dst_off + std::size_t(n)] += w[std::size_t(n)];
        }
    }

  AudioBuffer out;
  out.sample_rate = pool.sample_rate;
  out.samples.resize(out_len);
  for (std::size_t i = 0; i < out_len; i++)
    out.samples[i] = den[i] > 1e-12 ? acc[i] / den[i] : 0.0;
  return out;
}

void
fit_length(AudioBuffer& buf, std::size_t target)
{
  buf.samples.resize(target, 0.0);
}

} // namespace

AudioBuffer
self_vc_attack(const AudioBuffer& buf, const AudioBuffer* reference, const SelfVcConfig& cfg,
               std::uint64_t seed)
{
  validate_cfg(cfg);
  if (cfg.pool_mode == PoolMode::separate_reference && reference == nullptr)
    throw std::invalid_argument("self_vc: separate_reference mode needs a reference buffer");

  // pad by a whole number of hops so padded frame indices stay aligned with
  // unpadded pool positions
  const int pad = ((cfg.frame.frame_len + cfg.frame.hop - 1) / cfg.frame.hop) * cfg.frame.hop;
  const AudioBuffer padded = reflect_pad(buf, pad);

  // in same-utterance mode the pool shares the padded frame grid with the
  // queries, keeping the exclusion-window indices exact
  const AudioBuffer& pool_audio =
      cfg.pool_mode == PoolMode::separate_reference ? *reference : padded;
  const MatchingPool pool = build_pool(pool_audio, cfg);
  const Matrix source = apply_norm_stats(raw_mfcc(padded, cfg), pool.norm_stats);

  AudioBuffer out;
  if (cfg.resynth == ResynthMode::unit_ola)
    {
      out = unit_ola_resynth(source, pool, cfg);
    }
  else
    {
      const Matrix converted = knn_convert(source, pool, cfg);
      out = griffin_lim(converted, cfg.frame, buf.sample_rate, cfg.gl_iterations, seed);
    }
  out.samples.erase(out.samples.begin(),
                    out.samples.begin() + std::min<std::ptrdiff_t>(pad, std::ptrdiff_t(out.samples.size())));
  fit_length(out, buf.samples.size());
  out.sample_rate = buf.sample_rate;
  return out;
}

AudioBuffer
copy_synthesis_attack(const AudioBuffer& buf, int gl_iterations, std::uint64_t seed)
{
  if (gl_iterations < 1)
    throw std::invalid_argument("copy_synthesis: gl_iterations must be >= 1");
  const FrameSpec spec{1024, 256, Window::hann};
  const int pad = spec.frame_len;
  const AudioBuffer padded = reflect_pad(buf, pad);
  const Spectrogram spg = stft(padded, spec);
  AudioBuffer out = griffin_lim(magnitude(spg), spec, buf.sample_rate, gl_iterations, seed);
  out.samples.erase(out.samples.begin(),
                    out.samples.begin() + std::min<std::ptrdiff_t>(pad, std::ptrdiff_t(out.samples.size())));
  fit_length(out, buf.samples.size());
  return out;
}

QualityReport
quality_report(const AudioBuffer& original, const AudioBuffer& transformed)
{
  if (original.samples.size() != transformed.samples.size())
    throw std::invalid_argument("quality_report: length mismatch");
  if (original.sample_rate != transformed.sample_rate)
    throw std::invalid_argument("quality_report: sample rate mismatch");

  const FrameSpec spec{1024, 256, Window::hann};
  const Spectrogram s1 = stft(original, spec);
  const Spectrogram s2 = stft(transformed, spec);

  QualityReport q;

  // mel-cepstral distortion over MFCC dims 1..13
  {
    const Matrix c1 = mfcc(log_mel(s1, 40), 13).values;
    const Matrix c2 = mfcc(log_mel(s2, 40), 13).values;
    double acc = 0.0;
    for (int t = 0; t < c1.rows; t++)
      {
        double d2 = 0.0;
        for (int d = 0; d < c1.cols; d++)
          {
            const double d1 = c1.at(t, d) - c2.at(t, d);
            d2 += d1 * d1;
          }
        acc += std::sqrt(d2);
      }
    q.mcd_db = (10.0 / std::log(10.0)) * std::sqrt(2.0) * acc / double(c1.rows);
  }

  // log-spectral distance
  {
    constexpr double eps = 1e-10;
    double acc = 0.0;
    for (int t = 0; t < s1.frames; t++)
      {
        double frame_acc = 0.0;
        for (int b = 0; b < s1.bins; b++)
          {
            const double d =
                20.0 * std::log10((std::abs(s1.at(t, b)) + eps) / (std::abs(s2.at(t, b)) + eps));
            frame_acc += d * d;
          }
        acc += std::sqrt(frame_acc / double(s1.bins));
      }
    q.lsd_db = acc / double(s1.frames);
  }

  // pitch agreement
  {
    const PitchTrack p1 = estimate_f0(original, spec);
    const PitchTrack p2 = estimate_f0(transformed, spec);
    int joint = 0, either = 0;
    double mx = 0.0, my = 0.0;
    for (int t = 0; t < p1.frames(); t++)
      {
        const bool v1 = p1.voicing[std::size_t(t)];
        const bool v2 = p2.voicing[std::size_t(t)];
        if (v1 || v2)
          either++;
        if (v1 && v2)
          {
            joint++;
            mx += p1.f0[std::size_t(t)];
            my += p2.f0[std::size_t(t)];
          }
      }
    q.voiced_overlap = either > 0 ? double(joint) / double(either) : 1.0;
    if (joint >= 10)
      {
        mx /= joint;
        my /= joint;
        double sxy = 0.0, sxx = 0.0, syy = 0.0;
        for (int t = 0; t < p1.frames(); t++)
          if (p1.voicing[std::size_t(t)] && p2.voicing[std::size_t(t)])
            {
              const double dx = p1.f0[std::size_t(t)] - mx;
              const double dy = p2.f0[std::size_t(t)] - my;
              sxy += dx * dy;
              sxx += dx * dx;
              syy += dy * dy;
            }
        if (sxx > 1e-12 && syy > 1e-12)
          q.f0_corr = sxy / std::sqrt(sxx * syy);
        else if (sxx <= 1e-12 && syy <= 1e-12 && std::fabs(mx - my) < 1e-6)
          q.f0_corr = 1.0; // both tracks constant and equal
      }
  }

  q.snr_db = snr_db(original, transformed);
  return q;
}

} // namespace wmlab
