#include "wmlab/eval.hpp"

#include "wmlab/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <sstream>
#include <stdexcept>

namespace wmlab {

using nlohmann::json;

std::string_view
attack_name(AttackKind a)
{
  switch (a)
    {
    case AttackKind::none: return "none";
    case AttackKind::copy_synthesis: return "copy_synthesis";
    case AttackKind::self_vc: return "self_vc";
    }
  return "?";
}

std::string_view
placement_name(ChannelPlacement p)
{
  switch (p)
    {
    case ChannelPlacement::off: return "off";
    case ChannelPlacement::pre_attack: return "pre_attack";
    case ChannelPlacement::post_attack: return "post_attack";
    case ChannelPlacement::both: return "both";
    }
  return "?";
}

int
EvalReport::successful_rows() const
{
  int n = 0;
  for (const auto& r : rows)
    n += r.ok() ? 1 : 0;
  return n;
}

const Aggregate*
EvalReport::find(std::string_view scheme, std::string_view attack, std::string_view placement) const
{
  for (const auto& a : aggregates)
    if (a.scheme == scheme && a.attack == attack && a.channel_placement == placement)
      return &a;
  return nullptr;
}

// ---- synthetic corpus ----

namespace {

// two-pole resonator, poles at r*exp(+-j*2*pi*freq/sr)
struct Resonator
{
  double b0 = 1.0, a1 = 0.0, a2 = 0.0;
  double z1 = 0.0, z2 = 0.0;

  Resonator(double freq_hz, double bw_hz, int sr)
  {
    const double r = std::exp(-3.14159265358979323846 * bw_hz / sr);
    a1 = -2.0 * r * std::cos(2.0 * 3.14159265358979323846 * freq_hz / sr);
    a2 = r * r;
    b0 = 1.0 - r;
  }

  double step(double x)
  {
    const double y = b0 * x - a1 * z1 - a2 * z2;
    z2 = z1;
    z1 = y;
    return y;
  }
};

void
normalize_rms(std::vector<double>& seg, double target)
{
  double p = 0.0;
  for (double s : seg)
    p += s * s;
  p = std::sqrt(p / double(seg.size()));
  if (p > 1e-30)
    for (auto& s : seg)
      s *= target / p;
}

// A speaker is a small inventory of recurring segment timbres; segments are
// drawn from it so utterances revisit the same spectral shapes the way real
// speech revisits phonemes.
struct VowelShape
{
  double f1, b1, f2, b2, f3, b3;
};

struct FricShape
{
  double center, bw;
};

struct Speaker
{
  double base_f0 = 150.0;
  std::vector<VowelShape> vowels;
  std::vector<FricShape> frics;

  explicit Speaker(Rng& rng)
  {
    base_f0 = rng.uniform(110.0, 240.0);
    for (int v = 0; v < 4; v++)
      vowels.push_back({rng.uniform(300.0, 900.0), rng.uniform(60.0, 150.0),
                        rng.uniform(1000.0, 2200.0), rng.uniform(80.0, 200.0),
                        rng.uniform(2300.0, 3400.0), rng.uniform(100.0, 250.0)});
    for (int f = 0; f < 2; f++)
      frics.push_back({rng.uniform(1500.0, 6000.0), rng.uniform(400.0, 1500.0)});
  }

  // a small tone inventory: pitch revisits the same levels the way natural
  // prosody orbits a speaker's habitual targets
  double pitch_level(int idx) const
  {
    static constexpr double levels[3] = {0.88, 1.0, 1.12};
    return std::clamp(base_f0 * levels[idx], 80.0, 300.0);
  }
};

// Cycles through every (vowel, pitch level) combination in a seeded shuffled
// order before repeating, so each utterance exercises the speaker's whole
// inventory and any other utterance can serve as reference material.
class SegmentDeck
{
public:
  SegmentDeck(int vowels, int levels) : vowels_(vowels), levels_(levels) {}

  std::pair<int, int> draw(Rng& rng)
  {
    if (pos_ == deck_.size())
      {
        deck_.clear();
        for (int v = 0; v < vowels_; v++)
          for (int l = 0; l < levels_; l++)
            deck_.emplace_back(v, l);
        for (std::size_t i = deck_.size() - 1; i > 0; i--)
          std::swap(deck_[i], deck_[std::size_t(rng.uniform_int(0, int(i)))]);
        pos_ = 0;
      }
    return deck_[pos_++];
  }

private:
  int vowels_;
  int levels_;
  std::vector<std::pair<int, int>> deck_;
  std::size_t pos_ = 0;
};

std::vector<double>
voiced_segment(Rng& rng, int sr, const Speaker& speaker, int vowel_idx, int level_idx)
{
  const int len = int(std::lround(rng.uniform(0.35, 0.6) * sr));
  // mostly level pitch with occasional glides between the speaker's targets
  const double f0_a = speaker.pitch_level(level_idx);
  const double f0_b = f0_a; // level tones; the contour moves between segments
  const VowelShape& v = speaker.vowels[std::size_t(vowel_idx)];
  Resonator f1(v.f1, v.b1, sr);
  Resonator f2(v.f2, v.b2, sr);
  Resonator f3(v.f3, v.b3, sr);

  std::vector<double> seg(static_cast<std::size_t>(len), 0.0);
  double phase = rng.uniform();
  for (int i = 0; i < len; i++)
    {
      const double f0 = f0_a + (f0_b - f0_a) * double(i) / double(len);
      phase += f0 / sr;
      phase -= std::floor(phase);
      // sawtooth excitation plus a trace of aspiration noise (about 40 dB HNR)
      const double saw = 2.0 * phase - 1.0 + 0.01 * rng.gaussian();
      seg[std::size_t(i)] = f3.step(f2.step(f1.step(saw)));
    }
  normalize_rms(seg, 0.15);
  return seg;
}

std::vector<double>
unvoiced_segment(Rng& rng, int sr, const Speaker& speaker, int fric_idx)
{
  const int len = int(std::lround(rng.uniform(0.2, 0.45) * sr));
  const FricShape& f = speaker.frics[std::size_t(fric_idx)];
  Resonator shape(f.center, f.bw, sr);
  std::vector<double> seg(static_cast<std::size_t>(len), 0.0);
  for (auto& s : seg)
    s = shape.step(rng.gaussian());
  normalize_rms(seg, 0.06);
  return seg;
}

void
append_with_crossfade(std::vector<double>& out, const std::vector<double>& seg, int fade)
{
  if (out.empty())
    {
      out = seg;
      return;
    }
  const int overlap = std::min<int>({fade, int(out.size()), int(seg.size())});
  const std::size_t base = out.size() - std::size_t(overlap);
  for (int i = 0; i < overlap; i++)
    {
      const double r = 0.5 - 0.5 * std::cos(3.14159265358979323846 * (i + 0.5) / overlap);
      out[base + std::size_t(i)] = out[base + std::size_t(i)] * (1.0 - r) + seg[std::size_t(i)] * r;
    }
  out.insert(out.end(), seg.begin() + overlap, seg.end());
}

} // namespace

std::vector<AudioBuffer>
gen_test_corpus(int count, double duration_s, std::uint64_t seed)
{
  if (count < 1)
    throw std::invalid_argument("gen_test_corpus: count must be >= 1");
  if (duration_s < 2.0)
    throw std::invalid_argument("gen_test_corpus: duration must be >= 2 s");

  const int sr = kCanonicalRate;
  const std::size_t total = std::size_t(std::llround(duration_s * sr));
  const int fade = sr / 100; // 10 ms

  // one voice for the whole corpus: the matching pools of the conversion
  // attack presume same-speaker reference material
  Rng speaker_rng(hash64(seed, hash_str("speaker")));
  const Speaker speaker(speaker_rng);

  std::vector<AudioBuffer> corpus;
  corpus.reserve(std::size_t(count));
  for (int u = 0; u < count; u++)
    {
      Rng rng(hash64(seed, hash_str("corpus"), std::uint64_t(u)));
      SegmentDeck vowel_deck(int(speaker.vowels.size()), 3);
      SegmentDeck fric_deck(int(speaker.frics.size()), 1);
      std::vector<double> samples;
      bool voiced = true; // start voiced so even short utterances carry pitch
      while (samples.size() < total + std::size_t(fade))
        {
          std::vector<double> seg;
          if (voiced)
            {
              const auto [vowel, level] = vowel_deck.draw(rng);
              seg = voiced_segment(rng, sr, speaker, vowel, level);
            }
          else
            {
              seg = unvoiced_segment(rng, sr, speaker, fric_deck.draw(rng).first);
            }
          append_with_crossfade(samples, seg, fade);
          voiced = rng.uniform() < 0.75;
        }
      samples.resize(total);

      // recording-noise floor about 30 dB below the utterance RMS; keeps quiet
      // spectral cells off the log floor the way real captures do
      double rms = 0.0;
      for (double s : samples)
        rms += s * s;
      rms = std::sqrt(rms / double(samples.size()));
      const double floor_sigma = rms * 0.04;
      for (auto& s : samples)
        s += floor_sigma * rng.gaussian();

      double peak = 0.0;
      for (double s : samples)
        peak = std::max(peak, std::fabs(s));
      if (peak > 0.0)
        for (auto& s : samples)
          s *= 0.5 / peak;

      AudioBuffer buf;
      buf.sample_rate = sr;
      buf.samples = std::move(samples);
      corpus.push_back(std::move(buf));
    }
  return corpus;
}

// ---- experiment runner ----

namespace {

struct Cell
{
  int scheme_idx = 0;
  int attack_idx = 0;
};

EvalRow
run_cell(const ExperimentSpec& spec, const std::vector<AudioBuffer>& corpus, int utt, Cell cell)
{
  const SchemeConfig& scheme = spec.schemes[std::size_t(cell.scheme_idx)];
  const AttackSpec& attack = spec.attacks[std::size_t(cell.attack_idx)];

  EvalRow row;
  row.scheme = scheme_name(scheme.scheme);
  row.attack = attack_name(attack.kind);
  row.channel_placement = placement_name(spec.placement);
  row.utterance_id = utt;

  try
    {
      const AudioBuffer& clean = corpus[std::size_t(utt)];
      const auto payload = Payload::random(
          spec.payload_len,
          hash64(spec.global_seed, hash_str("payload"), std::uint64_t(utt),
                 std::uint64_t(cell.scheme_idx)));
      const WatermarkKey key{hash64(spec.global_seed, hash_str("key"), std::uint64_t(utt),
                                    std::uint64_t(cell.scheme_idx))};

      const AudioBuffer watermarked = embed(clean, payload, key, scheme);
      AudioBuffer signal = watermarked;

      std::string draws;
      const bool pre = spec.placement == ChannelPlacement::pre_attack ||
                       spec.placement == ChannelPlacement::both;
      const bool post = spec.placement == ChannelPlacement::post_attack ||
                        spec.placement == ChannelPlacement::both;
      if (pre)
        {
          auto res = apply_channel(signal, spec.channel, std::uint64_t(utt),
                                   hash64(spec.global_seed, hash_str("channel_pre")));
          signal = std::move(res.audio);
          draws += "pre[" + describe_stages(res.draws) + "]";
        }

      const std::uint64_t attack_seed = hash64(spec.global_seed, hash_str("attack"),
                                               std::uint64_t(utt), std::uint64_t(cell.scheme_idx),
                                               std::uint64_t(cell.attack_idx));
      switch (attack.kind)
        {
        case AttackKind::none:
          break;
        case AttackKind::copy_synthesis:
          signal = copy_synthesis_attack(signal, attack.selfvc.gl_iterations, attack_seed);
          break;
        case AttackKind::self_vc:
          {
            const AudioBuffer* reference = nullptr;
            AudioBuffer ref_storage;
            if (attack.selfvc.pool_mode == PoolMode::separate_reference)
              {
                // attacker-side reference: clean same-speaker material, the
                // two utterances following this one in the corpus
                const std::size_t n = corpus.size();
                ref_storage = corpus[(std::size_t(utt) + 1) % n];
                for (std::size_t extra = 2; extra <= 5 && extra < n; extra++)
                  {
                    const auto& more = corpus[(std::size_t(utt) + extra) % n];
                    ref_storage.samples.insert(ref_storage.samples.end(),
                                               more.samples.begin(), more.samples.end());
                  }
                reference = &ref_storage;
              }
            signal = self_vc_attack(signal, reference, attack.selfvc, attack_seed);
            break;
          }
        }

      if (post)
        {
          auto res = apply_channel(signal, spec.channel, std::uint64_t(utt),
                                   hash64(spec.global_seed, hash_str("channel_post")));
          signal = std::move(res.audio);
          if (!draws.empty())
            draws += " ";
          draws += "post[" + describe_stages(res.draws) + "]";
        }

      const DetectionResult det = detect(signal, key, spec.payload_len, scheme);
      row.bit_accuracy = bitwise_accuracy(payload, det.bits);
      row.attacker_perf = attacker_performance(row.bit_accuracy);
      // the attacker receives the watermarked signal, so quality is judged
      // against it rather than the clean original
      row.quality = quality_report(watermarked, signal);
      row.channel_draws = draws;
    }
  catch (const std::exception& e)
    {
      row.error = e.what();
    }
  return row;
}

MetricStat
make_stat(const std::vector<double>& values)
{
  MetricStat s;
  s.n = int(values.size());
  if (values.empty())
    return s;
  double acc = 0.0;
  for (double v : values)
    acc += v;
  s.mean = acc / double(values.size());
  if (values.size() > 1)
    {
      double var = 0.0;
      for (double v : values)
        var += (v - s.mean) * (v - s.mean);
      s.stddev = std::sqrt(var / double(values.size() - 1));
    }
  return s;
}

} // namespace

EvalReport
run_experiment(const ExperimentSpec& spec)
{
  if (spec.schemes.empty() || spec.attacks.empty())
    throw std::invalid_argument("experiment needs at least one scheme and one attack");
  if (spec.payload_len < 1 || spec.payload_len > 256)
    throw std::invalid_argument("payload_len must be in [1, 256]");

  std::vector<AudioBuffer> corpus;
  if (spec.corpus.use_files())
    {
      for (const auto& path : spec.corpus.files)
        corpus.push_back(to_canonical_rate(load_wav(path)));
    }
  else
    {
      corpus = gen_test_corpus(spec.corpus.synthetic.count, spec.corpus.synthetic.duration_s,
                               spec.corpus.synthetic.seed);
    }
  if (corpus.empty())
    throw std::invalid_argument("empty corpus");

  // every utterance must fit the payload at the largest block size
  std::size_t max_block = 0;
  for (const auto& s : spec.schemes)
    max_block = std::max(max_block, std::size_t(s.block_len()));
  for (std::size_t u = 0; u < corpus.size(); u++)
    if (corpus[u].samples.size() < spec.payload_len * max_block)
      throw std::invalid_argument("utterance " + std::to_string(u) + " too short: need " +
                                  std::to_string(spec.payload_len * max_block) + " samples for " +
                                  std::to_string(spec.payload_len) + " payload bits");

  const int num_cells = int(spec.schemes.size() * spec.attacks.size());
  const int num_utts = int(corpus.size());

  EvalReport report;
  report.tool_version = kToolVersion;
  report.global_seed = spec.global_seed;
  report.spec_echo_json = experiment_spec_to_json(spec).dump();
  report.rows.resize(std::size_t(num_utts) * std::size_t(num_cells));

  auto cell_of = [&](int idx) {
    return Cell{idx / int(spec.attacks.size()), idx % int(spec.attacks.size())};
  };
  auto slot_of = [&](int utt, int cell) { return std::size_t(utt) * num_cells + std::size_t(cell); };

  const int jobs = std::max(1, spec.jobs);
  if (jobs == 1)
    {
      for (int utt = 0; utt < num_utts; utt++)
        for (int c = 0; c < num_cells; c++)
          report.rows[slot_of(utt, c)] = run_cell(spec, corpus, utt, cell_of(c));
    }
  else
    {
      // rows land in preassigned slots, so scheduling cannot affect output
      std::vector<std::future<void>> tasks;
      for (int worker = 0; worker < jobs; worker++)
        tasks.push_back(std::async(std::launch::async, [&, worker]() {
          for (int utt = worker; utt < num_utts; utt += jobs)
            for (int c = 0; c < num_cells; c++)
              report.rows[slot_of(utt, c)] = run_cell(spec, corpus, utt, cell_of(c));
        }));
      for (auto& t : tasks)
        t.get();
    }

  if (report.successful_rows() == 0)
    throw std::runtime_error("experiment produced no successful rows");

  // aggregates per cell, in cell order
  for (int c = 0; c < num_cells; c++)
    {
      const Cell cell = cell_of(c);
      Aggregate agg;
      agg.scheme = scheme_name(spec.schemes[std::size_t(cell.scheme_idx)].scheme);
      agg.attack = attack_name(spec.attacks[std::size_t(cell.attack_idx)].kind);
      agg.channel_placement = placement_name(spec.placement);

      std::vector<double> acc, perf, mcd, lsd, corr, overlap, snr;
      for (int utt = 0; utt < num_utts; utt++)
        {
          const EvalRow& row = report.rows[slot_of(utt, c)];
          if (!row.ok())
            continue;
          acc.push_back(row.bit_accuracy);
          perf.push_back(row.attacker_perf);
          mcd.push_back(row.quality.mcd_db);
          lsd.push_back(row.quality.lsd_db);
          if (row.quality.f0_corr)
            corr.push_back(*row.quality.f0_corr);
          overlap.push_back(row.quality.voiced_overlap);
          snr.push_back(row.quality.snr_db);
        }
      agg.bit_accuracy = make_stat(acc);
      agg.attacker_perf = make_stat(perf);
      agg.mcd_db = make_stat(mcd);
      agg.lsd_db = make_stat(lsd);
      agg.f0_corr = make_stat(corr);
      agg.voiced_overlap = make_stat(overlap);
      agg.snr_db = make_stat(snr);
      report.aggregates.push_back(std::move(agg));
    }
  return report;
}

// ---- report rendering ----

namespace {

std::string
csv_escape(const std::string& field)
{
  if (field.find_first_of(",\"\n") == std::string::npos)
    return field;
  std::string out = "\"";
  for (char c : field)
    {
      if (c == '"')
        out += "\"\"";
      else
        out += c;
    }
  out += "\"";
  return out;
}

std::string
fmt(double v)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string
render_csv(const EvalReport& report)
{
  std::string out = "scheme,attack,channel_placement,utterance_id,bit_accuracy,attacker_perf,"
                    "mcd_db,lsd_db,f0_corr,voiced_overlap,snr_db,channel_draws,error\r\n";
  for (const auto& r : report.rows)
    {
      if (!r.ok())
        {
          out += csv_escape(r.scheme) + "," + csv_escape(r.attack) + "," +
                 csv_escape(r.channel_placement) + "," + std::to_string(r.utterance_id) +
                 ",,,,,,,,," + csv_escape(r.error) + "\r\n";
          continue;
        }
      out += csv_escape(r.scheme) + "," + csv_escape(r.attack) + "," +
             csv_escape(r.channel_placement) + "," + std::to_string(r.utterance_id) + "," +
             fmt(r.bit_accuracy) + "," + fmt(r.attacker_perf) + "," + fmt(r.quality.mcd_db) + "," +
             fmt(r.quality.lsd_db) + "," + (r.quality.f0_corr ? fmt(*r.quality.f0_corr) : "") +
             "," + fmt(r.quality.voiced_overlap) + "," + fmt(r.quality.snr_db) + "," +
             csv_escape(r.channel_draws) + ",\r\n";
    }
  return out;
}

json
stat_to_json(const MetricStat& s)
{
  json j;
  j["mean"] = s.mean;
  j["stddev"] = s.stddev;
  j["n"] = s.n;
  return j;
}

json
report_to_json(const EvalReport& report)
{
  json j;
  j["tool_version"] = report.tool_version;
  j["global_seed"] = report.global_seed;
  j["spec"] = json::parse(report.spec_echo_json);
  j["rows"] = json::array();
  for (const auto& r : report.rows)
    {
      json row;
      row["scheme"] = r.scheme;
      row["attack"] = r.attack;
      row["channel_placement"] = r.channel_placement;
      row["utterance_id"] = r.utterance_id;
      if (r.ok())
        {
          row["bit_accuracy"] = r.bit_accuracy;
          row["attacker_perf"] = r.attacker_perf;
          row["mcd_db"] = r.quality.mcd_db;
          row["lsd_db"] = r.quality.lsd_db;
          if (r.quality.f0_corr)
            row["f0_corr"] = *r.quality.f0_corr;
          else
            row["f0_corr"] = nullptr;
          row["voiced_overlap"] = r.quality.voiced_overlap;
          row["snr_db"] = r.quality.snr_db;
          row["channel_draws"] = r.channel_draws;
        }
      else
        {
          row["error"] = r.error;
        }
      j["rows"].push_back(std::move(row));
    }
  j["aggregates"] = json::array();
  for (const auto& a : report.aggregates)
    {
      json agg;
      agg["scheme"] = a.scheme;
      agg["attack"] = a.attack;
      agg["channel_placement"] = a.channel_placement;
      agg["bit_accuracy"] = stat_to_json(a.bit_accuracy);
      agg["attacker_perf"] = stat_to_json(a.attacker_perf);
      agg["mcd_db"] = stat_to_json(a.mcd_db);
      agg["lsd_db"] = stat_to_json(a.lsd_db);
      agg["f0_corr"] = stat_to_json(a.f0_corr);
      agg["voiced_overlap"] = stat_to_json(a.voiced_overlap);
      agg["snr_db"] = stat_to_json(a.snr_db);
      j["aggregates"].push_back(std::move(agg));
    }
  return j;
}

std::string
render_markdown(const EvalReport& report)
{
  // attacker performance, attacks as rows and schemes as columns
  std::vector<std::string> schemes, attacks;
  for (const auto& a : report.aggregates)
    {
      if (std::find(schemes.begin(), schemes.end(), a.scheme) == schemes.end())
        schemes.push_back(a.scheme);
      if (std::find(attacks.begin(), attacks.end(), a.attack) == attacks.end())
        attacks.push_back(a.attack);
    }
  std::string placement = report.aggregates.empty() ? std::string("off")
                                                    : report.aggregates.front().channel_placement;

  std::string out = "# attacker performance (1 - bitwise accuracy)\n\n";
  out += "channel placement: " + placement + "\n\n";
  out += "| attack |";
  for (const auto& s : schemes)
    out += " " + s + " |";
  out += "\n|---|";
  for (std::size_t i = 0; i < schemes.size(); i++)
    out += "---|";
  out += "\n";
  for (const auto& att : attacks)
    {
      out += "| " + att + " |";
      for (const auto& s : schemes)
        {
          const Aggregate* a = report.find(s, att, placement);
          if (a && a->attacker_perf.n > 0)
            out += " " + fmt(a->attacker_perf.mean) + " ± " + fmt(a->attacker_perf.stddev) + " |";
          else
            out += " - |";
        }
      out += "\n";
    }
  return out;
}

} // namespace

std::string
render_report(const EvalReport& report, ReportFormat format)
{
  if (report.successful_rows() == 0)
    throw std::runtime_error("refusing to render a report with no successful rows");
  switch (format)
    {
    case ReportFormat::csv: return render_csv(report);
    case ReportFormat::json: return report_to_json(report).dump(2) + "\n";
    case ReportFormat::markdown: return render_markdown(report);
    }
  throw std::logic_error("unknown report format");
}

void
write_report(const EvalReport& report, ReportFormat format, const std::string& path)
{
  const std::string body = render_report(report, format); // may throw; file untouched then
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os)
    throw std::runtime_error("cannot open for writing: " + path);
  os.write(body.data(), std::streamsize(body.size()));
  if (!os)
    throw std::runtime_error("write failed: " + path);
}

// ---- config parsing ----

namespace {

[[noreturn]] void
config_error(const std::string& path, const std::string& what)
{
  throw std::invalid_argument("config error at " + path + ": " + what);
}

template <typename T>
T
get_field(const json& j, const std::string& path, const std::string& key, T fallback, bool required = false)
{
  if (!j.contains(key))
    {
      if (required)
        config_error(path + "/" + key, "missing required field");
      return fallback;
    }
  try
    {
      return j.at(key).get<T>();
    }
  catch (const json::exception&)
    {
      config_error(path + "/" + key, "wrong type");
    }
}

} // namespace

ExperimentSpec
parse_experiment_spec(const json& j)
{
  ExperimentSpec spec;
  if (!j.is_object())
    config_error("/", "top level must be an object");
  spec.schema_version = get_field<int>(j, "", "schema_version", 1);
  if (spec.schema_version != 1)
    config_error("/schema_version", "unsupported version " + std::to_string(spec.schema_version));
  spec.global_seed = get_field<std::uint64_t>(j, "", "global_seed", 42);
  spec.payload_len = get_field<std::size_t>(j, "", "payload_len", 12);
  spec.jobs = get_field<int>(j, "", "jobs", 1);
  if (spec.payload_len < 1 || spec.payload_len > 256)
    config_error("/payload_len", "must be in [1, 256]");

  if (!j.contains("corpus"))
    config_error("/corpus", "missing required field");
  const json& jc = j.at("corpus");
  if (jc.contains("files"))
    {
      try
        {
          spec.corpus.files = jc.at("files").get<std::vector<std::string>>();
        }
      catch (const json::exception&)
        {
          config_error("/corpus/files", "must be an array of paths");
        }
      if (spec.corpus.files.empty())
        config_error("/corpus/files", "must not be empty");
    }
  else if (jc.contains("synthetic"))
    {
      const json& js = jc.at("synthetic");
      spec.corpus.synthetic.count = get_field<int>(js, "/corpus/synthetic", "count", 50);
      spec.corpus.synthetic.duration_s =
          get_field<double>(js, "/corpus/synthetic", "duration_s", 4.0);
      spec.corpus.synthetic.seed = get_field<std::uint64_t>(js, "/corpus/synthetic", "seed", 42);
      if (spec.corpus.synthetic.count < 1)
        config_error("/corpus/synthetic/count", "must be >= 1");
      if (spec.corpus.synthetic.duration_s < 2.0)
        config_error("/corpus/synthetic/duration_s", "must be >= 2");
    }
  else
    {
      config_error("/corpus", "needs either files or synthetic");
    }

  if (!j.contains("schemes") || !j.at("schemes").is_array() || j.at("schemes").empty())
    config_error("/schemes", "must be a non-empty array");
  int idx = 0;
  for (const json& js : j.at("schemes"))
    {
      const std::string path = "/schemes/" + std::to_string(idx++);
      const auto name = get_field<std::string>(js, path, "name", "", true);
      const auto scheme = parse_scheme(name);
      if (!scheme)
        config_error(path + "/name", "unknown scheme '" + name + "'");
      SchemeConfig cfg;
      cfg.scheme = *scheme;
      switch (*scheme)
        {
        case Scheme::dct_norm:
          cfg.dct.block_len = get_field<int>(js, path, "block_len", cfg.dct.block_len);
          cfg.dct.coeff_lo = get_field<int>(js, path, "coeff_lo", cfg.dct.coeff_lo);
          cfg.dct.coeff_hi = get_field<int>(js, path, "coeff_hi", cfg.dct.coeff_hi);
          cfg.dct.alpha = get_field<double>(js, path, "alpha", cfg.dct.alpha);
          cfg.dct.delta_min = get_field<double>(js, path, "delta_min", cfg.dct.delta_min);
          cfg.dct.smooth_len = get_field<int>(js, path, "smooth_len", cfg.dct.smooth_len);
          cfg.dct.energy_compensation =
              get_field<bool>(js, path, "energy_compensation", cfg.dct.energy_compensation);
          break;
        case Scheme::spread_spectrum:
          cfg.ss.block_len = get_field<int>(js, path, "block_len", cfg.ss.block_len);
          cfg.ss.band_lo = get_field<int>(js, path, "band_lo", cfg.ss.band_lo);
          cfg.ss.band_hi = get_field<int>(js, path, "band_hi", cfg.ss.band_hi);
          cfg.ss.beta = get_field<double>(js, path, "beta", cfg.ss.beta);
          break;
        case Scheme::echo:
          cfg.echo.block_len = get_field<int>(js, path, "block_len", cfg.echo.block_len);
          cfg.echo.delay0 = get_field<int>(js, path, "delay0", cfg.echo.delay0);
          cfg.echo.delay1 = get_field<int>(js, path, "delay1", cfg.echo.delay1);
          cfg.echo.echo_gain = get_field<double>(js, path, "echo_gain", cfg.echo.echo_gain);
          cfg.echo.taper = get_field<int>(js, path, "taper", cfg.echo.taper);
          break;
        }
      spec.schemes.push_back(cfg);
    }

  if (!j.contains("attacks") || !j.at("attacks").is_array() || j.at("attacks").empty())
    config_error("/attacks", "must be a non-empty array");
  idx = 0;
  for (const json& ja : j.at("attacks"))
    {
      const std::string path = "/attacks/" + std::to_string(idx++);
      const auto name = get_field<std::string>(ja, path, "name", "", true);
      AttackSpec att;
      if (name == "none")
        att.kind = AttackKind::none;
      else if (name == "copy_synthesis")
        att.kind = AttackKind::copy_synthesis;
      else if (name == "self_vc")
        att.kind = AttackKind::self_vc;
      else
        config_error(path + "/name", "unknown attack '" + name + "'");

      att.selfvc.gl_iterations =
          get_field<int>(ja, path, "gl_iterations", att.selfvc.gl_iterations);
      if (att.kind == AttackKind::self_vc)
        {
          att.selfvc.k = get_field<int>(ja, path, "k", att.selfvc.k);
          att.selfvc.exclusion_window =
              get_field<int>(ja, path, "exclusion_window", att.selfvc.exclusion_window);
          const auto mode = get_field<std::string>(ja, path, "pool_mode", "separate_reference");
          if (mode == "same_utterance_excluded")
            att.selfvc.pool_mode = PoolMode::same_utterance_excluded;
          else if (mode == "separate_reference")
            att.selfvc.pool_mode = PoolMode::separate_reference;
          else
            config_error(path + "/pool_mode", "unknown mode '" + mode + "'");
          const auto dist = get_field<std::string>(ja, path, "distance", "cosine");
          if (dist == "cosine")
            att.selfvc.distance = KnnDistance::cosine;
          else if (dist == "l2")
            att.selfvc.distance = KnnDistance::l2;
          else
            config_error(path + "/distance", "unknown distance '" + dist + "'");
          const auto resynth = get_field<std::string>(ja, path, "resynth", "griffin_lim");
          if (resynth == "griffin_lim")
            att.selfvc.resynth = ResynthMode::griffin_lim;
          else if (resynth == "unit_ola")
            att.selfvc.resynth = ResynthMode::unit_ola;
          else
            config_error(path + "/resynth", "unknown resynth '" + resynth + "'");
        }
      spec.attacks.push_back(att);
    }

  if (j.contains("channel"))
    {
      const json& jch = j.at("channel");
      const auto placement = get_field<std::string>(jch, "/channel", "placement", "off");
      if (placement == "off")
        spec.placement = ChannelPlacement::off;
      else if (placement == "pre_attack")
        spec.placement = ChannelPlacement::pre_attack;
      else if (placement == "post_attack")
        spec.placement = ChannelPlacement::post_attack;
      else if (placement == "both")
        spec.placement = ChannelPlacement::both;
      else
        config_error("/channel/placement", "unknown placement '" + placement + "'");

      spec.channel.enabled = spec.placement != ChannelPlacement::off;
      spec.channel.random_compound =
          get_field<bool>(jch, "/channel", "random_compound", true);
      if (jch.contains("stages"))
        {
          spec.channel.random_compound = false;
          int sidx = 0;
          for (const json& jst : jch.at("stages"))
            {
              const std::string path = "/channel/stages/" + std::to_string(sidx++);
              const auto kind = get_field<std::string>(jst, path, "kind", "", true);
              ChannelStage st;
              if (kind == "gaussian_noise")
                {
                  st.kind = ChannelStage::Kind::gaussian_noise;
                  st.noise = NoiseKind::white;
                  st.snr_db = get_field<double>(jst, path, "snr_db", 20.0);
                }
              else if (kind == "background_noise")
                {
                  st.kind = ChannelStage::Kind::background_noise;
                  const auto noise = get_field<std::string>(jst, path, "noise", "pink");
                  if (noise == "white")
                    st.noise = NoiseKind::white;
                  else if (noise == "pink")
                    st.noise = NoiseKind::pink;
                  else if (noise == "babble_proxy")
                    st.noise = NoiseKind::babble_proxy;
                  else
                    config_error(path + "/noise", "unknown noise kind '" + noise + "'");
                  st.snr_db = get_field<double>(jst, path, "snr_db", 20.0);
                }
              else if (kind == "resample_chain")
                {
                  st.kind = ChannelStage::Kind::resample_chain;
                  st.intermediate_rate = get_field<int>(jst, path, "intermediate_rate", 22050);
                }
              else if (kind == "codec_proxy")
                {
                  st.kind = ChannelStage::Kind::codec_proxy;
                  st.bitrate_kbps = get_field<int>(jst, path, "bitrate_kbps", 128);
                }
              else
                {
                  config_error(path + "/kind", "unknown stage kind '" + kind + "'");
                }
              if ((st.kind == ChannelStage::Kind::gaussian_noise ||
                   st.kind == ChannelStage::Kind::background_noise) &&
                  (st.snr_db < 10.0 || st.snr_db > 30.0))
                config_error(path + "/snr_db", "must be in [10, 30]");
              if (st.kind == ChannelStage::Kind::codec_proxy &&
                  (st.bitrate_kbps < 64 || st.bitrate_kbps > 192))
                config_error(path + "/bitrate_kbps", "must be in [64, 192]");
              if (st.kind == ChannelStage::Kind::resample_chain &&
                  st.intermediate_rate != 8000 && st.intermediate_rate != 11025 &&
                  st.intermediate_rate != 22050 && st.intermediate_rate != 44100)
                config_error(path + "/intermediate_rate", "must be 8000, 11025, 22050 or 44100");
              spec.channel.stages.push_back(st);
            }
          if (spec.channel.stages.empty() && spec.placement != ChannelPlacement::off)
            config_error("/channel/stages", "must not be empty when channel is placed");
        }
    }
  return spec;
}

json
experiment_spec_to_json(const ExperimentSpec& spec)
{
  json j;
  j["schema_version"] = spec.schema_version;
  j["global_seed"] = spec.global_seed;
  j["payload_len"] = spec.payload_len;
  j["jobs"] = spec.jobs;
  if (spec.corpus.use_files())
    j["corpus"]["files"] = spec.corpus.files;
  else
    {
      j["corpus"]["synthetic"]["count"] = spec.corpus.synthetic.count;
      j["corpus"]["synthetic"]["duration_s"] = spec.corpus.synthetic.duration_s;
      j["corpus"]["synthetic"]["seed"] = spec.corpus.synthetic.seed;
    }
  j["schemes"] = json::array();
  for (const auto& s : spec.schemes)
    {
      json js;
      js["name"] = std::string(scheme_name(s.scheme));
      switch (s.scheme)
        {
        case Scheme::dct_norm:
          js["block_len"] = s.dct.block_len;
          js["coeff_lo"] = s.dct.coeff_lo;
          js["coeff_hi"] = s.dct.coeff_hi;
          js["alpha"] = s.dct.alpha;
          js["delta_min"] = s.dct.delta_min;
          js["smooth_len"] = s.dct.smooth_len;
          js["energy_compensation"] = s.dct.energy_compensation;
          break;
        case Scheme::spread_spectrum:
          js["block_len"] = s.ss.block_len;
          js["band_lo"] = s.ss.band_lo;
          js["band_hi"] = s.ss.band_hi;
          js["beta"] = s.ss.beta;
          break;
        case Scheme::echo:
          js["block_len"] = s.echo.block_len;
          js["delay0"] = s.echo.delay0;
          js["delay1"] = s.echo.delay1;
          js["echo_gain"] = s.echo.echo_gain;
          js["taper"] = s.echo.taper;
          break;
        }
      j["schemes"].push_back(std::move(js));
    }
  j["attacks"] = json::array();
  for (const auto& a : spec.attacks)
    {
      json ja;
      ja["name"] = std::string(attack_name(a.kind));
      if (a.kind != AttackKind::none)
        ja["gl_iterations"] = a.selfvc.gl_iterations;
      if (a.kind == AttackKind::self_vc)
        {
          ja["k"] = a.selfvc.k;
          ja["exclusion_window"] = a.selfvc.exclusion_window;
          ja["pool_mode"] = a.selfvc.pool_mode == PoolMode::separate_reference
                                ? "separate_reference"
                                : "same_utterance_excluded";
          ja["distance"] = a.selfvc.distance == KnnDistance::l2 ? "l2" : "cosine";
          ja["resynth"] =
              a.selfvc.resynth == ResynthMode::unit_ola ? "unit_ola" : "griffin_lim";
        }
      j["attacks"].push_back(std::move(ja));
    }
  json jch;
  jch["placement"] = std::string(placement_name(spec.placement));
  jch["random_compound"] = spec.channel.random_compound;
  if (!spec.channel.random_compound)
    {
      jch["stages"] = json::array();
      for (const auto& st : spec.channel.stages)
        {
          json jst;
          switch (st.kind)
            {
            case ChannelStage::Kind::gaussian_noise:
              jst["kind"] = "gaussian_noise";
              jst["snr_db"] = st.snr_db;
              break;
            case ChannelStage::Kind::background_noise:
              jst["kind"] = "background_noise";
              jst["noise"] = std::string(noise_kind_name(st.noise));
              jst["snr_db"] = st.snr_db;
              break;
            case ChannelStage::Kind::resample_chain:
              jst["kind"] = "resample_chain";
              jst["intermediate_rate"] = st.intermediate_rate;
              break;
            case ChannelStage::Kind::codec_proxy:
              jst["kind"] = "codec_proxy";
              jst["bitrate_kbps"] = st.bitrate_kbps;
              break;
            }
          jch["stages"].push_back(std::move(jst));
        }
    }
  j["channel"] = std::move(jch);
  return j;
}

ExperimentSpec
load_experiment_spec(const std::string& path)
{
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot open config: " + path);
  json j;
  try
    {
      in >> j;
    }
  catch (const json::exception& e)
    {
      throw std::invalid_argument("config error at /: not valid JSON (" + std::string(e.what()) +
                                  ")");
    }
  return parse_experiment_spec(j);
}

} // namespace wmlab
