// Acceptance suite: runs the full evaluation grid on the 50-utterance
// synthetic corpus and checks every release criterion at its pinned
// threshold, printing one PASS/FAIL line per criterion.

#include "wmlab/eval.hpp"
#include "wmlab/fft.hpp"
#include "wmlab/griffin_lim.hpp"
#include "wmlab/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

using namespace wmlab;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void
report(int criterion, bool ok, const std::string& what)
{
  std::printf("%s  criterion %d: %s\n", ok ? "PASS" : "FAIL", criterion, what.c_str());
  std::fflush(stdout);
  if (!ok)
    g_failures++;
}

std::string
fmt(double v)
{
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

double
seconds_since(std::chrono::steady_clock::time_point t0)
{
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ExperimentSpec
base_spec()
{
  ExperimentSpec spec;
  spec.corpus.synthetic = {50, 4.0, 42};
  spec.payload_len = 12;
  spec.global_seed = 42;
  SchemeConfig dct;
  dct.scheme = Scheme::dct_norm;
  SchemeConfig ss;
  ss.scheme = Scheme::spread_spectrum;
  SchemeConfig echo;
  echo.scheme = Scheme::echo;
  spec.schemes = {dct, ss, echo};
  return spec;
}

double
perf(const EvalReport& r, const char* scheme, const char* attack, const char* placement)
{
  const Aggregate* a = r.find(scheme, attack, placement);
  return a != nullptr && a->attacker_perf.n > 0 ? a->attacker_perf.mean : -1.0;
}

// ---- criterion 6 helpers: independent oracles ----

Matrix
random_matrix(int rows, int cols, Rng& rng)
{
  Matrix m(rows, cols);
  for (auto& v : m.data)
    v = rng.uniform(-1.0, 1.0);
  return m;
}

bool
knn_matches_exhaustive_scan()
{
  for (int trial = 0; trial < 1000; trial++)
    {
      Rng rng(hash64(31337, std::uint64_t(trial)));
      const int frames = 15 + rng.uniform_int(0, 45);
      const int dim = 3 + rng.uniform_int(0, 9);
      const int bins = 2 + rng.uniform_int(0, 6);

      SelfVcConfig cfg;
      cfg.k = 1 + rng.uniform_int(0, 3);
      cfg.distance = rng.coin() ? KnnDistance::cosine : KnnDistance::l2;
      cfg.pool_mode =
          rng.coin() ? PoolMode::separate_reference : PoolMode::same_utterance_excluded;
      cfg.exclusion_window = 1 + rng.uniform_int(0, 2);

      MatchingPool pool;
      pool.features = random_matrix(frames, dim, rng);
      pool.magnitudes = random_matrix(frames, bins, rng);
      pool.norm_stats.mean.assign(std::size_t(dim), 0.0);
      pool.norm_stats.stddev.assign(std::size_t(dim), 1.0);
      pool.sample_rate = 16000;
      const Matrix queries = random_matrix(frames, dim, rng);

      if (cfg.pool_mode == PoolMode::same_utterance_excluded &&
          cfg.k > frames - (2 * cfg.exclusion_window + 1))
        cfg.k = 1;

      const Matrix got = knn_convert(queries, pool, cfg);

      // exhaustive reference
      for (int i = 0; i < frames; i++)
        {
          std::vector<std::pair<double, int>> all;
          for (int j = 0; j < frames; j++)
            {
              if (cfg.pool_mode == PoolMode::same_utterance_excluded &&
                  std::abs(i - j) <= cfg.exclusion_window)
                continue;
              double dist;
              if (cfg.distance == KnnDistance::l2)
                {
                  dist = 0.0;
                  for (int d = 0; d < dim; d++)
                    {
                      const double delta = queries.at(i, d) - pool.features.at(j, d);
                      dist += delta * delta;
                    }
                }
              else
                {
                  double dot = 0.0, na = 0.0, nb = 0.0;
                  for (int d = 0; d < dim; d++)
                    {
                      dot += queries.at(i, d) * pool.features.at(j, d);
                      na += queries.at(i, d) * queries.at(i, d);
                      nb += pool.features.at(j, d) * pool.features.at(j, d);
                    }
                  dist = 1.0 - dot / (std::sqrt(na) * std::sqrt(nb) + 1e-12);
                }
              all.emplace_back(dist, j);
            }
          std::sort(all.begin(), all.end());
          for (int b = 0; b < bins; b++)
            {
              double want = 0.0;
              for (int n = 0; n < cfg.k; n++)
                want += pool.magnitudes.at(all[std::size_t(n)].second, b);
              want /= double(cfg.k);
              if (got.at(i, b) != want)
                return false;
            }
        }
    }
  return true;
}

bool
bit_metrics_hold()
{
  Payload a, b;
  a.bits = {1, 0, 1, 0};
  b.bits = {1, 0, 0, 0};
  Payload inv = a;
  for (auto& bit : inv.bits)
    bit ^= 1;
  return bitwise_accuracy(a, a) == 1.0 && bitwise_accuracy(a, inv) == 0.0 &&
         bitwise_accuracy(a, b) == 0.75 && attacker_performance(1.0) == 0.0 &&
         attacker_performance(0.5) == 0.5 &&
         std::fabs(attacker_performance(0.852) - 0.148) < 1e-12;
}

bool
snr_mixing_exact()
{
  Rng rng(2024);
  for (int trial = 0; trial < 30; trial++)
    {
      AudioBuffer sig;
      sig.sample_rate = 16000;
      sig.samples.resize(16000);
      for (auto& s : sig.samples)
        s = rng.uniform(-0.6, 0.6);
      const auto kind = static_cast<NoiseKind>(trial % 3);
      const AudioBuffer noise = make_noise(kind, sig.samples.size(), 16000, 100 + trial);
      const double target = rng.uniform(10.0, 30.0);
      const AudioBuffer out = add_noise_at_snr(sig, noise, target);

      double p_sig = 0.0, p_noise = 0.0;
      for (std::size_t i = 0; i < sig.samples.size(); i++)
        {
          p_sig += sig.samples[i] * sig.samples[i];
          const double d = out.samples[i] - sig.samples[i];
          p_noise += d * d;
        }
      if (std::fabs(10.0 * std::log10(p_sig / p_noise) - target) > 0.01)
        return false;
    }
  return true;
}

bool
dct_roundtrip_tight()
{
  Rng rng(555);
  for (int trial = 0; trial < 10; trial++)
    {
      std::vector<double> x(2048);
      for (auto& v : x)
        v = rng.uniform(-1.0, 1.0);
      const auto coeffs = fft::dct_ii(x);
      const auto back = fft::idct(coeffs);
      double ex = 0.0, ec = 0.0;
      for (std::size_t i = 0; i < x.size(); i++)
        {
          if (std::fabs(back[i] - x[i]) >= 1e-9)
            return false;
          ex += x[i] * x[i];
          ec += coeffs[i] * coeffs[i];
        }
      if (std::fabs(std::sqrt(ex) - std::sqrt(ec)) >= 1e-9)
        return false;
    }
  return true;
}

bool
stft_roundtrip_tight()
{
  const FrameSpec spec{1024, 256, Window::hann};
  Rng rng(556);
  for (int trial = 0; trial < 5; trial++)
    {
      AudioBuffer buf;
      buf.sample_rate = 16000;
      buf.samples.resize(16000);
      for (auto& s : buf.samples)
        s = rng.uniform(-0.8, 0.8);
      const AudioBuffer back = istft(stft(buf, spec));
      for (std::size_t i = 1024; i < buf.samples.size() - 1024; i++)
        if (std::fabs(back.samples[i] - buf.samples[i]) >= 1e-6)
          return false;
    }
  return true;
}

bool
griffin_lim_monotone()
{
  const FrameSpec spec{1024, 256, Window::hann};
  AudioBuffer buf;
  buf.sample_rate = 16000;
  buf.samples.resize(10000);
  Rng rng(557);
  for (std::size_t i = 0; i < buf.samples.size(); i++)
    buf.samples[i] =
        0.4 * std::sin(2.0 * M_PI * 180.0 * double(i) / 16000.0) + 0.1 * rng.uniform(-1.0, 1.0);
  const Matrix mag = magnitude(stft(buf, spec));
  double prev = 1e300;
  for (int iters = 1; iters <= 10; iters++)
    {
      const AudioBuffer out = griffin_lim(mag, spec, 16000, iters, 5);
      const double sc = spectral_convergence(out, mag, spec);
      if (sc > prev + 1e-6)
        return false;
      prev = sc;
    }
  return true;
}

// ---- criterion 7 helper ----

int
run_cli(const std::string& args, std::string* output = nullptr)
{
  const std::string cmd = std::string(WMLAB_CLI_PATH) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe)
    return -1;
  char buf[512];
  std::string out;
  while (fgets(buf, sizeof buf, pipe))
    out += buf;
  if (output)
    *output = out;
  const int status = pclose(pipe);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string
slurp(const fs::path& path)
{
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

} // namespace

int
main()
{
  const auto wall_start = std::chrono::steady_clock::now();

  // criterion 1: clean round trip
  auto t0 = std::chrono::steady_clock::now();
  ExperimentSpec clean_spec = base_spec();
  clean_spec.attacks = {AttackSpec{}};
  const EvalReport clean = run_experiment(clean_spec);
  const double t_clean = seconds_since(t0);
  {
    const double dct = perf(clean, "dct_norm", "none", "off");
    const double ss = perf(clean, "spread_spectrum", "none", "off");
    const double echo = perf(clean, "echo", "none", "off");
    const bool ok =
        dct >= 0.0 && dct <= 0.03 && ss >= 0.0 && ss <= 0.03 && echo >= 0.0 && echo <= 0.05 &&
        t_clean < 120.0;
    report(1, ok,
           "clean attacker perf dct=" + fmt(dct) + " ss=" + fmt(ss) + " echo=" + fmt(echo) +
               " (<=0.03/0.03/0.05), runtime " + fmt(t_clean) + "s (<120s)");
  }

  // attacks without channel (criteria 3, 4, 5)
  ExperimentSpec attack_spec = base_spec();
  AttackSpec copysyn;
  copysyn.kind = AttackKind::copy_synthesis;
  AttackSpec selfvc;
  selfvc.kind = AttackKind::self_vc;
  attack_spec.attacks = {copysyn, selfvc};
  const EvalReport attacked = run_experiment(attack_spec);

  // no-attack and self-vc under the random compound channel (criteria 2, 3)
  ExperimentSpec channel_spec = base_spec();
  channel_spec.attacks = {AttackSpec{}, selfvc};
  channel_spec.placement = ChannelPlacement::post_attack;
  channel_spec.channel.enabled = true;
  const EvalReport channeled = run_experiment(channel_spec);
  const double t_grid = seconds_since(wall_start);

  // criterion 2: channel degradation ordering
  {
    bool ok = true;
    std::string detail;
    for (const char* scheme : {"dct_norm", "spread_spectrum", "echo"})
      {
        const double on = perf(channeled, scheme, "none", "post_attack");
        const double off = perf(clean, scheme, "none", "off");
        detail += std::string(scheme) + " " + fmt(off) + "->" + fmt(on) + " ";
        ok = ok && on > off;
      }
    const double ss_on = perf(channeled, "spread_spectrum", "none", "post_attack");
    ok = ok && ss_on < 0.45;
    report(2, ok, "channel-only perf strictly above clean for every scheme, ss=" + fmt(ss_on) +
                      " (<0.45): " + detail);
  }

  // criterion 3: self-vc collapse with and without channel
  {
    bool ok = true;
    std::string detail;
    for (const char* scheme : {"dct_norm", "spread_spectrum", "echo"})
      {
        const double off = perf(attacked, scheme, "self_vc", "off");
        const double on = perf(channeled, scheme, "self_vc", "post_attack");
        detail += std::string(scheme) + " off=" + fmt(off) + " chan=" + fmt(on) + " ";
        ok = ok && off >= 0.45 && off <= 0.55 && on >= 0.45 && on <= 0.55;
      }
    ok = ok && t_grid < 900.0;
    report(3, ok, "self-vc perf in [0.45, 0.55]: " + detail + "grid runtime " + fmt(t_grid) +
                      "s (<900s)");
  }

  // criterion 4: content preservation of the attack
  {
    bool ok = true;
    std::string detail;
    for (const char* scheme : {"dct_norm", "spread_spectrum", "echo"})
      {
        const Aggregate* a = attacked.find(scheme, "self_vc", "off");
        if (!a || a->mcd_db.n == 0 || a->f0_corr.n == 0)
          {
            ok = false;
            continue;
          }
        detail += std::string(scheme) + " mcd=" + fmt(a->mcd_db.mean) + " f0corr=" +
                  fmt(a->f0_corr.mean) + " lsd=" + fmt(a->lsd_db.mean) + " ";
        ok = ok && a->mcd_db.mean < 8.0 && a->f0_corr.mean > 0.8 && a->lsd_db.mean < 6.0;
      }
    report(4, ok, "self-vc quality (mcd<8dB, f0corr>0.8, lsd<6dB): " + detail);
  }

  // criterion 5: copy-synthesis differential
  {
    const double echo_none = perf(clean, "echo", "none", "off");
    const double echo_copy = perf(attacked, "echo", "copy_synthesis", "off");
    bool ok = echo_copy >= echo_none + 0.2;
    std::string detail = "echo none=" + fmt(echo_none) + " copysyn=" + fmt(echo_copy) + "; ";
    for (const char* scheme : {"dct_norm", "spread_spectrum", "echo"})
      {
        const double vc = perf(attacked, scheme, "self_vc", "off");
        const double copy = perf(attacked, scheme, "copy_synthesis", "off");
        detail += std::string(scheme) + " vc=" + fmt(vc) + " copy=" + fmt(copy) + " ";
        ok = ok && vc >= copy - 0.05;
      }
    report(5, ok, "copysyn lifts echo perf by >=0.2 and self-vc >= copysyn - 0.05: " + detail);
  }

  // criterion 6: oracle equivalence and property suites
  {
    const bool knn_ok = knn_matches_exhaustive_scan();
    const bool bits_ok = bit_metrics_hold();
    const bool snr_ok = snr_mixing_exact();
    const bool dct_ok = dct_roundtrip_tight();
    const bool stft_ok = stft_roundtrip_tight();
    const bool gl_ok = griffin_lim_monotone();
    const bool ok = knn_ok && bits_ok && snr_ok && dct_ok && stft_ok && gl_ok;
    std::ostringstream detail;
    detail << "knn_scan=" << (knn_ok ? "ok" : "FAIL") << " bit_metrics=" << (bits_ok ? "ok" : "FAIL")
           << " snr_mix=" << (snr_ok ? "ok" : "FAIL") << " dct=" << (dct_ok ? "ok" : "FAIL")
           << " stft=" << (stft_ok ? "ok" : "FAIL") << " griffin_lim=" << (gl_ok ? "ok" : "FAIL");
    report(6, ok, detail.str());
  }

  // criterion 7: byte-identical reports, serial and parallel
  {
    const auto dir = fs::temp_directory_path() / "wmlab_acceptance";
    fs::create_directories(dir);
    const auto config = dir / "exp.json";
    {
      std::ofstream os(config);
      os << R"({
        "schema_version": 1,
        "global_seed": 17,
        "payload_len": 8,
        "corpus": {"synthetic": {"count": 5, "duration_s": 3.0, "seed": 3}},
        "schemes": [{"name": "dct_norm"}, {"name": "echo"}],
        "attacks": [{"name": "none"}, {"name": "copy_synthesis", "gl_iterations": 20}],
        "channel": {"placement": "post_attack"}
      })";
    }
    bool ok = true;
    std::string csv_a;
    for (int run = 0; run < 3; run++)
      {
        const auto out = dir / ("rep" + std::to_string(run));
        const std::string jobs = run == 2 ? " --jobs 4" : "";
        const int code = run_cli("evaluate --config " + config.string() + " --out " +
                                 out.string() + " --format csv" + jobs);
        ok = ok && code == 0;
        const std::string csv = slurp(out / "report.csv");
        if (run == 0)
          csv_a = csv;
        else
          ok = ok && csv == csv_a && !csv.empty();
      }
    report(7, ok, "cmd_evaluate reports byte-identical across reruns and --jobs 4");
  }

  std::printf("%s (%d criteria failed, total %.1fs)\n", g_failures == 0 ? "ALL PASS" : "FAILURES",
              g_failures, seconds_since(wall_start));
  return g_failures == 0 ? 0 : 1;
}
