// wmlab command line: embed / detect / attack / channel / evaluate / gen-testset.
// Exit codes: 0 success, 1 usage error, 2 runtime error. All validation that
// can fail on flags alone happens before any file is written.

#include "wmlab/eval.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>

namespace {

using namespace wmlab;

struct UsageError : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

SchemeConfig
scheme_config_from_flags(const std::string& scheme_name, const std::string& config_path)
{
  const auto scheme = parse_scheme(scheme_name);
  if (!scheme)
    throw UsageError("unknown scheme '" + scheme_name + "' (dct_norm, spread_spectrum, echo)");
  nlohmann::json js;
  js["name"] = std::string(wmlab::scheme_name(*scheme));
  if (!config_path.empty())
    {
      std::ifstream in(config_path);
      if (!in)
        throw UsageError("cannot open scheme config: " + config_path);
      nlohmann::json overrides;
      try
        {
          in >> overrides;
        }
      catch (const nlohmann::json::exception& e)
        {
          throw UsageError("scheme config is not valid JSON: " + std::string(e.what()));
        }
      for (auto it = overrides.begin(); it != overrides.end(); ++it)
        js[it.key()] = it.value();
    }
  // reuse the experiment parser so flag and config validation agree
  nlohmann::json je;
  je["corpus"]["synthetic"]["count"] = 1;
  je["schemes"] = nlohmann::json::array({js});
  je["attacks"] = nlohmann::json::array({nlohmann::json{{"name", "none"}}});
  try
    {
      return parse_experiment_spec(je).schemes.at(0);
    }
  catch (const std::invalid_argument& e)
    {
      throw UsageError(e.what());
    }
}

void
validate_payload_bits(std::size_t bits, const std::string& hex)
{
  if (bits < 4 || bits > 256 || bits % 4 != 0)
    throw UsageError("--bits must be a multiple of 4 in [4, 256]");
  if (!hex.empty() && hex.size() * 4 != bits)
    throw UsageError("payload hex must be exactly " + std::to_string(bits / 4) +
                     " digits for " + std::to_string(bits) + " bits");
}

int cmd_embed(const std::string& in_path, const std::string& out_path, const std::string& scheme,
              const std::string& payload_hex, std::uint64_t key_seed, std::size_t bits,
              const std::string& config_path, bool pcm16)
{
  const SchemeConfig cfg = scheme_config_from_flags(scheme, config_path);
  validate_payload_bits(bits, payload_hex);
  const Payload payload = Payload::from_hex(payload_hex, bits);

  const AudioBuffer in = to_canonical_rate(load_wav(in_path));
  EmbedStats stats;
  const AudioBuffer out = embed(in, payload, WatermarkKey{key_seed}, cfg, &stats);
  save_wav(out, out_path, pcm16 ? WavEncoding::pcm16 : WavEncoding::float32);
  std::printf("snr_db=%.3f\n", snr_db(in, out));
  std::printf("blocks=%d\n", stats.blocks);
  std::printf("erasures=%d\n", stats.erasures);
  return 0;
}

int cmd_detect(const std::string& in_path, const std::string& scheme, std::uint64_t key_seed,
               std::size_t bits, const std::string& expected_hex, const std::string& config_path)
{
  const SchemeConfig cfg = scheme_config_from_flags(scheme, config_path);
  validate_payload_bits(bits, expected_hex);

  const AudioBuffer in = to_canonical_rate(load_wav(in_path));
  const DetectionResult det = detect(in, WatermarkKey{key_seed}, bits, cfg);
  std::printf("payload_hex=%s\n", det.bits.to_hex().c_str());
  std::string scores;
  char tmp[32];
  for (std::size_t i = 0; i < det.soft_scores.size(); i++)
    {
      std::snprintf(tmp, sizeof tmp, "%s%.4f", i ? "," : "", det.soft_scores[i]);
      scores += tmp;
    }
  std::printf("soft_scores=%s\n", scores.c_str());
  std::printf("erasures=%d\n", det.erasures);
  if (!expected_hex.empty())
    {
      const Payload expected = Payload::from_hex(expected_hex, bits);
      const double acc = bitwise_accuracy(expected, det.bits);
      std::printf("bit_accuracy=%.3f\n", acc);
      std::printf("attacker_perf=%.3f\n", attacker_performance(acc));
    }
  return 0;
}

int cmd_attack(const std::string& in_path, const std::string& out_path, const std::string& type,
               const std::string& reference_path, std::uint64_t seed, SelfVcConfig cfg,
               const std::string& pool_mode, const std::string& distance,
               const std::string& resynth)
{
  const bool selfvc = type == "selfvc";
  if (!selfvc && type != "copysyn")
    throw UsageError("--type must be selfvc or copysyn");
  if (pool_mode == "separate_reference")
    cfg.pool_mode = PoolMode::separate_reference;
  else if (pool_mode == "same_utterance_excluded")
    cfg.pool_mode = PoolMode::same_utterance_excluded;
  else
    throw UsageError("--pool-mode must be separate_reference or same_utterance_excluded");
  if (distance == "cosine")
    cfg.distance = KnnDistance::cosine;
  else if (distance == "l2")
    cfg.distance = KnnDistance::l2;
  else
    throw UsageError("--distance must be cosine or l2");
  if (resynth == "griffin_lim")
    cfg.resynth = ResynthMode::griffin_lim;
  else if (resynth == "unit_ola")
    cfg.resynth = ResynthMode::unit_ola;
  else
    throw UsageError("--resynth must be griffin_lim or unit_ola");
  if (selfvc && cfg.pool_mode == PoolMode::separate_reference && reference_path.empty())
    throw UsageError("--reference is required for selfvc in separate_reference mode");

  const AudioBuffer in = to_canonical_rate(load_wav(in_path));
  AudioBuffer out;
  if (selfvc)
    {
      AudioBuffer ref_storage;
      const AudioBuffer* ref = nullptr;
      if (cfg.pool_mode == PoolMode::separate_reference)
        {
          ref_storage = to_canonical_rate(load_wav(reference_path));
          ref = &ref_storage;
        }
      out = self_vc_attack(in, ref, cfg, seed);
    }
  else
    {
      out = copy_synthesis_attack(in, cfg.gl_iterations, seed);
    }
  save_wav(out, out_path, WavEncoding::float32);

  const QualityReport q = quality_report(in, out);
  std::printf("mcd_db=%.3f\n", q.mcd_db);
  std::printf("lsd_db=%.3f\n", q.lsd_db);
  if (q.f0_corr)
    std::printf("f0_corr=%.3f\n", *q.f0_corr);
  else
    std::printf("f0_corr=undefined\n");
  std::printf("voiced_overlap=%.3f\n", q.voiced_overlap);
  std::printf("snr_db=%.3f\n", q.snr_db);
  return 0;
}

int cmd_channel(const std::string& in_path, const std::string& out_path, std::uint64_t seed,
                std::uint64_t index, const std::string& noise, double snr_db_value, int resample_rate,
                int bitrate)
{
  ChannelSpec spec;
  spec.enabled = true;
  const bool explicit_stages = !noise.empty() || resample_rate > 0 || bitrate > 0;
  if (explicit_stages)
    {
      spec.random_compound = false;
      if (!noise.empty())
        {
          ChannelStage st;
          if (noise == "white")
            {
              st.kind = ChannelStage::Kind::gaussian_noise;
              st.noise = NoiseKind::white;
            }
          else if (noise == "pink" || noise == "babble_proxy")
            {
              st.kind = ChannelStage::Kind::background_noise;
              st.noise = noise == "pink" ? NoiseKind::pink : NoiseKind::babble_proxy;
            }
          else
            throw UsageError("--noise must be white, pink or babble_proxy");
          if (snr_db_value < 10.0 || snr_db_value > 30.0)
            throw UsageError("--snr must be in [10, 30]");
          st.snr_db = snr_db_value;
          spec.stages.push_back(st);
        }
      if (resample_rate > 0)
        {
          if (resample_rate != 8000 && resample_rate != 11025 && resample_rate != 22050 &&
              resample_rate != 44100)
            throw UsageError("--resample must be 8000, 11025, 22050 or 44100");
          ChannelStage st;
          st.kind = ChannelStage::Kind::resample_chain;
          st.intermediate_rate = resample_rate;
          spec.stages.push_back(st);
        }
      if (bitrate > 0)
        {
          if (bitrate < 64 || bitrate > 192)
            throw UsageError("--bitrate must be in [64, 192]");
          ChannelStage st;
          st.kind = ChannelStage::Kind::codec_proxy;
          st.bitrate_kbps = bitrate;
          spec.stages.push_back(st);
        }
    }

  const AudioBuffer in = to_canonical_rate(load_wav(in_path));
  const ChannelResult res = apply_channel(in, spec, index, seed);
  save_wav(res.audio, out_path, WavEncoding::float32);
  std::printf("stages=%s\n", describe_stages(res.draws).c_str());
  return 0;
}

int cmd_evaluate(const std::string& config_path, const std::string& out_dir,
                 const std::string& formats, int jobs)
{
  ExperimentSpec spec;
  try
    {
      spec = load_experiment_spec(config_path);
    }
  catch (const std::invalid_argument& e)
    {
      throw UsageError(e.what()); // malformed config, schema path included
    }
  if (jobs > 0)
    spec.jobs = jobs;

  std::vector<ReportFormat> wanted;
  std::string token;
  for (std::size_t i = 0; i <= formats.size(); i++)
    {
      if (i == formats.size() || formats[i] == ',')
        {
          if (token == "csv")
            wanted.push_back(ReportFormat::csv);
          else if (token == "json")
            wanted.push_back(ReportFormat::json);
          else if (token == "markdown" || token == "md")
            wanted.push_back(ReportFormat::markdown);
          else if (!token.empty())
            throw UsageError("unknown report format '" + token + "'");
          token.clear();
        }
      else
        {
          token += formats[i];
        }
    }
  if (wanted.empty())
    throw UsageError("--format must name at least one of csv, json, markdown");

  std::filesystem::create_directories(out_dir);
  const EvalReport report = run_experiment(spec);
  for (ReportFormat f : wanted)
    {
      const char* name = f == ReportFormat::csv      ? "report.csv"
                         : f == ReportFormat::json   ? "report.json"
                                                     : "report.md";
      const std::string path = (std::filesystem::path(out_dir) / name).string();
      write_report(report, f, path);
      std::printf("wrote=%s\n", path.c_str());
    }
  std::printf("rows=%d\n", report.successful_rows());
  return 0;
}

int cmd_gen_testset(int count, double duration, std::uint64_t seed, const std::string& out_dir)
{
  if (count < 1)
    throw UsageError("--count must be >= 1");
  if (duration < 2.0)
    throw UsageError("--duration must be >= 2 seconds");
  std::filesystem::create_directories(out_dir);
  const auto corpus = gen_test_corpus(count, duration, seed);
  for (std::size_t i = 0; i < corpus.size(); i++)
    {
      char name[32];
      std::snprintf(name, sizeof name, "utt_%04zu.wav", i);
      save_wav(corpus[i], (std::filesystem::path(out_dir) / name).string(), WavEncoding::pcm16);
    }
  std::printf("wrote=%d\n", count);
  return 0;
}

} // namespace

int
main(int argc, char** argv)
{
  CLI::App app{"wmlab - audio watermark robustness laboratory"};
  app.require_subcommand(1);

  // embed
  auto* embed_cmd = app.add_subcommand("embed", "embed a payload into a wav file");
  std::string e_in, e_out, e_scheme, e_hex, e_config;
  std::uint64_t e_key = 0;
  std::size_t e_bits = 32;
  bool e_pcm16 = false;
  embed_cmd->add_option("input", e_in, "input wav")->required();
  embed_cmd->add_option("output", e_out, "output wav")->required();
  embed_cmd->add_option("--scheme", e_scheme, "dct_norm | spread_spectrum | echo")->required();
  embed_cmd->add_option("--payload-hex", e_hex, "payload, MSB-first hex")->required();
  embed_cmd->add_option("--key", e_key, "watermark key seed");
  embed_cmd->add_option("--bits", e_bits, "payload length in bits (multiple of 4)");
  embed_cmd->add_option("--config", e_config, "JSON file with scheme parameter overrides");
  embed_cmd->add_flag("--pcm16", e_pcm16, "write 16-bit PCM instead of float32");

  // detect
  auto* detect_cmd = app.add_subcommand("detect", "recover a payload from a wav file");
  std::string d_in, d_scheme, d_expected, d_config;
  std::uint64_t d_key = 0;
  std::size_t d_bits = 32;
  detect_cmd->add_option("input", d_in, "input wav")->required();
  detect_cmd->add_option("--scheme", d_scheme, "dct_norm | spread_spectrum | echo")->required();
  detect_cmd->add_option("--key", d_key, "watermark key seed");
  detect_cmd->add_option("--bits", d_bits, "payload length in bits (multiple of 4)");
  detect_cmd->add_option("--expected-hex", d_expected, "expected payload for accuracy output");
  detect_cmd->add_option("--config", d_config, "JSON file with scheme parameter overrides");

  // attack
  auto* attack_cmd = app.add_subcommand("attack", "apply a watermark-removal attack");
  std::string a_in, a_out, a_type, a_reference;
  std::uint64_t a_seed = 0;
  SelfVcConfig a_cfg;
  std::string a_pool_mode = "separate_reference";
  std::string a_distance = "cosine";
  std::string a_resynth = "griffin_lim";
  attack_cmd->add_option("input", a_in, "input wav")->required();
  attack_cmd->add_option("output", a_out, "output wav")->required();
  attack_cmd->add_option("--type", a_type, "selfvc | copysyn")->required();
  attack_cmd->add_option("--reference", a_reference, "reference wav (selfvc separate_reference)");
  attack_cmd->add_option("--seed", a_seed, "attack seed");
  attack_cmd->add_option("--gl-iterations", a_cfg.gl_iterations, "phase reconstruction iterations");
  attack_cmd->add_option("--k", a_cfg.k, "neighbors per frame");
  attack_cmd->add_option("--exclusion-window", a_cfg.exclusion_window,
                         "frames excluded around the query (same_utterance_excluded)");
  attack_cmd->add_option("--pool-mode", a_pool_mode, "separate_reference | same_utterance_excluded");
  attack_cmd->add_option("--distance", a_distance, "cosine | l2");
  attack_cmd->add_option("--resynth", a_resynth, "griffin_lim | unit_ola");

  // channel
  auto* channel_cmd = app.add_subcommand("channel", "apply transmission-channel distortion");
  std::string c_in, c_out, c_noise;
  std::uint64_t c_seed = 0, c_index = 0;
  double c_snr = 20.0;
  int c_resample = 0, c_bitrate = 0;
  channel_cmd->add_option("input", c_in, "input wav")->required();
  channel_cmd->add_option("output", c_out, "output wav")->required();
  channel_cmd->add_option("--seed", c_seed, "global channel seed");
  channel_cmd->add_option("--index", c_index, "utterance index");
  channel_cmd->add_option("--noise", c_noise, "white | pink | babble_proxy (explicit stage)");
  channel_cmd->add_option("--snr", c_snr, "noise SNR in dB [10, 30]");
  channel_cmd->add_option("--resample", c_resample, "intermediate rate (explicit stage)");
  channel_cmd->add_option("--bitrate", c_bitrate, "codec proxy bitrate kbps (explicit stage)");

  // evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "run a full experiment grid");
  std::string v_config, v_out = "reports", v_formats = "csv,json,markdown";
  int v_jobs = 0;
  eval_cmd->add_option("--config", v_config, "experiment JSON config")->required();
  eval_cmd->add_option("--out", v_out, "output directory");
  eval_cmd->add_option("--format", v_formats, "comma list of csv, json, markdown");
  eval_cmd->add_option("--jobs", v_jobs, "parallel workers (overrides config)");

  // gen-testset
  auto* gen_cmd = app.add_subcommand("gen-testset", "write a synthetic speech-like corpus");
  int g_count = 10;
  double g_duration = 4.0;
  std::uint64_t g_seed = 42;
  std::string g_out = "testset";
  gen_cmd->add_option("--count", g_count, "number of utterances");
  gen_cmd->add_option("--duration", g_duration, "seconds per utterance");
  gen_cmd->add_option("--seed", g_seed, "corpus seed");
  gen_cmd->add_option("--out", g_out, "output directory");

  try
    {
      app.parse(argc, argv);
    }
  catch (const CLI::ParseError& e)
    {
      const int code = app.exit(e);
      return code == 0 ? 0 : 1;
    }

  try
    {
      if (embed_cmd->parsed())
        return cmd_embed(e_in, e_out, e_scheme, e_hex, e_key, e_bits, e_config, e_pcm16);
      if (detect_cmd->parsed())
        return cmd_detect(d_in, d_scheme, d_key, d_bits, d_expected, d_config);
      if (attack_cmd->parsed())
        return cmd_attack(a_in, a_out, a_type, a_reference, a_seed, a_cfg, a_pool_mode, a_distance,
                          a_resynth);
      if (channel_cmd->parsed())
        return cmd_channel(c_in, c_out, c_seed, c_index, c_noise, c_snr, c_resample, c_bitrate);
      if (eval_cmd->parsed())
        return cmd_evaluate(v_config, v_out, v_formats, v_jobs);
      if (gen_cmd->parsed())
        return cmd_gen_testset(g_count, g_duration, g_seed, g_out);
    }
  catch (const UsageError& e)
    {
      std::fprintf(stderr, "error: %s\n", e.what());
      return 1;
    }
  catch (const std::exception& e)
    {
      std::fprintf(stderr, "error: %s\n", e.what());
      return 2;
    }
  return 1;
}
