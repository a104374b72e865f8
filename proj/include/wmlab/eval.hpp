#pragma once

#include "wmlab/audio.hpp"
#include "wmlab/channel.hpp"
#include "wmlab/selfvc.hpp"
#include "wmlab/watermark.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace wmlab {

constexpr const char* kToolVersion = "0.1.0";

struct SyntheticCorpusSpec
{
  int count = 50;
  double duration_s = 4.0;
  std::uint64_t seed = 42;
};

struct CorpusSpec
{
  std::vector<std::string> files;            // used when non-empty
  SyntheticCorpusSpec synthetic;             // otherwise
  bool use_files() const { return !files.empty(); }
};

enum class AttackKind { none, copy_synthesis, self_vc };

std::string_view attack_name(AttackKind a);

struct AttackSpec
{
  AttackKind kind = AttackKind::none;
  SelfVcConfig selfvc;       // self_vc parameters; gl_iterations also serves copy_synthesis
};

enum class ChannelPlacement { off, pre_attack, post_attack, both };

std::string_view placement_name(ChannelPlacement p);

struct ExperimentSpec
{
  int schema_version = 1;
  CorpusSpec corpus;
  std::vector<SchemeConfig> schemes;
  std::vector<AttackSpec> attacks;
  ChannelSpec channel;
  ChannelPlacement placement = ChannelPlacement::off;
  std::size_t payload_len = 12;
  std::uint64_t global_seed = 42;
  int jobs = 1;
};

struct EvalRow
{
  std::string scheme;
  std::string attack;
  std::string channel_placement;
  int utterance_id = 0;
  double bit_accuracy = 0.0;
  double attacker_perf = 0.0;
  QualityReport quality;
  std::string channel_draws;
  std::string error; // non-empty marks a failed row

  bool ok() const { return error.empty(); }
};

struct MetricStat
{
  double mean = 0.0;
  double stddev = 0.0;
  int n = 0;
};

struct Aggregate
{
  std::string scheme;
  std::string attack;
  std::string channel_placement;
  MetricStat bit_accuracy, attacker_perf, mcd_db, lsd_db, f0_corr, voiced_overlap, snr_db;
};

struct EvalReport
{
  std::string tool_version;
  std::uint64_t global_seed = 0;
  std::string spec_echo_json; // serialized experiment spec
  std::vector<EvalRow> rows;
  std::vector<Aggregate> aggregates;

  int successful_rows() const;
  const Aggregate* find(std::string_view scheme, std::string_view attack,
                        std::string_view placement) const;
};

// Speech-like synthetic utterances: sawtooth-excited formant segments and
// shaped noise bursts, 10 ms crossfades, peak-normalized to 0.5.
std::vector<AudioBuffer> gen_test_corpus(int count, double duration_s, std::uint64_t seed);

EvalReport run_experiment(const ExperimentSpec& spec);

enum class ReportFormat { csv, json, markdown };

std::string render_report(const EvalReport& report, ReportFormat format);
void write_report(const EvalReport& report, ReportFormat format, const std::string& path);

// JSON config round trip; parse errors name the offending field's path
ExperimentSpec parse_experiment_spec(const nlohmann::json& j);
nlohmann::json experiment_spec_to_json(const ExperimentSpec& spec);
ExperimentSpec load_experiment_spec(const std::string& path);

} // namespace wmlab
