#pragma once

// End-to-end analysis: counts -> rank selection -> canonical model -> realized
// and consistent spaces -> bounds and quantum-consistency shrink -> report.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gpt/bounds.hpp"
#include "gpt/decompose.hpp"
#include "gpt/io.hpp"
#include "gpt/modelselect.hpp"
#include "gpt/polytope.hpp"
#include "gpt/qfit.hpp"
#include "gpt/synth.hpp"
#include "gpt/wlra.hpp"

namespace gpt::pipeline {

inline constexpr const char* kVersion = "1.0.0";

struct SynthSpec {
  Index m = 50;
  Index n = 51;  // includes the unit column
  double w = 0.98;
  double wp = 0.98;
  double counts_per_cell = 20000;
  synth::DesignMode design = synth::DesignMode::full_grid;
  Index fiducials = 6;
  synth::Geometry geometry = synth::Geometry::sphere;
  synth::CountModel count_model = synth::CountModel::poisson;
};

struct PipelineConfig {
  std::string input;  // counts CSV; empty means synthesize from `synth`
  SynthSpec synth;
  std::vector<Index> ranks{2, 3, 4, 5, 6, 7, 8, 9, 10};
  wlra::FitOptions fit;
  int resamples = 100;
  std::string out_dir;
  std::uint64_t seed = 0;
  unsigned threads = 0;  // 0: hardware concurrency

  void validate() const;
};

// "2..10" or "3,4,5" (or a mix such as "2..4,7").
std::vector<Index> parse_ranks(const std::string& text);

io::json config_to_json(const PipelineConfig& c);
// Fields present in `j` override `base`; unknown keys are rejected.
PipelineConfig config_from_json(const io::json& j, PipelineConfig base = {});

// A stage failed. `code` is "validation" or "numerical".
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, std::string code, const std::string& message)
      : std::runtime_error(stage + ": " + message), stage_(std::move(stage)), code_(std::move(code)) {}
  const std::string& stage() const { return stage_; }
  const std::string& code() const { return code_; }
  int exit_code() const { return code_ == "validation" ? 2 : 3; }

 private:
  std::string stage_;
  std::string code_;
};

struct McSummary {
  int requested = 0;
  int completed = 0;
  int dropped = 0;
  bounds::Spread std;
  std::vector<double> volume_ratios;  // completed resamples, in resample order
};

struct Report {
  PipelineConfig config;
  FrequencyMatrix frequencies;
  modelselect::RankReport ranks;
  wlra::FitResult fit;  // at the selected rank
  decompose::Decomposition model;  // extended, effects closed under complement
  polytope::StateSpace s_real;
  polytope::StateSpace s_cons;
  polytope::EffectSpace e_real;
  polytope::EffectSpace e_cons;
  bounds::BoundsReport bounds;
  std::optional<qfit::ShrinkResult> shrink;
  std::optional<McSummary> mc;
  std::vector<std::string> warnings;
};

struct AnalysisOptions {
  std::optional<Index> fixed_rank;  // skip model selection
  bool run_qfit = true;
};

synth::CountTable synthesize_counts(const SynthSpec& spec, std::uint64_t seed);
// Reads config.input, or synthesizes when it is empty.
synth::CountTable load_counts(const PipelineConfig& config);

Report analyze_counts(const synth::CountTable& counts, const PipelineConfig& config,
                      const AnalysisOptions& options = {});

// load -> analyze -> Monte Carlo (when resamples > 0) -> write artifacts
// (when out_dir is set).
Report run_analysis(const PipelineConfig& config);

// Poisson resamples of every cell, analyzed at `rank`. Throws when more than
// 10% of resamples fail.
McSummary monte_carlo_errorbars(const synth::CountTable& counts, const PipelineConfig& config, Index rank);

// Throws StageError("inclusion", ...) when a realized vertex lies outside the
// corresponding consistent space by more than 1e-7.
void check_inclusion_chain(const Report& r);

io::json report_to_json(const Report& r, bool with_timestamp = true);
io::json rank_report_to_json(const modelselect::RankReport& r);
io::json mc_to_json(const McSummary& mc);

// report.json, counts.csv and the plot tables.
void write_artifacts(const Report& r, const synth::CountTable& counts, const std::filesystem::path& dir);

// CSV tables derived from a report JSON: rank_table.csv, vertex lists,
// axis-dropping projections of the effect spaces, heatmap.csv.
void emit_plot_data(const io::json& report, const std::filesystem::path& dir);

}  // namespace gpt::pipeline
