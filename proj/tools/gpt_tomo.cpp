// gpt-tomo: synth | fit | analyze | mc | report

#include <cstdio>
#include <iostream>

#include "CLI11.hpp"
#include "gpt/pipeline.hpp"

using namespace gpt;
namespace fs = std::filesystem;

namespace {

struct Flags {
  std::string config_path;
  std::string input;
  std::string ranks;
  std::string out;
  std::uint64_t seed = 0;
  int resamples = -1;
  unsigned threads = 0;
  // synth overrides
  Index m = -1, n = -1, fiducials = -1;
  double w = -1, wp = -1, counts = -1;
  std::string design, geometry, count_model;
};

void add_common(CLI::App* cmd, Flags& f, bool synth_flags) {
  cmd->add_option("--config", f.config_path, "JSON file mirroring the pipeline configuration");
  cmd->add_option("--seed", f.seed, "random seed");
  cmd->add_option("--out", f.out, "output directory");
  if (synth_flags) {
    cmd->add_option("--m", f.m, "number of preparations");
    cmd->add_option("--n", f.n, "number of measurements including the unit column");
    cmd->add_option("--w", f.w, "state depolarizing parameter");
    cmd->add_option("--wp", f.wp, "effect depolarizing parameter");
    cmd->add_option("--counts", f.counts, "expected counts per cell");
    cmd->add_option("--design", f.design, "full_grid or fiducial");
    cmd->add_option("--fiducials", f.fiducials, "fiducial count for sparse designs");
    cmd->add_option("--geometry", f.geometry, "sphere (qubit) or disk (rebit)");
    cmd->add_option("--count-model", f.count_model, "poisson or binomial");
  }
}

void add_analysis(CLI::App* cmd, Flags& f) {
  cmd->add_option("--input", f.input, "counts CSV (synthesizes when absent)");
  cmd->add_option("--ranks", f.ranks, "candidate ranks, e.g. 2..10 or 3,4,5");
  cmd->add_option("--threads", f.threads, "worker threads (0: all cores)");
}

pipeline::PipelineConfig build_config(const Flags& f, const CLI::App* cmd) {
  pipeline::PipelineConfig c;
  if (!f.config_path.empty()) c = pipeline::config_from_json(io::json::parse(io::read_file(f.config_path)), c);
  auto given = [&](const char* name) {
    const auto* opt = cmd->get_option_no_throw(name);
    return opt != nullptr && opt->count() > 0;
  };
  if (given("--input")) c.input = f.input;
  if (given("--ranks")) c.ranks = pipeline::parse_ranks(f.ranks);
  if (given("--out")) c.out_dir = f.out;
  if (given("--seed")) c.seed = f.seed;
  if (given("--resamples")) c.resamples = f.resamples;
  if (given("--threads")) c.threads = f.threads;
  io::json s = io::json::object();
  if (given("--m")) s["m"] = f.m;
  if (given("--n")) s["n"] = f.n;
  if (given("--w")) s["w"] = f.w;
  if (given("--wp")) s["wp"] = f.wp;
  if (given("--counts")) s["counts_per_cell"] = f.counts;
  if (given("--fiducials")) s["fiducials"] = f.fiducials;
  if (given("--design")) s["design"] = f.design;
  if (given("--geometry")) s["geometry"] = f.geometry;
  if (given("--count-model")) s["count_model"] = f.count_model;
  if (!s.empty()) c = pipeline::config_from_json({{"synth", s}}, c);
  c.validate();
  return c;
}

fs::path out_dir(const pipeline::PipelineConfig& c) { return c.out_dir.empty() ? fs::path(".") : fs::path(c.out_dir); }

int cmd_synth(const pipeline::PipelineConfig& c) {
  pipeline::PipelineConfig sc = c;
  sc.input.clear();
  const auto counts = pipeline::load_counts(sc);
  io::write_atomic(out_dir(c) / "counts.csv", io::format_counts_csv(counts));
  std::printf("wrote %zu cells to %s\n", counts.cells.size(), (out_dir(c) / "counts.csv").c_str());
  return 0;
}

int cmd_fit(const pipeline::PipelineConfig& c) {
  const auto counts = pipeline::load_counts(c);
  const auto f = synth::frequencies_from_counts(counts);
  auto opts = c.fit;
  opts.seed = c.seed;
  std::vector<wlra::FitResult> fits;
  const auto rr = modelselect::select_rank(f, c.ranks, opts, &fits);
  io::json j;
  j["rank_selection"] = pipeline::rank_report_to_json(rr);
  for (std::size_t i = 0; i < c.ranks.size(); ++i)
    if (c.ranks[i] == rr.selected_rank) {
      j["states"] = io::to_json(fits[i].S);
      j["effects"] = io::to_json(MatrixXd(fits[i].E.transpose()));
      j["chi2"] = fits[i].chi2;
    }
  io::write_atomic(out_dir(c) / "fit.json", io::dump_json(j));
  std::printf("selected rank %ld\n", static_cast<long>(rr.selected_rank));
  for (const auto& cand : rr.candidates)
    std::printf("  k=%ld chi2=%.6g interval=[%.6g, %.6g] aic=%.6g weight=%.6g\n", static_cast<long>(cand.k),
                cand.chi2, cand.lo, cand.hi, cand.aic, cand.weight);
  return 0;
}

int cmd_analyze(const pipeline::PipelineConfig& c_in) {
  pipeline::PipelineConfig c = c_in;
  if (c.out_dir.empty()) c.out_dir = ".";
  const auto r = pipeline::run_analysis(c);
  const auto& b = r.bounds;
  std::printf("selected rank %ld\n", static_cast<long>(r.ranks.selected_rank));
  std::printf("w1=%.6f w1p=%.6f w2=%.6f w2p=%.6f\n", b.w1, b.w1p, b.w2, b.w2p);
  std::printf("LB(Cmin)=%.6f UB(Cmax)=%.6f UB(Bmax)=%.6f\n", b.lb_cmin, b.ub_cmax, b.ub_bmax);
  std::printf("volume ratio=%.6f epsilon bound=%.6f", b.volume_ratio, b.epsilon_bound);
  if (b.mc_std) std::printf(" (volume ratio sd %.2g)", b.mc_std->volume_ratio);
  std::printf("\n");
  if (r.shrink) std::printf("shrink epsilon*=%.4f\n", r.shrink->epsilon_star);
  for (const auto& w : r.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  std::printf("report written to %s\n", (fs::path(c.out_dir) / "report.json").c_str());
  return 0;
}

int cmd_mc(const pipeline::PipelineConfig& c, Index rank) {
  const auto counts = pipeline::load_counts(c);
  if (rank <= 0) {
    auto sel = c;
    sel.resamples = 0;
    pipeline::AnalysisOptions opts;
    opts.run_qfit = false;
    rank = pipeline::analyze_counts(counts, sel, opts).ranks.selected_rank;
  }
  const auto mc = pipeline::monte_carlo_errorbars(counts, c, rank);
  io::json j = pipeline::mc_to_json(mc);
  j["rank"] = rank;
  io::write_atomic(out_dir(c) / "mc.json", io::dump_json(j));
  std::printf("rank %ld: %d/%d resamples, volume ratio sd %.3g\n", static_cast<long>(rank), mc.completed,
              mc.requested, mc.std.volume_ratio);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GPT tomography: rank selection, realized and consistent spaces, noncontextuality bounds"};
  app.require_subcommand(1);
  Flags f;
  Index mc_rank = 0;
  std::string report_path;

  auto* synth_cmd = app.add_subcommand("synth", "simulate a counts file");
  add_common(synth_cmd, f, true);

  auto* fit_cmd = app.add_subcommand("fit", "select the rank and fit");
  add_common(fit_cmd, f, true);
  add_analysis(fit_cmd, f);

  auto* analyze_cmd = app.add_subcommand("analyze", "full pipeline and report");
  add_common(analyze_cmd, f, true);
  add_analysis(analyze_cmd, f);
  analyze_cmd->add_option("--resamples", f.resamples, "Monte Carlo resamples (default 100)");

  auto* mc_cmd = app.add_subcommand("mc", "Monte Carlo error bars");
  add_common(mc_cmd, f, true);
  add_analysis(mc_cmd, f);
  mc_cmd->add_option("--resamples", f.resamples, "Monte Carlo resamples (default 100)");
  mc_cmd->add_option("--rank", mc_rank, "fixed rank (default: selected)");

  auto* report_cmd = app.add_subcommand("report", "plot tables from a report JSON");
  report_cmd->add_option("--report", report_path, "report.json")->required();
  report_cmd->add_option("--out", f.out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (report_cmd->parsed()) {
      pipeline::emit_plot_data(io::json::parse(io::read_file(report_path)), f.out.empty() ? "." : f.out);
      return 0;
    }
    CLI::App* cmd = app.get_subcommands().front();
    const auto config = build_config(f, cmd);
    if (synth_cmd->parsed()) return cmd_synth(config);
    if (fit_cmd->parsed()) return cmd_fit(config);
    if (analyze_cmd->parsed()) return cmd_analyze(config);
    if (mc_cmd->parsed()) return cmd_mc(config, mc_rank);
  } catch (const pipeline::StageError& e) {
    std::fprintf(stderr, "error [%s/%s]: %s\n", e.stage().c_str(), e.code().c_str(), e.what());
    return e.exit_code();
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "error [validation]: %s\n", e.what());
    return 2;
  } catch (const io::json::exception& e) {
    std::fprintf(stderr, "error [validation]: %s\n", e.what());
    return 2;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "error [numerical]: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
