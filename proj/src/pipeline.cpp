#include "gpt/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <mutex>
#include <thread>

namespace gpt::pipeline {

namespace {

using io::json;

template <typename F>
auto stage(const std::string& name, F&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const ValidationError& e) {
    throw StageError(name, "validation", e.what());
  } catch (const NumericalError& e) {
    throw StageError(name, "numerical", e.what());
  } catch (const std::exception& e) {
    throw StageError(name, "numerical", e.what());
  }
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

const char* design_name(synth::DesignMode d) { return d == synth::DesignMode::full_grid ? "full_grid" : "fiducial"; }
const char* geometry_name(synth::Geometry g) { return g == synth::Geometry::sphere ? "sphere" : "disk"; }
const char* count_model_name(synth::CountModel c) { return c == synth::CountModel::poisson ? "poisson" : "binomial"; }
const char* init_name(wlra::InitStrategy s) { return s == wlra::InitStrategy::svd ? "svd" : "random"; }

template <typename T>
T pick(const std::string& value, std::initializer_list<std::pair<const char*, T>> options, const char* field) {
  for (const auto& [name, v] : options)
    if (value == name) return v;
  throw ValidationError(std::string("unknown value '") + value + "' for " + field);
}

double sample_std(const std::vector<double>& x) {
  if (x.size() < 2) return 0.0;
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

json polytope_json(const polytope::Polytope& p) {
  json j;
  j["dim"] = p.dim;
  j["vertices"] = io::to_json(p.vertices);
  j["num_vertices"] = p.num_vertices();
  j["num_facets"] = p.num_facets();
  return j;
}

std::string csv_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string matrix_csv(const MatrixXd& m, const std::vector<std::string>& header) {
  std::string out;
  for (std::size_t c = 0; c < header.size(); ++c) out += (c ? "," : "") + header[c];
  out += "\n";
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index c = 0; c < m.cols(); ++c) out += (c ? "," : "") + csv_number(m(i, c));
    out += "\n";
  }
  return out;
}

std::vector<std::string> axis_names(const char* prefix, Index first, Index count) {
  std::vector<std::string> out;
  for (Index c = 0; c < count; ++c) out.push_back(prefix + std::to_string(first + c));
  return out;
}

// Runs body(i) for i in [0, count) on a small pool; results must be written by
// index so the outcome does not depend on scheduling.
template <typename Body>
void parallel_for(int count, unsigned threads, Body body) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max(count, 1)));
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (int i = next++; i < count; i = next++) body(i);
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
}

}  // namespace

void PipelineConfig::validate() const {
  if (ranks.empty()) throw ValidationError("candidate ranks must be non-empty");
  for (Index k : ranks)
    if (k < 1) throw ValidationError("candidate ranks must be positive");
  if (resamples < 0) throw ValidationError("resamples must be >= 0");
  fit.validate();
  if (input.empty()) {
    if (synth.m < 1 || synth.n < 2) throw ValidationError("synth spec needs m >= 1 and n >= 2");
    if (!(synth.counts_per_cell > 0)) throw ValidationError("counts per cell must be positive");
  }
}

std::vector<Index> parse_ranks(const std::string& text) {
  std::vector<Index> out;
  std::size_t start = 0;
  auto parse_one = [&](const std::string& s) -> Index {
    std::size_t used = 0;
    long v = 0;
    try {
      v = std::stol(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != s.size() || s.empty()) throw ValidationError("bad rank list '" + text + "'");
    return static_cast<Index>(v);
  };
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    const std::string part = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    const std::size_t dots = part.find("..");
    if (dots != std::string::npos) {
      const Index a = parse_one(part.substr(0, dots)), b = parse_one(part.substr(dots + 2));
      if (b < a) throw ValidationError("bad rank range '" + part + "'");
      for (Index k = a; k <= b; ++k) out.push_back(k);
    } else {
      out.push_back(parse_one(part));
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  if (out.empty()) throw ValidationError("empty rank list");
  return out;
}

json config_to_json(const PipelineConfig& c) {
  json j;
  j["input"] = c.input;
  j["synth"] = {{"m", c.synth.m},
                {"n", c.synth.n},
                {"w", c.synth.w},
                {"wp", c.synth.wp},
                {"counts_per_cell", c.synth.counts_per_cell},
                {"design", design_name(c.synth.design)},
                {"fiducials", c.synth.fiducials},
                {"geometry", geometry_name(c.synth.geometry)},
                {"count_model", count_model_name(c.synth.count_model)}};
  j["ranks"] = c.ranks;
  j["fit"] = {{"max_iterations", c.fit.max_iterations},
              {"delta_chi2_tol", c.fit.delta_chi2_tol},
              {"restarts", c.fit.restarts},
              {"qp_tolerance", c.fit.qp_tolerance},
              {"init_strategy", init_name(c.fit.init_strategy)}};
  j["resamples"] = c.resamples;
  j["seed"] = c.seed;
  return j;
}

PipelineConfig config_from_json(const json& j, PipelineConfig c) {
  if (!j.is_object()) throw ValidationError("config must be a JSON object");
  auto check_keys = [](const json& obj, std::initializer_list<const char*> allowed, const char* where) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
      if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return it.key() == a; }))
        throw ValidationError(std::string("unknown config key '") + it.key() + "' in " + where);
  };
  try {
    check_keys(j, {"input", "synth", "ranks", "fit", "resamples", "out", "seed", "threads"}, "config");
    if (j.contains("input")) c.input = j["input"].get<std::string>();
    if (j.contains("out")) c.out_dir = j["out"].get<std::string>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("threads")) c.threads = j["threads"].get<unsigned>();
    if (j.contains("resamples")) c.resamples = j["resamples"].get<int>();
    if (j.contains("ranks")) {
      const auto& r = j["ranks"];
      c.ranks = r.is_string() ? parse_ranks(r.get<std::string>()) : r.get<std::vector<Index>>();
    }
    if (j.contains("synth")) {
      const auto& s = j["synth"];
      check_keys(s, {"m", "n", "w", "wp", "counts_per_cell", "design", "fiducials", "geometry", "count_model"},
                 "synth");
      if (s.contains("m")) c.synth.m = s["m"].get<Index>();
      if (s.contains("n")) c.synth.n = s["n"].get<Index>();
      if (s.contains("w")) c.synth.w = s["w"].get<double>();
      if (s.contains("wp")) c.synth.wp = s["wp"].get<double>();
      if (s.contains("counts_per_cell")) c.synth.counts_per_cell = s["counts_per_cell"].get<double>();
      if (s.contains("fiducials")) c.synth.fiducials = s["fiducials"].get<Index>();
      if (s.contains("design"))
        c.synth.design = pick<synth::DesignMode>(
            s["design"].get<std::string>(),
            {{"full_grid", synth::DesignMode::full_grid}, {"fiducial", synth::DesignMode::fiducial}}, "design");
      if (s.contains("geometry"))
        c.synth.geometry = pick<synth::Geometry>(
            s["geometry"].get<std::string>(),
            {{"sphere", synth::Geometry::sphere}, {"disk", synth::Geometry::disk}}, "geometry");
      if (s.contains("count_model"))
        c.synth.count_model = pick<synth::CountModel>(
            s["count_model"].get<std::string>(),
            {{"poisson", synth::CountModel::poisson}, {"binomial", synth::CountModel::binomial}}, "count_model");
    }
    if (j.contains("fit")) {
      const auto& f = j["fit"];
      check_keys(f, {"max_iterations", "delta_chi2_tol", "restarts", "qp_tolerance", "init_strategy"}, "fit");
      if (f.contains("max_iterations")) c.fit.max_iterations = f["max_iterations"].get<int>();
      if (f.contains("delta_chi2_tol")) c.fit.delta_chi2_tol = f["delta_chi2_tol"].get<double>();
      if (f.contains("restarts")) c.fit.restarts = f["restarts"].get<int>();
      if (f.contains("qp_tolerance")) c.fit.qp_tolerance = f["qp_tolerance"].get<double>();
      if (f.contains("init_strategy"))
        c.fit.init_strategy = pick<wlra::InitStrategy>(
            f["init_strategy"].get<std::string>(),
            {{"svd", wlra::InitStrategy::svd}, {"random", wlra::InitStrategy::random}}, "init_strategy");
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  return c;
}

synth::CountTable synthesize_counts(const SynthSpec& spec, std::uint64_t seed) {
  const auto design = spec.design == synth::DesignMode::full_grid
                          ? synth::ExperimentDesign::full_grid(spec.m, spec.n)
                          : synth::ExperimentDesign::fiducial(spec.m, spec.n, spec.fiducials);
  const auto truth = synth::build_ground_truth(spec.m, spec.n, spec.w, spec.wp, design, spec.geometry,
                                               spec.counts_per_cell);
  return synth::sample_counts(truth.second, design, spec.counts_per_cell, seed, spec.count_model);
}

synth::CountTable load_counts(const PipelineConfig& config) {
  return stage("load", [&]() {
    config.validate();
    return config.input.empty() ? synthesize_counts(config.synth, config.seed) : io::read_counts_csv(config.input);
  });
}

Report analyze_counts(const synth::CountTable& counts, const PipelineConfig& config, const AnalysisOptions& options) {
  Report r;
  r.config = config;
  r.frequencies = stage("load", [&]() {
    config.validate();
    auto f = synth::frequencies_from_counts(counts);
    f.validate();
    return f;
  });

  wlra::FitOptions fit_opts = config.fit;
  fit_opts.seed = config.seed;
  r.ranks = stage("select_rank", [&]() {
    std::vector<wlra::FitResult> fits;
    const std::vector<Index> ranks = options.fixed_rank ? std::vector<Index>{*options.fixed_rank} : config.ranks;
    auto report = modelselect::select_rank(r.frequencies, ranks, fit_opts, &fits);
    for (std::size_t i = 0; i < ranks.size(); ++i)
      if (ranks[i] == report.selected_rank) r.fit = fits[i];
    return report;
  });
  for (const auto& c : r.ranks.candidates) {
    if (c.k == r.ranks.selected_rank && c.aicc_caveat)
      r.warnings.push_back("selected rank has r_k > 0.4 x measured cells; AIC_C correction would matter");
    if (!c.converged) r.warnings.push_back("rank " + std::to_string(c.k) + " fit did not converge");
  }

  r.model = stage("decompose", [&]() {
    return decompose::extended_decompose(MatrixXd(r.fit.probabilities()), r.ranks.selected_rank);
  });
  if (r.model.truncated)
    r.warnings.push_back("decomposition truncated from rank " + std::to_string(r.model.requested_rank) + " to " +
                         std::to_string(r.model.rank));

  stage("duals", [&]() {
    r.s_real = polytope::realized_states(r.model.model.states);
    r.e_real = polytope::realized_effects(r.model.model.effects);
    r.s_cons = polytope::dual_states(r.e_real);
    r.e_cons = polytope::dual_effects(r.s_real);
    return 0;
  });
  check_inclusion_chain(r);

  r.bounds = stage("bounds", [&]() {
    return bounds::analyze_bounds(r.s_real, r.e_real, r.s_cons, r.e_cons);
  });
  for (const auto& w : r.bounds.warnings) r.warnings.push_back(w);
  if (r.bounds.reciprocity_states > 1e-6)
    r.warnings.push_back("w2p * w1 departs from 1 by " + std::to_string(r.bounds.reciprocity_states));
  if (r.bounds.reciprocity_effects > 1e-6)
    r.warnings.push_back("w2 * w1p departs from 1 by " + std::to_string(r.bounds.reciprocity_effects) +
                         " (a facet of the realized effect space avoids both 0 and u)");

  if (options.run_qfit) {
    r.shrink = stage("qfit", [&]() { return qfit::quantum_shrink_factor(r.s_real, r.e_real); });
    if (!r.shrink->monotone) r.warnings.push_back("shrink feasibility not monotone along the bisection trace");
  }
  return r;
}

void check_inclusion_chain(const Report& r) {
  constexpr double slack = 1e-7;
  for (Index i = 0; i < r.s_real.poly.num_vertices(); ++i)
    if (!polytope::contains(r.s_cons.poly, r.s_real.poly.vertices.row(i).transpose(), slack))
      throw StageError("inclusion", "numerical",
                       "realized state vertex " + std::to_string(i) + " lies outside the consistent state space");
  for (Index i = 0; i < r.e_real.poly.num_vertices(); ++i)
    if (!polytope::contains(r.e_cons.poly, r.e_real.poly.vertices.row(i).transpose(), slack))
      throw StageError("inclusion", "numerical",
                       "realized effect vertex " + std::to_string(i) + " lies outside the consistent effect space");
}

McSummary monte_carlo_errorbars(const synth::CountTable& counts, const PipelineConfig& config, Index rank) {
  return stage("monte_carlo", [&]() {
    if (config.resamples < 2) throw ValidationError("Monte Carlo needs at least 2 resamples");
    const int R = config.resamples;
    std::vector<std::optional<bounds::BoundsReport>> results(static_cast<std::size_t>(R));
    AnalysisOptions opts;
    opts.fixed_rank = rank;
    opts.run_qfit = false;
    parallel_for(R, config.threads, [&](int i) {
      const auto seed = synth::cell_seed(config.seed ^ 0x6d6f6e7465636172ULL, i, 0);
      try {
        auto resampled = synth::resample_counts(counts, seed);
        PipelineConfig c = config;
        c.seed = seed;
        results[static_cast<std::size_t>(i)] = analyze_counts(resampled, c, opts).bounds;
      } catch (const std::exception&) {
        results[static_cast<std::size_t>(i)].reset();
      }
    });
    McSummary mc;
    mc.requested = R;
    std::vector<double> w1, w1p, w2, w2p, lb, ub, eps;
    for (const auto& b : results) {
      if (!b) {
        ++mc.dropped;
        continue;
      }
      ++mc.completed;
      w1.push_back(b->w1);
      w1p.push_back(b->w1p);
      w2.push_back(b->w2);
      w2p.push_back(b->w2p);
      lb.push_back(b->lb_cmin);
      ub.push_back(b->ub_cmax);
      eps.push_back(b->epsilon_bound);
      mc.volume_ratios.push_back(b->volume_ratio);
    }
    if (mc.dropped * 10 > R)
      throw NumericalError(std::to_string(mc.dropped) + " of " + std::to_string(R) + " resamples failed");
    if (mc.completed < 2) throw NumericalError("fewer than 2 resamples completed");
    mc.std = {sample_std(w1), sample_std(w1p), sample_std(w2),  sample_std(w2p),
              sample_std(lb), sample_std(ub),  sample_std(mc.volume_ratios), sample_std(eps)};
    return mc;
  });
}

Report run_analysis(const PipelineConfig& config) {
  const auto counts = load_counts(config);
  Report r = analyze_counts(counts, config);
  if (config.resamples > 0) {
    r.mc = monte_carlo_errorbars(counts, config, r.ranks.selected_rank);
    r.bounds.mc_std = r.mc->std;
  }
  if (!config.out_dir.empty()) stage("write", [&]() {
      write_artifacts(r, counts, config.out_dir);
      return 0;
    });
  return r;
}

json rank_report_to_json(const modelselect::RankReport& rr) {
  json j;
  j["m"] = rr.m;
  j["n"] = rr.n;
  j["measured_cells"] = rr.measured_cells;
  j["selected_rank"] = rr.selected_rank;
  json cands = json::array();
  for (const auto& c : rr.candidates) {
    cands.push_back({{"k", c.k},
                     {"chi2", c.chi2},
                     {"dof", c.dof},
                     {"chi2_lo", c.lo},
                     {"chi2_hi", c.hi},
                     {"parameters", c.r_k},
                     {"aic", c.aic},
                     {"delta_aic", c.delta},
                     {"weight", c.weight},
                     {"log10_weight", c.log10_weight},
                     {"identifiable", c.identifiable},
                     {"outside_interval", c.outside_interval},
                     {"underfit", c.underfit},
                     {"aicc_caveat", c.aicc_caveat},
                     {"converged", c.converged}});
  }
  j["candidates"] = cands;
  return j;
}

json mc_to_json(const McSummary& mc) {
  return {{"requested", mc.requested},
          {"completed", mc.completed},
          {"dropped", mc.dropped},
          {"volume_ratios", mc.volume_ratios},
          {"std",
           {{"w1", mc.std.w1},
            {"w1p", mc.std.w1p},
            {"w2", mc.std.w2},
            {"w2p", mc.std.w2p},
            {"lb_cmin", mc.std.lb_cmin},
            {"ub_cmax", mc.std.ub_cmax},
            {"volume_ratio", mc.std.volume_ratio},
            {"epsilon_bound", mc.std.epsilon_bound}}}};
}

json report_to_json(const Report& r, bool with_timestamp) {
  json j;
  const json cfg = config_to_json(r.config);
  json prov = {{"config", cfg},
               {"config_hash", hex64(fnv1a(cfg.dump()))},
               {"seed", r.config.seed},
               {"versions",
                {{"gpt_tomo", kVersion},
                 {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                               std::to_string(EIGEN_MINOR_VERSION)},
                 {"compiler", __VERSION__}}}};
  if (with_timestamp) prov["timestamp"] = utc_timestamp();
  j["provenance"] = prov;

  j["rank_selection"] = rank_report_to_json(r.ranks);
  j["fit"] = {{"rank", r.ranks.selected_rank},
              {"chi2", r.fit.chi2},
              {"iterations", r.fit.iterations},
              {"converged", r.fit.converged},
              {"best_restart", r.fit.best_restart},
              {"per_restart_chi2", r.fit.per_restart_chi2},
              {"underdetermined", r.fit.underdetermined},
              {"monotonicity_violations", r.fit.monotonicity_violations}};
  j["model"] = {{"rank", r.model.rank},
                {"requested_rank", r.model.requested_rank},
                {"truncated", r.model.truncated},
                {"singular_values", io::to_json(r.model.singular_values)},
                {"residual", r.model.residual},
                {"states", io::to_json(r.model.model.states)},
                {"effects", io::to_json(MatrixXd(r.model.model.effects.transpose()))}};
  j["polytopes"] = {{"states_realized", polytope_json(r.s_real.poly)},
                    {"states_consistent", polytope_json(r.s_cons.poly)},
                    {"effects_realized", polytope_json(r.e_real.poly)},
                    {"effects_consistent", polytope_json(r.e_cons.poly)}};

  const auto& b = r.bounds;
  json bj = {{"w1", b.w1},
             {"w1p", b.w1p},
             {"w2", b.w2},
             {"w2p", b.w2p},
             {"w1_w1p", b.w1 * b.w1p},
             {"lb_cmin", b.lb_cmin},
             {"ub_cmax", b.ub_cmax},
             {"ub_bmax", b.ub_bmax},
             {"c_nc", b.c_nc},
             {"c_q", b.c_q},
             {"b_loc", b.b_loc},
             {"b_q", b.b_q},
             {"volume_ratio", b.volume_ratio},
             {"epsilon_bound", b.epsilon_bound},
             {"reciprocity_states", b.reciprocity_states},
             {"reciprocity_effects", b.reciprocity_effects},
             {"centroid_offset", b.centroid_offset}};
  if (b.mc_std)
    bj["mc_std"] = {{"w1", b.mc_std->w1},
                    {"w1p", b.mc_std->w1p},
                    {"w2", b.mc_std->w2},
                    {"w2p", b.mc_std->w2p},
                    {"lb_cmin", b.mc_std->lb_cmin},
                    {"ub_cmax", b.mc_std->ub_cmax},
                    {"volume_ratio", b.mc_std->volume_ratio},
                    {"epsilon_bound", b.mc_std->epsilon_bound}};
  j["bounds"] = bj;

  if (r.shrink) {
    json trace = json::array();
    for (const auto& t : r.shrink->trace) {
      json e = {{"epsilon", t.epsilon}, {"feasible", t.feasible}, {"t_upper", t.t_upper}};
      e["t_lower"] = std::isfinite(t.t_lower) ? json(t.t_lower) : json(nullptr);
      trace.push_back(e);
    }
    j["shrink"] = {{"epsilon_star", r.shrink->epsilon_star},
                   {"Q", io::to_json(r.shrink->Q)},
                   {"monotone", r.shrink->monotone},
                   {"trace", trace}};
  }
  if (r.mc) j["monte_carlo"] = mc_to_json(*r.mc);

  json freq = json::array();
  for (Index i = 0; i < r.frequencies.rows(); ++i) {
    json row = json::array();
    for (Index c = 0; c < r.frequencies.cols(); ++c)
      row.push_back(r.frequencies.mask(i, c) ? json(r.frequencies.values(i, c)) : json(nullptr));
    freq.push_back(row);
  }
  j["frequencies"] = freq;
  j["warnings"] = r.warnings;
  return j;
}

void write_artifacts(const Report& r, const synth::CountTable& counts, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const json j = report_to_json(r);
  io::write_atomic(dir / "counts.csv", io::format_counts_csv(counts));
  io::write_atomic(dir / "report.json", io::dump_json(j));
  emit_plot_data(j, dir);
}

void emit_plot_data(const json& report, const std::filesystem::path& dir) {
  try {
    std::filesystem::create_directories(dir);
    std::string ranks = "k,chi2,chi2_lo,chi2_hi,aic,weight\n";
    for (const auto& c : report.at("rank_selection").at("candidates"))
      ranks += std::to_string(c.at("k").get<Index>()) + "," + csv_number(c.at("chi2").get<double>()) + "," +
               csv_number(c.at("chi2_lo").get<double>()) + "," + csv_number(c.at("chi2_hi").get<double>()) + "," +
               csv_number(c.at("aic").get<double>()) + "," + csv_number(c.at("weight").get<double>()) + "\n";
    io::write_atomic(dir / "rank_table.csv", ranks);

    const auto& polys = report.at("polytopes");
    for (const char* name : {"states_realized", "states_consistent"}) {
      const MatrixXd v = io::matrix_from_json(polys.at(name).at("vertices"));
      io::write_atomic(dir / (std::string(name) + ".csv"), matrix_csv(v, axis_names("x", 1, v.cols())));
    }
    for (const char* name : {"effects_realized", "effects_consistent"}) {
      const MatrixXd v = io::matrix_from_json(polys.at(name).at("vertices"));
      io::write_atomic(dir / (std::string(name) + ".csv"), matrix_csv(v, axis_names("e", 0, v.cols())));
      for (Index drop = 0; drop < v.cols(); ++drop) {
        MatrixXd proj(v.rows(), v.cols() - 1);
        std::vector<std::string> header;
        for (Index c = 0, t = 0; c < v.cols(); ++c) {
          if (c == drop) continue;
          proj.col(t++) = v.col(c);
          header.push_back("e" + std::to_string(c));
        }
        io::write_atomic(dir / (std::string(name) + "_drop" + std::to_string(drop) + ".csv"),
                         matrix_csv(proj, header));
      }
    }

    std::string heat;
    for (const auto& row : report.at("frequencies")) {
      bool first = true;
      for (const auto& cell : row) {
        if (!first) heat += ",";
        first = false;
        if (!cell.is_null()) heat += csv_number(cell.get<double>());
      }
      heat += "\n";
    }
    io::write_atomic(dir / "heatmap.csv", heat);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("report JSON is missing fields: ") + e.what());
  }
}

}  // namespace gpt::pipeline
