#include "runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <openssl/evp.h>

#include "nslab/csv.hpp"
#include "nslab/deviations.hpp"
#include "nslab/ensemble_io.hpp"
#include "nslab/errors.hpp"
#include "nslab/growth.hpp"
#include "nslab/localization.hpp"
#include "nslab/parallel.hpp"
#include "nslab/spectrum.hpp"

namespace nslab::cli {
namespace {

using nlohmann::json;

json fit_json(const LineFit& f) {
  return {{"slope", f.slope},
          {"intercept", f.intercept},
          {"slope_stderr", f.slope_stderr},
          {"slope_ci", {f.slope_ci.lo, f.slope_ci.hi}},
          {"residual_rms", f.residual_rms},
          {"points", f.points}};
}

json window_json(Window w) { return json::array({w.a, w.b}); }

std::vector<Window> windows_from(std::int64_t start, const std::vector<std::int64_t>& lengths) {
  std::vector<Window> out;
  for (std::int64_t n : lengths) out.push_back({start, start + n - 1});
  return out;
}

std::vector<Window> triple_windows(const std::vector<std::int64_t>& ns) {
  std::vector<Window> out;
  for (std::int64_t n : ns) out.push_back({n + 1, 3 * n + 1});
  return out;
}

}  // namespace

RunContext::RunContext(ExperimentConfig cfg, const RunOptions& opts)
    : cfg_(std::move(cfg)),
      seed_(opts.seed.value_or(cfg_.seed)),
      threads_(std::max(1u, opts.threads)),
      out_(opts.out.value_or(cfg_.output)) {
  std::filesystem::create_directories(out_);
}

void RunContext::write(const std::string& name, const std::function<void(std::ostream&)>& writer) {
  const auto path = out_ / name;
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path.string());
  writer(f);
  if (!f) throw Error("error while writing " + path.string());
  if (std::find(artifacts_.begin(), artifacts_.end(), name) == artifacts_.end()) {
    artifacts_.push_back(name);
  }
}

void RunContext::write_json(const std::string& name, const json& j) {
  write(name, [&](std::ostream& o) { o << j.dump(2) << '\n'; });
}

json run_audit(RunContext& ctx) {
  const auto& cfg = ctx.config();
  SamplingOptions opts;
  opts.seed = ctx.seed();
  opts.samples = cfg.audit.samples;
  const AuditReport report = audit_assumptions(cfg.ensemble, cfg.audit.sites, opts);
  ctx.write_json("audit.json", to_json(report));
  ctx.write("audit.csv", [&](std::ostream& o) { write_audit_csv(o, report); });
  std::size_t moment_failures = 0, variance_failures = 0;
  for (const auto& s : report.sites) {
    moment_failures += !s.moment_ok;
    variance_failures += !s.variance_ok;
  }
  return {{"verdict", report.verdict()},
          {"sites", window_json(cfg.audit.sites)},
          {"moments_pass", report.moments_pass},
          {"variance_pass", report.variance_pass},
          {"moment_failures", moment_failures},
          {"variance_failures", variance_failures},
          {"first_variance_failure",
           report.first_variance_failure ? json(*report.first_variance_failure) : json(nullptr)}};
}

json run_growth(RunContext& ctx) {
  const auto& cfg = ctx.config();
  const auto& gc = cfg.growth;
  const MonteCarloOptions mc{gc.trials, ctx.seed(), ctx.threads()};
  const auto windows = windows_from(gc.start, gc.lengths);
  const auto grid = cfg.energy.values();
  const GrowthTable table = estimate_growth(cfg.ensemble, windows, grid, mc);
  ctx.write("growth.csv", [&](std::ostream& o) { write_growth_csv(o, table); });

  json summary;
  summary["trials"] = gc.trials;
  summary["energy_grid"] = grid;
  std::set<std::int64_t> distinct(gc.lengths.begin(), gc.lengths.end());
  if (distinct.size() >= 3) {
    const RateEstimate rate = estimate_h(table);
    ctx.write("rates.csv", [&](std::ostream& o) {
      CsvWriter csv(o, {"window_a", "window_b", "E", "per_site", "conservative"});
      for (const auto& p : rate.points) {
        csv.row(p.window.a, p.window.b, p.energy, p.per_site, p.conservative);
      }
    });
    summary["h_hat"] = rate.h_hat;
    summary["flag"] = rate.flag();
    summary["last_relative_change"] = rate.last_relative_change;
    summary["stabilized"] = rate.stabilized;
    double min_per_site = INFINITY;
    for (const auto& p : rate.points) min_per_site = std::min(min_per_site, p.per_site);
    summary["min_per_site"] = min_per_site;
  } else {
    summary["h_hat"] = nullptr;
    summary["flag"] = "fewer than three window lengths";
  }

  const auto eq_grid = cfg.energy.values(gc.equicontinuity_points);
  const GrowthTable eq_table =
      estimate_growth(cfg.ensemble, windows_from(gc.start, gc.equicontinuity_lengths), eq_grid,
                      {gc.equicontinuity_trials, ctx.seed(), ctx.threads()});
  const Equicontinuity eq = equicontinuity_modulus(eq_table);
  ctx.write("equicontinuity_growth.csv", [&](std::ostream& o) { write_growth_csv(o, eq_table); });
  ctx.write("equicontinuity.csv", [&](std::ostream& o) {
    CsvWriter csv(o, {"window_a", "window_b", "spacing", "modulus"});
    for (std::size_t w = 0; w < eq_table.windows.size(); ++w) {
      csv.row(eq_table.windows[w].a, eq_table.windows[w].b, eq.spacing, eq.per_window[w]);
    }
  });
  json per = json::array();
  for (std::size_t w = 0; w < eq_table.windows.size(); ++w) {
    per.push_back({{"n", eq_table.windows[w].length()}, {"modulus", eq.per_window[w]}});
  }
  summary["equicontinuity"] = {
      {"spacing", eq.spacing},
      {"per_window", per},
      {"sup", eq.sup},
      {"growth_last_over_first",
       eq.per_window.front() > 0 ? json(eq.per_window.back() / eq.per_window.front()) : json(nullptr)}};

  const auto& ad = gc.additivity;
  const AdditivityDefect defect =
      additivity_defect(cfg.ensemble, ad[0], ad[1], ad[2], gc.additivity_energy,
                        {gc.additivity_trials, ctx.seed(), ctx.threads()});
  summary["additivity"] = {{"left", window_json(defect.left)},
                           {"right", window_json(defect.right)},
                           {"energy", defect.energy},
                           {"mean_defect", defect.mean},
                           {"stderr", defect.std_error},
                           {"min_defect", defect.min},
                           {"pointwise_ok", defect.min >= -1e-8},
                           {"trials", defect.trials}};
  return summary;
}

json run_deviations(RunContext& ctx) {
  const auto& cfg = ctx.config();
  const auto& dc = cfg.deviations;
  json summary;

  // Exceedance curves against a reference with 10x the trials.
  const GrowthTable ref = estimate_growth(cfg.ensemble, windows_from(1, dc.lengths),
                                          std::vector<double>{dc.energy},
                                          {dc.reference_trials, ctx.seed(), ctx.threads()});
  ctx.write("exceedance_reference.csv", [&](std::ostream& o) { write_growth_csv(o, ref); });
  const double l_eps = ref.interpolate(ref.window_index({1, dc.epsilon_length}), dc.energy);
  const double eps_exc = dc.epsilon_fraction * l_eps / static_cast<double>(dc.epsilon_length);
  summary["exceedance_epsilon"] = eps_exc;
  json curves = json::object();
  for (Statistic st : {Statistic::norm, Statistic::image, Statistic::entry}) {
    ExceedanceOptions eo;
    eo.statistic = st;
    eo.v0 = dc.v0;
    eo.mc = {dc.trials, ctx.seed(), ctx.threads()};
    const ExceedanceCurve c = exceedance(cfg.ensemble, dc.lengths, dc.energy, eps_exc, ref, eo);
    ctx.write("exceedance_" + to_string(st) + ".csv",
              [&](std::ostream& o) { write_exceedance_csv(o, c); });
    json cj{{"fitted", c.fitted}, {"monotone", c.monotone}, {"fit_range", c.fit_range}};
    if (c.fitted) {
      cj["fit"] = fit_json(c.fit);
      cj["delta_hat"] = c.delta_hat;
      cj["decay_significant"] = c.fit.slope_ci.hi < 0.0;
    }
    curves[to_string(st)] = cj;
  }
  summary["exceedance"] = curves;

  // Reference for the deviation-set experiments on [n+1, 3n+1].
  std::set<std::int64_t> ns(dc.measure_lengths.begin(), dc.measure_lengths.end());
  ns.insert(dc.singular_lengths.begin(), dc.singular_lengths.end());
  ns.insert(dc.scan_n);
  const std::vector<std::int64_t> ref_ns(ns.begin(), ns.end());
  const auto grid = cfg.energy.values(dc.grid_points);
  const GrowthTable scan_ref = estimate_growth(cfg.ensemble, triple_windows(ref_ns), grid,
                                               {dc.scan_reference_trials, ctx.seed(), ctx.threads()});
  ctx.write("scan_reference.csv", [&](std::ostream& o) { write_growth_csv(o, scan_ref); });
  double h_hat = 0.0;
  if (ref_ns.size() >= 3) h_hat = estimate_h(scan_ref).h_hat;
  summary["h_hat"] = h_hat;

  // B- structure scans.
  const Window sw{dc.scan_n + 1, 3 * dc.scan_n + 1};
  const double eps_scan = dc.scan_epsilon_h * h_hat;
  const ReferenceCurve scan_curve = ReferenceCurve::from_table(scan_ref, sw);
  std::vector<DeviationScan> scans(dc.scans);
  parallel_for(dc.scans, ctx.threads(), [&](std::size_t t) {
    const Potential pot = realize(cfg.ensemble, sw, ctx.seed(), StreamTag::deviation_scan, t);
    scans[t] = scan_deviation_set(pot, sw, eps_scan, grid, scan_curve);
  });
  std::size_t violations = 0, intervals = 0, max_count = 0;
  json scans_json = json::array();
  for (const auto& s : scans) {
    violations += s.violations();
    intervals += s.intervals.size();
    max_count = std::max(max_count, s.intervals.size());
    json ivs = json::array();
    for (const auto& iv : s.intervals) {
      json ids = json::array();
      for (std::size_t id : iv.eigenvalue_ids) ids.push_back({{"id", id}, {"eigenvalue", s.eigenvalues[id]}});
      ivs.push_back({{"lo", iv.lo}, {"hi", iv.hi}, {"clipped_length", iv.clipped_length}, {"eigenvalues", ids}});
    }
    scans_json.push_back({{"window", window_json(s.window)},
                          {"epsilon", s.epsilon},
                          {"J", {s.j_min, s.j_max}},
                          {"total_length", s.total_length},
                          {"intervals", ivs}});
  }
  ctx.write_json("scans.json", scans_json);
  summary["scans"] = {{"window", window_json(sw)},
                      {"epsilon", eps_scan},
                      {"count", dc.scans},
                      {"intervals", intervals},
                      {"max_intervals", max_count},
                      {"window_length", sw.length()},
                      {"violations", violations}};

  // Measure trend of B-.
  const double eps_measure = dc.measure_epsilon_h * h_hat;
  const MeasureTrend trend = measure_trend(cfg.ensemble, dc.measure_lengths, eps_measure, grid, scan_ref,
                                           {dc.measure_trials, ctx.seed(), ctx.threads()});
  ctx.write("measure.csv", [&](std::ostream& o) { write_measure_csv(o, trend); });
  json mj{{"epsilon", eps_measure}, {"fitted", trend.fitted}};
  if (trend.fitted) {
    mj["fit"] = fit_json(trend.fit);
    mj["decreasing"] = trend.fit.slope_ci.hi < 0.0;
  }
  summary["measure"] = mj;

  // Singular points lie in B-.
  const double eps_sing = dc.singular_epsilon_h * h_hat;
  const SingularityReport sing = singular_implies_deviation(
      cfg.ensemble, dc.singular_lengths, eps_sing, h_hat, dc.singular_n_min, cfg.energy.values(),
      scan_ref, {dc.singular_trials, ctx.seed(), ctx.threads()});
  ctx.write("singular.csv", [&](std::ostream& o) {
    CsvWriter csv(o, {"n", "C", "tested", "singular", "violations", "eigenvalue_hits"});
    for (const auto& c : sing.checks) {
      csv.row(c.n, c.c, c.tested, c.singular, c.violations, c.eigenvalue_hits);
    }
  });
  summary["singular"] = {{"epsilon", eps_sing},
                         {"C", h_hat - 6.0 * eps_sing},
                         {"n_min", dc.singular_n_min},
                         {"violations_above_n_min", sing.violations_above_n_min()}};
  return summary;
}

json run_spectrum(RunContext& ctx) {
  const auto& cfg = ctx.config();
  const Window w = cfg.spectrum.window;
  const Potential pot = realize(cfg.ensemble, w, ctx.seed(), StreamTag::localization, 0);
  const TruncatedOperator op = TruncatedOperator::from(pot, w);
  const SpectralData spec = diagonalize(op, ctx.threads());
  ctx.write("eigenvalues.csv", [&](std::ostream& o) {
    CsvWriter csv(o, {"index", "eigenvalue"});
    for (std::size_t j = 0; j < spec.values.size(); ++j) csv.row(j, spec.values[j]);
  });
  if (cfg.spectrum.eigenvectors) {
    ctx.write_json("eigenvectors.json", {{"window", window_json(w)},
                                         {"eigenvalues", spec.values},
                                         {"vectors", spec.vectors}});
  }
  const double scale = op.norm_bound();
  return {{"window", window_json(w)},
          {"size", spec.values.size()},
          {"norm_bound", scale},
          {"min_gap", spec.values.size() > 1 ? json(spec.min_gap()) : json(nullptr)},
          {"simple", spec.values.size() < 2 || spec.min_gap() > 1e-13 * scale},
          {"max_residual", spec.max_residual(op)},
          {"max_orthogonality_defect", spec.max_orthogonality_defect()}};
}

json run_localize(RunContext& ctx) {
  const auto& cfg = ctx.config();
  const auto& lc = cfg.localize;
  auto fit_at = [&](std::int64_t n) {
    const Window w{-n, n};
    const Potential pot = realize(cfg.ensemble, w, ctx.seed(), StreamTag::localization, 0);
    return diagonalize(TruncatedOperator::from(pot, w), ctx.threads());
  };
  const SpectralData spec = fit_at(lc.half_width);
  const auto fits = decay_fits(spec, ctx.threads());
  const SuleFit sule = sule_fit(spec, lc.quantile, ctx.threads());
  ctx.write("decay.csv", [&](std::ostream& o) { write_decay_csv(o, spec, fits); });
  ctx.write("sule.csv", [&](std::ostream& o) { write_sule_csv(o, sule); });
  json summary{{"window", window_json(spec.window)},
               {"median_interior_rate", median_interior_rate(fits)},
               {"alpha_global", sule.alpha_global},
               {"max_c", sule.max_c},
               {"verdict", sule.verdict()}};
  if (lc.doubling_check) {
    const SuleFit doubled = sule_fit(fit_at(2 * lc.half_width), lc.quantile, ctx.threads());
    ctx.write("sule_doubled.csv", [&](std::ostream& o) { write_sule_csv(o, doubled); });
    summary["doubled"] = {{"half_width", 2 * lc.half_width},
                          {"alpha_global", doubled.alpha_global},
                          {"max_c", doubled.max_c},
                          {"max_c_ratio", sule.max_c > 0 ? json(doubled.max_c / sule.max_c) : json(nullptr)}};
  }
  return summary;
}

json run_dynamics(RunContext& ctx) {
  const auto& cfg = ctx.config();
  const auto& dy = cfg.dynamics;
  const auto times = dy.times();
  json trials = json::array();
  std::vector<std::string> verdicts;
  ctx.write("control.csv", [&](std::ostream& o) {
    CsvWriter csv(o, {"trial", "nonzero_sites", "ratio", "free_ratio", "sup", "verdict"});
    for (std::size_t t = 0; t < std::max<std::size_t>(1, dy.control_trials); ++t) {
      const DelocalizationResult r =
          delocalization_control(cfg.ensemble, dy.q, times, dy.half_width, ctx.seed(), ctx.threads(), t);
      if (t == 0) {
        ctx.write("moments.csv", [&](std::ostream& m) { write_moment_csv(m, r.trace); });
        ctx.write("free_moments.csv", [&](std::ostream& m) { write_moment_csv(m, r.free_trace); });
        double lo = INFINITY, hi = 0.0;
        for (std::size_t i = r.trace.moment.size() / 2; i < r.trace.moment.size(); ++i) {
          if (r.trace.contaminated[i]) continue;
          lo = std::min(lo, r.trace.moment[i]);
          hi = std::max(hi, r.trace.moment[i]);
        }
        std::size_t contaminated = 0;
        for (bool c : r.trace.contaminated) contaminated += c;
        trials.push_back({{"sup", r.trace.sup()},
                          {"flatness_last_half", hi > 0 ? json(hi / lo) : json(nullptr)},
                          {"initial", r.trace.moment.front()},
                          {"contaminated_times", contaminated},
                          {"free_sup", r.free_trace.sup()}});
      }
      csv.row(t, r.nonzero_sites, r.ratio, r.free_ratio, r.trace.sup(), r.verdict());
      verdicts.push_back(r.verdict());
    }
  });
  const bool unanimous = std::all_of(verdicts.begin(), verdicts.end(),
                                     [&](const std::string& v) { return v == verdicts.front(); });
  json summary = trials.front();
  summary["q"] = dy.q;
  summary["window"] = window_json({-dy.half_width, dy.half_width});
  summary["verdicts"] = verdicts;
  summary["verdict"] = unanimous ? verdicts.front() : "mixed";
  return summary;
}

json run_verify(RunContext& ctx, bool& passed) {
  const auto suites = run_verify_suites(ctx.config(), ctx.seed(), ctx.threads());
  passed = std::all_of(suites.begin(), suites.end(), [](const SuiteResult& s) { return s.passed; });
  ctx.write("verify.csv", [&](std::ostream& o) {
    CsvWriter csv(o, {"suite", "passed", "detail"});
    for (const auto& s : suites) csv.row(s.name, s.passed, s.detail);
  });
  json list = json::array();
  for (const auto& s : suites) list.push_back({{"suite", s.name}, {"passed", s.passed}, {"detail", s.detail}});
  return {{"suites", list}, {"suite_count", suites.size()}, {"passed", passed}};
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  EVP_MD_CTX* md = EVP_MD_CTX_new();
  EVP_DigestInit_ex(md, EVP_sha256(), nullptr);
  char buf[1 << 15];
  while (in) {
    in.read(buf, sizeof buf);
    if (in.gcount() > 0) EVP_DigestUpdate(md, buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(md, digest, &len);
  EVP_MD_CTX_free(md);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  }
  return hex.str();
}

int run(const std::string& subcommand, const RunOptions& opts, std::ostream& log) {
  const auto started = std::chrono::steady_clock::now();
  ExperimentConfig cfg;
  try {
    cfg = load_config(opts.config);
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << '\n';
    return 2;
  }
  try {
    RunContext ctx(std::move(cfg), opts);
    json summary;
    int status = 0;
    if (subcommand == "audit") {
      summary = run_audit(ctx);
    } else if (subcommand == "growth") {
      summary = run_growth(ctx);
    } else if (subcommand == "deviations") {
      summary = run_deviations(ctx);
    } else if (subcommand == "spectrum") {
      summary = run_spectrum(ctx);
    } else if (subcommand == "localize") {
      summary = run_localize(ctx);
    } else if (subcommand == "dynamics") {
      summary = run_dynamics(ctx);
    } else if (subcommand == "verify") {
      bool passed = false;
      summary = run_verify(ctx, passed);
      status = passed ? 0 : 1;
    } else {
      log << "unknown subcommand '" << subcommand << "'\n";
      return 2;
    }
    summary = json{{"subcommand", subcommand}, {"experiment", ctx.config().name}, {"seed", ctx.seed()},
                   {"results", summary}};
    ctx.write_json("summary.json", summary);

    json artifacts = json::array();
    for (const auto& name : ctx.artifacts()) {
      const auto path = ctx.out_dir() / name;
      artifacts.push_back({{"file", name},
                           {"sha256", sha256_file(path)},
                           {"bytes", std::filesystem::file_size(path)}});
    }
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    json manifest{{"tool", "nslab"},
                  {"subcommand", subcommand},
                  {"config_path", opts.config.string()},
                  {"config", ctx.config().raw},
                  {"seed", ctx.seed()},
                  {"threads", ctx.threads()},
                  {"artifacts", artifacts},
                  {"wall_time_seconds", wall}};
    std::ofstream(ctx.out_dir() / "manifest.json") << manifest.dump(2) << '\n';
    log << subcommand << ": wrote " << ctx.artifacts().size() << " artifacts to "
        << ctx.out_dir().string() << " in " << std::fixed << std::setprecision(2) << wall << " s\n";
    if (subcommand == "verify") log << (status == 0 ? "verify: all suites passed\n" : "verify: FAILED\n");
    return status;
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    log << subcommand << " failed (experiment '" << cfg.name << "'): " << e.what() << '\n';
    return 3;
  }
}

}  // namespace nslab::cli
