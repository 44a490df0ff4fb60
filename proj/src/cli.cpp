#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <iostream>

#include "wnls/lab.hpp"

namespace wnls {

namespace {

struct Flags {
  std::string config;
  std::string manifest;
  std::string out = "wnls_out";
  std::vector<std::string> sets;
  std::optional<std::string> seed, eps, samples, lambda, n, dt, t_end, threads, scheme;
  bool no_phase = false;
  bool compare_phase = false;
  bool save_snapshots = false;
  int levels = 2;
};

void add_common(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "flat key = value config file");
  sub->add_option("--manifest", f.manifest, "take the configuration from a previous manifest.json");
  sub->add_option("--out", f.out, "output directory");
  sub->add_option("--set", f.sets, "override any config key, KEY=VALUE (repeatable)");
  sub->add_option("--seed", f.seed);
  sub->add_option("--eps", f.eps, "e.g. 2^-2..2^-6 or 0.25,0.125");
  sub->add_option("--samples", f.samples);
  sub->add_option("--lambda", f.lambda);
  sub->add_option("--N", f.n);
  sub->add_option("--dt", f.dt);
  sub->add_option("--T", f.t_end);
  sub->add_option("--threads", f.threads);
  sub->add_option("--scheme", f.scheme, "strang_u or ifrk4_v");
  sub->add_flag("--no-phase", f.no_phase, "drop the C_eps phase from the gauge transform");
}

LabConfig build_config(const Flags& f) {
  LabConfig cfg;
  if (!f.manifest.empty()) cfg = config_from_manifest(f.manifest);
  if (!f.config.empty()) cfg = load_config(f.config, cfg);
  auto put = [&](const char* key, const std::optional<std::string>& v) {
    if (v) apply_key(cfg, key, *v);
  };
  put("seed", f.seed);
  put("eps", f.eps);
  put("samples", f.samples);
  put("lambda", f.lambda);
  put("N", f.n);
  put("dt", f.dt);
  put("T", f.t_end);
  put("threads", f.threads);
  put("scheme", f.scheme);
  if (f.no_phase) cfg.phase = PhaseMode::disabled;
  if (f.compare_phase) cfg.compare_phase = true;
  for (const auto& kv : f.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects KEY=VALUE, got '" + kv + "'");
    apply_key(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  return cfg;
}

std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

struct SingleRun {
  std::shared_ptr<const NoiseRealization> noise;
  std::vector<EnergyReport> energy;
};

// one trajectory at the smallest epsilon of the list, energy rows at every snapshot
SingleRun single_run(const LabConfig& cfg, Scheme scheme, const std::filesystem::path* snap_dir) {
  cfg.validate(true);
  const TorusGrid grid(cfg.N);
  SingleRun r;
  r.noise = lab_noise(cfg, lab_coeffs(cfg, cfg.seed), cfg.epsilon_list.back());
  const SpectralField v0 = make_datum(cfg.datum, grid);
  const IntegratorConfig ic{.scheme = scheme, .dt = cfg.dt, .t_end = cfg.T, .dealias = cfg.dealias,
                            .snapshot_stride = IntegratorConfig{.dt = cfg.dt, .t_end = cfg.T}.steps() / cfg.snapshots,
                            .stability_bound = cfg.stability_bound,
                            .keep_snapshots = snap_dir != nullptr};
  const EnergyEvaluator ev(r.noise);
  auto hook = [&](const SimState& s) {
    r.energy.push_back(ev.report(s.gauge == Gauge::v_gauge ? s : to_v(s, cfg.phase)));
  };
  const SimState start =
      scheme == Scheme::strang_u
          ? prepared_initial_datum(v0, r.noise, cfg.model())
          : SimState{.t = 0.0, .field = v0, .gauge = Gauge::v_gauge, .noise = r.noise, .params = cfg.model()};
  const Trajectory traj = run(start, ic, {}, hook);
  if (snap_dir) save_trajectory(*snap_dir, traj, ic);
  return r;
}

int cmd_simulate(const Flags& f) {
  const LabConfig cfg = build_config(f);
  const std::filesystem::path out(f.out);
  const std::filesystem::path snaps = out / "trajectory";
  const SingleRun r = single_run(cfg, cfg.scheme, f.save_snapshots ? &snaps : nullptr);
  write_energy_csv(out / "energy.csv", r.energy);
  write_manifest(out / "manifest.json", cfg, "simulate", {{"epsilon", num(cfg.epsilon_list.back())}});
  std::cout << "simulate: " << r.energy.size() << " snapshots written to " << out.string() << '\n';
  return 0;
}

int cmd_converge(const Flags& f) {
  const LabConfig cfg = build_config(f);
  const std::filesystem::path out(f.out);
  const ConvergenceRun run = run_epsilon_family(cfg);
  write_distances_csv(out / "distances.csv", run, 0);
  if (run.tables.size() > 1) write_distances_csv(out / "distances_alt_phase.csv", run, 1);
  std::vector<double> mg;
  for (double g : cfg.gamma_list)
    if (g < 1.0) mg.push_back(g);
  write_modulus_csv(out / "modulus.csv", modulus_comparison(run, mg));
  write_energy_csv(out / "energy.csv", run.energy.empty() ? std::vector<EnergyReport>{} : run.energy.front());
  std::map<std::string, std::string> extra{{"failed", run.failed ? "true" : "false"}};
  if (run.failed) extra["failure"] = run.failure;
  write_manifest(out / "manifest.json", cfg, "converge", extra);
  for (std::size_t g = 0; g < run.gammas.size(); ++g) {
    std::cout << "gamma=" << num(run.gammas[g]) << " sup_dist:";
    for (const auto& row : run.tables[0].sup_dist) std::cout << ' ' << num(row[g]);
    std::cout << "  kappa_hat=" << num(run.tables[0].kappa_hat[g]) << '\n';
  }
  if (run.failed) {
    std::cerr << "wnls-lab: member aborted: " << run.failure << '\n';
    return 2;
  }
  return 0;
}

int cmd_noise_stats(const Flags& f) {
  const LabConfig cfg = build_config(f);
  const std::filesystem::path out(f.out);
  const auto rows = run_noise_stats(cfg);
  write_stats_csv(out / "stats.csv", rows);
  write_manifest(out / "manifest.json", cfg, "noise-stats");
  std::string last;
  for (const auto& r : rows)
    if (r.norm_name != last && std::isfinite(r.fit_slope)) {
      std::cout << r.norm_name << ": slope=" << num(r.fit_slope) << " r2=" << num(r.r2) << '\n';
      last = r.norm_name;
    }
  return 0;
}

int cmd_energy_audit(const Flags& f) {
  const LabConfig cfg = build_config(f);
  const std::filesystem::path out(f.out);
  const SingleRun r = single_run(cfg, Scheme::ifrk4_v, nullptr);
  write_energy_csv(out / "energy.csv", r.energy);
  // lambda = 0: F is conserved. Otherwise E(t) - E(0) - lambda int_0^t H (trapezoid on snapshots).
  const auto& e = r.energy;
  double drift = 0.0;
  std::string what;
  if (cfg.lambda == 0.0) {
    what = "F drift";
    for (const auto& row : e) drift = std::max(drift, std::abs(row.F - e.front().F));
    drift /= std::max(std::abs(e.front().F), 1e-300);
  } else {
    what = "E balance residual";
    double integral = 0.0;
    for (std::size_t k = 0; k < e.size(); ++k) {
      if (k > 0) integral += 0.5 * (e[k].t - e[k - 1].t) * cfg.lambda * (e[k].H + e[k - 1].H);
      drift = std::max(drift, std::abs(e[k].E - e.front().E - integral));
    }
    drift /= std::max(std::abs(e.front().E), 1e-300);
  }
  write_manifest(out / "manifest.json", cfg, "energy-audit", {{"relative_drift", num(drift)}, {"measure", what}});
  std::cout << what << " (relative) = " << num(drift) << " threshold " << num(cfg.drift_threshold) << '\n';
  if (!(drift <= cfg.drift_threshold)) {
    std::cerr << "wnls-lab: " << what << " above threshold\n";
    return 2;
  }
  return 0;
}

int cmd_uniqueness(const Flags& f) {
  const LabConfig cfg = build_config(f);
  const std::filesystem::path out(f.out);
  const UniquenessReport rep = uniqueness_probe(cfg, f.levels);
  write_uniqueness_csv(out / "uniqueness.csv", rep);
  write_manifest(out / "manifest.json", cfg, "uniqueness", {{"identical_rerun", num(rep.identical_rerun)}});
  for (std::size_t i = 0; i < rep.dts.size(); ++i)
    std::cout << "dt=" << num(rep.dts[i]) << " cross H^" << num(rep.gamma) << " = " << num(rep.cross_dist[i]) << '\n';
  return 0;
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"white-noise NLS laboratory"};
  app.require_subcommand(1);
  app.set_version_flag("--version", version_string());
  Flags f;
  auto* sim = app.add_subcommand("simulate", "one trajectory at the smallest epsilon, energy rows");
  auto* conv = app.add_subcommand("converge", "epsilon-family Cauchy convergence");
  auto* stats = app.add_subcommand("noise-stats", "Monte Carlo statistics of the noise objects");
  auto* audit = app.add_subcommand("energy-audit", "conservation / modified-energy balance along ifrk4_v");
  auto* uniq = app.add_subcommand("uniqueness", "cross-integrator probe");
  for (auto* s : {sim, conv, stats, audit, uniq}) add_common(s, f);
  sim->add_flag("--save-snapshots", f.save_snapshots, "write raw snapshots under OUT/trajectory");
  conv->add_flag("--compare-phase", f.compare_phase, "also tabulate the opposite phase mode");
  uniq->add_option("--levels", f.levels, "number of dt levels (dt, dt/2, ...)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }
  try {
    if (*sim) return cmd_simulate(f);
    if (*conv) return cmd_converge(f);
    if (*stats) return cmd_noise_stats(f);
    if (*audit) return cmd_energy_audit(f);
    if (*uniq) return cmd_uniqueness(f);
  } catch (const ConfigError& e) {
    std::cerr << "wnls-lab: invalid configuration: " << e.what() << '\n';
    return 1;
  } catch (const NumericalAbort& e) {
    std::cerr << "wnls-lab: numerical abort at t=" << e.time() << " (max|field|=" << e.max_abs()
              << "): " << e.what() << '\n';
    return 2;
  } catch (const IoError& e) {
    std::cerr << "wnls-lab: I/O failure: " << e.what() << '\n';
    return 3;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "wnls-lab: I/O failure: " << e.what() << '\n';
    return 3;
  }
  return 1;
}

}  // namespace wnls
