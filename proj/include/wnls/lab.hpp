#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "wnls/energetics.hpp"
#include "wnls/evolve.hpp"
#include "wnls/noise.hpp"

namespace wnls {

struct DatumSpec {
  std::string preset = "gaussian_bump_spectrum";  // constant | single_mode | gaussian_bump_spectrum
  double amplitude = 0.01;
  std::array<int, 2> mode{1, 0};
};

/// v0 on the grid. The bump is A sum_n e^{-|n|^2/2} e^{in.x}, scaled so max|v0| = A.
SpectralField make_datum(const DatumSpec& spec, const TorusGrid& grid);

struct LabConfig {
  int N = 256;
  double p = 3.0;
  double lambda = -1.0;
  bool allow_focusing = false;
  MollifierKind mollifier = MollifierKind::gaussian_rho;
  std::vector<double> epsilon_list{0.25, 0.125, 0.0625, 0.03125, 0.015625};
  std::vector<double> gamma_list{0.0, 0.5, 1.0, 1.5};
  double T = 0.5;
  double dt = 1e-4;
  std::uint64_t seed = 7;
  std::uint64_t stream_id = 0;
  int sample_count = 200;
  DatumSpec datum;
  int snapshots = 50;
  bool zero_noise = false;
  PhaseMode phase = PhaseMode::renormalized;
  bool compare_phase = false;  // also tabulate the family with the opposite phase mode
  Scheme scheme = Scheme::strang_u;
  bool dealias = false;
  double stability_bound = 0.5;
  double stats_s = 0.5;
  std::vector<double> stats_q{4.0};
  double drift_threshold = 1e-6;
  int threads = 1;
  bool family_energy = true;  // energy rows for the reference member of an ε-family

  /// evolution = true adds the ε-family constraints (min ε >= 4/N, T/dt integral, ...).
  void validate(bool evolution) const;
  ModelParams model() const { return ModelParams{.p = p, .lambda = lambda, .allow_focusing = allow_focusing}; }
  /// Flat key/value echo, the format read back by apply_key.
  std::map<std::string, std::string> to_map() const;
};

/// Single "key = value" assignment; unknown keys and bad values throw ConfigError.
void apply_key(LabConfig& cfg, const std::string& key, const std::string& value);
/// Flat TOML-style text: one key = value per line, '#' comments, optional quotes.
LabConfig parse_config(const std::string& text, LabConfig base = {});
LabConfig load_config(const std::filesystem::path& path, LabConfig base = {});
/// "2^-2..2^-6" (powers of two, step 1 in the exponent) or a comma list.
std::vector<double> parse_eps_list(const std::string& text);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};
LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

std::shared_ptr<const GaussianCoeffs> lab_coeffs(const LabConfig& cfg, std::uint64_t seed);
/// Noise at one eps. With zero_noise the law is degenerate, so C_eps and the
/// Wick fields are zero as well.
std::shared_ptr<const NoiseRealization> lab_noise(const LabConfig& cfg,
                                                  std::shared_ptr<const GaussianCoeffs> coeffs, double eps);

struct PhaseTable {
  PhaseMode phase = PhaseMode::renormalized;
  std::vector<std::vector<double>> sup_dist;  // [eps][gamma]
  std::vector<double> kappa_hat;              // per gamma
};

struct ConvergenceRun {
  std::vector<double> epsilons;  // decreasing; the last one is the reference
  std::vector<double> gammas;
  std::vector<double> C_eps;
  std::vector<double> times;
  std::vector<PhaseTable> tables;  // tables[0] uses cfg.phase
  // |u_eps| at the nodes per snapshot, and e^{-Y} |v_ref| for the modulus comparison
  std::vector<std::vector<std::vector<double>>> modulus;
  std::vector<std::vector<double>> ref_modulus;
  std::vector<std::vector<EnergyReport>> energy;  // reference member only
  TorusGrid grid{8};
  bool failed = false;
  std::string failure;
};

ConvergenceRun run_epsilon_family(const LabConfig& cfg);

struct ModulusRow {
  double eps = 0.0;
  double gamma = 0.0;
  double sup_hgamma = 0.0;
  double sup_linf = 0.0;
  double sup_dist = 0.0;  // H^gamma + L^inf
};
/// sup_t || |u_eps| - e^{-Y} |v_ref| ||_{H^gamma cap L^inf}; gammas >= 1 are rejected.
std::vector<ModulusRow> modulus_comparison(const ConvergenceRun& run,
                                           const std::vector<double>& gammas);

struct StatsRow {
  double eps = 0.0;
  double q = 0.0;
  double s = 0.0;
  std::string norm_name;
  double median = 0.0;
  double p10 = 0.0;
  double p90 = 0.0;
  double fit_slope = 0.0;
  double r2 = 0.0;
};

/// Over sample_count seeds starting at cfg.seed. Norm names:
///   grad_Y_eps_Lq          fit: median against |ln eps|
///   Y_eps_minus_Y_Wsq      fit: log median against log eps (slope = kappa_hat)
///   wick_minus_limit_W-sq  same
///   exp_plus_Y_Linf, exp_minus_Y_Linf  no fit
std::vector<StatsRow> run_noise_stats(const LabConfig& cfg);

struct UniquenessReport {
  double gamma = 0.5;
  std::vector<double> dts;
  std::vector<double> cross_dist;   // strang_u + gauge against ifrk4_v, same dt
  std::vector<double> strang_self;  // strang_u at dt against dt/2
  double identical_rerun = -1.0;    // same scheme, same dt, run twice
};

/// dts: cfg.dt, cfg.dt/2, ..., `levels` values.
UniquenessReport uniqueness_probe(const LabConfig& cfg, int levels = 2);

// --- persistence ---
void write_distances_csv(const std::filesystem::path& path, const ConvergenceRun& run,
                         std::size_t table = 0);
void write_modulus_csv(const std::filesystem::path& path, const std::vector<ModulusRow>& rows);
void write_energy_csv(const std::filesystem::path& path, const std::vector<EnergyReport>& rows);
void write_stats_csv(const std::filesystem::path& path, const std::vector<StatsRow>& rows);
void write_uniqueness_csv(const std::filesystem::path& path, const UniquenessReport& rep);
void write_manifest(const std::filesystem::path& path, const LabConfig& cfg,
                    const std::string& subcommand, const std::map<std::string, std::string>& extra = {});
/// Reads the "config" block of a manifest back into a LabConfig.
LabConfig config_from_manifest(const std::filesystem::path& path);

std::string version_string();

/// Entry point of the wnls-lab tool. Exit codes: 0 ok, 1 config, 2 numerical, 3 I/O.
int cli_main(int argc, char** argv);

}  // namespace wnls
