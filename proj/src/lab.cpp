#include "wnls/lab.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <limits>
#include <numeric>
#include <sstream>

#ifndef WNLS_VERSION
#define WNLS_VERSION "dev"
#endif

namespace wnls {

std::string version_string() { return WNLS_VERSION; }

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  s = s.substr(b, e - b + 1);
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front())
    s = s.substr(1, s.size() - 2);
  return s;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': not a number: '" + v + "'");
  }
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    if (!v.empty() && v.front() == '-') throw std::invalid_argument("negative");
    const unsigned long long x = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': not an unsigned integer: '" + v + "'");
  }
}

long long to_int(const std::string& key, const std::string& v) {
  const double x = to_double(key, v);
  if (x != std::floor(x)) throw ConfigError("config key '" + key + "': not an integer: '" + v + "'");
  return static_cast<long long>(x);
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  throw ConfigError("config key '" + key + "': not a boolean: '" + v + "'");
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::string item;
  std::string body = v;
  if (!body.empty() && body.front() == '[' && body.back() == ']') body = body.substr(1, body.size() - 2);
  std::stringstream ss(body);
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(to_double(key, item));
  }
  return out;
}

std::string join(const std::vector<double>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + fmt(xs[i]);
  return s;
}

// sum over n of <n>^{2 gamma} |c_n|^2, times (2 pi)^2, square-rooted
std::vector<double> hs_weights(const TorusGrid& g, double gamma) {
  std::vector<double> w(g.size());
  const int n = g.n();
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      const int n1 = g.frequency(a), n2 = g.frequency(b);
      w[static_cast<std::size_t>(a) * n + b] = std::pow(1.0 + n1 * n1 + n2 * n2, gamma);
    }
  return w;
}

double hs_dist(const SpectralField& x, cplx ax, const SpectralField& y, cplx ay,
               const std::vector<double>& w) {
  double acc = 0.0;
  const auto cx = x.coeffs(), cy = y.coeffs();
  for (std::size_t i = 0; i < w.size(); ++i) acc += w[i] * std::norm(ax * cx[i] - ay * cy[i]);
  return kTwoPi * std::sqrt(acc);
}

double quantile(std::vector<double> v, double q) {
  if (v.empty()) return kNaN;
  std::sort(v.begin(), v.end());
  const double pos = q * (v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - lo) * (v[hi] - v[lo]);
}

// Runs fn(i) for i in [0, n), up to `threads` at a time; results keep index order.
template <class F>
auto parallel_map(int n, int threads, F&& fn) -> std::vector<decltype(fn(0))> {
  using R = decltype(fn(0));
  std::vector<R> out;
  out.reserve(n);
  if (threads <= 1) {
    for (int i = 0; i < n; ++i) out.push_back(fn(i));
    return out;
  }
  for (int start = 0; start < n; start += threads) {
    std::vector<std::future<R>> batch;
    for (int i = start; i < std::min(n, start + threads); ++i)
      batch.push_back(std::async(std::launch::async, fn, i));
    for (auto& f : batch) out.push_back(f.get());
  }
  return out;
}

void open_out(std::ofstream& out, const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  out.open(path);
  if (!out) throw IoError("cannot write " + path.string());
}

void close_out(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace

SpectralField make_datum(const DatumSpec& spec, const TorusGrid& grid) {
  if (!std::isfinite(spec.amplitude)) throw ConfigError("datum amplitude must be finite");
  if (spec.preset == "constant") {
    SpectralField f(grid, true);
    f.at(0, 0) = spec.amplitude;
    return f;
  }
  if (spec.preset == "single_mode") {
    const auto [m1, m2] = spec.mode;
    if (!grid.represents(m1, m2) || grid.is_nyquist(m1, m2))
      throw ConfigError("single_mode datum: mode not resolved on the grid");
    SpectralField f(grid, false);
    f.at(m1, m2) = spec.amplitude;
    return f;
  }
  if (spec.preset == "gaussian_bump_spectrum") {
    SpectralField f(grid, true);
    const int h = grid.n() / 2;
    double total = 0.0;
    for (int n1 = -h + 1; n1 < h; ++n1)
      for (int n2 = -h + 1; n2 < h; ++n2) {
        const double c = std::exp(-0.5 * (n1 * n1 + n2 * n2));
        f.at(n1, n2) = c;
        total += c;
      }
    f *= spec.amplitude / total;
    return f;
  }
  throw ConfigError("unknown datum preset '" + spec.preset + "'");
}

std::vector<double> parse_eps_list(const std::string& text) {
  const std::string t = trim(text);
  const auto dots = t.find("..");
  if (dots == std::string::npos) return to_list("eps", t);
  auto exponent = [&](std::string s) {
    s = trim(s);
    if (s.rfind("2^", 0) != 0) throw ConfigError("eps range must look like 2^-2..2^-6");
    return static_cast<int>(to_int("eps", s.substr(2)));
  };
  const int a = exponent(t.substr(0, dots));
  const int b = exponent(t.substr(dots + 2));
  std::vector<double> out;
  const int step = a <= b ? 1 : -1;
  for (int k = a;; k += step) {
    out.push_back(std::ldexp(1.0, k));
    if (k == b) break;
  }
  return out;
}

void apply_key(LabConfig& c, const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  if (key == "N") c.N = static_cast<int>(to_int(key, v));
  else if (key == "p") c.p = to_double(key, v);
  else if (key == "lambda") c.lambda = to_double(key, v);
  else if (key == "allow_focusing") c.allow_focusing = to_bool(key, v);
  else if (key == "mollifier") c.mollifier = parse_mollifier(v);
  else if (key == "eps" || key == "epsilon_list") c.epsilon_list = parse_eps_list(v);
  else if (key == "gamma" || key == "gamma_list") c.gamma_list = to_list(key, v);
  else if (key == "T") c.T = to_double(key, v);
  else if (key == "dt") c.dt = to_double(key, v);
  else if (key == "seed") c.seed = to_u64(key, v);
  else if (key == "stream" || key == "stream_id") c.stream_id = to_u64(key, v);
  else if (key == "samples" || key == "sample_count") c.sample_count = static_cast<int>(to_int(key, v));
  else if (key == "datum") c.datum.preset = v;
  else if (key == "amplitude") c.datum.amplitude = to_double(key, v);
  else if (key == "mode") {
    const auto m = to_list(key, v);
    if (m.size() != 2) throw ConfigError("config key 'mode' needs two integers");
    c.datum.mode = {static_cast<int>(m[0]), static_cast<int>(m[1])};
  } else if (key == "snapshots") c.snapshots = static_cast<int>(to_int(key, v));
  else if (key == "zero_noise") c.zero_noise = to_bool(key, v);
  else if (key == "phase") c.phase = to_bool(key, v) ? PhaseMode::renormalized : PhaseMode::disabled;
  else if (key == "compare_phase") c.compare_phase = to_bool(key, v);
  else if (key == "scheme") c.scheme = parse_scheme(v);
  else if (key == "dealias") c.dealias = to_bool(key, v);
  else if (key == "stability_bound") c.stability_bound = to_double(key, v);
  else if (key == "stats_s") c.stats_s = to_double(key, v);
  else if (key == "stats_q") c.stats_q = to_list(key, v);
  else if (key == "drift_threshold") c.drift_threshold = to_double(key, v);
  else if (key == "family_energy") c.family_energy = to_bool(key, v);
  else if (key == "threads") c.threads = static_cast<int>(to_int(key, v));
  else throw ConfigError("unknown config key '" + key + "'");
}

std::map<std::string, std::string> LabConfig::to_map() const {
  return {{"N", std::to_string(N)},
          {"p", fmt(p)},
          {"lambda", fmt(lambda)},
          {"allow_focusing", allow_focusing ? "true" : "false"},
          {"mollifier", to_string(mollifier)},
          {"eps", join(epsilon_list)},
          {"gamma", join(gamma_list)},
          {"T", fmt(T)},
          {"dt", fmt(dt)},
          {"seed", std::to_string(seed)},
          {"stream", std::to_string(stream_id)},
          {"samples", std::to_string(sample_count)},
          {"datum", datum.preset},
          {"amplitude", fmt(datum.amplitude)},
          {"mode", std::to_string(datum.mode[0]) + "," + std::to_string(datum.mode[1])},
          {"snapshots", std::to_string(snapshots)},
          {"zero_noise", zero_noise ? "true" : "false"},
          {"phase", phase == PhaseMode::renormalized ? "on" : "off"},
          {"compare_phase", compare_phase ? "true" : "false"},
          {"scheme", to_string(scheme)},
          {"dealias", dealias ? "true" : "false"},
          {"stability_bound", fmt(stability_bound)},
          {"stats_s", fmt(stats_s)},
          {"stats_q", join(stats_q)},
          {"drift_threshold", fmt(drift_threshold)},
          {"family_energy", family_energy ? "true" : "false"},
          {"threads", std::to_string(threads)}};
}

LabConfig parse_config(const std::string& text, LabConfig base) {
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty() || line.front() == '[') continue;  // tolerate TOML table headers
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    apply_key(base, trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  return base;
}

LabConfig load_config(const std::filesystem::path& path, LabConfig base) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

void LabConfig::validate(bool evolution) const {
  TorusGrid grid(N);
  model().validate();
  if (epsilon_list.empty()) throw ConfigError("epsilon_list is empty");
  for (std::size_t i = 0; i < epsilon_list.size(); ++i) {
    const double e = epsilon_list[i];
    if (!(e > 0.0 && e <= 1.0)) throw ConfigError("epsilon values must lie in (0, 1]");
    if (i > 0 && !(e < epsilon_list[i - 1])) throw ConfigError("epsilon_list must be strictly decreasing");
  }
  for (double g : gamma_list)
    if (!(g >= 0.0 && g < 2.0)) throw ConfigError("gamma values must lie in [0, 2)");
  if (sample_count < 1) throw ConfigError("sample_count must be >= 1");
  if (threads < 1) throw ConfigError("threads must be >= 1");
  if (snapshots < 1) throw ConfigError("snapshots must be >= 1");
  if (evolution) {
    if (epsilon_list.back() < 4.0 / N)
      throw ConfigError("smallest epsilon " + fmt(epsilon_list.back()) + " is below 4/N = " +
                        fmt(4.0 / N));
    IntegratorConfig ic{.scheme = scheme, .dt = dt, .t_end = T};
    const int steps = ic.steps();
    if (!(T > 0.0)) throw ConfigError("T must be positive");
    if (steps % snapshots != 0)
      throw ConfigError("T/dt = " + std::to_string(steps) + " is not a multiple of snapshots");
  }
}

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw ConfigError("fit_line: size mismatch");
  const std::size_t n = x.size();
  if (n < 2) return {kNaN, kNaN, kNaN};
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) return {kNaN, kNaN, kNaN};
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return f;
}

std::shared_ptr<const GaussianCoeffs> lab_coeffs(const LabConfig& cfg, std::uint64_t seed) {
  if (cfg.zero_noise) {
    auto c = zero_coeffs(cfg.N);
    c.seed = seed;
    c.stream_id = cfg.stream_id;
    return std::make_shared<const GaussianCoeffs>(std::move(c));
  }
  return std::make_shared<const GaussianCoeffs>(sample_gaussian(seed, cfg.stream_id, cfg.N));
}

std::shared_ptr<const NoiseRealization> lab_noise(const LabConfig& cfg,
                                                  std::shared_ptr<const GaussianCoeffs> coeffs, double eps) {
  NoiseRealization nz =
      build_noise(std::move(coeffs), Mollifier(cfg.mollifier), eps, {.oversample = 2, .with_limit = false});
  if (cfg.zero_noise) {
    nz.C_eps = 0.0;
    nz.wick_eps = SpectralField(nz.grid(), true);
    nz.wick_limit = SpectralField(nz.grid(), true);
  }
  return std::make_shared<const NoiseRealization>(std::move(nz));
}

namespace {

struct Member {
  std::shared_ptr<const NoiseRealization> noise;
  std::vector<SpectralField> w;                  // e^{Y_eps} u, no phase
  std::vector<std::vector<double>> modulus;      // |u| at nodes
  std::vector<double> times;
  std::string failure;
};

Member run_member(const LabConfig& cfg, std::shared_ptr<const GaussianCoeffs> coeffs, double eps,
                  const SpectralField& v0) {
  Member m;
  m.noise = lab_noise(cfg, std::move(coeffs), eps);
  const SimState u0 = prepared_initial_datum(v0, m.noise, cfg.model());
  const Samples ey = exp_nodes(*m.noise, 1.0);
  IntegratorConfig ic{.scheme = Scheme::strang_u, .dt = cfg.dt, .t_end = cfg.T, .dealias = cfg.dealias,
                      .snapshot_stride = IntegratorConfig{.dt = cfg.dt, .t_end = cfg.T}.steps() / cfg.snapshots,
                      .keep_snapshots = false};
  auto hook = [&](const SimState& s) {
    Samples u = to_physical(s.field);
    std::vector<double> mod(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
      mod[i] = std::abs(u[i]);
      u[i] *= ey[i].real();
    }
    m.w.push_back(to_spectral(s.field.grid(), u));
    m.modulus.push_back(std::move(mod));
    m.times.push_back(s.t);
  };
  try {
    run(u0, ic, {}, hook);
  } catch (const NumericalAbort& e) {
    m.failure = "eps=" + fmt(eps) + ": " + e.what() + " at t=" + fmt(e.time());
  }
  return m;
}

}  // namespace

ConvergenceRun run_epsilon_family(const LabConfig& cfg) {
  cfg.validate(true);
  ConvergenceRun run;
  run.grid = TorusGrid(cfg.N);
  run.epsilons = cfg.epsilon_list;
  run.gammas = cfg.gamma_list;
  const auto coeffs = lab_coeffs(cfg, cfg.seed);
  const SpectralField v0 = make_datum(cfg.datum, run.grid);
  const int ne = static_cast<int>(run.epsilons.size());

  std::vector<Member> members = parallel_map(ne, cfg.threads, [&](int i) {
    return run_member(cfg, coeffs, run.epsilons[i], v0);
  });

  for (const auto& m : members) {
    run.C_eps.push_back(m.noise->C_eps);
    if (!m.failure.empty()) {
      run.failed = true;
      run.failure += (run.failure.empty() ? "" : "; ") + m.failure;
    }
  }
  const Member& ref = members.back();
  run.times = ref.times;
  const std::size_t nt = ref.w.size();

  std::vector<PhaseMode> modes{cfg.phase};
  if (cfg.compare_phase)
    modes.push_back(cfg.phase == PhaseMode::renormalized ? PhaseMode::disabled : PhaseMode::renormalized);
  std::vector<std::vector<double>> weights;
  for (double g : run.gammas) weights.push_back(hs_weights(run.grid, g));

  for (PhaseMode mode : modes) {
    PhaseTable table;
    table.phase = mode;
    for (int e = 0; e < ne; ++e) {
      const Member& m = members[e];
      std::vector<double> row(run.gammas.size(), kNaN);
      if (m.w.size() == nt && nt > 0) {
        std::fill(row.begin(), row.end(), 0.0);
        for (std::size_t k = 0; k < nt; ++k) {
          const double t = run.times[k];
          const bool on = mode == PhaseMode::renormalized;
          const cplx a = std::polar(1.0, on ? m.noise->C_eps * t : 0.0);
          const cplx b = std::polar(1.0, on ? ref.noise->C_eps * t : 0.0);
          for (std::size_t g = 0; g < run.gammas.size(); ++g)
            row[g] = std::max(row[g], hs_dist(m.w[k], a, ref.w[k], b, weights[g]));
        }
      }
      table.sup_dist.push_back(std::move(row));
    }
    for (std::size_t g = 0; g < run.gammas.size(); ++g) {
      std::vector<double> lx, ly;
      for (int e = 0; e + 1 < ne; ++e) {
        const double d = table.sup_dist[e][g];
        if (d > 0.0 && std::isfinite(d)) {
          lx.push_back(std::log(run.epsilons[e]));
          ly.push_back(std::log(d));
        }
      }
      table.kappa_hat.push_back(fit_line(lx, ly).slope);
    }
    run.tables.push_back(std::move(table));
  }

  // e^{-Y} |v_ref| with the lattice Y
  std::vector<double> emy(run.grid.size());
  {
    const Samples y = to_physical(ref.noise->Y);
    const Samples yr = to_physical(ref.noise->Y_eps);
    for (std::size_t i = 0; i < emy.size(); ++i) emy[i] = std::exp(yr[i].real() - y[i].real());
  }
  for (std::size_t k = 0; k < nt; ++k) {
    std::vector<double> r(run.grid.size());
    // |v_ref| = e^{Y_ref} |u_ref|
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = emy[i] * ref.modulus[k][i];
    run.ref_modulus.push_back(std::move(r));
  }
  for (auto& m : members) run.modulus.push_back(std::move(m.modulus));

  if (cfg.family_energy && ref.failure.empty()) {
    const EnergyEvaluator ev(ref.noise);
    std::vector<EnergyReport> rows;
    for (std::size_t k = 0; k < nt; ++k) {
      const double t = run.times[k];
      SimState v{.t = t, .field = ref.w[k], .gauge = Gauge::v_gauge, .noise = ref.noise,
                 .params = cfg.model()};
      v.field *= std::polar(1.0, ref.noise->C_eps * t);
      rows.push_back(ev.report(v));
    }
    run.energy.push_back(std::move(rows));
  }
  return run;
}

std::vector<ModulusRow> modulus_comparison(const ConvergenceRun& run, const std::vector<double>& gammas) {
  std::vector<ModulusRow> rows;
  for (double g : gammas)
    if (!(g >= 0.0 && g < 1.0)) throw ConfigError("modulus_comparison: gamma must lie in [0, 1)");
  const std::size_t nt = run.ref_modulus.size();
  for (std::size_t e = 0; e < run.epsilons.size(); ++e) {
    if (e >= run.modulus.size() || run.modulus[e].size() != nt) continue;
    std::vector<ModulusRow> per(gammas.size());
    for (std::size_t g = 0; g < gammas.size(); ++g) per[g] = {run.epsilons[e], gammas[g], 0.0, 0.0, 0.0};
    for (std::size_t k = 0; k < nt; ++k) {
      Samples d(run.grid.size());
      double linf = 0.0;
      for (std::size_t i = 0; i < d.size(); ++i) {
        d[i] = run.modulus[e][k][i] - run.ref_modulus[k][i];
        linf = std::max(linf, std::abs(d[i].real()));
      }
      const SpectralField f = to_spectral(run.grid, d, true);
      for (std::size_t g = 0; g < gammas.size(); ++g) {
        const double hg = sobolev_norm(f, gammas[g], 2.0);
        per[g].sup_hgamma = std::max(per[g].sup_hgamma, hg);
        per[g].sup_linf = std::max(per[g].sup_linf, linf);
        per[g].sup_dist = std::max(per[g].sup_dist, hg + linf);
      }
    }
    rows.insert(rows.end(), per.begin(), per.end());
  }
  return rows;
}

std::vector<StatsRow> run_noise_stats(const LabConfig& cfg) {
  cfg.validate(false);
  if (cfg.sample_count < 100) throw ConfigError("noise-stats needs at least 100 samples");
  const auto& eps = cfg.epsilon_list;
  const std::size_t nq = cfg.stats_q.size();
  const double s = cfg.stats_s;
  // metrics per eps: nq gradient norms, then Y diff, wick diff, e^{+Y}, e^{-Y}
  const std::size_t nm = nq + 4;

  auto per_seed = [&](int k) {
    const auto coeffs = lab_coeffs(cfg, cfg.seed + static_cast<std::uint64_t>(k));
    const SpectralField wick_lim =
        cfg.zero_noise ? SpectralField(TorusGrid(cfg.N), true) : wick_limit_field(*coeffs, cfg.N, 2);
    std::vector<std::vector<double>> vals(eps.size(), std::vector<double>(nm));
    for (std::size_t e = 0; e < eps.size(); ++e) {
      const auto nzp = lab_noise(cfg, coeffs, eps[e]);
      const NoiseRealization& nz = *nzp;
      const Samples g1 = to_physical(nz.grad_Y_eps[0]), g2 = to_physical(nz.grad_Y_eps[1]);
      for (std::size_t q = 0; q < nq; ++q) {
        const double qq = cfg.stats_q[q];
        double acc = 0.0;
        for (std::size_t i = 0; i < g1.size(); ++i)
          acc += std::pow(std::norm(g1[i]) + std::norm(g2[i]), 0.5 * qq);
        vals[e][q] = std::pow(acc * nz.grid().weight(), 1.0 / qq);
      }
      const double q0 = nq ? cfg.stats_q.front() : 4.0;
      vals[e][nq] = sobolev_norm(nz.Y_eps - nz.Y, s, q0);
      vals[e][nq + 1] = sobolev_norm(nz.wick_eps - wick_lim, -s, q0);
      const Samples y = to_physical(nz.Y_eps);
      double ymax = -1e300, ymin = 1e300;
      for (const auto& x : y) {
        ymax = std::max(ymax, x.real());
        ymin = std::min(ymin, x.real());
      }
      vals[e][nq + 2] = std::exp(ymax);
      vals[e][nq + 3] = std::exp(-ymin);
    }
    return vals;
  };
  const auto all = parallel_map(cfg.sample_count, cfg.threads, per_seed);

  const double q0 = nq ? cfg.stats_q.front() : 4.0;
  std::vector<StatsRow> rows;
  for (std::size_t m = 0; m < nm; ++m) {
    std::string name;
    double q = q0, sv = 0.0;
    int fit_kind = 0;  // 0 none, 1 affine in |ln eps|, 2 power law
    if (m < nq) {
      name = "grad_Y_eps_Lq";
      q = cfg.stats_q[m];
      fit_kind = 1;
    } else if (m == nq) {
      name = "Y_eps_minus_Y_Wsq";
      sv = s;
      fit_kind = 2;
    } else if (m == nq + 1) {
      name = "wick_minus_limit_W-sq";
      sv = -s;
      fit_kind = 2;
    } else {
      name = m == nq + 2 ? "exp_plus_Y_Linf" : "exp_minus_Y_Linf";
      q = std::numeric_limits<double>::infinity();
    }
    std::vector<StatsRow> block;
    std::vector<double> fx, fy;
    for (std::size_t e = 0; e < eps.size(); ++e) {
      std::vector<double> xs;
      for (const auto& seed_vals : all) xs.push_back(seed_vals[e][m]);
      StatsRow r{eps[e], q, sv, name, quantile(xs, 0.5), quantile(xs, 0.1), quantile(xs, 0.9), kNaN, kNaN};
      if (fit_kind == 1) {
        fx.push_back(std::abs(std::log(eps[e])));
        fy.push_back(r.median);
      } else if (fit_kind == 2 && r.median > 0.0) {
        fx.push_back(std::log(eps[e]));
        fy.push_back(std::log(r.median));
      }
      block.push_back(r);
    }
    if (fit_kind != 0) {
      const LinearFit f = fit_line(fx, fy);
      for (auto& r : block) {
        r.fit_slope = f.slope;
        r.r2 = f.r2;
      }
    }
    rows.insert(rows.end(), block.begin(), block.end());
  }
  return rows;
}

UniquenessReport uniqueness_probe(const LabConfig& cfg, int levels) {
  cfg.validate(true);
  if (levels < 1) throw ConfigError("uniqueness_probe: levels must be >= 1");
  UniquenessReport rep;
  rep.gamma = 0.5;
  const TorusGrid grid(cfg.N);
  const auto coeffs = lab_coeffs(cfg, cfg.seed);
  const auto noise = lab_noise(cfg, coeffs, cfg.epsilon_list.back());
  const SpectralField v0 = make_datum(cfg.datum, grid);
  const SimState u0 = prepared_initial_datum(v0, noise, cfg.model());
  const SimState v_start = SimState{.t = 0.0, .field = v0, .gauge = Gauge::v_gauge, .noise = noise,
                                    .params = cfg.model()};
  const auto w = hs_weights(grid, rep.gamma);

  auto strang_v = [&](double dt) {
    const int steps = IntegratorConfig{.dt = dt, .t_end = cfg.T}.steps();
    std::vector<SpectralField> out;
    run(u0, IntegratorConfig{.scheme = Scheme::strang_u, .dt = dt, .t_end = cfg.T,
                             .dealias = cfg.dealias, .snapshot_stride = steps / cfg.snapshots,
                             .keep_snapshots = false},
        {}, [&](const SimState& s) { out.push_back(to_v(s).field); });
    return out;
  };
  auto lawson_v = [&](double dt) {
    const int steps = IntegratorConfig{.dt = dt, .t_end = cfg.T}.steps();
    std::vector<SpectralField> out;
    run(v_start, IntegratorConfig{.scheme = Scheme::ifrk4_v, .dt = dt, .t_end = cfg.T,
                                  .dealias = cfg.dealias, .snapshot_stride = steps / cfg.snapshots,
                                  .stability_bound = cfg.stability_bound, .keep_snapshots = false},
        {}, [&](const SimState& s) { out.push_back(s.field); });
    return out;
  };
  auto sup_dist = [&](const std::vector<SpectralField>& a, const std::vector<SpectralField>& b) {
    double d = 0.0;
    for (std::size_t k = 0; k < std::min(a.size(), b.size()); ++k)
      d = std::max(d, hs_dist(a[k], 1.0, b[k], 1.0, w));
    return d;
  };

  std::vector<SpectralField> prev;
  for (int l = 0; l < levels; ++l) {
    const double dt = std::ldexp(cfg.dt, -l);
    const auto s = strang_v(dt);
    const auto v = lawson_v(dt);
    rep.dts.push_back(dt);
    rep.cross_dist.push_back(sup_dist(s, v));
    if (l > 0) rep.strang_self.push_back(sup_dist(prev, s));
    if (l == 0) rep.identical_rerun = sup_dist(s, strang_v(dt));
    prev = s;
  }
  return rep;
}

// --- persistence ---

void write_distances_csv(const std::filesystem::path& path, const ConvergenceRun& run, std::size_t table) {
  if (table >= run.tables.size()) throw ConfigError("write_distances_csv: no such table");
  const PhaseTable& t = run.tables[table];
  std::ofstream out;
  open_out(out, path);
  out << "eps,gamma,sup_dist,kappa_hat\n";
  for (std::size_t e = 0; e < run.epsilons.size(); ++e)
    for (std::size_t g = 0; g < run.gammas.size(); ++g)
      out << fmt(run.epsilons[e]) << ',' << fmt(run.gammas[g]) << ',' << fmt(t.sup_dist[e][g]) << ','
          << fmt(t.kappa_hat[g]) << '\n';
  close_out(out, path);
}

void write_modulus_csv(const std::filesystem::path& path, const std::vector<ModulusRow>& rows) {
  std::ofstream out;
  open_out(out, path);
  out << "eps,gamma,sup_hgamma,sup_linf,sup_dist\n";
  for (const auto& r : rows)
    out << fmt(r.eps) << ',' << fmt(r.gamma) << ',' << fmt(r.sup_hgamma) << ',' << fmt(r.sup_linf) << ','
        << fmt(r.sup_dist) << '\n';
  close_out(out, path);
}

void write_energy_csv(const std::filesystem::path& path, const std::vector<EnergyReport>& rows) {
  std::ofstream out;
  open_out(out, path);
  out << "t,mass,hamiltonian,F,G,E,H,l2,h1,h2,wdelta\n";
  for (const auto& r : rows) {
    auto aux = [&](const char* k) {
      const auto it = r.aux_norms.find(k);
      return it == r.aux_norms.end() ? kNaN : it->second;
    };
    out << fmt(r.t) << ',' << fmt(r.mass) << ',' << fmt(r.hamiltonian) << ',' << fmt(r.F) << ','
        << fmt(r.G) << ',' << fmt(r.E) << ',' << fmt(r.H) << ',' << fmt(aux("l2")) << ','
        << fmt(aux("h1")) << ',' << fmt(aux("h2")) << ',' << fmt(aux("wdelta")) << '\n';
  }
  close_out(out, path);
}

void write_stats_csv(const std::filesystem::path& path, const std::vector<StatsRow>& rows) {
  std::ofstream out;
  open_out(out, path);
  out << "eps,q,s,norm_name,median,p10,p90,fit_slope,r2\n";
  for (const auto& r : rows)
    out << fmt(r.eps) << ',' << fmt(r.q) << ',' << fmt(r.s) << ',' << r.norm_name << ',' << fmt(r.median)
        << ',' << fmt(r.p10) << ',' << fmt(r.p90) << ',' << fmt(r.fit_slope) << ',' << fmt(r.r2) << '\n';
  close_out(out, path);
}

void write_uniqueness_csv(const std::filesystem::path& path, const UniquenessReport& rep) {
  std::ofstream out;
  open_out(out, path);
  out << "dt,gamma,cross_dist,strang_self\n";
  for (std::size_t i = 0; i < rep.dts.size(); ++i)
    out << fmt(rep.dts[i]) << ',' << fmt(rep.gamma) << ',' << fmt(rep.cross_dist[i]) << ','
        << fmt(i == 0 ? kNaN : rep.strang_self[i - 1]) << '\n';
  close_out(out, path);
}

void write_manifest(const std::filesystem::path& path, const LabConfig& cfg, const std::string& subcommand,
                    const std::map<std::string, std::string>& extra) {
  nlohmann::json j;
  j["subcommand"] = subcommand;
  j["code_version"] = version_string();
  j["seed"] = cfg.seed;
  j["N"] = cfg.N;
  j["dt"] = cfg.dt;
  j["T"] = cfg.T;
  j["eps_list"] = cfg.epsilon_list;
  j["gamma_list"] = cfg.gamma_list;
  j["mollifier"] = to_string(cfg.mollifier);
  j["p"] = cfg.p;
  j["lambda"] = cfg.lambda;
  j["scheme"] = to_string(cfg.scheme);
  j["config"] = cfg.to_map();
  for (const auto& [k, v] : extra) j["results"][k] = v;
  std::ofstream out;
  open_out(out, path);
  out << j.dump(2) << '\n';
  close_out(out, path);
}

LabConfig config_from_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read manifest " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("manifest is not valid JSON: ") + e.what());
  }
  if (!j.contains("config") || !j["config"].is_object()) throw ConfigError("manifest has no config block");
  LabConfig cfg;
  for (const auto& [k, v] : j["config"].items()) apply_key(cfg, k, v.get<std::string>());
  return cfg;
}

}  // namespace wnls
