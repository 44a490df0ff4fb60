#include "wnls/evolve.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace wnls {

std::string to_string(Scheme s) { return s == Scheme::strang_u ? "strang_u" : "ifrk4_v"; }

Scheme parse_scheme(const std::string& name) {
  if (name == "strang_u") return Scheme::strang_u;
  if (name == "ifrk4_v") return Scheme::ifrk4_v;
  throw ConfigError("unknown scheme '" + name + "'");
}

int IntegratorConfig::steps() const {
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  if (!(t_end >= 0.0)) throw ConfigError("t_end must be nonnegative");
  const double k = t_end / dt;
  const double r = std::round(k);
  if (std::abs(k - r) > 1e-9 * std::max(1.0, k))
    throw ConfigError("t_end must be an integer multiple of dt");
  return static_cast<int>(r);
}

void IntegratorConfig::validate() const {
  const int n = steps();
  if (n > 0 && dt > t_end) throw ConfigError("dt exceeds t_end");
  if (snapshot_stride < 1) throw ConfigError("snapshot_stride must be >= 1");
  if (!(stability_bound > 0.0)) throw ConfigError("stability_bound must be positive");
}

namespace {

double max_abs(const Samples& s) {
  double m = 0.0;
  for (const auto& x : s) {
    const double a = std::abs(x);
    if (!std::isfinite(a)) return a;
    m = std::max(m, a);
  }
  return m;
}

std::vector<double> real_nodes(const SpectralField& f) {
  const Samples s = to_physical(f);
  std::vector<double> out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) out[i] = s[i].real();
  return out;
}

bool keep_mode(int n, int n1, int n2) { return 3 * std::abs(n1) < n && 3 * std::abs(n2) < n; }

// |u|^p from |u|^2 without a square root for the common even case
double pow_abs(cplx z, double p) {
  const double a2 = std::norm(z);
  return p == 2.0 ? a2 : std::pow(a2, 0.5 * p);
}

class StrangStepper {
 public:
  StrangStepper(const SimState& s, double dt, bool dealias)
      : n_(s.field.grid().n()), dt_(dt), lambda_(s.params.lambda), p_(s.params.p),
        xi_(real_nodes(s.noise->xi_eps)), mult_(s.field.grid().size()) {
    const TorusGrid& g = s.field.grid();
    const double norm = 1.0 / static_cast<double>(g.size());
    for (int a = 0; a < n_; ++a) {
      const int n1 = g.frequency(a);
      for (int b = 0; b < n_; ++b) {
        const int n2 = g.frequency(b);
        const bool keep = !dealias || keep_mode(n_, n1, n2);
        mult_[static_cast<std::size_t>(a) * n_ + b] =
            keep ? std::polar(norm, (n1 * n1 + n2 * n2) * dt) : cplx{};
      }
    }
  }

  void potential(Samples& u, double delta) const {
    for (std::size_t i = 0; i < u.size(); ++i)
      u[i] *= std::polar(1.0, -delta * (xi_[i] + lambda_ * pow_abs(u[i], p_)));
  }

  // the diagonal multiplier commutes with the node shift, so raw FFTs suffice
  void linear(Samples& u) const {
    fft_forward(n_, u);
    for (std::size_t i = 0; i < u.size(); ++i) u[i] *= mult_[i];
    fft_inverse(n_, u);
  }

  // consecutive potential half steps fuse into one full step
  void advance(Samples& u, int steps) const {
    if (steps <= 0) return;
    potential(u, 0.5 * dt_);
    linear(u);
    for (int k = 1; k < steps; ++k) {
      potential(u, dt_);
      linear(u);
    }
    potential(u, 0.5 * dt_);
  }

 private:
  int n_;
  double dt_;
  double lambda_;
  double p_;
  std::vector<double> xi_;
  std::vector<cplx> mult_;
};

// Nodal noise data for the v-equation.
class VOperatorContext {
 public:
  VOperatorContext(const SimState& s, VOperator op, bool dealias)
      : grid_(s.field.grid()), op_(op), dealias_(dealias), lambda_(s.params.lambda),
        p_(s.params.p), C_(s.noise->C_eps) {
    const NoiseRealization& nz = *s.noise;
    ey_ = real_of(exp_nodes(nz, 1.0));
    emy_ = real_of(exp_nodes(nz, -1.0));
    emp_ = real_of(exp_nodes(nz, -p_));
    xi_ = real_nodes(nz.xi_eps);
    gy1_ = real_nodes(nz.grad_Y_eps[0]);
    gy2_ = real_nodes(nz.grad_Y_eps[1]);
    wick_ = real_nodes(nz.wick_eps);
  }

  // Everything except -i Delta v.
  SpectralField remainder(const SpectralField& v) const {
    const Samples s = to_physical(v);
    Samples r(s.size());
    if (op_ == VOperator::gauge_conjugate) {
      Samples a(s.size());
      for (std::size_t i = 0; i < s.size(); ++i) a[i] = emy_[i] * s[i];
      const Samples lap_a = to_physical(laplacian(to_spectral(grid_, a)));
      const Samples lap_v = to_physical(laplacian(v));
      for (std::size_t i = 0; i < s.size(); ++i)
        r[i] = ey_[i] * lap_a[i] - lap_v[i] + (xi_[i] - C_) * s[i];
    } else {
      const auto g = gradient(v);
      const Samples d1 = to_physical(g[0]);
      const Samples d2 = to_physical(g[1]);
      for (std::size_t i = 0; i < s.size(); ++i)
        r[i] = -2.0 * (d1[i] * gy1_[i] + d2[i] * gy2_[i]) + wick_[i] * s[i];
    }
    if (lambda_ != 0.0)
      for (std::size_t i = 0; i < s.size(); ++i)
        r[i] += lambda_ * emp_[i] * pow_abs(s[i], p_) * s[i];
    SpectralField out = to_spectral(grid_, r);
    out *= cplx{0.0, -1.0};
    if (dealias_) out = dealias_two_thirds(out);
    return out;
  }

  double max_grad_y() const {
    double m = 0.0;
    for (std::size_t i = 0; i < gy1_.size(); ++i) m = std::max(m, std::hypot(gy1_[i], gy2_[i]));
    return m;
  }

 private:
  static std::vector<double> real_of(const Samples& s) {
    std::vector<double> out(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) out[i] = s[i].real();
    return out;
  }

  TorusGrid grid_;
  VOperator op_;
  bool dealias_;
  double lambda_, p_, C_;
  std::vector<double> ey_, emy_, emp_, xi_, gy1_, gy2_, wick_;
};

class LawsonStepper {
 public:
  LawsonStepper(const SimState& s, double dt, VOperator op, bool dealias)
      : ctx_(s, op, dealias), dt_(dt), half_(s.field.grid().size()) {
    const TorusGrid& g = s.field.grid();
    const int n = g.n();
    for (int a = 0; a < n; ++a) {
      const int n1 = g.frequency(a);
      for (int b = 0; b < n; ++b) {
        const int n2 = g.frequency(b);
        half_[static_cast<std::size_t>(a) * n + b] = std::polar(1.0, (n1 * n1 + n2 * n2) * 0.5 * dt);
      }
    }
  }

  const VOperatorContext& context() const { return ctx_; }

  SpectralField flow(SpectralField f) const {
    auto c = f.coeffs();
    for (std::size_t i = 0; i < c.size(); ++i) c[i] *= half_[i];
    return f;
  }

  SpectralField step(const SpectralField& v) const {
    const double h = dt_;
    const SpectralField k1 = ctx_.remainder(v);
    const SpectralField vh = flow(v);
    const SpectralField k1h = flow(k1);
    const SpectralField k2 = ctx_.remainder(vh + cplx{0.5 * h} * k1h);
    const SpectralField k3 = ctx_.remainder(vh + cplx{0.5 * h} * k2);
    const SpectralField k4 = ctx_.remainder(flow(vh + cplx{h} * k3));
    SpectralField mid = k1h;
    mid += cplx{2.0} * k2;
    mid += cplx{2.0} * k3;
    SpectralField out = flow(vh + cplx{h / 6.0} * mid);
    out += cplx{h / 6.0} * k4;
    out.set_real(false);
    return out;
  }

 private:
  VOperatorContext ctx_;
  double dt_;
  std::vector<cplx> half_;
};

void require(const SimState& s, Gauge g, const char* who) {
  if (s.gauge != g)
    throw ConfigError(std::string(who) + ": state is in " + to_string(s.gauge) + ", expected " +
                      to_string(g));
  if (!s.noise) throw ConfigError(std::string(who) + ": state has no noise attached");
  if (!(s.field.grid() == s.noise->grid()))
    throw ConfigError(std::string(who) + ": field grid differs from noise grid");
}

}  // namespace

SpectralField rhs_v(const SimState& state, bool dealias, VOperator op) {
  require(state, Gauge::v_gauge, "rhs_v");
  const VOperatorContext ctx(state, op, dealias);
  SpectralField out = ctx.remainder(state.field);
  SpectralField lin = laplacian(state.field);
  lin *= cplx{0.0, -1.0};
  out += lin;
  return out;
}

SpectralField rhs_u(const SimState& state) {
  require(state, Gauge::u_gauge, "rhs_u");
  const Samples u = to_physical(state.field);
  const Samples lap = to_physical(laplacian(state.field));
  const std::vector<double> xi = real_nodes(state.noise->xi_eps);
  Samples r(u.size());
  for (std::size_t i = 0; i < u.size(); ++i)
    r[i] = cplx{0.0, -1.0} *
           (lap[i] + xi[i] * u[i] + state.params.lambda * pow_abs(u[i], state.params.p) * u[i]);
  return to_spectral(state.field.grid(), r);
}

SimState strang_step_u(const SimState& state, double dt, bool dealias) {
  require(state, Gauge::u_gauge, "strang_step_u");
  const StrangStepper stepper(state, dt, dealias);
  Samples u = to_physical(state.field);
  stepper.advance(u, 1);
  SimState out = state;
  out.field = to_spectral(state.field.grid(), u);
  out.t = state.t + dt;
  return out;
}

SimState ifrk4_step_v(const SimState& state, double dt, VOperator op, bool dealias) {
  require(state, Gauge::v_gauge, "ifrk4_step_v");
  const LawsonStepper stepper(state, dt, op, dealias);
  SimState out = state;
  out.field = stepper.step(state.field);
  out.t = state.t + dt;
  return out;
}

Trajectory run(const SimState& initial, const IntegratorConfig& cfg,
               const std::vector<Observer>& observers, const SnapshotHook& hook) {
  cfg.validate();
  initial.params.validate();
  require(initial, cfg.scheme == Scheme::strang_u ? Gauge::u_gauge : Gauge::v_gauge, "run");
  const int total = cfg.steps();

  Trajectory traj;
  for (const auto& o : observers) traj.observer_names.push_back(o.name);

  SimState cur = initial;
  const double start = initial.t;
  const double max0 = max_abs(to_physical(initial.field));
  const double guard = 1e6 * std::max(max0, 1e-300);

  auto record = [&](const SimState& s) {
    traj.times.push_back(s.t);
    std::vector<double> row;
    row.reserve(observers.size());
    for (const auto& o : observers) row.push_back(o.fn(s));
    traj.records.push_back(std::move(row));
    if (cfg.keep_snapshots) traj.snapshots.push_back(s);
    if (hook) hook(s);
  };
  auto check = [&](const Samples& s, double t) {
    const double m = max_abs(s);
    if (!std::isfinite(m)) throw NumericalAbort("non-finite field value", t, m);
    if (m > guard) throw NumericalAbort("blow-up guard tripped", t, m);
  };

  record(cur);
  if (total == 0) return traj;

  if (cfg.scheme == Scheme::strang_u) {
    const StrangStepper stepper(cur, cfg.dt, cfg.dealias);
    Samples u = to_physical(cur.field);
    for (int done = 0; done < total;) {
      const int block = std::min(cfg.snapshot_stride, total - done);
      stepper.advance(u, block);
      done += block;
      const double t = start + done * cfg.dt;
      check(u, t);
      cur.field = to_spectral(cur.field.grid(), u);
      cur.t = t;
      record(cur);
    }
  } else {
    const LawsonStepper stepper(cur, cfg.dt, cfg.v_operator, cfg.dealias);
    const double cfl = cfg.dt * cur.field.grid().n() * stepper.context().max_grad_y();
    if (cfl > cfg.stability_bound) {
      std::ostringstream msg;
      msg << "ifrk4_v: dt*N*max|grad Y_eps| = " << cfl << " exceeds " << cfg.stability_bound;
      warn(msg.str());
    }
    for (int k = 1; k <= total; ++k) {
      cur.field = stepper.step(cur.field);
      cur.t = start + k * cfg.dt;
      if (k % cfg.snapshot_stride == 0 || k == total) {
        check(to_physical(cur.field), cur.t);
        record(cur);
      } else if (!std::isfinite(cur.field.max_abs())) {
        throw NumericalAbort("non-finite field value", cur.t, cur.field.max_abs());
      }
    }
  }
  return traj;
}

void save_trajectory(const std::filesystem::path& dir, const Trajectory& traj,
                     const IntegratorConfig& cfg) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  nlohmann::json j;
  j["scheme"] = to_string(cfg.scheme);
  j["dt"] = cfg.dt;
  j["t_end"] = cfg.t_end;
  j["snapshot_stride"] = cfg.snapshot_stride;
  j["times"] = traj.times;
  auto files = nlohmann::json::array();
  for (std::size_t k = 0; k < traj.snapshots.size(); ++k) {
    const SimState& s = traj.snapshots[k];
    char name[32];
    std::snprintf(name, sizeof name, "snap_%05zu.bin", k);
    std::ofstream out(dir / name, std::ios::binary);
    const auto c = s.field.coeffs();
    out.write(reinterpret_cast<const char*>(c.data()),
              static_cast<std::streamsize>(c.size() * sizeof(cplx)));
    if (!out) throw IoError("write failed: " + (dir / name).string());
    files.push_back({{"file", name}, {"t", s.t}, {"gauge", to_string(s.gauge)}});
  }
  if (!traj.snapshots.empty()) {
    const NoiseRealization* nz = traj.snapshots.front().noise.get();
    j["N"] = traj.snapshots.front().field.grid().n();
    if (nz) {
      j["epsilon"] = nz->epsilon;
      j["mollifier"] = to_string(nz->mollifier.kind());
      if (nz->coeffs) {
        j["seed"] = nz->coeffs->seed;
        j["stream_id"] = nz->coeffs->stream_id;
      }
    }
  }
  j["snapshots"] = std::move(files);
  std::ofstream m(dir / "trajectory.json");
  m << j.dump(2) << '\n';
  if (!m) throw IoError("write failed: " + (dir / "trajectory.json").string());
}

Trajectory load_trajectory(const std::filesystem::path& dir,
                           std::shared_ptr<const NoiseRealization> noise, ModelParams params) {
  std::ifstream in(dir / "trajectory.json");
  if (!in) throw IoError("cannot open " + (dir / "trajectory.json").string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("bad trajectory.json: ") + e.what());
  }
  Trajectory traj;
  traj.times = j.at("times").get<std::vector<double>>();
  const TorusGrid grid(j.at("N").get<int>());
  for (const auto& row : j.at("snapshots")) {
    const auto path = dir / row.at("file").get<std::string>();
    std::ifstream f(path, std::ios::binary);
    std::vector<cplx> c(grid.size());
    f.read(reinterpret_cast<char*>(c.data()), static_cast<std::streamsize>(c.size() * sizeof(cplx)));
    if (!f) throw IoError("short read: " + path.string());
    const Gauge g = row.at("gauge").get<std::string>() == "u_gauge" ? Gauge::u_gauge : Gauge::v_gauge;
    traj.snapshots.push_back(SimState{.t = row.at("t").get<double>(),
                                      .field = SpectralField(grid, std::move(c)),
                                      .gauge = g,
                                      .noise = noise,
                                      .params = params});
    traj.records.emplace_back();
  }
  return traj;
}

}  // namespace wnls
