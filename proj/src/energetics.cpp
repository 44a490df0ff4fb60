#include "wnls/energetics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace wnls {

namespace {

std::vector<double> real_fine(const SpectralField& f, int m) {
  const Samples s = to_physical(f, m);
  std::vector<double> out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) out[i] = s[i].real();
  return out;
}

double re(cplx z) { return z.real(); }

}  // namespace

struct EnergyEvaluator::Fine {
  Samples w, w1, w2, wl;
};

EnergyEvaluator::EnergyEvaluator(std::shared_ptr<const NoiseRealization> noise, int oversample)
    : noise_(std::move(noise)) {
  if (!noise_) throw ConfigError("EnergyEvaluator: null noise");
  if (oversample < 1) throw ConfigError("EnergyEvaluator: oversample must be >= 1");
  m_ = noise_->grid().n() * oversample;
  y_ = real_fine(noise_->Y_eps, m_);
  g1_ = real_fine(noise_->grad_Y_eps[0], m_);
  g2_ = real_fine(noise_->grad_Y_eps[1], m_);
  xi_ = real_fine(noise_->xi_eps, m_);
  w_.resize(y_.size());
  for (std::size_t i = 0; i < w_.size(); ++i) w_[i] = g1_[i] * g1_[i] + g2_[i] * g2_[i] - noise_->C_eps;
}

EnergyEvaluator::Fine EnergyEvaluator::lift(const SpectralField& f) const {
  if (!(f.grid() == noise_->grid())) throw ConfigError("EnergyEvaluator: grid mismatch");
  const auto g = gradient(f);
  return Fine{to_physical(f, m_), to_physical(g[0], m_), to_physical(g[1], m_),
              to_physical(laplacian(f), m_)};
}

double EnergyEvaluator::integrate(const std::vector<double>& f) const {
  double acc = 0.0;
  for (double x : f) acc += x;
  const double h = kTwoPi / m_;
  return acc * h * h;
}

double EnergyEvaluator::mass(const SpectralField& v) const {
  if (!(v.grid() == noise_->grid())) throw ConfigError("mass: grid mismatch");
  const Samples s = to_physical(v);
  const Samples y = to_physical(noise_->Y_eps);
  double acc = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) acc += std::exp(-2.0 * y[i].real()) * std::norm(s[i]);
  return acc * v.grid().weight();
}

double EnergyEvaluator::hamiltonian(const SpectralField& v, double lambda, double p) const {
  const Fine f = lift(v);
  std::vector<double> d(f.w.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double a2 = std::norm(f.w[i]);
    const double grad2 = std::norm(f.w1[i]) + std::norm(f.w2[i]);
    const double nl = 2.0 * lambda / (p + 2.0) * std::exp(-p * y_[i]) * std::pow(a2, 0.5 * (p + 2.0));
    d[i] = std::exp(-2.0 * y_[i]) * (grad2 - w_[i] * a2 - nl);
  }
  return integrate(d);
}

std::array<double, 7> EnergyEvaluator::kinetic_terms(const SpectralField& v) const {
  const Fine f = lift(v);
  const std::size_t n = f.w.size();
  std::array<std::vector<double>, 7> d;
  for (auto& x : d) x.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double e = std::exp(-2.0 * y_[i]);
    const double g1 = g1_[i], g2 = g2_[i], W = w_[i];
    const cplx w = f.w[i], w1 = f.w1[i], w2 = f.w2[i], wl = f.wl[i];
    // grad(e^{-2Y}) = -2 e^{-2Y} grad Y
    const double e1 = -2.0 * g1 * e, e2 = -2.0 * g2 * e;
    d[0][i] = std::norm(wl) * e;
    d[1][i] = -4.0 * re(wl * (g1 * std::conj(w1) + g2 * std::conj(w2))) * e;
    d[2][i] = 4.0 * (std::norm(w1) * g1 * g1 + std::norm(w2) * g2 * g2) * e;
    d[3][i] = 8.0 * re(g1 * g2 * w1 * std::conj(w2)) * e;
    d[4][i] = 2.0 * re(w * W * (std::conj(w1) * e1 + std::conj(w2) * e2));
    d[5][i] = 2.0 * re(wl * std::conj(w) * W) * e;
    d[6][i] = std::norm(w) * W * W * e;
  }
  std::array<double, 7> out{};
  for (int k = 0; k < 7; ++k) out[k] = integrate(d[k]);
  return out;
}

std::array<double, 5> EnergyEvaluator::potential_terms(const SpectralField& v, double p) const {
  const Fine f = lift(v);
  const std::size_t n = f.w.size();
  std::array<std::vector<double>, 5> d;
  for (auto& x : d) x.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double e = std::exp(-(p + 2.0) * y_[i]);
    const cplx w = f.w[i], w1 = f.w1[i], w2 = f.w2[i];
    const double a2 = std::norm(w);
    const double r1 = re(std::conj(w) * w1), r2 = re(std::conj(w) * w2);
    const double apm2 = std::pow(a2, 0.5 * (p - 2.0));
    // grad |w|^p and |grad |w|^2|^2
    const double gp1 = p * apm2 * r1, gp2 = p * apm2 * r2;
    const double grad_a2_sq = 4.0 * (r1 * r1 + r2 * r2);
    d[0][i] = -(std::norm(w1) + std::norm(w2)) * std::pow(a2, 0.5 * p) * e;
    d[1][i] = -2.0 * re(w * (gp1 * std::conj(w1) + gp2 * std::conj(w2))) * e;
    d[2][i] = 0.25 * p * grad_a2_sq * apm2 * e;
    d[3][i] = 2.0 / (p + 2.0) * std::pow(a2, 0.5 * (p + 2.0)) * w_[i] * e;
    d[4][i] = 2.0 * p *
              re(w * std::pow(a2, 0.5 * p) * (g1_[i] * std::conj(w1) + g2_[i] * std::conj(w2))) * e;
  }
  std::array<double, 5> out{};
  for (int k = 0; k < 5; ++k) out[k] = integrate(d[k]);
  return out;
}

std::array<double, 4> EnergyEvaluator::defect_terms(const SpectralField& v, const SpectralField& vt,
                                                    double p) const {
  const Fine f = lift(v);
  const Samples dt = to_physical(vt, m_);
  const std::size_t n = f.w.size();
  std::array<std::vector<double>, 4> d;
  for (auto& x : d) x.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double e = std::exp(-(p + 2.0) * y_[i]);
    const cplx w = f.w[i], w1 = f.w1[i], w2 = f.w2[i], wt = dt[i];
    const double a2 = std::norm(w);
    const double r1 = re(std::conj(w) * w1), r2 = re(std::conj(w) * w2);
    const double rt = re(std::conj(w) * wt);
    const double apm2 = std::pow(a2, 0.5 * (p - 2.0));
    const double gp1 = p * apm2 * r1, gp2 = p * apm2 * r2;
    const double grad_a2_sq = 4.0 * (r1 * r1 + r2 * r2);
    // d/dt |w|^a = a |w|^{a-2} Re(conj(w) w_t)
    const double dt_ap = p * apm2 * rt;
    const double dt_apm2 = (p == 2.0 || a2 < 1e-30) ? 0.0 : (p - 2.0) * std::pow(a2, 0.5 * (p - 4.0)) * rt;
    const cplx dt_wap = wt * std::pow(a2, 0.5 * p) + w * dt_ap;
    const cplx gy_dw = g1_[i] * std::conj(w1) + g2_[i] * std::conj(w2);
    d[0][i] = -(std::norm(w1) + std::norm(w2)) * dt_ap * e;
    d[1][i] = -2.0 * re(wt * (gp1 * std::conj(w1) + gp2 * std::conj(w2))) * e;
    d[2][i] = -0.25 * p * grad_a2_sq * dt_apm2 * e;
    d[3][i] = 2.0 * p * re(dt_wap * gy_dw) * e;
  }
  std::array<double, 4> out{};
  for (int k = 0; k < 4; ++k) out[k] = integrate(d[k]);
  return out;
}

std::pair<double, double> EnergyEvaluator::quadratic_energy_pair(const SpectralField& u,
                                                                 const SpectralField& v) const {
  if (!(u.grid() == noise_->grid()) || !(v.grid() == noise_->grid()))
    throw ConfigError("quadratic_energy_pair: grid mismatch");
  {
    const Samples su = to_physical(u), sv = to_physical(v), y = to_physical(noise_->Y_eps);
    double scale = 0.0, worst = 0.0;
    for (std::size_t i = 0; i < sv.size(); ++i) {
      scale = std::max(scale, std::abs(sv[i]));
      worst = std::max(worst, std::abs(sv[i] - std::exp(y[i].real()) * su[i]));
    }
    if (worst > 1e-8 * std::max(scale, 1e-300))
      throw ConfigError("quadratic_energy_pair: v is not e^{Y_eps} u at the nodes");
  }
  const Fine fu = lift(u);
  const Fine fv = lift(v);
  std::vector<double> a(fu.w.size()), b(fu.w.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = std::norm(fu.w1[i]) + std::norm(fu.w2[i]) - std::norm(fu.w[i]) * xi_[i];
    const double gy2 = g1_[i] * g1_[i] + g2_[i] * g2_[i];
    b[i] = (std::norm(fv.w1[i]) + std::norm(fv.w2[i]) - std::norm(fv.w[i]) * gy2) *
           std::exp(-2.0 * y_[i]);
  }
  return {integrate(a), integrate(b)};
}

EnergyReport EnergyEvaluator::report(const SimState& s, VOperator op) const {
  if (s.gauge != Gauge::v_gauge) throw ConfigError("energy report needs a v_gauge state");
  const double lambda = s.params.lambda, p = s.params.p;
  EnergyReport r;
  r.t = s.t;
  r.mass = mass(s.field);
  r.hamiltonian = hamiltonian(s.field, lambda, p);
  for (double x : kinetic_terms(s.field)) r.F += x;
  for (double x : potential_terms(s.field, p)) r.G += x;
  r.E = r.F + lambda * r.G;
  for (double x : defect_terms(s.field, rhs_v(s, false, op), p)) r.H += x;
  r.aux_norms["l2"] = parseval_l2(s.field);
  r.aux_norms["h1"] = sobolev_norm(s.field, 1.0, 2.0);
  r.aux_norms["h2"] = sobolev_norm(s.field, 2.0, 2.0);
  const Samples wl = to_physical(laplacian(s.field), m_);
  std::vector<double> d(wl.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = std::norm(wl[i]) * std::exp(-2.0 * y_[i]);
  r.aux_norms["wdelta"] = std::sqrt(integrate(d));
  return r;
}

namespace {

std::shared_ptr<const NoiseRealization> borrow(const NoiseRealization& n) {
  return std::shared_ptr<const NoiseRealization>(&n, [](const NoiseRealization*) {});
}

}  // namespace

double mass(const SpectralField& v, const NoiseRealization& noise) {
  return EnergyEvaluator(borrow(noise)).mass(v);
}

double hamiltonian(const SpectralField& v, const NoiseRealization& noise, double lambda, double p) {
  return EnergyEvaluator(borrow(noise)).hamiltonian(v, lambda, p);
}

std::pair<double, double> quadratic_energy_pair(const SpectralField& u, const SpectralField& v,
                                                const NoiseRealization& noise) {
  return EnergyEvaluator(borrow(noise)).quadratic_energy_pair(u, v);
}

double kinetic_F(const SpectralField& v, const SpectralField&, const NoiseRealization& noise) {
  double acc = 0.0;
  for (double x : EnergyEvaluator(borrow(noise)).kinetic_terms(v)) acc += x;
  return acc;
}

double potential_G(const SpectralField& v, const NoiseRealization& noise, double p) {
  double acc = 0.0;
  for (double x : EnergyEvaluator(borrow(noise)).potential_terms(v, p)) acc += x;
  return acc;
}

double defect_H(const SpectralField& v, const NoiseRealization& noise, double lambda, double p,
                VOperator op) {
  const SimState s{.t = 0.0, .field = v, .gauge = Gauge::v_gauge, .noise = borrow(noise),
                   .params = ModelParams{.p = p, .lambda = lambda, .allow_focusing = true}};
  double acc = 0.0;
  for (double x : EnergyEvaluator(s.noise).defect_terms(v, rhs_v(s, false, op), p)) acc += x;
  return acc;
}

InequalityPair gn_check(const SpectralField& v) {
  const int m = 2 * v.grid().n();
  const auto g = gradient(v);
  const Samples a = to_physical(g[0], m), b = to_physical(g[1], m);
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double s = std::norm(a[i]) + std::norm(b[i]);
    acc += s * s;
  }
  const double h = kTwoPi / m;
  const double grad_l4_sq = std::sqrt(acc * h * h);
  const double grad_l2 = std::hypot(parseval_l2(g[0]), parseval_l2(g[1]));
  return {grad_l4_sq, parseval_l2(laplacian(v)) * grad_l2};
}

InequalityPair brezis_gallouet_check(const SpectralField& v) {
  const double sup = lq_norm(v, std::numeric_limits<double>::infinity(), std::nullopt,
                             NormOptions{.oversample = 2});
  const double h1 = sobolev_norm(v, 1.0, 2.0);
  const double l2 = parseval_l2(v);
  const double lap = parseval_l2(laplacian(v));
  return {sup, h1 * std::sqrt(std::log(2.0 + l2 + lap))};
}

InequalityPair diamagnetic_check(const SpectralField& v, int oversample) {
  if (oversample < 1) throw ConfigError("diamagnetic_check: oversample must be >= 1");
  const int m = v.grid().n() * oversample;
  Samples mod = to_physical(v, m);
  for (auto& x : mod) x = std::abs(x);
  const auto gm = gradient(to_spectral(TorusGrid(m), mod, true));
  const auto gv = gradient(v);
  return {std::hypot(parseval_l2(gm[0]), parseval_l2(gm[1])),
          std::hypot(parseval_l2(gv[0]), parseval_l2(gv[1]))};
}

double gronwall_log_bound(double a, double b, double c, double t) {
  if (!(a > 1.0 && c > 1.0)) throw ConfigError("gronwall_log_bound: A, C must exceed 1");
  if (!(b > 0.0)) throw ConfigError("gronwall_log_bound: B must be positive");
  if (!(t >= 0.0)) throw ConfigError("gronwall_log_bound: t must be >= 0");
  return std::pow(a + c, std::exp(b * t));
}

double gronwall_linear_bound(double a, double b, double t) {
  if (!(a > 0.0 && b > 0.0)) throw ConfigError("gronwall_linear_bound: A, B must be positive");
  if (!(t >= 0.0)) throw ConfigError("gronwall_linear_bound: t must be >= 0");
  return a / b * std::exp(b * t);
}

}  // namespace wnls
