#include <doctest.h>

#include <boost/numeric/odeint.hpp>
#include <cmath>

#include "oracle.hpp"
#include "wnls/energetics.hpp"

using namespace wnls;

namespace {

std::shared_ptr<const NoiseRealization> noise_for(GaussianCoeffs c, double eps,
                                                  MollifierKind kind = MollifierKind::gaussian_rho) {
  return std::make_shared<const NoiseRealization>(
      build_noise(std::make_shared<const GaussianCoeffs>(std::move(c)), Mollifier(kind), eps));
}

std::shared_ptr<const NoiseRealization> silent(int n) {
  NoiseRealization z = build_noise(std::make_shared<const GaussianCoeffs>(zero_coeffs(n)), Mollifier(), 1.0);
  z.C_eps = 0.0;
  z.wick_eps = SpectralField(z.grid(), true);
  return std::make_shared<const NoiseRealization>(std::move(z));
}

SpectralField plane(int n, int n1, int n2) {
  SpectralField f{TorusGrid(n)};
  f.at(n1, n2) = 1.0;
  return f;
}

SpectralField constant(int n, cplx a) {
  SpectralField f{TorusGrid(n)};
  f.at(0, 0) = a;
  return f;
}

const double kArea = kTwoPi * kTwoPi;

// Noise and field data at one quadrature point, from direct trigonometric sums.
struct Point {
  double y, y1, y2, W;
  cplx w, w1, w2, wl, wt;
};

struct Direct {
  std::vector<oracle::Mode> ym, vm, tm;
  double C;
  Point at(double x1, double x2) const {
    const auto jy = oracle::jet(ym, x1, x2);
    const auto jv = oracle::jet(vm, x1, x2);
    const cplx wt = tm.empty() ? cplx{} : oracle::jet(tm, x1, x2).f;
    const double y1 = jy.d1.real(), y2 = jy.d2.real();
    return {jy.f.real(), y1, y2, y1 * y1 + y2 * y2 - C, jv.f, jv.d1, jv.d2, jv.lap, wt};
  }
};

Direct direct(const NoiseRealization& n, const SpectralField& v, const SpectralField* vt = nullptr) {
  // C_eps from the mollifier itself, not from the realization
  double C = 0.0;
  const int h = n.grid().n() / 2;
  for (int a = -h + 1; a < h; ++a)
    for (int b = -h + 1; b < h; ++b)
      if (a || b) C += std::pow(n.mollifier(n.epsilon * a, n.epsilon * b), 2) / (a * a + b * b);
  if (n.C_eps == 0.0) C = 0.0;
  return {oracle::modes_of(n.Y_eps), oracle::modes_of(v), vt ? oracle::modes_of(*vt) : std::vector<oracle::Mode>{}, C};
}

// F, line by line as printed, with nabla(e^{-2Y}) = -2 e^{-2Y} nabla Y
double F_direct(const Direct& d, int m) {
  return oracle::quadrature(m, [&](double x1, double x2) {
    const Point q = d.at(x1, x2);
    const double e = std::exp(-2 * q.y);
    const cplx gy_dwbar = q.y1 * std::conj(q.w1) + q.y2 * std::conj(q.w2);
    double s = std::norm(q.wl) * e;
    s += -4 * (q.wl * gy_dwbar).real() * e;
    s += 4 * (std::norm(q.w1) * q.y1 * q.y1 + std::norm(q.w2) * q.y2 * q.y2) * e;
    s += 8 * (q.y1 * q.y2 * q.w1 * std::conj(q.w2)).real() * e;
    s += 2 * (q.w * q.W * (std::conj(q.w1) * (-2 * e * q.y1) + std::conj(q.w2) * (-2 * e * q.y2))).real();
    s += 2 * (q.wl * std::conj(q.w) * q.W).real() * e;
    s += std::norm(q.w) * q.W * q.W * e;
    return s;
  });
}

double G_direct(const Direct& d, double p, int m) {
  return oracle::quadrature(m, [&](double x1, double x2) {
    const Point q = d.at(x1, x2);
    const double e = std::exp(-(p + 2) * q.y);
    const double r2 = std::norm(q.w);
    // nabla |w|^2 = 2 Re(conj(w) nabla w); nabla |w|^p = (p/2) |w|^{p-2} nabla |w|^2
    const double g1 = 2 * (std::conj(q.w) * q.w1).real(), g2 = 2 * (std::conj(q.w) * q.w2).real();
    const double k = 0.5 * p * std::pow(r2, 0.5 * p - 1);
    double s = -(std::norm(q.w1) + std::norm(q.w2)) * std::pow(r2, 0.5 * p) * e;
    s += -2 * (q.w * (k * g1 * std::conj(q.w1) + k * g2 * std::conj(q.w2))).real() * e;
    s += p / 4 * (g1 * g1 + g2 * g2) * std::pow(r2, 0.5 * p - 1) * e;
    s += 2 / (p + 2) * std::pow(r2, 0.5 * p + 1) * q.W * e;
    s += 2 * p * (q.w * std::pow(r2, 0.5 * p) * (q.y1 * std::conj(q.w1) + q.y2 * std::conj(q.w2))).real() * e;
    return s;
  });
}

double H_direct(const Direct& d, double p, int m) {
  return oracle::quadrature(m, [&](double x1, double x2) {
    const Point q = d.at(x1, x2);
    const double e = std::exp(-(p + 2) * q.y);
    const double r2 = std::norm(q.w);
    const double dr2 = 2 * (std::conj(q.w) * q.wt).real();  // d/dt |w|^2
    const double g1 = 2 * (std::conj(q.w) * q.w1).real(), g2 = 2 * (std::conj(q.w) * q.w2).real();
    const double k = 0.5 * p * std::pow(r2, 0.5 * p - 1);
    const double dt_p = k * dr2;
    const double dt_pm2 = p == 2 ? 0.0 : 0.5 * (p - 2) * std::pow(r2, 0.5 * p - 2) * dr2;
    const cplx dt_wp = q.wt * std::pow(r2, 0.5 * p) + q.w * dt_p;
    double s = -(std::norm(q.w1) + std::norm(q.w2)) * dt_p * e;
    s += -2 * (q.wt * (k * g1 * std::conj(q.w1) + k * g2 * std::conj(q.w2))).real() * e;
    s += -p / 4 * (g1 * g1 + g2 * g2) * dt_pm2 * e;
    s += 2 * p * (dt_wp * (q.y1 * std::conj(q.w1) + q.y2 * std::conj(q.w2))).real() * e;
    return s;
  });
}

}  // namespace

TEST_CASE("mass") {
  const auto z = silent(16);
  const cplx A(0.3, -0.4);
  CHECK(mass(constant(16, A), *z) == doctest::Approx(kArea * std::norm(A)).epsilon(1e-14));
  // with Y = 0 the v-mass is the plain L^2 mass of u
  const SpectralField u = oracle::random_trig(TorusGrid(16), 5, 3, false);
  CHECK(mass(u, *z) == doctest::Approx(std::pow(lq_norm(u, 2.0), 2)).epsilon(1e-13));
  const auto n = noise_for(sample_gaussian(1, 0, 16), 0.5);
  CHECK(mass(u, *n) > 0.0);
}

TEST_CASE("hamiltonian closed forms") {
  const auto z = silent(16);
  CHECK(hamiltonian(plane(16, 1, 0), *z, 0.0, 3.0) == doctest::Approx(kArea).epsilon(1e-13));
  const double A = 0.7;
  CHECK(hamiltonian(constant(16, A), *z, -1.0, 2.0) == doctest::Approx(kArea * std::pow(A, 4) / 2).epsilon(1e-13));
}

TEST_CASE("quadratic energy pair") {
  const auto z = silent(32);
  const SpectralField u = oracle::random_trig(TorusGrid(32), 6, 1, false, 1.5);
  const auto [a0, b0] = quadratic_energy_pair(u, u, *z);
  const double grad2 = std::pow(sobolev_norm(gradient(u)[0], 0, 2), 2) + std::pow(sobolev_norm(gradient(u)[1], 0, 2), 2);
  CHECK(a0 == doctest::Approx(grad2).epsilon(1e-12));
  CHECK(b0 == doctest::Approx(grad2).epsilon(1e-12));

  // single-mode noise, plane-wave u; smooth noise keeps e^{Y} u resolved
  const auto sm = noise_for(coeffs_from_modes(64, {{{1, 0}, cplx(0.3, 0.2)}}), 0.5);
  SimState s{.t = 0.0, .field = plane(64, 0, 1), .gauge = Gauge::u_gauge, .noise = sm, .params = {}};
  const SimState v = to_v(s);
  const auto [a, b] = quadratic_energy_pair(s.field, v.field, *sm);
  CHECK(std::abs(a - b) <= 1e-6 * std::abs(a));

  SpectralField wrong = v.field;
  wrong.at(0, 0) += 1e-3;
  CHECK_THROWS_AS(quadratic_energy_pair(s.field, wrong, *sm), ConfigError);
}

TEST_CASE("F, G closed forms on zero noise") {
  const auto z = silent(16);
  const SpectralField v = oracle::random_trig(TorusGrid(16), 5, 4, false);
  SpectralField vt(TorusGrid(16));
  CHECK(kinetic_F(v, vt, *z) == doctest::Approx(std::pow(parseval_l2(laplacian(v)), 2)).epsilon(1e-12));
  CHECK(potential_G(plane(16, 1, 0), *z, 3.0) == doctest::Approx(-kArea).epsilon(1e-13));
  CHECK(potential_G(plane(16, 1, 0), *z, 2.0) == doctest::Approx(-kArea).epsilon(1e-13));
}

TEST_CASE("G on a constant keeps only the Wick term") {
  const auto n = noise_for(sample_gaussian(2, 0, 16), 0.5);
  const double A = 0.8, p = 2.5;
  const EnergyEvaluator ev(n);
  const auto terms = ev.potential_terms(constant(16, A), p);
  CHECK(terms[0] == 0.0);
  CHECK(std::abs(terms[1]) < 1e-15);
  CHECK(std::abs(terms[2]) < 1e-15);
  CHECK(terms[4] == 0.0);
  const Direct d = direct(*n, constant(16, A));
  const double want = oracle::quadrature(32, [&](double x1, double x2) {
    const Point q = d.at(x1, x2);
    return 2 / (p + 2) * std::pow(A, p + 2) * q.W * std::exp(-(p + 2) * q.y);
  });
  CHECK(terms[3] == doctest::Approx(want).epsilon(1e-10));
}

TEST_CASE("F, G, H against an independent transcription") {
  for (std::uint64_t seed : {1u, 2u}) {
    const auto n = noise_for(sample_gaussian(seed, 0, 16), 0.5);
    const SpectralField v = 0.3 * oracle::random_trig(TorusGrid(16), 4, 10 + seed, false, 1.0) + constant(16, 0.5);
    for (double p : {2.0, 2.5, 3.0}) {
      const double lambda = -1.0;
      const SimState s{.t = 0.0, .field = v, .gauge = Gauge::v_gauge, .noise = n,
                       .params = ModelParams{.p = p, .lambda = lambda}};
      const SpectralField vt = rhs_v(s);
      const Direct d = direct(*n, v, &vt);
      const double F = kinetic_F(v, vt, *n), G = potential_G(v, *n, p), H = defect_H(v, *n, lambda, p);
      CHECK(F == doctest::Approx(F_direct(d, 32)).epsilon(1e-10));
      CHECK(G == doctest::Approx(G_direct(d, p, 32)).epsilon(1e-10));
      CHECK(H == doctest::Approx(H_direct(d, p, 32)).epsilon(1e-10));
      if (p == 2.0) CHECK(EnergyEvaluator(n).defect_terms(v, vt, p)[2] == 0.0);

      const EnergyReport r = EnergyEvaluator(n).report(s);
      CHECK(r.E == r.F + lambda * r.G);
      CHECK(r.F == doctest::Approx(F).epsilon(1e-13));
      CHECK(r.mass > 0.0);
      CHECK(r.aux_norms.count("wdelta") == 1);
      CHECK(r.aux_norms.at("h2") >= r.aux_norms.at("h1"));
    }
  }
}

TEST_CASE("modified energy identity by centered differences") {
  // N = 32 leaves a spatial floor near 6e-4 relative; N = 64 is clean down to h ~ 1e-4
  const auto n = noise_for(sample_gaussian(3, 0, 64), 0.5);
  SpectralField v0 = 0.2 * oracle::random_trig(TorusGrid(64), 3, 7, false, 2.0);
  v0.at(0, 0) += 0.4;
  const ModelParams mp{.p = 3.0, .lambda = -1.0};
  const EnergyEvaluator ev(n);
  SimState mid{.t = 0.0, .field = v0, .gauge = Gauge::v_gauge, .noise = n, .params = mp};
  for (int k = 0; k < 20; ++k) mid = ifrk4_step_v(mid, 1e-3);
  const double lamH = mp.lambda * ev.report(mid).H;
  std::vector<double> x, y;
  for (double h : {1e-2, 5e-3, 2.5e-3, 1.25e-3}) {
    const double ep = ev.report(ifrk4_step_v(mid, h)).E;
    const double em = ev.report(ifrk4_step_v(mid, -h)).E;
    x.push_back(std::log(h));
    y.push_back(std::log(std::abs((ep - em) / (2 * h) - lamH)));
  }
  CHECK(oracle::slope(x, y) == doctest::Approx(2.0).epsilon(0.15));
}

TEST_CASE("inequality monitors") {
  const auto gn = gn_check(plane(32, 1, 0));
  CHECK(gn.lhs == doctest::Approx(kTwoPi).epsilon(1e-12));
  CHECK(gn.rhs == doctest::Approx(kArea).epsilon(1e-12));
  const SpectralField f = oracle::random_trig(TorusGrid(32), 8, 3, false);
  CHECK(gn_check(3.7 * f).ratio() == doctest::Approx(gn_check(f).ratio()).epsilon(1e-12));

  const cplx A(0.2, 0.1);
  const auto bg = brezis_gallouet_check(constant(32, A));
  CHECK(bg.lhs == doctest::Approx(std::abs(A)).epsilon(1e-13));
  CHECK(bg.rhs > bg.lhs);
  CHECK(bg.rhs >= kTwoPi * std::abs(A) * std::sqrt(std::log(2.0)));

  // lacunary sum of e^{i 2^k x1} / k: the sharp case, ratio stays bounded
  std::vector<double> ratios;
  for (int K = 1; K <= 6; ++K) {
    SpectralField lac{TorusGrid(256)};
    for (int k = 1; k <= K; ++k) lac.at(1 << k, 0) = 1.0 / k;
    ratios.push_back(brezis_gallouet_check(lac).ratio());
  }
  CHECK(*std::max_element(ratios.begin(), ratios.end()) < 1.0);
  CHECK(ratios.back() < 1.5 * ratios[2]);

  // diamagnetic, on fields that stay away from zero
  for (std::uint64_t s : {1u, 2u, 3u}) {
    SpectralField v = 0.2 * oracle::random_trig(TorusGrid(32), 5, s, false, 2.0);
    v.at(0, 0) += 2.0;
    const auto dm = diamagnetic_check(v, 4);
    CHECK(dm.lhs <= dm.rhs * (1 + 1e-6));
  }
}

TEST_CASE("gronwall bounds") {
  CHECK(gronwall_log_bound(2, 1, 2, 0) == doctest::Approx(4.0));
  CHECK(gronwall_linear_bound(3, 0.5, 0) == doctest::Approx(6.0));
  const double base = gronwall_log_bound(2, 1, 2, 1);
  CHECK(gronwall_log_bound(2.5, 1, 2, 1) > base);
  CHECK(gronwall_log_bound(2, 1.5, 2, 1) > base);
  CHECK(gronwall_log_bound(2, 1, 2.5, 1) > base);
  CHECK(gronwall_log_bound(2, 1, 2, 1.5) > base);
  CHECK_THROWS_AS(gronwall_log_bound(0.5, 1, 2, 1), ConfigError);
  CHECK_THROWS_AS(gronwall_log_bound(2, 0, 2, 1), ConfigError);
  CHECK_THROWS_AS(gronwall_log_bound(2, 1, 1, 1), ConfigError);
  CHECK_THROWS_AS(gronwall_log_bound(2, 1, 2, -1), ConfigError);
  CHECK_THROWS_AS(gronwall_linear_bound(0, 1, 1), ConfigError);
  CHECK_THROWS_AS(gronwall_linear_bound(1, -1, 1), ConfigError);

  using namespace boost::numeric::odeint;
  using State = std::vector<double>;
  auto stepper = make_dense_output(1e-9, 1e-9, runge_kutta_dopri5<State>());

  State f{2.0};
  integrate_const(stepper, [](const State& x, State& dx, double) { dx[0] = x[0] * std::log(2.0 + x[0]); }, f, 0.0,
                  2.0, 0.05, [&](const State& x, double t) { CHECK(x[0] <= gronwall_log_bound(2, 1, 2, t)); });

  State g{0.0};
  integrate_const(stepper, [](const State& x, State& dx, double) { dx[0] = 3.0 + 0.5 * x[0]; }, g, 0.0, 4.0, 0.05,
                  [&](const State& x, double t) {
                    CHECK(x[0] == doctest::Approx(6.0 * (std::exp(0.5 * t) - 1.0)).epsilon(1e-7));
                    CHECK(x[0] <= gronwall_linear_bound(3, 0.5, t));
                  });
}
