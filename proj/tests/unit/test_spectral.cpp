#include <doctest.h>

#include <cmath>
#include <limits>

#include "oracle.hpp"
#include "wnls/spectral.hpp"

using namespace wnls;

namespace {

Samples samples_of(const TorusGrid& g, auto&& fn) {
  Samples s(g.size());
  for (int a = 0; a < g.n(); ++a)
    for (int b = 0; b < g.n(); ++b) s[a * g.n() + b] = fn(g.node(a), g.node(b));
  return s;
}

SpectralField plane(const TorusGrid& g, int n1, int n2) {
  SpectralField f(g);
  f.at(n1, n2) = 1.0;
  return f;
}

const double kInf = std::numeric_limits<double>::infinity();

}  // namespace

TEST_CASE("grid geometry") {
  const TorusGrid g(16);
  CHECK(g.size() == 256);
  CHECK(g.node(0) == doctest::Approx(-kPi));
  CHECK(g.weight() * g.size() == doctest::Approx(kTwoPi * kTwoPi).epsilon(1e-15));
  CHECK_THROWS_AS(TorusGrid(6), ConfigError);
  CHECK_THROWS_AS(TorusGrid(11), ConfigError);
  CHECK(g.frequency(g.slot(-3)) == -3);
  CHECK(g.represents(-8, 7));
  CHECK_FALSE(g.represents(8, 0));
}

TEST_CASE("to_spectral on constants and single modes") {
  const TorusGrid g(16);
  const cplx A(0.7, -0.3);
  SpectralField c = to_spectral(g, Samples(g.size(), A));
  CHECK(std::abs(c.at(0, 0) - A) < 1e-14);
  double rest = 0.0;
  for (int a = -8; a < 8; ++a)
    for (int b = -8; b < 8; ++b)
      if (a || b) rest = std::max(rest, std::abs(c.at(a, b)));
  CHECK(rest < 1e-14);

  SpectralField e = to_spectral(g, samples_of(g, [](double x1, double) { return std::polar(1.0, x1); }));
  CHECK(std::abs(e.at(1, 0) - 1.0) < 1e-14);
  e.at(1, 0) = 0.0;
  CHECK(e.max_abs() < 1e-14);

  CHECK_THROWS_AS(to_spectral(g, Samples(10)), ConfigError);
}

TEST_CASE("physical round trip") {
  const TorusGrid g(32);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  Samples s(g.size());
  for (auto& x : s) x = cplx(nd(rng), nd(rng));
  const Samples back = to_physical(to_spectral(g, s));
  CHECK(oracle::max_abs_diff(s, back) <= 1e-12 * oracle::max_abs(s));

  // coefficients reproduce the samples through the series itself
  const SpectralField f = to_spectral(g, s);
  const auto ms = oracle::modes_of(f);
  for (int k : {0, 17, 500, 1023}) {
    const int a = k / g.n(), b = k % g.n();
    CHECK(std::abs(oracle::jet(ms, g.node(a), g.node(b)).f - s[k]) < 1e-10);
  }
}

TEST_CASE("realness of a Hermitian field") {
  const TorusGrid g(32);
  const SpectralField f = oracle::random_trig(g, 10, 5, true);
  CHECK(f.hermitian_defect() <= 1e-12 * f.max_abs());
  const Samples s = to_physical(f);
  double im = 0.0;
  for (const auto& x : s) im = std::max(im, std::abs(x.imag()));
  CHECK(im <= 1e-12 * oracle::max_abs(s));
  // and back: real samples give Hermitian coefficients
  Samples r(g.size());
  std::mt19937_64 rng(9);
  std::normal_distribution<double> nd;
  for (auto& x : r) x = nd(rng);
  const SpectralField fr = to_spectral(g, r, true);
  CHECK(fr.hermitian_defect() <= 1e-12 * fr.max_abs());
}

TEST_CASE("oversampled evaluation matches the series") {
  const TorusGrid g(16);
  const SpectralField f = oracle::random_trig(g, 7, 11, false);
  const auto ms = oracle::modes_of(f);
  const int m = 48;
  const Samples s = to_physical(f, m);
  const double h = kTwoPi / m;
  double err = 0.0;
  for (int a = 0; a < m; a += 5)
    for (int b = 0; b < m; b += 7)
      err = std::max(err, std::abs(s[a * m + b] - oracle::jet(ms, -kPi + h * a, -kPi + h * b).f));
  CHECK(err < 1e-12 * oracle::max_abs(s));
  const SpectralField back = truncate(s, m, g);
  CHECK((back - f).max_abs() < 1e-13);
}

TEST_CASE("apply_ds") {
  const TorusGrid g(16);
  const SpectralField f = oracle::random_trig(g, 7, 1, false);
  CHECK((apply_ds(f, 0.0) - f).max_abs() == 0.0);
  const SpectralField e = apply_ds(plane(g, 1, 0), 1.0);
  CHECK(std::abs(e.at(1, 0) - std::sqrt(2.0)) < 1e-15);
  const SpectralField back = apply_ds(apply_ds(f, 1.7), -1.7);
  CHECK((back - f).max_abs() <= 1e-12 * f.max_abs());
}

TEST_CASE("lq_norm") {
  const TorusGrid g(16);
  const cplx A(0.6, 0.8 * 2);
  SpectralField c(g);
  c.at(0, 0) = A;
  CHECK(lq_norm(c, 2.0) == doctest::Approx(std::abs(A) * kTwoPi).epsilon(1e-14));
  // |e^{ix1}| = 1 so the L^4 norm is ((2 pi)^2)^{1/4}
  CHECK(lq_norm(plane(g, 1, 0), 4.0) == doctest::Approx(std::sqrt(kTwoPi)).epsilon(1e-14));
  CHECK(lq_norm(plane(g, 2, -3), kInf) == doctest::Approx(1.0).epsilon(1e-14));

  const SpectralField f = oracle::random_trig(g, 6, 2, false);
  double l2 = 0.0;
  for (const auto& m : oracle::modes_of(f)) l2 += std::norm(m.c);
  CHECK(std::abs(lq_norm(f, 2.0) - kTwoPi * std::sqrt(l2)) <= 1e-10 * kTwoPi * std::sqrt(l2));
  CHECK(std::abs(lq_norm(f, 2.0, std::nullopt, {.oversample = 2}) - kTwoPi * std::sqrt(l2)) <=
        1e-10 * kTwoPi * std::sqrt(l2));

  // L^4 against a direct quadrature of the series on a finer grid (exact for trig polynomials)
  const auto ms = oracle::modes_of(f);
  const double l4 = std::pow(oracle::quadrature(64, [&](double x, double y) {
                               return std::pow(std::norm(oracle::jet(ms, x, y).f), 2);
                             }),
                             0.25);
  CHECK(lq_norm(f, 4.0, std::nullopt, {.oversample = 2}) == doctest::Approx(l4).epsilon(1e-10));

  SpectralField w(g, true);
  w.at(0, 0) = 2.0;
  CHECK(lq_norm(c, 2.0, w) == doctest::Approx(std::sqrt(2.0) * std::abs(A) * kTwoPi).epsilon(1e-13));
  w.at(1, 0) = w.at(-1, 0) = 1.5;  // 2 + 3 cos x1 dips below zero
  CHECK_THROWS_AS(lq_norm(c, 2.0, w), ConfigError);
  w.at(1, 0) = w.at(-1, 0) = 0.0;
  CHECK_THROWS_AS(lq_norm(c, kInf, w), ConfigError);
  CHECK_THROWS_AS(lq_norm(c, 0.5), ConfigError);
}

TEST_CASE("sobolev_norm") {
  const TorusGrid g(32);
  CHECK(sobolev_norm(plane(g, 1, 0), 1.0, 2.0) == doctest::Approx(std::sqrt(2.0) * kTwoPi).epsilon(1e-14));
  const SpectralField f = oracle::random_trig(g, 12, 4, true);
  CHECK(sobolev_norm(f, 0.0, 2.0) == doctest::Approx(lq_norm(f, 2.0)).epsilon(1e-13));
  CHECK(sobolev_norm(f, 0.0, 4.0) == doctest::Approx(lq_norm(f, 4.0)).epsilon(1e-13));

  double acc = 0.0;
  for (const auto& m : oracle::modes_of(f)) acc += std::sqrt(1.0 + m.n1 * m.n1 + m.n2 * m.n2) * std::norm(m.c);
  CHECK(std::abs(sobolev_norm(f, 0.5, 2.0) - kTwoPi * std::sqrt(acc)) <= 1e-10 * kTwoPi * std::sqrt(acc));

  double prev = 0.0;
  for (double s : {-1.0, -0.5, 0.0, 0.3, 1.0, 1.5, 2.0}) {
    const double v = sobolev_norm(f, s, 2.0);
    CHECK(v >= prev);
    prev = v;
  }
}

TEST_CASE("sup norm proxies") {
  const TorusGrid g(32);
  const SpectralField f = oracle::random_trig(g, 5, 8, true);
  const double exact = sobolev_norm(f, 0.0, kInf, {.oversample = 2});
  const double over = sobolev_sup_norm(f, 0.0, SupNormMode::oversampled_max);
  CHECK(over == doctest::Approx(exact).epsilon(1e-12));
  const double proxy = sobolev_sup_norm(f, 0.0, SupNormMode::lq16_proxy);
  CHECK(proxy > 0.0);
  CHECK(std::isfinite(proxy));
}

TEST_CASE("gradient and laplacian") {
  const TorusGrid g(16);
  const auto ge = gradient(plane(g, 1, 0));
  CHECK(std::abs(ge[0].at(1, 0) - cplx(0, 1)) < 1e-15);
  CHECK(ge[1].max_abs() == 0.0);
  SpectralField c(g);
  c.at(0, 0) = 3.0;
  CHECK(gradient(c)[0].max_abs() == 0.0);
  CHECK(gradient(c)[1].max_abs() == 0.0);

  const SpectralField s = to_spectral(g, samples_of(g, [](double x1, double x2) { return std::sin(x1 + 2 * x2); }), true);
  const Samples d2 = to_physical(gradient(s)[1]);
  const Samples want = samples_of(g, [](double x1, double x2) { return 2.0 * std::cos(x1 + 2 * x2); });
  CHECK(oracle::max_abs_diff(d2, want) < 1e-12);

  const SpectralField f = oracle::random_trig(g, 7, 21, false);
  const auto gf = gradient(f);
  const auto ms = oracle::modes_of(f);
  const Samples p1 = to_physical(gf[0]), p2 = to_physical(gf[1]), pl = to_physical(laplacian(f));
  double err = 0.0;
  for (int a = 0; a < 16; ++a)
    for (int b = 0; b < 16; ++b) {
      const auto j = oracle::jet(ms, g.node(a), g.node(b));
      err = std::max({err, std::abs(j.d1 - p1[a * 16 + b]), std::abs(j.d2 - p2[a * 16 + b]),
                      std::abs(j.lap - pl[a * 16 + b])});
    }
  CHECK(err < 1e-11);

  // Nyquist content is dropped by derivatives
  SpectralField ny(g);
  ny.at(-8, 1) = 1.0;
  CHECK(gradient(ny)[0].max_abs() == 0.0);
  CHECK(gradient(ny)[1].max_abs() == 0.0);

  const SpectralField inv = inverse_laplacian(laplacian(f));
  SpectralField f0 = f;
  f0.at(0, 0) = 0.0;
  CHECK((inv - f0).max_abs() < 1e-13);
}

TEST_CASE("two-thirds mask") {
  const TorusGrid g(24);
  SpectralField f = oracle::random_trig(g, 11, 6, false);
  const SpectralField d = dealias_two_thirds(f);
  CHECK(d.at(7, -7) == f.at(7, -7));
  CHECK(d.at(8, 0) == cplx(0.0));
  CHECK(d.at(0, -8) == cplx(0.0));
}
