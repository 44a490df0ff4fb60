#pragma once

// Test-side reference computations. Everything here is evaluated by direct
// trigonometric sums or plain loops, never through the library's FFT layer.

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include "wnls/spectral.hpp"

namespace oracle {

using wnls::cplx;
using wnls::kPi;
using wnls::kTwoPi;

struct Mode {
  int n1, n2;
  cplx c;
};

// Modes of the trigonometric interpolant; a Nyquist coefficient is shared
// evenly between -N/2 and +N/2 so real samples give a real interpolant.
inline std::vector<Mode> modes_of(const wnls::SpectralField& f) {
  std::vector<Mode> out;
  const int n = f.grid().n(), h = n / 2;
  for (int a = -h; a < h; ++a)
    for (int b = -h; b < h; ++b) {
      const cplx c = f.at(a, b);
      if (c == cplx(0.0)) continue;
      const std::vector<int> as = a == -h ? std::vector<int>{-h, h} : std::vector<int>{a};
      const std::vector<int> bs = b == -h ? std::vector<int>{-h, h} : std::vector<int>{b};
      const double share = 1.0 / (as.size() * bs.size());
      for (int x : as)
        for (int y : bs) out.push_back({x, y, c * share});
    }
  return out;
}

// value and first/second derivatives of sum c e^{in.x} at one point
struct Jet {
  cplx f, d1, d2, lap;
};

inline Jet jet(const std::vector<Mode>& ms, double x1, double x2) {
  Jet j{};
  for (const auto& m : ms) {
    const cplx e = m.c * std::polar(1.0, m.n1 * x1 + m.n2 * x2);
    j.f += e;
    j.d1 += cplx(0, m.n1) * e;
    j.d2 += cplx(0, m.n2) * e;
    j.lap += -double(m.n1 * m.n1 + m.n2 * m.n2) * e;
  }
  return j;
}

// M x M uniform nodes on (-pi, pi)^2 with weight (2 pi / M)^2
template <class F>
double quadrature(int m, F&& integrand) {
  double acc = 0.0;
  const double h = kTwoPi / m;
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) acc += integrand(-kPi + h * a, -kPi + h * b);
  return acc * h * h;
}

// Random trig polynomial with |n_i| <= band, coefficients decaying like <n>^{-decay}.
inline wnls::SpectralField random_trig(const wnls::TorusGrid& grid, int band, std::uint64_t seed,
                                       bool real, double decay = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  wnls::SpectralField f(grid, real);
  for (int a = -band; a <= band; ++a)
    for (int b = -band; b <= band; ++b) {
      if (real && (a < 0 || (a == 0 && b < 0))) continue;
      const double w = std::pow(1.0 + a * a + b * b, -0.5 * decay);
      cplx c(nd(rng) * w, nd(rng) * w);
      if (real && a == 0 && b == 0) c = c.real();
      f.at(a, b) = c;
      if (real) f.at(-a, -b) = std::conj(c);
    }
  return f;
}

inline double max_abs_diff(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

inline double max_abs(const std::vector<cplx>& a) {
  double d = 0.0;
  for (const auto& x : a) d = std::max(d, std::abs(x));
  return d;
}

// least squares slope of y on x
inline double slope(const std::vector<double>& x, const std::vector<double>& y) {
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
  mx /= x.size();
  my /= y.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

}  // namespace oracle
