#include "wnls/noise.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace wnls {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// uniform in (0, 1), never 0
double unit(std::uint64_t bits) { return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53; }

cplx draw_mode(std::uint64_t seed, std::uint64_t stream, int n1, int n2) {
  const std::uint64_t tag = (static_cast<std::uint64_t>(static_cast<std::uint32_t>(n1)) << 32) |
                            static_cast<std::uint32_t>(n2);
  const std::uint64_t key = splitmix(splitmix(splitmix(seed) ^ stream) ^ tag);
  const double u1 = unit(splitmix(key));
  const double u2 = unit(splitmix(key + 1));
  // real and imaginary parts each N(0, 1/2)
  const double r = std::sqrt(-std::log(u1));
  return {r * std::cos(kTwoPi * u2), r * std::sin(kTwoPi * u2)};
}

bool in_half_space(int n1, int n2) { return n1 > 0 || (n1 == 0 && n2 > 0); }

}  // namespace

bool is_noise_mode(const TorusGrid& grid, int n1, int n2) {
  const int h = grid.n() / 2;
  return (n1 != 0 || n2 != 0) && std::abs(n1) < h && std::abs(n2) < h;
}

GaussianCoeffs zero_coeffs(int n) {
  GaussianCoeffs c;
  c.grid = TorusGrid(n);
  c.g.assign(c.grid.size(), cplx{});
  return c;
}

GaussianCoeffs sample_gaussian(std::uint64_t seed, std::uint64_t stream_id, int n) {
  GaussianCoeffs c = zero_coeffs(n);
  c.seed = seed;
  c.stream_id = stream_id;
  const int h = n / 2;
  for (int n1 = -h + 1; n1 < h; ++n1) {
    for (int n2 = -h + 1; n2 < h; ++n2) {
      if (!in_half_space(n1, n2)) continue;
      const cplx z = draw_mode(seed, stream_id, n1, n2);
      c.g[c.grid.flat(n1, n2)] = z;
      c.g[c.grid.flat(-n1, -n2)] = std::conj(z);
    }
  }
  return c;
}

GaussianCoeffs coeffs_from_modes(int n,
                                 const std::vector<std::pair<std::array<int, 2>, cplx>>& modes) {
  GaussianCoeffs c = zero_coeffs(n);
  for (const auto& [k, z] : modes) {
    if (!is_noise_mode(c.grid, k[0], k[1]))
      throw ConfigError("coeffs_from_modes: mode outside the noise lattice");
    const cplx v = in_half_space(k[0], k[1]) ? z : std::conj(z);
    c.g[c.grid.flat(k[0], k[1])] = v;
    c.g[c.grid.flat(-k[0], -k[1])] = std::conj(v);
  }
  return c;
}

std::string coeffs_to_json(const GaussianCoeffs& c) {
  nlohmann::json j;
  j["seed"] = c.seed;
  j["stream_id"] = c.stream_id;
  j["N"] = c.grid.n();
  auto rows = nlohmann::json::array();
  const int h = c.grid.n() / 2;
  for (int n1 = -h + 1; n1 < h; ++n1)
    for (int n2 = -h + 1; n2 < h; ++n2)
      if (in_half_space(n1, n2)) {
        const cplx z = c.at(n1, n2);
        rows.push_back({n1, n2, z.real(), z.imag()});
      }
  j["modes"] = std::move(rows);
  return j.dump();
}

GaussianCoeffs coeffs_from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("coeffs_from_json: ") + e.what());
  }
  try {
    GaussianCoeffs c = zero_coeffs(j.at("N").get<int>());
    c.seed = j.at("seed").get<std::uint64_t>();
    c.stream_id = j.at("stream_id").get<std::uint64_t>();
    for (const auto& row : j.at("modes")) {
      const int n1 = row.at(0).get<int>();
      const int n2 = row.at(1).get<int>();
      if (!is_noise_mode(c.grid, n1, n2) || !in_half_space(n1, n2))
        throw ConfigError("coeffs_from_json: bad mode index");
      const cplx z{row.at(2).get<double>(), row.at(3).get<double>()};
      c.g[c.grid.flat(n1, n2)] = z;
      c.g[c.grid.flat(-n1, -n2)] = std::conj(z);
    }
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("coeffs_from_json: ") + e.what());
  }
}

std::string to_string(MollifierKind kind) {
  switch (kind) {
    case MollifierKind::gaussian_rho: return "gaussian_rho";
    case MollifierKind::sharp_cutoff_rho: return "sharp_cutoff_rho";
    case MollifierKind::bump_chi_numeric: return "bump_chi_numeric";
  }
  return "?";
}

MollifierKind parse_mollifier(std::string_view name) {
  if (name == "gaussian_rho" || name == "gaussian") return MollifierKind::gaussian_rho;
  if (name == "sharp_cutoff_rho" || name == "sharp") return MollifierKind::sharp_cutoff_rho;
  if (name == "bump_chi_numeric" || name == "bump") return MollifierKind::bump_chi_numeric;
  throw ConfigError("unknown mollifier '" + std::string(name) + "'");
}

// chi(s) = exp(-1/(1-4s^2)) on [0, 1/2), radial Hankel transform on Gauss-Legendre nodes.
struct Mollifier::BumpQuadrature {
  std::vector<double> s;
  std::vector<double> w;  // includes chi(s) s and the normalization

  BumpQuadrature() {
    constexpr int order = 256;
    s.resize(order);
    w.resize(order);
    for (int i = 0; i < order; ++i) {
      double x = std::cos(kPi * (i + 0.75) / (order + 0.5));
      double dp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= order; ++k) {
          const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        dp = order * (x * p1 - p0) / (x * x - 1.0);
        const double dx = p1 / dp;
        x -= dx;
        if (std::abs(dx) < 1e-16) break;
      }
      const double wi = 2.0 / ((1.0 - x * x) * dp * dp);
      // map [-1, 1] -> [0, 1/2]
      s[i] = 0.25 * (x + 1.0);
      const double r2 = 4.0 * s[i] * s[i];
      const double chi = r2 < 1.0 ? std::exp(-1.0 / (1.0 - r2)) : 0.0;
      w[i] = 0.25 * wi * chi * s[i];
    }
    double total = 0.0;
    for (double x : w) total += x;
    for (double& x : w) x /= total;
  }

  double operator()(double r) const {
    if (r == 0.0) return 1.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) acc += w[i] * std::cyl_bessel_j(0.0, r * s[i]);
    return acc;
  }
};

Mollifier::Mollifier(MollifierKind kind) : kind_(kind) {
  if (kind_ == MollifierKind::bump_chi_numeric) {
    static const auto shared = std::make_shared<const BumpQuadrature>();
    bump_ = shared;
  }
}

double Mollifier::radial(double r) const {
  switch (kind_) {
    case MollifierKind::gaussian_rho: return std::exp(-0.5 * r * r);
    case MollifierKind::sharp_cutoff_rho: return r <= 1.0 ? 1.0 : 0.0;
    case MollifierKind::bump_chi_numeric: return (*bump_)(r);
  }
  return 0.0;
}

double Mollifier::operator()(double z1, double z2) const { return radial(std::hypot(z1, z2)); }

namespace {

void check_epsilon(double epsilon) {
  if (!(epsilon > 0.0) || epsilon > 1.0)
    throw ConfigError("epsilon must lie in (0, 1], got " + std::to_string(epsilon));
}

// rho(eps n) depends on |n|^2 only
class RhoTable {
 public:
  RhoTable(const Mollifier& m, double eps) : m_(m), eps_(eps) {}
  double operator()(int k2) {
    auto it = memo_.find(k2);
    if (it != memo_.end()) return it->second;
    const double r = m_.radial(eps_ * std::sqrt(static_cast<double>(k2)));
    memo_.emplace(k2, r);
    return r;
  }

 private:
  const Mollifier& m_;
  double eps_;
  std::unordered_map<int, double> memo_;
};

SpectralField potential(const GaussianCoeffs& c, const TorusGrid& grid, RhoTable* rho) {
  SpectralField y(grid, true);
  const int h = grid.n() / 2;
  for (int n1 = -h + 1; n1 < h; ++n1)
    for (int n2 = -h + 1; n2 < h; ++n2) {
      if (n1 == 0 && n2 == 0) continue;
      const int k2 = n1 * n1 + n2 * n2;
      const double r = rho ? (*rho)(k2) : 1.0;
      y.at(n1, n2) = -r * c.at(n1, n2) / static_cast<double>(k2);
    }
  return y;
}

SpectralField squared_gradient_minus(const SpectralField& y, double c, int oversample) {
  if (oversample < 1) throw ConfigError("oversample must be >= 1");
  const int m = y.grid().n() * oversample;
  const auto g = gradient(y);
  Samples a = to_physical(g[0], m);
  const Samples b = to_physical(g[1], m);
  for (std::size_t i = 0; i < a.size(); ++i)
    a[i] = a[i].real() * a[i].real() + b[i].real() * b[i].real() - c;
  return truncate(a, m, y.grid(), true);
}

}  // namespace

double compute_c_eps(const Mollifier& mollifier, double epsilon, int n) {
  // the scalar sum is meaningful for any eps > 0; eps > 1 just empties the sharp cutoff
  if (!(epsilon > 0.0)) throw ConfigError("compute_c_eps: epsilon must be positive");
  const TorusGrid grid(n);
  RhoTable rho(mollifier, epsilon);
  const int h = n / 2;
  double acc = 0.0;
  // accumulate from high to low frequency to keep the small terms
  for (int n1 = h - 1; n1 > -h; --n1)
    for (int n2 = h - 1; n2 > -h; --n2) {
      if (n1 == 0 && n2 == 0) continue;
      const int k2 = n1 * n1 + n2 * n2;
      const double r = rho(k2);
      acc += r * r / k2;
    }
  return acc;
}

SpectralField wick_square(const NoiseRealization& noise, int oversample) {
  return squared_gradient_minus(noise.Y_eps, noise.C_eps, oversample);
}

SpectralField wick_limit_field(const GaussianCoeffs& coeffs, int n, int oversample) {
  if (n > coeffs.grid.n()) throw ConfigError("wick_limit_field: lattice larger than coefficients");
  const TorusGrid grid(n);
  GaussianCoeffs restricted = zero_coeffs(n);
  const int h = n / 2;
  double c0 = 0.0;
  for (int n1 = -h + 1; n1 < h; ++n1)
    for (int n2 = -h + 1; n2 < h; ++n2) {
      if (n1 == 0 && n2 == 0) continue;
      restricted.g[grid.flat(n1, n2)] = coeffs.at(n1, n2);
      c0 += 1.0 / (n1 * n1 + n2 * n2);
    }
  return squared_gradient_minus(potential(restricted, grid, nullptr), c0, oversample);
}

NoiseRealization build_noise(std::shared_ptr<const GaussianCoeffs> coeffs,
                             const Mollifier& mollifier, double epsilon, NoiseOptions opts) {
  check_epsilon(epsilon);
  if (!coeffs) throw ConfigError("build_noise: null coefficients");
  const TorusGrid& grid = coeffs->grid;
  RhoTable rho(mollifier, epsilon);

  NoiseRealization out{.coeffs = coeffs,
                       .mollifier = mollifier,
                       .epsilon = epsilon,
                       .xi_eps = SpectralField(grid, true),
                       .Y = potential(*coeffs, grid, nullptr),
                       .Y_eps = potential(*coeffs, grid, &rho),
                       .grad_Y_eps = {SpectralField(grid, true), SpectralField(grid, true)},
                       .C_eps = compute_c_eps(mollifier, epsilon, grid.n()),
                       .wick_eps = SpectralField(grid, true),
                       .wick_limit = SpectralField(grid, true)};
  out.xi_eps = laplacian(out.Y_eps);
  out.grad_Y_eps = gradient(out.Y_eps);
  out.wick_eps = wick_square(out, opts.oversample);
  if (opts.with_limit) out.wick_limit = wick_limit_field(*coeffs, grid.n(), opts.oversample);
  return out;
}

SpectralField exp_field(const SpectralField& y, double scale) {
  Samples s = to_physical(y);
  double worst = 0.0;
  for (const auto& x : s) worst = std::max(worst, std::abs(scale * x.real()));
  if (worst > 200.0)
    throw NumericalAbort("exp_field: |scale*Y| exceeds 200", 0.0, worst);
  for (auto& x : s) x = std::exp(scale * x.real());
  return to_spectral(y.grid(), s, true);
}

}  // namespace wnls
