#include "wnls/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <map>
#include <mutex>
#include <string>

namespace wnls {

void warn(const std::string& msg) { std::clog << "wnls: warning: " << msg << '\n'; }

namespace {

struct PlanPair {
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;
};

// Plans are created once per size; FFTW_ESTIMATE keeps the choice of codelets
// independent of timing, which the bit-reproducibility guarantees rely on.
class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  const PlanPair& get(int m) {
    std::lock_guard lock(mutex_);
    auto it = plans_.find(m);
    if (it != plans_.end()) return it->second;
    std::vector<cplx> scratch(static_cast<std::size_t>(m) * m);
    auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    PlanPair p;
    p.forward = fftw_plan_dft_2d(m, m, buf, buf, FFTW_FORWARD, flags);
    p.inverse = fftw_plan_dft_2d(m, m, buf, buf, FFTW_BACKWARD, flags);
    return plans_.emplace(m, p).first->second;
  }

  PlanCache(const PlanCache&) = delete;
  PlanCache& operator=(const PlanCache&) = delete;

 private:
  PlanCache() = default;
  ~PlanCache() {
    for (auto& [m, p] : plans_) {
      fftw_destroy_plan(p.forward);
      fftw_destroy_plan(p.inverse);
    }
  }
  std::mutex mutex_;
  std::map<int, PlanPair> plans_;
};

void check_size(int m, std::span<cplx> data) {
  if (data.size() != static_cast<std::size_t>(m) * m)
    throw ConfigError("fft: buffer size does not match " + std::to_string(m) + "^2");
}

// (-1)^{n1+n2}: the phase from placing the first node at -pi.
double shift_sign(int n1, int n2) { return ((n1 + n2) & 1) ? -1.0 : 1.0; }

int fine_slot(int freq, int m) { return freq >= 0 ? freq : freq + m; }

}  // namespace

void fft_forward(int m, std::span<cplx> data) {
  check_size(m, data);
  auto* buf = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(PlanCache::instance().get(m).forward, buf, buf);
}

void fft_inverse(int m, std::span<cplx> data) {
  check_size(m, data);
  auto* buf = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(PlanCache::instance().get(m).inverse, buf, buf);
}

TorusGrid::TorusGrid(int modes_per_dim) : n_(modes_per_dim) {
  if (n_ < 8 || n_ % 2 != 0)
    throw ConfigError("TorusGrid: modes_per_dim must be even and >= 8, got " +
                      std::to_string(n_));
}

SpectralField::SpectralField(TorusGrid grid, bool real)
    : grid_(grid), coeffs_(grid.size()), real_(real) {}

SpectralField::SpectralField(TorusGrid grid, std::vector<cplx> coeffs, bool real)
    : grid_(grid), coeffs_(std::move(coeffs)), real_(real) {
  if (coeffs_.size() != grid_.size())
    throw ConfigError("SpectralField: coefficient array does not match grid");
}

double SpectralField::hermitian_defect() const {
  const int n = grid_.n();
  double worst = 0.0;
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      const int ma = (n - a) % n;
      const int mb = (n - b) % n;
      const cplx c = coeffs_[static_cast<std::size_t>(a) * n + b];
      const cplx mirror = coeffs_[static_cast<std::size_t>(ma) * n + mb];
      worst = std::max(worst, std::abs(c - std::conj(mirror)));
    }
  }
  return worst;
}

double SpectralField::max_abs() const {
  double m = 0.0;
  for (const auto& c : coeffs_) m = std::max(m, std::abs(c));
  return m;
}

SpectralField& SpectralField::operator+=(const SpectralField& o) {
  if (!(o.grid_ == grid_)) throw ConfigError("SpectralField: grid mismatch");
  for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += o.coeffs_[i];
  real_ = real_ && o.real_;
  return *this;
}

SpectralField& SpectralField::operator-=(const SpectralField& o) {
  if (!(o.grid_ == grid_)) throw ConfigError("SpectralField: grid mismatch");
  for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] -= o.coeffs_[i];
  real_ = real_ && o.real_;
  return *this;
}

SpectralField& SpectralField::operator*=(cplx s) {
  for (auto& c : coeffs_) c *= s;
  real_ = real_ && s.imag() == 0.0;
  return *this;
}

SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
SpectralField operator*(cplx s, SpectralField a) { return a *= s; }

SpectralField to_spectral(const TorusGrid& grid, std::span<const cplx> samples, bool real) {
  if (samples.size() != grid.size())
    throw ConfigError("to_spectral: sample array shape does not match grid");
  const int n = grid.n();
  std::vector<cplx> buf(samples.begin(), samples.end());
  if (real)
    for (auto& x : buf) x = {x.real(), 0.0};
  fft_forward(n, buf);
  const double norm = 1.0 / static_cast<double>(grid.size());
  for (int a = 0; a < n; ++a) {
    const int n1 = grid.frequency(a);
    for (int b = 0; b < n; ++b) {
      buf[static_cast<std::size_t>(a) * n + b] *= norm * shift_sign(n1, grid.frequency(b));
    }
  }
  return SpectralField(grid, std::move(buf), real);
}

Samples to_physical(const SpectralField& f) { return to_physical(f, f.grid().n()); }

Samples to_physical(const SpectralField& f, int m) {
  const TorusGrid& g = f.grid();
  const int n = g.n();
  if (m < n || m % 2 != 0) throw ConfigError("to_physical: target grid must be even and >= N");
  Samples out(static_cast<std::size_t>(m) * m);
  const bool split = m > n;
  for (int a = 0; a < n; ++a) {
    const int n1 = g.frequency(a);
    for (int b = 0; b < n; ++b) {
      const int n2 = g.frequency(b);
      const cplx c = f.coeffs()[static_cast<std::size_t>(a) * n + b] * shift_sign(n1, n2);
      if (c == cplx{}) continue;
      // Nyquist modes alias +-N/2 on the native grid; on a finer grid each gets half.
      // (-1)^{n1+n2} is the same for both copies since N is even.
      const bool ny1 = split && n1 == -n / 2;
      const bool ny2 = split && n2 == -n / 2;
      const double w = (ny1 ? 0.5 : 1.0) * (ny2 ? 0.5 : 1.0);
      for (int s1 = 0; s1 < (ny1 ? 2 : 1); ++s1) {
        const int f1 = s1 ? n / 2 : n1;
        for (int s2 = 0; s2 < (ny2 ? 2 : 1); ++s2) {
          const int f2 = s2 ? n / 2 : n2;
          out[static_cast<std::size_t>(fine_slot(f1, m)) * m + fine_slot(f2, m)] += w * c;
        }
      }
    }
  }
  fft_inverse(m, out);
  if (f.is_real())
    for (auto& x : out) x = {x.real(), 0.0};
  return out;
}

SpectralField truncate(std::span<const cplx> fine_samples, int m, const TorusGrid& grid,
                       bool real) {
  const int n = grid.n();
  if (m < n) throw ConfigError("truncate: source grid coarser than target");
  if (fine_samples.size() != static_cast<std::size_t>(m) * m)
    throw ConfigError("truncate: sample array shape does not match source grid");
  std::vector<cplx> buf(fine_samples.begin(), fine_samples.end());
  if (real)
    for (auto& x : buf) x = {x.real(), 0.0};
  fft_forward(m, buf);
  const double norm = 1.0 / (static_cast<double>(m) * m);
  SpectralField out(grid, real);
  const bool fold = m > n;
  for (int a = 0; a < n; ++a) {
    const int n1 = grid.frequency(a);
    for (int b = 0; b < n; ++b) {
      const int n2 = grid.frequency(b);
      const bool ny1 = fold && n1 == -n / 2;
      const bool ny2 = fold && n2 == -n / 2;
      cplx acc{};
      for (int s1 = 0; s1 < (ny1 ? 2 : 1); ++s1) {
        const int f1 = s1 ? n / 2 : n1;
        for (int s2 = 0; s2 < (ny2 ? 2 : 1); ++s2) {
          const int f2 = s2 ? n / 2 : n2;
          acc += buf[static_cast<std::size_t>(fine_slot(f1, m)) * m + fine_slot(f2, m)];
        }
      }
      out.coeffs()[static_cast<std::size_t>(a) * n + b] = acc * norm * shift_sign(n1, n2);
    }
  }
  return out;
}

namespace {

template <class Mult>
SpectralField apply_multiplier(const SpectralField& f, Mult&& mult, bool keeps_real) {
  const TorusGrid& g = f.grid();
  const int n = g.n();
  SpectralField out(g, f.is_real() && keeps_real);
  for (int a = 0; a < n; ++a) {
    const int n1 = g.frequency(a);
    for (int b = 0; b < n; ++b) {
      const std::size_t i = static_cast<std::size_t>(a) * n + b;
      out.coeffs()[i] = mult(n1, g.frequency(b)) * f.coeffs()[i];
    }
  }
  return out;
}

}  // namespace

SpectralField apply_ds(const SpectralField& f, double s) {
  if (s == 0.0) return f;
  return apply_multiplier(
      f, [s](int n1, int n2) { return cplx{std::pow(1.0 + n1 * n1 + n2 * n2, 0.5 * s), 0.0}; },
      true);
}

std::array<SpectralField, 2> gradient(const SpectralField& f) {
  const int half = f.grid().n() / 2;
  auto d1 = apply_multiplier(
      f,
      [half](int n1, int n2) {
        return (n1 == -half || n2 == -half) ? cplx{} : cplx{0.0, static_cast<double>(n1)};
      },
      true);
  auto d2 = apply_multiplier(
      f,
      [half](int n1, int n2) {
        return (n1 == -half || n2 == -half) ? cplx{} : cplx{0.0, static_cast<double>(n2)};
      },
      true);
  return {std::move(d1), std::move(d2)};
}

SpectralField laplacian(const SpectralField& f) {
  return apply_multiplier(
      f, [](int n1, int n2) { return cplx{-static_cast<double>(n1 * n1 + n2 * n2), 0.0}; }, true);
}

SpectralField inverse_laplacian(const SpectralField& f) {
  return apply_multiplier(
      f,
      [](int n1, int n2) {
        const int k2 = n1 * n1 + n2 * n2;
        return k2 == 0 ? cplx{} : cplx{-1.0 / k2, 0.0};
      },
      true);
}

SpectralField dealias_two_thirds(const SpectralField& f) {
  const int n = f.grid().n();
  return apply_multiplier(
      f,
      [n](int n1, int n2) {
        return (3 * std::abs(n1) < n && 3 * std::abs(n2) < n) ? cplx{1.0, 0.0} : cplx{};
      },
      true);
}

double parseval_l2(const SpectralField& f) {
  double acc = 0.0;
  for (const auto& c : f.coeffs()) acc += std::norm(c);
  return kTwoPi * std::sqrt(acc);
}

double lq_norm(const SpectralField& f, double q, const std::optional<SpectralField>& weight,
               NormOptions opts) {
  if (!(q >= 1.0)) throw ConfigError("lq_norm: q must be >= 1");
  if (opts.oversample < 1) throw ConfigError("lq_norm: oversample must be >= 1");
  const int m = f.grid().n() * opts.oversample;
  if (std::isinf(q)) {
    if (weight) throw ConfigError("lq_norm: weighted L^inf is not defined");
    double mx = 0.0;
    for (const auto& x : to_physical(f, m)) mx = std::max(mx, std::abs(x));
    return mx;
  }
  if (!weight && q == 2.0 && opts.oversample == 1) return parseval_l2(f);
  const Samples s = to_physical(f, m);
  Samples w;
  if (weight) {
    if (!(weight->grid() == f.grid())) throw ConfigError("lq_norm: weight grid mismatch");
    w = to_physical(*weight, m);
    double wmax = 0.0;
    for (const auto& x : w) wmax = std::max(wmax, std::abs(x));
    for (const auto& x : w)
      if (x.real() < -1e-12 * wmax) throw ConfigError("lq_norm: weight is negative at a node");
  }
  const double h2 = (kTwoPi / m) * (kTwoPi / m);
  double acc = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double a = std::abs(s[i]);
    const double wi = weight ? std::max(w[i].real(), 0.0) : 1.0;
    acc += (q == 2.0 ? a * a : std::pow(a, q)) * wi;
  }
  return std::pow(acc * h2, 1.0 / q);
}

double sobolev_norm(const SpectralField& f, double s, double q, NormOptions opts) {
  if (q == 2.0) {
    const TorusGrid& g = f.grid();
    const int n = g.n();
    double acc = 0.0;
    for (int a = 0; a < n; ++a) {
      const int n1 = g.frequency(a);
      for (int b = 0; b < n; ++b) {
        const int n2 = g.frequency(b);
        const double w = s == 0.0 ? 1.0 : std::pow(1.0 + n1 * n1 + n2 * n2, s);
        acc += w * std::norm(f.coeffs()[static_cast<std::size_t>(a) * n + b]);
      }
    }
    return kTwoPi * std::sqrt(acc);
  }
  return lq_norm(apply_ds(f, s), q, std::nullopt, opts);
}

double sobolev_sup_norm(const SpectralField& f, double s, SupNormMode mode, NormOptions opts) {
  switch (mode) {
    case SupNormMode::lq16_proxy:
      return sobolev_norm(f, s, 16.0, opts);
    case SupNormMode::oversampled_max:
      return lq_norm(apply_ds(f, s), std::numeric_limits<double>::infinity(), std::nullopt, opts);
  }
  return 0.0;
}

}  // namespace wnls
