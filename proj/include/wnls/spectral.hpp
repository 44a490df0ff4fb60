#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "wnls/errors.hpp"

namespace wnls {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

/// Uniform N x N grid on the torus (-pi, pi)^2.
///
/// Storage order everywhere is row-major with the first index following x1.
/// Spectral arrays use FFT ordering: slot k holds frequency k for k < N/2 and
/// k - N otherwise, so the represented set is -N/2 <= n_i < N/2.
class TorusGrid {
 public:
  explicit TorusGrid(int modes_per_dim);

  int n() const { return n_; }
  std::size_t size() const { return static_cast<std::size_t>(n_) * n_; }

  double node(int j) const { return -kPi + kTwoPi * j / n_; }
  double weight() const { return (kTwoPi / n_) * (kTwoPi / n_); }

  int frequency(int slot) const { return slot < n_ / 2 ? slot : slot - n_; }
  int slot(int freq) const { return freq >= 0 ? freq : freq + n_; }
  bool represents(int n1, int n2) const {
    return n1 >= -n_ / 2 && n1 < n_ / 2 && n2 >= -n_ / 2 && n2 < n_ / 2;
  }
  bool is_nyquist(int n1, int n2) const { return n1 == -n_ / 2 || n2 == -n_ / 2; }
  std::size_t flat(int n1, int n2) const {
    return static_cast<std::size_t>(slot(n1)) * n_ + slot(n2);
  }

  friend bool operator==(const TorusGrid&, const TorusGrid&) = default;

 private:
  int n_;
};

/// Complex function on the torus held by its Fourier coefficients,
/// f(x) = sum_n c_n e^{i n.x}, with no normalization factor in the series.
class SpectralField {
 public:
  explicit SpectralField(TorusGrid grid, bool real = false);
  SpectralField(TorusGrid grid, std::vector<cplx> coeffs, bool real = false);

  const TorusGrid& grid() const { return grid_; }
  std::span<const cplx> coeffs() const { return coeffs_; }
  std::span<cplx> coeffs() { return coeffs_; }
  bool is_real() const { return real_; }
  void set_real(bool real) { real_ = real; }

  cplx at(int n1, int n2) const { return coeffs_[grid_.flat(n1, n2)]; }
  cplx& at(int n1, int n2) { return coeffs_[grid_.flat(n1, n2)]; }

  /// max_n |c_n - conj(c_{-n})|, treating modes whose mirror is not
  /// represented as needing to vanish.
  double hermitian_defect() const;
  double max_abs() const;

  SpectralField& operator+=(const SpectralField& o);
  SpectralField& operator-=(const SpectralField& o);
  SpectralField& operator*=(cplx s);

 private:
  TorusGrid grid_;
  std::vector<cplx> coeffs_;
  bool real_;
};

SpectralField operator+(SpectralField a, const SpectralField& b);
SpectralField operator-(SpectralField a, const SpectralField& b);
SpectralField operator*(cplx s, SpectralField a);

/// Samples at the nodes x_j of some grid (not necessarily the field's own).
using Samples = std::vector<cplx>;

// --- Discrete Fourier layer (FFTW behind a per-size plan cache) ---

/// In-place unnormalized transforms on an M x M array: forward computes
/// sum_j f_j e^{-2 pi i k.j / M}, inverse the conjugate sum.
void fft_forward(int m, std::span<cplx> data);
void fft_inverse(int m, std::span<cplx> data);

SpectralField to_spectral(const TorusGrid& grid, std::span<const cplx> samples,
                          bool real = false);
Samples to_physical(const SpectralField& f);
/// Trigonometric interpolant of f evaluated on the M x M grid, M >= N even.
/// The Nyquist coefficient is split evenly between +-N/2 so real fields stay real.
Samples to_physical(const SpectralField& f, int m);
/// Band-limits samples from an M x M grid back to the coefficients of `grid`.
SpectralField truncate(std::span<const cplx> fine_samples, int m, const TorusGrid& grid,
                       bool real = false);

// --- Multipliers ---

/// <n>^s with <n> = (1 + |n|^2)^{1/2}.
SpectralField apply_ds(const SpectralField& f, double s);
/// Partial derivatives via i n_i; Nyquist row and column are zeroed.
std::array<SpectralField, 2> gradient(const SpectralField& f);
/// Multiplier -|n|^2 on every represented mode.
SpectralField laplacian(const SpectralField& f);
/// Inverse Laplacian on the mean-zero part; the zero mode maps to 0.
SpectralField inverse_laplacian(const SpectralField& f);
/// 2/3-rule mask: keep |n_i| < N/3.
SpectralField dealias_two_thirds(const SpectralField& f);

// --- Norms ---

struct NormOptions {
  /// Evaluate nonlinear integrands on an (oversample * N)^2 grid.
  int oversample = 1;
};

/// Stand-in for W^{s,infinity}.
enum class SupNormMode { lq16_proxy, oversampled_max };

/// (integral |f|^q w)^{1/q} by node quadrature; q = +inf returns max|f| at nodes.
double lq_norm(const SpectralField& f, double q,
               const std::optional<SpectralField>& weight = std::nullopt,
               NormOptions opts = {});
/// ||D^s f||_{L^q}. For q = 2 this is evaluated through Parseval.
double sobolev_norm(const SpectralField& f, double s, double q, NormOptions opts = {});
/// W^{s,infinity} stand-in. The q = 16 proxy relies on W^{s,16} embedding into
/// C^{s - 1/8}; it is a monitoring quantity, not a calibrated sup norm.
double sobolev_sup_norm(const SpectralField& f, double s, SupNormMode mode,
                        NormOptions opts = {.oversample = 2});

/// (2 pi) (sum_n |c_n|^2)^{1/2}
double parseval_l2(const SpectralField& f);

/// Pointwise map of a real-or-complex field through its samples on the native grid.
template <class F>
SpectralField map_nodes(const SpectralField& f, F&& fn, bool real_result) {
  Samples s = to_physical(f);
  for (auto& x : s) x = fn(x);
  return to_spectral(f.grid(), s, real_result);
}

}  // namespace wnls
