#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "wnls/spectral.hpp"

namespace wnls {

/// Hermitian-paired standard complex Gaussians g_n on the noise lattice
/// { n : |n_i| < N/2, n != 0 }. The zero mode and the Nyquist row/column are
/// identically zero; g_{-n} = conj(g_n) holds exactly.
struct GaussianCoeffs {
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;
  TorusGrid grid{8};
  std::vector<cplx> g;  // FFT order on grid

  cplx at(int n1, int n2) const { return g[grid.flat(n1, n2)]; }
};

/// Each mode is drawn from its own counter-based stream keyed by
/// (seed, stream_id, n), so the same mode gets the same value for every N.
GaussianCoeffs sample_gaussian(std::uint64_t seed, std::uint64_t stream_id, int n);
GaussianCoeffs zero_coeffs(int n);
/// Coefficients with only the listed modes excited (mirrors filled in).
GaussianCoeffs coeffs_from_modes(int n, const std::vector<std::pair<std::array<int, 2>, cplx>>& modes);

bool is_noise_mode(const TorusGrid& grid, int n1, int n2);

/// JSON dump as (n1, n2, re, im) rows over the half lattice plus seed/stream/N.
std::string coeffs_to_json(const GaussianCoeffs& c);
GaussianCoeffs coeffs_from_json(std::string_view text);

enum class MollifierKind { gaussian_rho, sharp_cutoff_rho, bump_chi_numeric };

std::string to_string(MollifierKind kind);
MollifierKind parse_mollifier(std::string_view name);

/// Fourier symbol rho = hat(chi) of the mollifying bump, normalized to rho(0) = 1.
/// All three kinds are radial.
///  - gaussian_rho:     rho(z) = exp(-|z|^2 / 2)
///  - sharp_cutoff_rho: indicator of |z| <= 1
///  - bump_chi_numeric: Hankel transform of chi(x) ~ exp(-1 / (1 - 4|x|^2)) on |x| < 1/2,
///                      evaluated by Gauss-Legendre quadrature
class Mollifier {
 public:
  explicit Mollifier(MollifierKind kind = MollifierKind::gaussian_rho);

  MollifierKind kind() const { return kind_; }
  double operator()(double z1, double z2) const;
  double radial(double r) const;

 private:
  struct BumpQuadrature;
  MollifierKind kind_;
  std::shared_ptr<const BumpQuadrature> bump_;
};

/// Every stochastic object derived from one (omega, epsilon).
struct NoiseRealization {
  std::shared_ptr<const GaussianCoeffs> coeffs;
  Mollifier mollifier;
  double epsilon = 1.0;
  SpectralField xi_eps{TorusGrid(8), true};
  SpectralField Y{TorusGrid(8), true};  // rho == 1 on the lattice
  SpectralField Y_eps{TorusGrid(8), true};
  std::array<SpectralField, 2> grad_Y_eps{SpectralField(TorusGrid(8), true),
                                         SpectralField(TorusGrid(8), true)};
  double C_eps = 0.0;
  SpectralField wick_eps{TorusGrid(8), true};
  SpectralField wick_limit{TorusGrid(8), true};

  const TorusGrid& grid() const { return Y_eps.grid(); }
};

struct NoiseOptions {
  int oversample = 2;
  bool with_limit = true;
};

NoiseRealization build_noise(std::shared_ptr<const GaussianCoeffs> coeffs,
                             const Mollifier& mollifier, double epsilon,
                             NoiseOptions opts = {});

/// sum over the noise lattice of rho^2(eps n) / |n|^2
double compute_c_eps(const Mollifier& mollifier, double epsilon, int n);

/// |grad Y_eps|^2 - C_eps formed pointwise on the (oversample*N)^2 grid, then
/// truncated back to the lattice.
SpectralField wick_square(const NoiseRealization& noise, int oversample = 2);

/// Lattice-truncated limit object with rho == 1, built from the modes of
/// `coeffs` inside Lambda_n (n <= coeffs.grid.n()).
SpectralField wick_limit_field(const GaussianCoeffs& coeffs, int n, int oversample = 2);

/// exp(scale * Y) at the nodes. Rejects max|scale * Y| > 200.
SpectralField exp_field(const SpectralField& y, double scale);

}  // namespace wnls
