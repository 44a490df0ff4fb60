#pragma once

#include <array>
#include <map>
#include <memory>
#include <string>
#include <utility>

#include "wnls/evolve.hpp"
#include "wnls/gauge.hpp"

namespace wnls {

struct EnergyReport {
  double t = 0.0;
  double mass = 0.0;
  double hamiltonian = 0.0;
  double F = 0.0;
  double G = 0.0;
  double E = 0.0;  // F + lambda G
  double H = 0.0;
  std::map<std::string, double> aux_norms;  // l2, h1, h2, wdelta
};

/// Noise data resampled onto the (oversample * N)^2 quadrature grid. The Wick
/// potential used here is |grad Y_eps|^2 - C_eps formed pointwise on that grid.
class EnergyEvaluator {
 public:
  explicit EnergyEvaluator(std::shared_ptr<const NoiseRealization> noise, int oversample = 2);

  const NoiseRealization& noise() const { return *noise_; }
  int fine_n() const { return m_; }

  /// int e^{-2Y_eps} |v|^2, native-node quadrature
  double mass(const SpectralField& v) const;
  double hamiltonian(const SpectralField& v, double lambda, double p) const;
  std::array<double, 7> kinetic_terms(const SpectralField& v) const;
  std::array<double, 5> potential_terms(const SpectralField& v, double p) const;
  std::array<double, 4> defect_terms(const SpectralField& v, const SpectralField& vt,
                                     double p) const;
  std::pair<double, double> quadratic_energy_pair(const SpectralField& u,
                                                  const SpectralField& v) const;

  EnergyReport report(const SimState& v_state,
                      VOperator op = VOperator::gauge_conjugate) const;

 private:
  struct Fine;
  Fine lift(const SpectralField& f) const;
  double integrate(const std::vector<double>& f) const;

  std::shared_ptr<const NoiseRealization> noise_;
  int m_;
  std::vector<double> y_, g1_, g2_, w_, xi_;
};

double mass(const SpectralField& v, const NoiseRealization& noise);
double hamiltonian(const SpectralField& v, const NoiseRealization& noise, double lambda, double p);
std::pair<double, double> quadratic_energy_pair(const SpectralField& u, const SpectralField& v,
                                                const NoiseRealization& noise);
/// vt is unused; F depends on v alone.
double kinetic_F(const SpectralField& v, const SpectralField& vt, const NoiseRealization& noise);
double potential_G(const SpectralField& v, const NoiseRealization& noise, double p);
/// d/dt v is taken from the equation, never finite-differenced.
double defect_H(const SpectralField& v, const NoiseRealization& noise, double lambda, double p,
                VOperator op = VOperator::gauge_conjugate);

struct InequalityPair {
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio() const { return lhs / rhs; }
};

/// ||grad v||_{L^4}^2 against ||Delta v||_{L^2} ||grad v||_{L^2}
InequalityPair gn_check(const SpectralField& v);
/// ||v||_{L^inf} against ||v||_{H^1} ln^{1/2}(2 + ||v||_{L^2} + ||Delta v||_{L^2})
InequalityPair brezis_gallouet_check(const SpectralField& v);
/// ||grad |v| ||_{L^2} against ||grad v||_{L^2}; |v| is differentiated on the oversampled grid.
InequalityPair diamagnetic_check(const SpectralField& v, int oversample = 2);

/// (A + C)^{e^{B t}} for f(t) <= A + B int_0^t f ln(C + f)
double gronwall_log_bound(double a, double b, double c, double t);
/// (A / B) e^{B t} for f' <= A + B f, f(0) = 0
double gronwall_linear_bound(double a, double b, double t);

}  // namespace wnls
