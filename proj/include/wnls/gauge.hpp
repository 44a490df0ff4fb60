#pragma once

#include <memory>
#include <string>

#include "wnls/noise.hpp"
#include "wnls/spectral.hpp"

namespace wnls {

struct ModelParams {
  double p = 3.0;
  double lambda = -1.0;
  /// lambda > 0 is outside the theory; allowed only with this set, and warned about.
  bool allow_focusing = false;

  void validate() const;
};

enum class Gauge { u_gauge, v_gauge };

/// Whether the C_eps phase enters the gauge transform. `disabled` exists to show
/// what goes wrong without it.
enum class PhaseMode { renormalized, disabled };

std::string to_string(Gauge g);

struct SimState {
  double t = 0.0;
  SpectralField field{TorusGrid(8)};
  Gauge gauge = Gauge::u_gauge;
  std::shared_ptr<const NoiseRealization> noise;
  ModelParams params;
};

/// v = e^{i C_eps t} e^{Y_eps} u, applied at the nodes.
SimState to_v(const SimState& u, PhaseMode phase = PhaseMode::renormalized);
/// u = e^{-i C_eps t} e^{-Y_eps} v
SimState to_u(const SimState& v, PhaseMode phase = PhaseMode::renormalized);

/// Start from v0 (the H^2 object) and return u0 e^{Y - Y_eps} = e^{-Y_eps} v0 at t = 0.
SimState prepared_initial_datum(const SpectralField& v0,
                                std::shared_ptr<const NoiseRealization> noise,
                                ModelParams params);

/// Nodal samples of e^{scale * Y_eps}, shared by the gauge and the integrators.
Samples exp_nodes(const NoiseRealization& noise, double scale);

}  // namespace wnls
