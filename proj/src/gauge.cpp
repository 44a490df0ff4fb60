#include "wnls/gauge.hpp"

#include <cmath>

namespace wnls {

void ModelParams::validate() const {
  if (!(p >= 2.0 && p <= 3.0)) throw ConfigError("p must lie in [2, 3]");
  if (!std::isfinite(lambda)) throw ConfigError("lambda must be finite");
  if (lambda > 0.0) {
    if (!allow_focusing) throw ConfigError("lambda > 0 requires the focusing override");
    warn("lambda > 0: focusing case, no global bounds are expected");
  }
}

std::string to_string(Gauge g) { return g == Gauge::u_gauge ? "u_gauge" : "v_gauge"; }

Samples exp_nodes(const NoiseRealization& noise, double scale) {
  Samples s = to_physical(noise.Y_eps);
  for (auto& x : s) {
    const double a = scale * x.real();
    if (std::abs(a) > 200.0) throw NumericalAbort("exp_nodes: |scale*Y| exceeds 200", 0.0, a);
    x = std::exp(a);
  }
  return s;
}

namespace {

SimState transform(const SimState& in, Gauge from, double sign, PhaseMode phase) {
  if (in.gauge != from) throw ConfigError("gauge transform: state is in " + to_string(in.gauge));
  if (!in.noise) throw ConfigError("gauge transform: state has no noise attached");
  if (!(in.field.grid() == in.noise->grid()))
    throw ConfigError("gauge transform: field grid differs from noise grid");
  const Samples w = exp_nodes(*in.noise, sign);
  const double theta = phase == PhaseMode::renormalized ? sign * in.noise->C_eps * in.t : 0.0;
  const cplx rot = std::polar(1.0, theta);
  Samples s = to_physical(in.field);
  for (std::size_t i = 0; i < s.size(); ++i) s[i] *= rot * w[i].real();
  SimState out = in;
  out.field = to_spectral(in.field.grid(), s, false);
  out.gauge = from == Gauge::u_gauge ? Gauge::v_gauge : Gauge::u_gauge;
  return out;
}

}  // namespace

SimState to_v(const SimState& u, PhaseMode phase) {
  return transform(u, Gauge::u_gauge, +1.0, phase);
}

SimState to_u(const SimState& v, PhaseMode phase) {
  return transform(v, Gauge::v_gauge, -1.0, phase);
}

SimState prepared_initial_datum(const SpectralField& v0,
                                std::shared_ptr<const NoiseRealization> noise,
                                ModelParams params) {
  params.validate();
  SimState v{.t = 0.0, .field = v0, .gauge = Gauge::v_gauge, .noise = std::move(noise),
             .params = params};
  return to_u(v);
}

}  // namespace wnls
