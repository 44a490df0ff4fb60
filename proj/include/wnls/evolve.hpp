#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "wnls/gauge.hpp"

namespace wnls {

enum class Scheme { strang_u, ifrk4_v };

/// How the v-equation's non-Laplacian part is collocated.
///  - gauge_conjugate: e^{Y} Delta (e^{-Y} v) - Delta v + (xi - C) v
///  - transport:       -2 grad v . grad Y + v wick
/// Both equal the same continuum operator. The transport form is only stable
/// for smooth noise.
enum class VOperator { gauge_conjugate, transport };

std::string to_string(Scheme s);
Scheme parse_scheme(const std::string& name);

struct IntegratorConfig {
  Scheme scheme = Scheme::strang_u;
  double dt = 1e-4;
  double t_end = 0.5;
  bool dealias = false;
  int snapshot_stride = 1;
  /// ifrk4_v: warn when dt * N * max|grad Y_eps| exceeds this
  double stability_bound = 0.5;
  VOperator v_operator = VOperator::gauge_conjugate;
  bool keep_snapshots = true;

  int steps() const;  // throws unless t_end is a multiple of dt
  void validate() const;
};

/// d/dt v for the gauged equation.
SpectralField rhs_v(const SimState& state, bool dealias = false,
                    VOperator op = VOperator::gauge_conjugate);
/// d/dt u for the regularized original equation, i u_t = Delta u + xi_eps u + lambda |u|^p u.
SpectralField rhs_u(const SimState& state);

SimState strang_step_u(const SimState& state, double dt, bool dealias = false);
SimState ifrk4_step_v(const SimState& state, double dt,
                      VOperator op = VOperator::gauge_conjugate, bool dealias = false);

struct Observer {
  std::string name;
  std::function<double(const SimState&)> fn;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<SimState> snapshots;  // empty unless keep_snapshots
  std::vector<std::string> observer_names;
  std::vector<std::vector<double>> records;  // one row per snapshot time
};

using SnapshotHook = std::function<void(const SimState&)>;

/// Integrates to t_end, recording observers every snapshot_stride steps (and at
/// t = 0). Throws NumericalAbort on NaN or when max|field| exceeds 1e6 x its
/// initial value.
Trajectory run(const SimState& initial, const IntegratorConfig& cfg,
               const std::vector<Observer>& observers = {}, const SnapshotHook& hook = {});

/// Snapshots as raw little-endian complex<double> coefficient arrays
/// (snap_00000.bin, ...) plus trajectory.json.
void save_trajectory(const std::filesystem::path& dir, const Trajectory& traj,
                     const IntegratorConfig& cfg);
Trajectory load_trajectory(const std::filesystem::path& dir,
                           std::shared_ptr<const NoiseRealization> noise, ModelParams params);

}  // namespace wnls
