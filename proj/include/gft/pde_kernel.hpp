#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "gft/grid_state.hpp"
#include "gft/pde_tendencies.hpp"

namespace gft {

/// Dataset resolution split into m explicit substeps; three substeps form a block.
struct TimeConfig {
  double t_data = 3600.0;
  int m = 12;
  static constexpr std::size_t kernels_per_block = 3;

  double t_s() const { return t_data / static_cast<double>(m); }
  double t_block() const { return static_cast<double>(kernels_per_block) * t_s(); }
  void validate() const;
};

struct StabilityReport {
  std::vector<std::pair<std::string, double>> max_abs;  // per upper-air variable
  std::size_t nan_count = 0;
  double cfl_estimate = 0.0;
  double cfl_bound = 1.0;
  bool stable = true;
  bool warning = false;  // cfl in [0.8 bound, bound)

  std::string summary() const;
};

struct KernelOptions {
  bool zero_tendencies = false;  // test hook: S_PDE forced to zero
  double cfl_bound = 1.0;
};

/// One explicit Euler update x <- x + S_PDE(x) t_s of u, v, z, q, T on every
/// level. Surface channels pass through unchanged.
WeatherState euler_step(const WeatherState& state, const PhysicsContext& ctx, double t_s,
                        const KernelOptions& options = {});

struct EvolveResult {
  WeatherState state;
  StabilityReport report;
};

/// n-fold composition of euler_step. Throws StabilityError carrying the
/// failing step index on the first non-finite value or saturation-domain
/// violation.
EvolveResult evolve(const WeatherState& state, std::size_t n_steps, const PhysicsContext& ctx, double t_s,
                    const KernelOptions& options = {});

/// CFL estimate max(|u|, |v|) t_s / min_pixel over upper-air winds, NaN
/// count over all channels; stable iff no NaN and cfl < bound.
StabilityReport stability_check(const WeatherState& state, const GridGeometry& geom, double t_s,
                                double cfl_bound = 1.0);

/// Euler update of the five upper-air fields on any backend.
template <class B>
UpperFields<typename B::Value> euler_fields(B& be, const UpperFields<typename B::Value>& s,
                                            const PhysicsContext& ctx, double t_s) {
  const auto tend = compute_tendencies(be, s, ctx);
  return {be.add(s.u, be.scale(tend.du_dt, t_s)), be.add(s.v, be.scale(tend.dv_dt, t_s)),
          be.add(s.z, be.scale(tend.dz_dt, t_s)), be.add(s.q, be.scale(tend.dq_dt, t_s)),
          be.add(s.t, be.scale(tend.dt_dt, t_s))};
}

}  // namespace gft
