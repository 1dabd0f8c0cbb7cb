#pragma once

#include <cmath>
#include <vector>

#include "coagsed/coagulation.hpp"
#include "coagsed/grid.hpp"
#include "coagsed/transport.hpp"
#include "coagsed/util.hpp"

namespace coagsed {

struct SolverOptions {
  int threads = 1;
  bool lie_splitting = false;  // transport-then-coagulation, for comparisons
};

struct MassPoint {
  double t;
  double mass;
  double boundary_loss;  // cumulative coagulation flux past v_max
};

struct Trajectory {
  std::vector<Field2D> snapshots;
  std::vector<MassPoint> mass_series;
  double boundary_loss = 0.0;
  double clamp_mass = 0.0;  // mass created by the positivity clamp (~0)
};

// largest a-rate over the grid, the quantity limiting the explicit step
inline double max_a_rate(const Field2D& f, const KernelTable& table,
                         int threads = 1) {
  const auto& g = *f.grid;
  std::size_t nv = g.nv();
  std::vector<double> row_max(g.ny(), 0.0);
  parallel_for(g.ny(), threads, [&](std::size_t i0, std::size_t i1) {
    std::vector<double> arate(nv);
    for (std::size_t i = i0; i < i1; ++i) {
      a_rate_row(table, f.row(i), g.wv, arate.data());
      for (std::size_t j = 0; j < nv; ++j)
        row_max[i] = std::max(row_max[i], arate[j]);
    }
  });
  double m = 0.0;
  for (double r : row_max) m = std::max(m, r);
  return m;
}

namespace detail {

// Heun step of the coagulation operator with the explicit loss term
// H (1 - dt a) + dt gain; conservative stage by stage. The positivity clamp
// only mops up roundoff once the stability bound holds.
inline void coagulation_substep(Field2D& f, double dt, const KernelTable& table,
                                double& flux_acc, double& clamp_acc,
                                int threads) {
  CoagRates r1 = apply_symmetric(f, table, threads);
  double amax = max_a_rate(f, table, threads);
  if (dt * amax > 0.5)
    throw StabilityError(
        "splitting step: dt * max(a-rate) = " + std::to_string(dt * amax) +
            " > 1/2, need dt <= " + std::to_string(0.5 / amax),
        0.5 / amax);
  const auto& g = *f.grid;
  Field2D stage(f.grid, f.time);
  for (std::size_t k = 0; k < f.h.size(); ++k)
    stage.h[k] = f.h[k] + dt * (r1.gain[k] - r1.loss[k]);
  CoagRates r2 = apply_symmetric(stage, table, threads);

  double clamped = 0.0;
  for (std::size_t i = 0; i < g.ny(); ++i) {
    for (std::size_t j = 0; j < g.nv(); ++j) {
      std::size_t k = i * g.nv() + j;
      double next = f.h[k] + 0.5 * dt *
                                 (r1.gain[k] - r1.loss[k] + r2.gain[k] -
                                  r2.loss[k]);
      if (next < 0.0) {
        clamped += -next * g.wy[i] * g.wv[j] * g.v[j];
        next = 0.0;
      }
      f.h[k] = next;
    }
  }
  flux_acc += 0.5 * dt * (r1.mass_flux_beyond() + r2.mass_flux_beyond());
  clamp_acc += clamped;
}

}  // namespace detail

// One Strang step: exact transport over dt/2, coagulation substep over dt,
// exact transport over dt/2. Transport uses the conservative finite-volume
// form of the semigroup so the mass ledger closes to roundoff.
inline Field2D splitting_step(const Field2D& f, double dt,
                              const KernelTable& table, const Params& p,
                              double& flux_acc, double& clamp_acc,
                              const SolverOptions& opts = {}) {
  if (!(dt > 0.0)) throw std::domain_error("splitting_step: dt must be > 0");
  Field2D cur = f;
  if (opts.lie_splitting) {
    cur = transport_remap(cur, dt, p, opts.threads);
    detail::coagulation_substep(cur, dt, table, flux_acc, clamp_acc,
                                opts.threads);
  } else {
    cur = transport_remap(cur, 0.5 * dt, p, opts.threads);
    detail::coagulation_substep(cur, dt, table, flux_acc, clamp_acc,
                                opts.threads);
    cur = transport_remap(cur, 0.5 * dt, p, opts.threads);
  }
  cur.time = f.time + dt;
  return cur;
}

// Repeated stepping with snapshots and a mass ledger. dt = 0 picks the
// stability-limited step each time (deterministic).
inline Trajectory run_splitting(const Field2D& init, const KernelTable& table,
                                const Params& p, double T, double dt,
                                int snapshot_every = 1,
                                const SolverOptions& opts = {}) {
  if (T < 0.0) throw std::domain_error("run_splitting: T must be >= 0");
  Trajectory traj;
  Field2D cur = init;
  traj.snapshots.push_back(cur);
  traj.mass_series.push_back({cur.time, total_mass(cur), 0.0});
  if (T == 0.0) return traj;

  bool auto_dt = dt <= 0.0;
  double t_end = init.time + T;
  long step = 0;
  while (cur.time < t_end - 1e-12 * std::max(1.0, t_end)) {
    double h = dt;
    if (auto_dt) {
      double amax = max_a_rate(cur, table, opts.threads);
      h = amax > 0.0 ? 0.45 * 0.5 / amax : (t_end - cur.time);
    }
    h = std::min(h, t_end - cur.time);
    cur = splitting_step(cur, h, table, p, traj.boundary_loss, traj.clamp_mass,
                         opts);
    ++step;
    traj.mass_series.push_back({cur.time, total_mass(cur), traj.boundary_loss});
    if (step % snapshot_every == 0 ||
        cur.time >= t_end - 1e-12 * std::max(1.0, t_end))
      traj.snapshots.push_back(cur);
    if (step > 100000000L)
      throw std::runtime_error("run_splitting: step budget exhausted");
  }
  return traj;
}

// worst relative violation of mass(t) + boundary_loss(t) = mass(0)
inline double max_mass_drift(const Trajectory& traj) {
  if (traj.mass_series.empty()) return 0.0;
  double m0 = traj.mass_series.front().mass;
  double worst = 0.0;
  for (const auto& mp : traj.mass_series)
    worst = std::max(worst, std::fabs(mp.mass + mp.boundary_loss - m0));
  return m0 > 0.0 ? worst / m0 : worst;
}

}  // namespace coagsed
