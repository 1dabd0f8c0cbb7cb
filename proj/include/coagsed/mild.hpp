#pragma once

#include <cmath>
#include <vector>

#include "coagsed/coagulation.hpp"
#include "coagsed/grid.hpp"
#include "coagsed/transport.hpp"
#include "coagsed/util.hpp"

namespace coagsed {

// Time-sliced trajectory with the tabulated a-rate of each snapshot, the
// ingredients of the damping factor D along characteristics.
struct FieldTrajectory {
  std::vector<double> times;
  std::vector<Field2D> fields;
  std::vector<std::vector<double>> a_fields;  // a[H](y_i, v_j) per slice

  std::size_t slices() const { return times.size(); }
};

inline std::vector<double> a_rate_field(const Field2D& f, const KernelTable& table,
                                        int threads = 1) {
  const auto& g = *f.grid;
  std::size_t nv = g.nv();
  std::vector<double> out(g.ny() * nv);
  parallel_for(g.ny(), threads, [&](std::size_t i0, std::size_t i1) {
    for (std::size_t i = i0; i < i1; ++i)
      a_rate_row(table, f.row(i), g.wv, out.data() + i * nv);
  });
  return out;
}

namespace detail {

// a[H] at off-grid position y for v-index j, linear in y and in time
inline double a_interp(const FieldTrajectory& traj, const Grid2D& g, double y,
                       std::size_t j, double tau) {
  std::size_t i0;
  double fy;
  if (!g.y_bracket(y, i0, fy)) return 0.0;
  // clamp tau into the stored range (quadrature endpoints only)
  std::size_t k = 0;
  double ft = 0.0;
  if (tau <= traj.times.front()) {
    k = 0;
  } else if (tau >= traj.times.back()) {
    k = traj.slices() - 1;
  } else {
    while (k + 1 < traj.slices() && traj.times[k + 1] < tau) ++k;
    ft = (tau - traj.times[k]) / (traj.times[k + 1] - traj.times[k]);
  }
  std::size_t nv = g.nv();
  auto val = [&](std::size_t kk) {
    const auto& a = traj.a_fields[kk];
    return (1.0 - fy) * a[i0 * nv + j] + fy * a[(i0 + 1) * nv + j];
  };
  double v0 = val(k);
  if (ft == 0.0) return v0;
  return (1.0 - ft) * v0 + ft * val(k + 1);
}

}  // namespace detail

// D[H](y,v,s,t) = exp(-int_s^t a[H](e^{(t-tau)/eps}(y - v^a) + v^a, v, tau) dtau),
// the tau-integral by adaptive quadrature along the backward characteristic.
inline double damping_D(const FieldTrajectory& traj, double y, std::size_t jv,
                        double s, double t, const Params& p,
                        double tol = 1e-9) {
  if (!(s <= t)) throw std::domain_error("damping_D: needs s <= t");
  if (s == t) return 1.0;
  const Grid2D& g = *traj.fields.front().grid;
  double c = std::pow(g.v[jv], p.alpha);
  double dy = y - c;
  auto integrand = [&](double tau) {
    double x = (t - tau) / p.epsilon;
    double pos;
    if (x > 690.0) {
      if (dy == 0.0) pos = c;
      else return 0.0;  // characteristic far outside the grid
    } else {
      pos = std::exp(x) * dy + c;
    }
    return detail::a_interp(traj, g, pos, jv, tau);
  };
  double integral = integrate_adaptive(integrand, s, t, tol);
  return std::exp(-integral);
}

// spec-level convenience: damping from a single time-independent field
inline double damping_D(const Field2D& f, const KernelTable& table, double y,
                        std::size_t jv, double s, double t, const Params& p) {
  FieldTrajectory traj;
  traj.times = {0.0};
  traj.fields = {f};
  traj.a_fields = {a_rate_field(f, table)};
  return damping_D(traj, y, jv, s, t, p);
}

// the transported initial envelope (the n = 0 iterate)
inline FieldTrajectory h0_trajectory(const Field2D& init,
                                     const std::vector<double>& t_grid,
                                     const KernelTable& table, const Params& p,
                                     int threads = 1) {
  FieldTrajectory traj;
  for (double t : t_grid) {
    Field2D f = semigroup_apply(init, t, p, threads);
    traj.a_fields.push_back(a_rate_field(f, table, threads));
    traj.fields.push_back(std::move(f));
    traj.times.push_back(t);
  }
  return traj;
}

// One Picard sweep of the mild formulation, marching the time grid so the
// implicit iterate under the Duhamel integral is already known at every
// earlier slice (left-endpoint rule in s; refine by adding slices):
//   H_{n+1}(t_k) = S(t_k)[H_init] D[H_n](0, t_k)
//     + sum_{i<k} dt_i D[H_n](t_i, t_k) S(t_k - t_i)[gain(H_{n+1}(t_i), H_n(t_i))]
inline FieldTrajectory picard_step(const FieldTrajectory& prev,
                                   const Field2D& init,
                                   const std::vector<double>& t_grid,
                                   const KernelTable& table, const Params& p,
                                   int threads = 1) {
  for (std::size_t k = 0; k + 1 < t_grid.size(); ++k)
    if (!(t_grid[k + 1] > t_grid[k]))
      throw std::domain_error("picard_step: t_grid must be increasing");

  const Grid2D& g = *init.grid;
  std::size_t nv = g.nv(), ny = g.ny();
  FieldTrajectory next;
  std::vector<Field2D> gains;  // bilinear gain at finalized slices

  for (std::size_t k = 0; k < t_grid.size(); ++k) {
    double t = t_grid[k];
    Field2D acc = semigroup_apply(init, t, p, threads);
    if (t > 0.0) {
      // damping of the transported initial data
      parallel_for(ny, threads, [&](std::size_t i0, std::size_t i1) {
        for (std::size_t i = i0; i < i1; ++i)
          for (std::size_t j = 0; j < nv; ++j)
            acc.at(i, j) *= damping_D(prev, g.y[i], j, 0.0, t, p);
      });
      for (std::size_t i = 0; i < k; ++i) {
        double si = t_grid[i];
        double w = t_grid[i + 1] - t_grid[i];
        Field2D moved = semigroup_apply(gains[i], t - si, p, threads);
        parallel_for(ny, threads, [&](std::size_t r0, std::size_t r1) {
          for (std::size_t r = r0; r < r1; ++r)
            for (std::size_t j = 0; j < nv; ++j) {
              double m = moved.at(r, j);
              if (m != 0.0)
                acc.at(r, j) += w * damping_D(prev, g.y[r], j, si, t, p) * m;
            }
        });
      }
    }
    acc.time = t;

    // finalize the slice: its gain feeds the later ones
    const Field2D& hn_i = prev.fields[k];
    CoagRates r = apply_bilinear(acc, hn_i, table, threads);
    Field2D gain(init.grid, t);
    gain.h = std::move(r.gain);
    gains.push_back(std::move(gain));

    next.a_fields.push_back(a_rate_field(acc, table, threads));
    next.fields.push_back(std::move(acc));
    next.times.push_back(t);
  }
  return next;
}

struct PicardState {
  std::vector<double> residuals;      // R_n = sup |H_{n+1} - H_n|
  std::vector<double> ratios;         // R_n / R_{n-1}
  std::vector<Field2D> iterate_finals;  // final-time field of each iterate
  FieldTrajectory solution;
  bool converged = false;
};

inline double trajectory_sup_diff(const FieldTrajectory& a,
                                  const FieldTrajectory& b) {
  double worst = 0.0;
  for (std::size_t k = 0; k < a.slices(); ++k)
    for (std::size_t n = 0; n < a.fields[k].h.size(); ++n)
      worst = std::max(worst, std::fabs(a.fields[k].h[n] - b.fields[k].h[n]));
  return worst;
}

// Picard iteration from the transported-envelope start; returns the full
// residual history (non-convergence is a status, not an exception).
inline PicardState picard_solve(const Field2D& init,
                                const std::vector<double>& t_grid,
                                const KernelTable& table, const Params& p,
                                double tol, int max_iter, int threads = 1) {
  PicardState state;
  FieldTrajectory cur = h0_trajectory(init, t_grid, table, p, threads);
  state.iterate_finals.push_back(cur.fields.back());
  for (int n = 0; n < max_iter; ++n) {
    FieldTrajectory nxt = picard_step(cur, init, t_grid, table, p, threads);
    double res = trajectory_sup_diff(nxt, cur);
    state.residuals.push_back(res);
    if (state.residuals.size() >= 2) {
      double prev = state.residuals[state.residuals.size() - 2];
      state.ratios.push_back(prev > 0.0 ? res / prev : 0.0);
    }
    cur = std::move(nxt);
    state.iterate_finals.push_back(cur.fields.back());
    if (res < tol) {
      state.converged = true;
      break;
    }
  }
  state.solution = std::move(cur);
  return state;
}

// residual of the converged trajectory re-substituted into the same mild
// marching formula (both slots carry the solution)
inline double mild_resubstitution_residual(const FieldTrajectory& sol,
                                           const Field2D& init,
                                           const KernelTable& table,
                                           const Params& p, int threads = 1) {
  FieldTrajectory re = picard_step(sol, init, sol.times, table, p, threads);
  return trajectory_sup_diff(re, sol);
}

}  // namespace coagsed
