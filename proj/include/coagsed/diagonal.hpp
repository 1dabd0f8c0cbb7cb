#pragma once

#include <cmath>
#include <memory>
#include <stdexcept>
#include <vector>

#include "coagsed/grid.hpp"
#include "coagsed/util.hpp"

namespace coagsed {

// 1-d geometric v-grid for the diagonal-kernel limit equation. Weights are
// uniform in log v (w_j proportional to v_j), so w_{j+q} = 2 w_j holds
// bit-exactly and the v/2 gain term cancels the loss term node by node in
// the mass balance. Interpolation never enters: G(v/2) is the node j - q.
struct VGrid1D {
  std::vector<double> v;
  std::vector<double> w;
  int q = 4;

  std::size_t n() const { return v.size(); }

  static std::shared_ptr<const VGrid1D> make(double v_min, double v_max, int q) {
    auto g = std::make_shared<VGrid1D>();
    g->q = q;
    g->v = Grid2D::geometric_nodes(v_min, v_max, q);
    double r = std::exp2(1.0 / q);
    double c = 0.5 * (r - 1.0 / r);
    g->w.resize(g->v.size());
    for (std::size_t j = 0; j < g->v.size(); ++j) g->w[j] = c * g->v[j];
    return g;
  }

  // the same nodes as a 2-d grid's v-axis
  static std::shared_ptr<const VGrid1D> from_grid(const Grid2D& g2) {
    auto g = std::make_shared<VGrid1D>();
    g->q = g2.q;
    g->v = g2.v;
    double r = std::exp2(1.0 / g2.q);
    double c = 0.5 * (r - 1.0 / r);
    g->w.resize(g->v.size());
    for (std::size_t j = 0; j < g->v.size(); ++j) g->w[j] = c * g->v[j];
    return g;
  }
};

using VGridPtr = std::shared_ptr<const VGrid1D>;

struct Profile1D {
  VGridPtr grid;
  std::vector<double> g;
  double time = 0.0;

  Profile1D() = default;
  explicit Profile1D(VGridPtr gr, double t = 0.0)
      : grid(std::move(gr)), g(grid->n(), 0.0), time(t) {}
};

inline double profile_mass(const Profile1D& p) {
  double m = 0.0;
  for (std::size_t j = 0; j < p.grid->n(); ++j)
    m += p.grid->v[j] * p.grid->w[j] * p.g[j];
  return m;
}

inline double profile_number(const Profile1D& p) {
  double m = 0.0;
  for (std::size_t j = 0; j < p.grid->n(); ++j) m += p.grid->w[j] * p.g[j];
  return m;
}

struct DiagonalRhs {
  std::vector<double> rate;
  double mass_flux_beyond = 0.0;  // doubling events that leave the grid
};

// rate(v) = (2/alpha) [ (1/4) (v/2)^{gamma+1-alpha} G(v/2)^2
//                       - v^{gamma+1-alpha} G(v)^2 ]
// with the gain read at the exact halving node.
inline DiagonalRhs diagonal_rhs(const Profile1D& p, double alpha, double gamma) {
  const auto& g = *p.grid;
  if (g.q < 1) throw std::domain_error("diagonal_rhs: grid without halving closure");
  std::size_t n = g.n();
  double ex = gamma + 1.0 - alpha;
  std::vector<double> lossc(n);
  for (std::size_t j = 0; j < n; ++j)
    lossc[j] = (2.0 / alpha) * std::pow(g.v[j], ex) * p.g[j] * p.g[j];
  DiagonalRhs out;
  out.rate.assign(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    double gain = 0.0;
    if (j >= static_cast<std::size_t>(g.q)) gain = 0.25 * lossc[j - g.q];
    out.rate[j] = gain - lossc[j];
  }
  for (std::size_t k = n - g.q; k < n; ++k)
    out.mass_flux_beyond += g.v[k] * g.w[k] * lossc[k];
  return out;
}

struct DiagonalTrajectory {
  std::vector<double> times;
  std::vector<Profile1D> profiles;
  std::vector<double> mass_series;
  double flux_loss = 0.0;   // time-integrated beyond-grid mass flux
  double clamp_mass = 0.0;  // mass added by the positivity clamp
};

inline double diagonal_stable_dt(const Profile1D& p, double alpha, double gamma) {
  double ex = gamma + 1.0 - alpha;
  double worst = 0.0;
  for (std::size_t j = 0; j < p.grid->n(); ++j)
    worst = std::max(worst, (2.0 / alpha) * std::pow(p.grid->v[j], ex) * p.g[j]);
  return worst > 0.0 ? 0.5 / worst : std::numeric_limits<double>::infinity();
}

// classical RK4 in time with a positivity clamp (budgeted: a step that needs
// more than a sliver of clamped mass is refused as unstable)
inline DiagonalTrajectory evolve_diagonal(const Profile1D& g0, double T, double dt,
                                          double alpha, double gamma,
                                          int snapshot_every = 1) {
  if (T < 0.0) throw std::domain_error("evolve_diagonal: T must be >= 0");
  if (gamma - alpha >= 1.0)
    log_warn("evolve_diagonal: gamma - alpha >= 1, outside the known existence range");

  DiagonalTrajectory traj;
  Profile1D cur = g0;
  double m0 = profile_mass(cur);
  traj.times.push_back(cur.time);
  traj.profiles.push_back(cur);
  traj.mass_series.push_back(m0);

  if (T == 0.0) return traj;
  if (!(dt > 0.0)) throw std::domain_error("evolve_diagonal: dt must be > 0");

  long nsteps = static_cast<long>(std::ceil(T / dt - 1e-12));
  std::size_t n = cur.grid->n();
  std::vector<double> k1, k2, k3, k4;
  Profile1D tmp = cur;
  for (long step = 0; step < nsteps; ++step) {
    double h = std::min(dt, T - step * dt);
    double dt_ok = diagonal_stable_dt(cur, alpha, gamma);
    if (h > dt_ok)
      throw StabilityError("evolve_diagonal: explicit step unstable, need dt <= " +
                               std::to_string(dt_ok),
                           dt_ok);

    auto r1 = diagonal_rhs(cur, alpha, gamma);
    k1 = std::move(r1.rate);
    for (std::size_t j = 0; j < n; ++j) tmp.g[j] = cur.g[j] + 0.5 * h * k1[j];
    auto r2 = diagonal_rhs(tmp, alpha, gamma);
    k2 = std::move(r2.rate);
    for (std::size_t j = 0; j < n; ++j) tmp.g[j] = cur.g[j] + 0.5 * h * k2[j];
    auto r3 = diagonal_rhs(tmp, alpha, gamma);
    k3 = std::move(r3.rate);
    for (std::size_t j = 0; j < n; ++j) tmp.g[j] = cur.g[j] + h * k3[j];
    auto r4 = diagonal_rhs(tmp, alpha, gamma);
    k4 = std::move(r4.rate);

    double clamped = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      double next = cur.g[j] + h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
      if (next < 0.0) {
        clamped += -next * cur.grid->v[j] * cur.grid->w[j];
        next = 0.0;
      }
      cur.g[j] = next;
    }
    if (clamped > 1e-6 * std::max(m0, 1e-300)) {
      double dt_retry = 0.5 * h;
      throw StabilityError(
          "evolve_diagonal: positivity clamp budget exceeded, need dt <= " +
              std::to_string(dt_retry),
          dt_retry);
    }
    traj.clamp_mass += clamped;
    traj.flux_loss += h / 6.0 *
                      (r1.mass_flux_beyond + 2.0 * r2.mass_flux_beyond +
                       2.0 * r3.mass_flux_beyond + r4.mass_flux_beyond);
    cur.time += h;
    if ((step + 1) % snapshot_every == 0 || step + 1 == nsteps) {
      traj.times.push_back(cur.time);
      traj.profiles.push_back(cur);
      traj.mass_series.push_back(profile_mass(cur));
    }
  }
  return traj;
}

// Drives single RK4 steps at the current stability limit (long spreading
// runs, where the stable dt grows as the profile coarsens). Calls
// per_step(profile) after every step; keeps only the current profile.
template <class Fn>
inline Profile1D evolve_diagonal_adaptive(const Profile1D& g0, double T,
                                          double alpha, double gamma, Fn&& per_step,
                                          double safety = 0.45,
                                          long max_steps = 2000000) {
  Profile1D cur = g0;
  double t_end = cur.time + T;
  long step = 0;
  while (cur.time < t_end - 1e-12 * std::max(1.0, t_end)) {
    if (step++ >= max_steps)
      throw std::runtime_error("evolve_diagonal_adaptive: step budget exhausted");
    double dt = safety * diagonal_stable_dt(cur, alpha, gamma);
    dt = std::min(dt, t_end - cur.time);
    DiagonalTrajectory piece = evolve_diagonal(cur, dt, dt, alpha, gamma, 1);
    cur = std::move(piece.profiles.back());
    per_step(cur);
  }
  return cur;
}

// volume below which half of the v-weighted mass sits (log-interpolated)
inline double mass_median_volume(const Profile1D& p) {
  double total = profile_mass(p);
  if (total <= 0.0) throw std::domain_error("mass_median_volume: empty profile");
  double acc = 0.0;
  for (std::size_t j = 0; j < p.grid->n(); ++j) {
    double piece = p.grid->v[j] * p.grid->w[j] * p.g[j];
    if (acc + piece >= 0.5 * total) {
      double need = 0.5 * total - acc;
      double frac = piece > 0.0 ? need / piece : 0.0;
      double lo = j == 0 ? std::log(p.grid->v[0] / std::exp2(1.0 / p.grid->q))
                         : std::log(p.grid->v[j - 1]);
      return std::exp(lo + frac * (std::log(p.grid->v[j]) - lo));
    }
    acc += piece;
  }
  return p.grid->v.back();
}

// y-marginal of a 2-d field on the shared v-nodes
inline Profile1D y_marginal(const Field2D& f, VGridPtr vg) {
  const auto& g = *f.grid;
  if (vg->n() != g.nv())
    throw std::domain_error("y_marginal: v-grids do not match");
  Profile1D out(vg, f.time);
  for (std::size_t j = 0; j < g.nv(); ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < g.ny(); ++i) acc += g.wy[i] * f.at(i, j);
    out.g[j] = acc;
  }
  return out;
}

// L1(v dv) distance between the y-marginal of a 2-d snapshot and a profile
inline double marginal_l1_error(const Field2D& f, const Profile1D& p) {
  Profile1D marg = y_marginal(f, p.grid);
  double err = 0.0;
  for (std::size_t j = 0; j < p.grid->n(); ++j)
    err += std::fabs(marg.g[j] - p.g[j]) * p.grid->v[j] * p.grid->w[j];
  return err;
}

struct MarginalErrorPoint {
  double time;
  double l1_error;
};

// matched-time comparison series between 2-d snapshots and a 1-d trajectory
inline std::vector<MarginalErrorPoint> marginal_compare(
    const std::vector<Field2D>& snaps2d, const DiagonalTrajectory& traj1d,
    const std::vector<double>& times, double t_tol = 1e-9) {
  std::vector<MarginalErrorPoint> out;
  for (double t : times) {
    const Field2D* f = nullptr;
    for (const auto& s : snaps2d)
      if (std::fabs(s.time - t) <= t_tol) f = &s;
    const Profile1D* p = nullptr;
    for (std::size_t k = 0; k < traj1d.times.size(); ++k)
      if (std::fabs(traj1d.times[k] - t) <= t_tol) p = &traj1d.profiles[k];
    if (!f || !p)
      throw std::domain_error("marginal_compare: time grids are not matched");
    out.push_back({t, marginal_l1_error(*f, *p)});
  }
  return out;
}

}  // namespace coagsed
