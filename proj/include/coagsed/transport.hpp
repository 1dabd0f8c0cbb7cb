#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "coagsed/grid.hpp"
#include "coagsed/params.hpp"
#include "coagsed/util.hpp"

namespace coagsed {

// Exact transport semigroup
//   S_eps(s) H (y, v) = e^{s/eps} H(e^{s/eps} (y - v^alpha) + v^alpha, v).

// Pointwise form: linear interpolation in y at fixed v, zero outside the
// grid. Arguments pushed outside the grid by the stretch contribute zero,
// which also covers the overflowing e^{s/eps} case.
inline Field2D semigroup_apply(const Field2D& f, double s, const Params& p,
                               int threads = 1) {
  if (s < 0.0) throw std::domain_error("semigroup_apply: s must be >= 0");
  if (s == 0.0) return f;
  const auto& g = *f.grid;
  Field2D out(f.grid, f.time + s);
  double x = s / p.epsilon;
  double lam = exp_clamped(x);
  parallel_for(g.nv(), threads, [&](std::size_t j0, std::size_t j1) {
    for (std::size_t j = j0; j < j1; ++j) {
      double c = std::pow(g.v[j], p.alpha);
      for (std::size_t i = 0; i < g.ny(); ++i) {
        double dyc = g.y[i] - c;
        double arg;
        if (std::isinf(lam)) {
          if (dyc == 0.0) {
            out.at(i, j) = lam * f.at(i, j);  // on-curve node, scale only
            continue;
          }
          arg = dyc > 0 ? std::numeric_limits<double>::infinity()
                        : -std::numeric_limits<double>::infinity();
        } else {
          arg = lam * dyc + c;
        }
        double hv = f.interp_y(arg, j);
        out.at(i, j) = hv == 0.0 ? 0.0 : lam * hv;
      }
    }
  });
  return out;
}

// Finite-volume form of the same exact solution operator: cell masses are
// moved by integrating a cell-average-preserving reconstruction over the
// stretched preimage of each cell. Conserves the trapezoid row mass to
// roundoff (the backward map expands, so nothing crosses the y-boundary).
// Reconstruction is parabolic where it stays nonnegative on the cell and
// falls back to a slope-limited linear elsewhere, so the remap is both
// high-order in smooth regions and positivity-preserving.
// Used by the splitting solver, where the mass budget matters.
inline Field2D transport_remap(const Field2D& f, double s, const Params& p,
                               int threads = 1) {
  if (s < 0.0) throw std::domain_error("transport_remap: s must be >= 0");
  if (s == 0.0) return f;
  const auto& g = *f.grid;
  const std::size_t n = g.ny();
  Field2D out(f.grid, f.time + s);
  double lam = exp_clamped(s / p.epsilon);

  // cell edges shared by every row: e_0 = y_0, e_k = midpoint, e_n = y_last
  std::vector<double> edges(n + 1);
  edges[0] = g.y.front();
  for (std::size_t k = 1; k < n; ++k) edges[k] = 0.5 * (g.y[k - 1] + g.y[k]);
  edges[n] = g.y.back();

  parallel_for(g.nv(), threads, [&](std::size_t j0, std::size_t j1) {
    std::vector<double> slope(n), curv(n), cum(n + 1);
    for (std::size_t j = j0; j < j1; ++j) {
      double c = std::pow(g.v[j], p.alpha);

      // R_k(x) = Hk + b (x - xc) + cc ((x - xc)^2 - wk^2 / 12): the quadratic
      // term has zero cell average, so every choice below conserves mass
      for (std::size_t k = 0; k < n; ++k) {
        double wk = edges[k + 1] - edges[k];
        double hk = f.at(k, j);
        double b, cc;
        if (k == 0 || k == n - 1) {
          b = k == 0 ? (f.at(1, j) - f.at(0, j)) / g.dy
                     : (f.at(n - 1, j) - f.at(n - 2, j)) / g.dy;
          cc = 0.0;
        } else {
          b = (f.at(k + 1, j) - f.at(k - 1, j)) / (2.0 * g.dy);
          cc = (f.at(k + 1, j) - 2.0 * hk + f.at(k - 1, j)) / (2.0 * g.dy * g.dy);
        }
        if (cc != 0.0) {
          // minimum of the parabola over the cell
          double half = 0.5 * wk;
          double r_lo = hk - b * half + cc * (half * half - wk * wk / 12.0);
          double r_hi = hk + b * half + cc * (half * half - wk * wk / 12.0);
          double mn = std::min(r_lo, r_hi);
          double vx = -b / (2.0 * cc);
          if (cc > 0.0 && vx > -half && vx < half)
            mn = std::min(mn, hk - b * b / (4.0 * cc) - cc * wk * wk / 12.0);
          if (mn < 0.0) cc = 0.0;  // fall back to linear
        }
        if (cc == 0.0) {
          double cap = 2.0 * hk / wk;
          if (b > cap) b = cap;
          if (b < -cap) b = -cap;
        }
        slope[k] = b;
        curv[k] = cc;
      }
      cum[0] = 0.0;
      for (std::size_t k = 0; k < n; ++k)
        cum[k + 1] = cum[k] + f.at(k, j) * (edges[k + 1] - edges[k]);

      // cumulative integral of the reconstruction from the left boundary
      auto cdf = [&](double x) -> double {
        if (x <= edges[0]) return 0.0;
        if (x >= edges[n]) return cum[n];
        std::size_t k = static_cast<std::size_t>(
            std::floor((x - g.y.front()) / g.dy + 0.5));
        if (k >= n) k = n - 1;
        if (x < edges[k]) --k;
        else if (x > edges[k + 1]) ++k;
        double wk = edges[k + 1] - edges[k];
        double xc = 0.5 * (edges[k] + edges[k + 1]);
        double a = edges[k];
        double ua = a - xc, ux = x - xc;
        return cum[k] + f.at(k, j) * (x - a) +
               0.5 * slope[k] * (ux * ux - ua * ua) +
               curv[k] * ((ux * ux * ux - ua * ua * ua) / 3.0 -
                          wk * wk / 12.0 * (x - a));
      };

      double prev_edge = std::isinf(lam)
                             ? (edges[0] - c < 0 ? -std::numeric_limits<double>::infinity()
                                                 : edges[0])
                             : c + lam * (edges[0] - c);
      double prev_cdf = cdf(prev_edge);
      for (std::size_t i = 0; i < n; ++i) {
        double e_next = edges[i + 1];
        double next_edge;
        if (std::isinf(lam)) {
          double d = e_next - c;
          next_edge = d == 0.0 ? c
                               : (d > 0 ? std::numeric_limits<double>::infinity()
                                        : -std::numeric_limits<double>::infinity());
        } else {
          next_edge = c + lam * (e_next - c);
        }
        double next_cdf = cdf(next_edge);
        double val = (next_cdf - prev_cdf) / (edges[i + 1] - edges[i]);
        // the reconstruction is nonnegative; sweep up cancellation crumbs
        out.at(i, j) = val < 0.0 ? 0.0 : val;
        prev_edge = next_edge;
        prev_cdf = next_cdf;
      }
    }
  });
  return out;
}

// ---------------------------------------------------------------------------
// integral of the semigroup acting on psi (decay estimate machinery)
// ---------------------------------------------------------------------------

// J(a, b) = integral of du / (1 + u^m) over [a, b], b may be +inf
inline double psi_tail_integral(double a, double b, int m, double tol = 1e-12) {
  if (b <= a) return 0.0;
  double split = std::max(a, 1.0);
  double out = 0.0;
  if (split > a) {
    double hi = std::min(b, split);
    out += integrate_adaptive([m](double u) { return psi_m(u, m); }, a, hi, tol);
  }
  if (b > split) {
    // u -> 1/u maps [split, b] to [1/b, 1/split] with a bounded integrand
    double lo = std::isinf(b) ? 0.0 : 1.0 / b;
    out += integrate_adaptive(
        [m](double s) {
          double sm = ipow(s, m);
          return ipow(s, m - 2) / (1.0 + sm);
        },
        lo, 1.0 / split, tol);
  }
  return out;
}

// integral over s in [0,t] of S_eps(t-s) psi(y - v^alpha), evaluated through
// the substitution u = e^{s/eps} |y - v^alpha|
inline double semigroup_psi_integral(double y, double v, double t,
                                     const Params& p) {
  if (t < 0.0) throw std::domain_error("semigroup_psi_integral: t must be >= 0");
  if (t == 0.0) return 0.0;
  double delta = std::fabs(y - std::pow(v, p.alpha));
  double x = t / p.epsilon;
  if (delta == 0.0) return p.epsilon * std::expm1(x);  // integrand is e^{s/eps}
  double hi = x > 709.0 ? std::numeric_limits<double>::infinity()
                        : std::exp(x) * delta;
  return p.epsilon / delta * psi_tail_integral(delta, hi, p.m);
}

// right-hand side of the decay estimate the integral is tested against
inline double semigroup_psi_bound(double y, double v, double t, const Params& p) {
  double delta = std::fabs(y - std::pow(v, p.alpha));
  if (delta == 0.0) return std::numeric_limits<double>::infinity();
  double x = t / p.epsilon;
  double stretched = x > 709.0 ? std::numeric_limits<double>::infinity()
                               : std::exp(x) * delta;
  return p.epsilon / delta * std::min(1.0, stretched) /
         (1.0 + ipow(delta, p.m - 1));
}

// ---------------------------------------------------------------------------
// order preservation of the semigroup away from the curve
// ---------------------------------------------------------------------------

struct MonotoneViolation {
  std::size_t iy, jv;
  double lhs, rhs;
};

struct MonotoneReport {
  std::vector<MonotoneViolation> upper;  // S f < S g on {y >= y1}
  std::vector<MonotoneViolation> lower;  // S f > S g on {y <= y2}
  bool ok() const { return upper.empty() && lower.empty(); }
};

// Checks that ordering on {y >= y1} (with y1 >= v^alpha) and on {y <= y2}
// (with y2 <= v^alpha) survives the semigroup. Rows whose v^alpha fails the
// corresponding hypothesis are skipped for that side.
inline MonotoneReport monotone_semigroup_check(const Field2D& f, const Field2D& g,
                                               double y1, double y2, double s,
                                               const Params& p, double tol = 1e-9) {
  require_same_grid(f, g, "monotone_semigroup_check");
  Field2D sf = semigroup_apply(f, s, p);
  Field2D sg = semigroup_apply(g, s, p);
  const auto& gr = *f.grid;
  MonotoneReport rep;
  for (std::size_t j = 0; j < gr.nv(); ++j) {
    double c = std::pow(gr.v[j], p.alpha);
    bool upper_ok = y1 >= c;
    bool lower_ok = y2 <= c;
    for (std::size_t i = 0; i < gr.ny(); ++i) {
      double scale = std::max({std::fabs(sf.at(i, j)), std::fabs(sg.at(i, j)), 1.0});
      if (upper_ok && gr.y[i] >= y1 && sf.at(i, j) < sg.at(i, j) - tol * scale)
        rep.upper.push_back({i, j, sf.at(i, j), sg.at(i, j)});
      if (lower_ok && gr.y[i] <= y2 && sf.at(i, j) > sg.at(i, j) + tol * scale)
        rep.lower.push_back({i, j, sf.at(i, j), sg.at(i, j)});
    }
  }
  return rep;
}

}  // namespace coagsed
