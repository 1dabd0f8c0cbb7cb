#pragma once

#include <cmath>
#include <memory>
#include <stdexcept>
#include <vector>

#include "coagsed/params.hpp"
#include "coagsed/util.hpp"

namespace coagsed {

// Tensor grid: uniform y-nodes, geometric v-nodes v_j = v_min 2^{j/q}.
// The ratio 2^{1/q} gives the halving closure v_j / 2 = v_{j-q}, used by
// index arithmetic only (never by floating-point comparison).
struct Grid2D {
  std::vector<double> y;
  std::vector<double> v;
  std::vector<double> wy;  // trapezoid weights in y
  std::vector<double> wv;  // geometric-cell trapezoid weights in v
  int q = 8;
  double dy = 0.0;

  std::size_t ny() const { return y.size(); }
  std::size_t nv() const { return v.size(); }

  static std::vector<double> geometric_nodes(double v_min, double v_max, int q) {
    if (!(v_min > 0.0) || !(v_max > v_min))
      throw std::domain_error("grid: need 0 < v_min < v_max");
    if (q < 1) throw std::domain_error("grid: q must be >= 1");
    double octaves = std::log2(v_max / v_min);
    int p = static_cast<int>(std::llround(octaves));
    if (std::fabs(octaves - p) > 1e-9)
      throw std::domain_error("grid: v_max / v_min must be a power of two");
    int n = p * q + 1;
    std::vector<double> v(n);
    for (int j = 0; j < n; ++j) {
      // v_j = v_min 2^{j/q}, assembled so v_{j+q} = 2 v_j holds bit-exactly
      int oct = j / q, rem = j % q;
      v[j] = std::ldexp(v_min * std::exp2(static_cast<double>(rem) / q), oct);
    }
    return v;
  }

  static std::vector<double> trapezoid_weights(const std::vector<double>& x) {
    std::size_t n = x.size();
    std::vector<double> w(n, 0.0);
    if (n == 1) {
      w[0] = 1.0;
      return w;
    }
    w[0] = 0.5 * (x[1] - x[0]);
    w[n - 1] = 0.5 * (x[n - 1] - x[n - 2]);
    for (std::size_t i = 1; i + 1 < n; ++i) w[i] = 0.5 * (x[i + 1] - x[i - 1]);
    return w;
  }

  static std::shared_ptr<const Grid2D> make(double y_min, double y_max, int ny,
                                            double v_min, double v_max, int q) {
    if (!(y_max > y_min) || ny < 2)
      throw std::domain_error("grid: need y_min < y_max and ny >= 2");
    auto g = std::make_shared<Grid2D>();
    g->q = q;
    g->dy = (y_max - y_min) / (ny - 1);
    g->y.resize(ny);
    for (int i = 0; i < ny; ++i) g->y[i] = y_min + i * g->dy;
    g->y.back() = y_max;
    g->v = geometric_nodes(v_min, v_max, q);
    g->wy = trapezoid_weights(g->y);
    g->wv = trapezoid_weights(g->v);
    return g;
  }

  // index of v_j / 2, or -1 when below the grid
  int halving_index(int j) const { return j >= q ? j - q : -1; }

  // linear interpolation helpers in y (clamped to zero outside)
  bool y_bracket(double yy, std::size_t& i0, double& frac) const {
    if (yy < y.front() || yy > y.back()) return false;
    double u = (yy - y.front()) / dy;
    double fi = std::floor(u);
    i0 = static_cast<std::size_t>(fi);
    if (i0 >= ny() - 1) {
      i0 = ny() - 2;
      fi = static_cast<double>(i0);
    }
    frac = u - fi;
    return true;
  }
};

using GridPtr = std::shared_ptr<const Grid2D>;

// Discrete nonnegative density H(y, v) on a Grid2D snapshot.
struct Field2D {
  GridPtr grid;
  std::vector<double> h;  // row-major: h[iy * nv + jv]
  double time = 0.0;

  Field2D() = default;
  explicit Field2D(GridPtr g, double t = 0.0)
      : grid(std::move(g)), h(grid->ny() * grid->nv(), 0.0), time(t) {}

  double& at(std::size_t iy, std::size_t jv) { return h[iy * grid->nv() + jv]; }
  double at(std::size_t iy, std::size_t jv) const {
    return h[iy * grid->nv() + jv];
  }
  const double* row(std::size_t iy) const { return h.data() + iy * grid->nv(); }
  double* row(std::size_t iy) { return h.data() + iy * grid->nv(); }

  // H interpolated linearly in y at fixed v-index, zero outside the grid
  double interp_y(double yy, std::size_t jv) const {
    std::size_t i0;
    double f;
    if (!grid->y_bracket(yy, i0, f)) return 0.0;
    return (1.0 - f) * at(i0, jv) + f * at(i0 + 1, jv);
  }
};

enum class InitWindow { none, edge_taper };

// Saturating profile of the assumed initial bound:
//   H(y,v) = A / ((1 + v^b)(1 + |y - v^alpha|^m))
// optionally tapered to zero near the box edges (compact-support variant).
inline Field2D init_field(GridPtr grid, const Params& p,
                          InitWindow window = InitWindow::none,
                          double margin = 0.1) {
  Field2D f(grid, 0.0);
  const auto& y = grid->y;
  const auto& v = grid->v;
  double y_span = y.back() - y.front();
  auto taper01 = [](double u) {  // cubic smoothstep on [0,1]
    if (u <= 0.0) return 0.0;
    if (u >= 1.0) return 1.0;
    return u * u * (3.0 - 2.0 * u);
  };
  for (std::size_t i = 0; i < grid->ny(); ++i) {
    double win_y = 1.0;
    if (window == InitWindow::edge_taper) {
      double lo = (y[i] - y.front()) / (margin * y_span);
      double hi = (y.back() - y[i]) / (margin * y_span);
      win_y = taper01(lo) * taper01(hi);
    }
    for (std::size_t j = 0; j < grid->nv(); ++j) {
      double va = std::pow(v[j], p.alpha);
      double win = win_y;
      if (window == InitWindow::edge_taper) {
        double hi = std::log2(v.back() / v[j]) / (margin * std::log2(v.back() / v.front()));
        win *= taper01(hi);
      }
      f.at(i, j) = win * p.A /
                   ((1.0 + std::pow(v[j], p.b)) * (1.0 + ipow(std::fabs(y[i] - va), p.m)));
    }
  }
  return f;
}

// integral of v H(y,v) dv dy over the grid
inline double total_mass(const Field2D& f) {
  const auto& g = *f.grid;
  double mass = 0.0;
  for (std::size_t i = 0; i < g.ny(); ++i) {
    const double* row = f.row(i);
    double rowsum = 0.0;
    for (std::size_t j = 0; j < g.nv(); ++j) rowsum += g.wv[j] * g.v[j] * row[j];
    mass += g.wy[i] * rowsum;
  }
  return mass;
}

// integral of w^k H(y,w) dw at fixed y (linear row interpolation in y)
inline double moment_k(const Field2D& f, double k, double y) {
  const auto& g = *f.grid;
  std::size_t i0;
  double frac;
  if (!g.y_bracket(y, i0, frac))
    throw std::domain_error("moment_k: y outside the grid");
  const double* r0 = f.row(i0);
  const double* r1 = f.row(i0 + 1);
  double sum = 0.0;
  for (std::size_t j = 0; j < g.nv(); ++j) {
    double hv = (1.0 - frac) * r0[j] + frac * r1[j];
    sum += g.wv[j] * std::pow(g.v[j], k) * hv;
  }
  return sum;
}

inline void require_same_grid(const Field2D& a, const Field2D& b,
                              const char* what) {
  if (a.grid.get() != b.grid.get())
    throw std::domain_error(std::string(what) + ": fields live on different grids");
}

}  // namespace coagsed
