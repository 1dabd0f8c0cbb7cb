#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "coagsed/grid.hpp"
#include "coagsed/kernels.hpp"
#include "coagsed/params.hpp"
#include "coagsed/util.hpp"

namespace coagsed {

// Kernel values tabulated on the v-grid once per (grid, kernel) pair.
struct KernelTable {
  GridPtr grid;
  std::vector<double> k;  // nv x nv, symmetric

  double at(std::size_t j, std::size_t l) const { return k[j * grid->nv() + l]; }

  static KernelTable from_function(GridPtr grid,
                                   const std::function<double(double, double)>& fn) {
    KernelTable t;
    t.grid = std::move(grid);
    std::size_t n = t.grid->nv();
    t.k.resize(n * n);
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t l = 0; l <= j; ++l) {
        double val = fn(t.grid->v[j], t.grid->v[l]);
        t.k[j * n + l] = val;
        t.k[l * n + j] = val;
      }
    return t;
  }

  static KernelTable from_spec(GridPtr grid, const KernelSpec& spec) {
    return from_function(std::move(grid),
                         [&spec](double v, double w) { return eval_kernel(spec, v, w); });
  }
};

// Gain/loss rate densities plus the mass and number rates of pairs whose
// coalescence product exceeds v_max (tracked, not silently dropped).
// Row fluxes are in per-row units; the totals fold in the y-weights.
struct CoagRates {
  GridPtr grid;
  std::vector<double> gain;  // same layout as Field2D::h
  std::vector<double> loss;
  std::vector<double> row_mass_flux_beyond;
  std::vector<double> row_number_flux_beyond;

  explicit CoagRates(GridPtr g)
      : grid(std::move(g)), gain(grid->ny() * grid->nv(), 0.0),
        loss(grid->ny() * grid->nv(), 0.0),
        row_mass_flux_beyond(grid->ny(), 0.0),
        row_number_flux_beyond(grid->ny(), 0.0) {}

  double mass_flux_beyond() const {
    double s = 0.0;
    for (std::size_t i = 0; i < grid->ny(); ++i)
      s += grid->wy[i] * row_mass_flux_beyond[i];
    return s;
  }
};

// a[H](y_i, .) for one y-row: a_j = sum_l K(v_j, v_l) H_l wv_l
inline void a_rate_row(const KernelTable& table, const double* hrow,
                       const std::vector<double>& wv, double* out) {
  std::size_t n = table.grid->nv();
  for (std::size_t j = 0; j < n; ++j) {
    const double* krow = table.k.data() + j * n;
    double acc = 0.0;
    for (std::size_t l = 0; l < n; ++l) acc += krow[l] * hrow[l] * wv[l];
    out[j] = acc;
  }
}

// a[H](y, v) = integral of K(v, w) H(y, w) dw, with linear row interpolation
// in y. v need not be a grid node.
inline double rate_a(const Field2D& f, double y, double v, const KernelSpec& spec) {
  const auto& g = *f.grid;
  std::size_t i0;
  double frac;
  if (!g.y_bracket(y, i0, frac)) return 0.0;
  const double* r0 = f.row(i0);
  const double* r1 = f.row(i0 + 1);
  double acc = 0.0;
  for (std::size_t l = 0; l < g.nv(); ++l) {
    double hv = (1.0 - frac) * r0[l] + frac * r1[l];
    if (hv != 0.0) acc += eval_kernel(spec, v, g.v[l]) * hv * g.wv[l];
  }
  return acc;
}

namespace detail {

// Deposits an event-number rate at volume u with the two-point remap that
// conserves number and first moment. Events past v_max go to the flux
// accumulators.
struct GainDeposit {
  const Grid2D& g;
  double* gain;  // one row
  double& mass_beyond;
  double& number_beyond;
  double log2_vmin;
  double inv_log2_r;

  GainDeposit(const Grid2D& grid, double* gain_row, double& massb, double& numb)
      : g(grid), gain(gain_row), mass_beyond(massb), number_beyond(numb),
        log2_vmin(std::log2(grid.v.front())),
        inv_log2_r(static_cast<double>(grid.q)) {}

  void at_node(std::size_t idx, double rate) { gain[idx] += rate / g.wv[idx]; }

  void operator()(double u, double rate) {
    if (u > g.v.back()) {
      mass_beyond += rate * u;
      number_beyond += rate;
      return;
    }
    double pos = (std::log2(u) - log2_vmin) * inv_log2_r;
    auto i = static_cast<std::ptrdiff_t>(std::floor(pos));
    if (i < 0) i = 0;
    if (i >= static_cast<std::ptrdiff_t>(g.nv()) - 1) i = g.nv() - 2;
    if (u < g.v[i] && i > 0) --i;
    else if (u > g.v[i + 1] && i + 2 < static_cast<std::ptrdiff_t>(g.nv())) ++i;
    double lamnum = (g.v[i + 1] - u) / (g.v[i + 1] - g.v[i]);
    if (lamnum < 0.0) lamnum = 0.0;
    if (lamnum > 1.0) lamnum = 1.0;
    gain[i] += lamnum * rate / g.wv[i];
    gain[i + 1] += (1.0 - lamnum) * rate / g.wv[i + 1];
  }
};

}  // namespace detail

// Asymmetric bilinear coagulation rates:
//   gain(v) = integral over w in (0, v/2] of K(v-w, w) a(v-w) b(w) dw
//   loss(v) = a(v) * integral of K(v, w) b(w) dw
// realized as an event scatter over node pairs: the larger factor carries a,
// the smaller carries b, and the w = v/2 endpoint (equal volumes) gets half
// weight so that a = b reproduces the symmetric operator exactly.
inline CoagRates apply_bilinear(const Field2D& fa, const Field2D& fb,
                                const KernelTable& table, int threads = 1) {
  require_same_grid(fa, fb, "apply_bilinear");
  if (fa.grid.get() != table.grid.get())
    throw std::domain_error("apply_bilinear: kernel table grid mismatch");
  const auto& g = *fa.grid;
  const std::size_t nv = g.nv();
  CoagRates rates(fa.grid);

  parallel_for(g.ny(), threads, [&](std::size_t i0, std::size_t i1) {
    std::vector<double> arate(nv);
    for (std::size_t i = i0; i < i1; ++i) {
      const double* a = fa.row(i);
      const double* b = fb.row(i);
      double* gain = rates.gain.data() + i * nv;
      double* loss = rates.loss.data() + i * nv;
      double& mass_beyond = rates.row_mass_flux_beyond[i];
      double& number_beyond = rates.row_number_flux_beyond[i];
      detail::GainDeposit deposit(g, gain, mass_beyond, number_beyond);

      a_rate_row(table, b, g.wv, arate.data());
      for (std::size_t j = 0; j < nv; ++j) loss[j] = a[j] * arate[j];

      for (std::size_t k = 0; k < nv; ++k) {
        if (a[k] == 0.0) continue;
        double awk = a[k] * g.wv[k];
        const double* krow = table.k.data() + k * nv;
        for (std::size_t l = 0; l < k; ++l) {
          if (b[l] == 0.0) continue;
          deposit(g.v[k] + g.v[l], krow[l] * awk * b[l] * g.wv[l]);
        }
        // equal-volume pair: exact halving-closure node, half weight
        if (b[k] != 0.0) {
          double rate = 0.5 * krow[k] * awk * b[k] * g.wv[k];
          std::size_t up = k + g.q;
          if (up < nv) deposit.at_node(up, rate);
          else {
            mass_beyond += rate * 2.0 * g.v[k];
            number_beyond += rate;
          }
        }
      }
    }
  });
  return rates;
}

// Symmetric coagulation operator (gain with the 1/2 over (0, v)): the
// bilinear scatter with both slots equal is the same discrete sum.
inline CoagRates apply_symmetric(const Field2D& f, const KernelTable& table,
                                 int threads = 1) {
  return apply_bilinear(f, f, table, threads);
}

// Per-row discrete mass balance: sum_j v_j wv_j (gain - loss) should equal
// minus the beyond-v_max mass flux of that row. Returns the worst relative
// mismatch across rows.
inline double mass_balance_defect(const CoagRates& r) {
  const auto& g = *r.grid;
  std::size_t nv = g.nv();
  double worst = 0.0;
  for (std::size_t i = 0; i < g.ny(); ++i) {
    double net = 0.0, scale = 0.0;
    for (std::size_t j = 0; j < nv; ++j) {
      double m = g.v[j] * g.wv[j];
      net += m * (r.gain[i * nv + j] - r.loss[i * nv + j]);
      scale += m * (r.gain[i * nv + j] + r.loss[i * nv + j]);
    }
    double defect = std::fabs(net + r.row_mass_flux_beyond[i]);
    if (scale > 0.0) worst = std::max(worst, defect / scale);
  }
  return worst;
}

// Envelope estimate of the loss-integral tail cut off at v_max, using the
// decay bound H <= A e^{t/eps} / (1 + w^b): the neglected rate is
//   K0 (v^gamma + w^gamma) integrated against that bound over w > v_max.
inline double loss_tail_estimate(const KernelSpec& spec, const Params& p, double v,
                                 double v_max, double t) {
  double gam = spec.gamma;
  if (p.b <= gam + 1.0) return std::numeric_limits<double>::infinity();
  double amp = spec.K0 * spec.scale * p.A * exp_clamped(t / p.epsilon);
  // integrals of w^g / w^b for w > v_max (1 + w^b ~ w^b there)
  double t0 = std::pow(v, gam) * std::pow(v_max, 1.0 - p.b) / (p.b - 1.0);
  double t1 = std::pow(v_max, gam + 1.0 - p.b) / (p.b - gam - 1.0);
  return amp * (t0 + t1);
}

}  // namespace coagsed
