#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "coagsed/params.hpp"
#include "coagsed/util.hpp"

namespace coagsed {

// Characteristic system of the supersolution transport equation:
//   Y' = -(V^alpha - Y) / eps
//   V' = -L V^gamma xi(V) / (1 + |Y|^d)
// integrated in the variables
//   w = e^{-t/eps} (Y - V^alpha)   (integrating factor removes the 1/eps)
//   p = d_v w,  q = d_v V          (variational system)
// Y explodes like e^{t/eps}; w, p, q stay O(1), so the bounds are checked in
// scaled form and Y is only reconstructed when representable.

struct CharParams {
  double epsilon = 0.01;
  double alpha = 0.5;
  double gamma = 1.2;
  double L = 1.0;
  int d = 8;

  static CharParams from_params(const Params& p) {
    return {p.epsilon, p.alpha, p.gamma, p.L, p.d};
  }
};

// cutoff xi: 0 on [0, 1/2], 1 on [1, inf), cubic smoothstep between (C^1,
// which keeps the variational equations continuous)
inline double cutoff_xi(double v) {
  if (v <= 0.5) return 0.0;
  if (v >= 1.0) return 1.0;
  double u = 2.0 * (v - 0.5);
  return u * u * (3.0 - 2.0 * u);
}

inline double cutoff_xi_prime(double v) {
  if (v <= 0.5 || v >= 1.0) return 0.0;
  double u = 2.0 * (v - 0.5);
  return 12.0 * u * (1.0 - u);
}

struct CharState {
  double w, V, p, q;
};

struct CharPath {
  CharParams cp;
  double y0 = 0.0, v0 = 1.0;
  std::vector<double> times;
  std::vector<CharState> states;

  // Y reconstructed from the scaled state; -inf/+inf when it left the
  // representable range
  double y_at(std::size_t k) const {
    double ell = times[k] / cp.epsilon;
    const CharState& s = states[k];
    if (s.w == 0.0) return std::pow(s.V, cp.alpha);
    double mag = ell + std::log(std::fabs(s.w));
    if (mag > 700.0)
      return s.w > 0 ? std::numeric_limits<double>::infinity()
                     : -std::numeric_limits<double>::infinity();
    return std::pow(s.V, cp.alpha) + (s.w > 0 ? 1.0 : -1.0) * std::exp(mag);
  }
};

namespace detail {

struct CharDeriv {
  double dw, dV, dp, dq;
};

inline CharDeriv char_rhs(double t, const CharState& s, const CharParams& cp) {
  double ell = t / cp.epsilon;
  double V = s.V;
  double xi = cutoff_xi(V);
  CharDeriv d{0.0, 0.0, 0.0, 0.0};
  if (xi == 0.0 && cutoff_xi_prime(V) == 0.0) return d;  // drift switched off

  double Va1 = std::pow(V, cp.alpha - 1.0);
  double Vg = std::pow(V, cp.gamma);

  // |Y| and 1/(1+|Y|^d), with log-space fallbacks once e^ell w overflows
  double log_eyw =
      s.w == 0.0 ? -std::numeric_limits<double>::infinity()
                 : ell + std::log(std::fabs(s.w));
  double Va = Va1 * V;
  double Y, absY, logAbsY;
  bool y_finite = log_eyw < 690.0;
  if (y_finite) {
    Y = Va + (s.w > 0 ? 1.0 : -1.0) * std::exp(log_eyw);
    absY = std::fabs(Y);
    logAbsY = absY > 0.0 ? std::log(absY) : -std::numeric_limits<double>::infinity();
  } else {
    Y = s.w > 0 ? std::numeric_limits<double>::infinity()
                : -std::numeric_limits<double>::infinity();
    absY = std::numeric_limits<double>::infinity();
    logAbsY = log_eyw;  // V^alpha is negligible at this magnitude
  }

  double invden;  // 1 / (1 + |Y|^d)
  double dlog = cp.d * logAbsY;
  if (dlog < -690.0) invden = 1.0;
  else if (dlog > 690.0) invden = std::exp(-dlog);
  else invden = 1.0 / (1.0 + std::exp(dlog));

  double lam = cp.L * Vg * xi * invden;
  double exp_mell = ell > 690.0 ? 0.0 : std::exp(-ell);

  d.dw = exp_mell * cp.alpha * Va1 * lam;
  d.dV = -lam;

  // Lambda_v = L (gamma V^{g-1} xi + V^g xi') q / (1+|Y|^d)
  //          - L V^g xi d |Y|^{d-2} Y (alpha V^{a-1} q + e^ell p) / (1+|Y|^d)^2
  double term1 =
      cp.L * (cp.gamma * Vg / V * xi + Vg * cutoff_xi_prime(V)) * s.q * invden;

  double term2 = 0.0;
  if (xi > 0.0 && absY > 0.0) {
    // g2 = d |Y|^{d-2} Y / (1+|Y|^d)^2, |g2| <= d |Y|^{-(d+1)} for large |Y|
    double sgn = Y > 0 ? 1.0 : -1.0;
    if (std::isfinite(absY) && dlog < 300.0) {
      double pd = std::exp(dlog);  // |Y|^d
      double g2 = cp.d * pd / absY * sgn / ((1.0 + pd) * (1.0 + pd));
      double dvY1 = cp.alpha * Va1 * s.q;
      double g2p;  // g2 * e^ell * p without forming e^ell
      double e2 = ell + (s.p == 0.0 ? -std::numeric_limits<double>::infinity()
                                    : std::log(std::fabs(s.p)));
      double lg2 = std::log(cp.d) + (cp.d - 1.0) * logAbsY -
                   2.0 * std::log1p(pd);
      double etot = e2 + lg2;
      g2p = etot < -690.0 || s.p == 0.0
                ? 0.0
                : (s.p > 0 ? 1.0 : -1.0) * sgn * std::exp(std::min(etot, 690.0));
      term2 = cp.L * Vg * xi * (g2 * dvY1 + g2p);
    } else {
      // asymptotic branch: |Y|^{d-2} Y / (1+|Y|^d)^2 ~ sign(Y) |Y|^{-(d+1)}
      double base = std::log(cp.d) - (cp.d + 1.0) * logAbsY;
      double t_a = base + std::log(std::max(std::fabs(cp.alpha * Va1 * s.q), 1e-300));
      double t_b = base + ell +
                   (s.p == 0.0 ? -std::numeric_limits<double>::infinity()
                               : std::log(std::fabs(s.p)));
      double va = t_a < -690.0 ? 0.0
                               : (cp.alpha * Va1 * s.q >= 0 ? 1.0 : -1.0) *
                                     std::exp(std::min(t_a, 690.0));
      double vb = t_b < -690.0 || s.p == 0.0
                      ? 0.0
                      : (s.p > 0 ? 1.0 : -1.0) * std::exp(std::min(t_b, 690.0));
      term2 = cp.L * Vg * xi * sgn * (va + vb);
    }
  }
  double lam_v = term1 - term2;

  d.dq = -lam_v;
  d.dp = exp_mell * cp.alpha *
         ((cp.alpha - 1.0) * Va1 / V * s.q * lam + Va1 * lam_v);
  return d;
}

}  // namespace detail

// Cash-Karp embedded Runge-Kutta 4(5) with adaptive steps on (w, V, p, q).
inline CharPath integrate_char(double y0, double v0, double t_end,
                               const CharParams& cp, double rel_tol = 1e-9,
                               double abs_tol = 1e-12) {
  if (!(v0 > 0.0)) throw std::domain_error("integrate_char: v0 must be > 0");
  if (t_end < 0.0) throw std::domain_error("integrate_char: t_end must be >= 0");

  CharPath path;
  path.cp = cp;
  path.y0 = y0;
  path.v0 = v0;
  double va = std::pow(v0, cp.alpha);
  CharState s{y0 - va, v0, -cp.alpha * std::pow(v0, cp.alpha - 1.0), 1.0};
  double t = 0.0;
  path.times.push_back(t);
  path.states.push_back(s);
  if (t_end == 0.0) return path;

  static constexpr double A2 = 0.2, A3 = 0.3, A4 = 0.6, A5 = 1.0, A6 = 0.875;
  static constexpr double B21 = 0.2;
  static constexpr double B31 = 3.0 / 40.0, B32 = 9.0 / 40.0;
  static constexpr double B41 = 0.3, B42 = -0.9, B43 = 1.2;
  static constexpr double B51 = -11.0 / 54.0, B52 = 2.5, B53 = -70.0 / 27.0,
                          B54 = 35.0 / 27.0;
  static constexpr double B61 = 1631.0 / 55296.0, B62 = 175.0 / 512.0,
                          B63 = 575.0 / 13824.0, B64 = 44275.0 / 110592.0,
                          B65 = 253.0 / 4096.0;
  static constexpr double C1 = 37.0 / 378.0, C3 = 250.0 / 621.0,
                          C4 = 125.0 / 594.0, C6 = 512.0 / 1771.0;
  static constexpr double D1 = C1 - 2825.0 / 27648.0, D3 = C3 - 18575.0 / 48384.0,
                          D4 = C4 - 13525.0 / 55296.0, D5 = -277.0 / 14336.0,
                          D6 = C6 - 0.25;

  auto add = [](const CharState& u, double h, const detail::CharDeriv& k) {
    return CharState{u.w + h * k.dw, u.V + h * k.dV, u.p + h * k.dp,
                     u.q + h * k.dq};
  };

  double dt = std::min(cp.epsilon / 10.0, t_end);
  double dt_min = 1e-14 * std::max(1.0, t_end);
  while (t < t_end) {
    dt = std::min(dt, t_end - t);
    auto k1 = detail::char_rhs(t, s, cp);
    auto k2 = detail::char_rhs(t + A2 * dt, add(s, dt * B21, k1), cp);
    CharState s3{s.w + dt * (B31 * k1.dw + B32 * k2.dw),
                 s.V + dt * (B31 * k1.dV + B32 * k2.dV),
                 s.p + dt * (B31 * k1.dp + B32 * k2.dp),
                 s.q + dt * (B31 * k1.dq + B32 * k2.dq)};
    auto k3 = detail::char_rhs(t + A3 * dt, s3, cp);
    CharState s4{s.w + dt * (B41 * k1.dw + B42 * k2.dw + B43 * k3.dw),
                 s.V + dt * (B41 * k1.dV + B42 * k2.dV + B43 * k3.dV),
                 s.p + dt * (B41 * k1.dp + B42 * k2.dp + B43 * k3.dp),
                 s.q + dt * (B41 * k1.dq + B42 * k2.dq + B43 * k3.dq)};
    auto k4 = detail::char_rhs(t + A4 * dt, s4, cp);
    CharState s5{
        s.w + dt * (B51 * k1.dw + B52 * k2.dw + B53 * k3.dw + B54 * k4.dw),
        s.V + dt * (B51 * k1.dV + B52 * k2.dV + B53 * k3.dV + B54 * k4.dV),
        s.p + dt * (B51 * k1.dp + B52 * k2.dp + B53 * k3.dp + B54 * k4.dp),
        s.q + dt * (B51 * k1.dq + B52 * k2.dq + B53 * k3.dq + B54 * k4.dq)};
    auto k5 = detail::char_rhs(t + A5 * dt, s5, cp);
    CharState s6{s.w + dt * (B61 * k1.dw + B62 * k2.dw + B63 * k3.dw +
                             B64 * k4.dw + B65 * k5.dw),
                 s.V + dt * (B61 * k1.dV + B62 * k2.dV + B63 * k3.dV +
                             B64 * k4.dV + B65 * k5.dV),
                 s.p + dt * (B61 * k1.dp + B62 * k2.dp + B63 * k3.dp +
                             B64 * k4.dp + B65 * k5.dp),
                 s.q + dt * (B61 * k1.dq + B62 * k2.dq + B63 * k3.dq +
                             B64 * k4.dq + B65 * k5.dq)};
    auto k6 = detail::char_rhs(t + A6 * dt, s6, cp);

    CharState next{
        s.w + dt * (C1 * k1.dw + C3 * k3.dw + C4 * k4.dw + C6 * k6.dw),
        s.V + dt * (C1 * k1.dV + C3 * k3.dV + C4 * k4.dV + C6 * k6.dV),
        s.p + dt * (C1 * k1.dp + C3 * k3.dp + C4 * k4.dp + C6 * k6.dp),
        s.q + dt * (C1 * k1.dq + C3 * k3.dq + C4 * k4.dq + C6 * k6.dq)};
    std::array<double, 4> err = {
        dt * (D1 * k1.dw + D3 * k3.dw + D4 * k4.dw + D5 * k5.dw + D6 * k6.dw),
        dt * (D1 * k1.dV + D3 * k3.dV + D4 * k4.dV + D5 * k5.dV + D6 * k6.dV),
        dt * (D1 * k1.dp + D3 * k3.dp + D4 * k4.dp + D5 * k5.dp + D6 * k6.dp),
        dt * (D1 * k1.dq + D3 * k3.dq + D4 * k4.dq + D5 * k5.dq + D6 * k6.dq)};
    std::array<double, 4> scale = {
        abs_tol + rel_tol * std::max(std::fabs(s.w), std::fabs(next.w)),
        abs_tol + rel_tol * std::max(std::fabs(s.V), std::fabs(next.V)),
        abs_tol + rel_tol * std::max(std::fabs(s.p), std::fabs(next.p)),
        abs_tol + rel_tol * std::max(std::fabs(s.q), std::fabs(next.q))};
    double emax = 0.0;
    for (int c = 0; c < 4; ++c) emax = std::max(emax, std::fabs(err[c]) / scale[c]);

    if (emax <= 1.0) {
      t += dt;
      s = next;
      path.times.push_back(t);
      path.states.push_back(s);
      double grow = emax > 0.0 ? 0.9 * std::pow(emax, -0.2) : 5.0;
      dt *= std::min(5.0, std::max(1.0, grow));
    } else {
      dt *= std::max(0.2, 0.9 * std::pow(emax, -0.25));
      if (dt < dt_min)
        throw std::runtime_error(
            "integrate_char: step size underflow near t = " + std::to_string(t) +
            " (interval [" + std::to_string(t) + ", " + std::to_string(t_end) +
            "])");
    }
  }
  return path;
}

// ---------------------------------------------------------------------------
// bound checks on an integrated path
// ---------------------------------------------------------------------------

struct CharViolation {
  double t;
  std::string bound;
  double excess;
};

struct CharCheckReport {
  std::vector<CharViolation> violations;
  bool ok() const { return violations.empty(); }
};

// Asserts, at every stored time (hypothesis y0 <= (v0/3)^alpha):
//   (i)   0.9 v0 <= V <= v0
//   (ii)  Y <= (v0/3)^alpha
//   (iii) y0 - v0^a <= w <= y0 - 0.9^a v0^a   (the e^{t/eps} sandwich, scaled)
//   (iv)  w <= (0.9^a - 3^{-a}) (y0 - v0^a)
// and the derivative sandwiches
//   (v)   1/2 <= q <= 1
//   (vi)  c1 v0^{a-1} (e^{-l} - 1) <= e^{-l} a V^{a-1} q + p
//                                  <= c2 v0^{a-1} (e^{-l} - 1)
//   (vii) c2 v0^{a-1} <= -p <= c1 v0^{a-1}
// with c1 = a (10/9)^{1-a}, c2 = a/2.
inline CharCheckReport check_prop44(const CharPath& path, double tol = 1e-6) {
  const CharParams& cp = path.cp;
  double a = cp.alpha;
  double v0 = path.v0, y0 = path.y0;
  double va0 = std::pow(v0, a);
  double third = std::pow(v0 / 3.0, a);
  if (y0 > third + 1e-15)
    throw std::domain_error("check_prop44: hypothesis y0 <= (v0/3)^alpha fails");

  double c1 = a * std::pow(10.0 / 9.0, 1.0 - a);
  double c2 = 0.5 * a;
  double va1 = std::pow(v0, a - 1.0);
  CharCheckReport rep;
  auto flag = [&](double t, const char* name, double excess) {
    if (excess > tol) rep.violations.push_back({t, name, excess});
  };

  for (std::size_t k = 0; k < path.times.size(); ++k) {
    double t = path.times[k];
    double ell = t / cp.epsilon;
    const CharState& s = path.states[k];

    flag(t, "V-upper", (s.V - v0) / v0);
    flag(t, "V-lower", (0.9 * v0 - s.V) / v0);

    double Y = path.y_at(k);
    if (std::isfinite(Y)) flag(t, "Y-upper", (Y - third) / std::max(1.0, va0));

    flag(t, "w-lower", ((y0 - va0) - s.w) / std::max(1.0, va0));
    flag(t, "w-upper", (s.w - (y0 - std::pow(0.9, a) * va0)) / std::max(1.0, va0));
    flag(t, "w-combined",
         (s.w - (std::pow(0.9, a) - std::pow(3.0, -a)) * (y0 - va0)) /
             std::max(1.0, va0));

    flag(t, "dvV-upper", s.q - 1.0);
    flag(t, "dvV-lower", 0.5 - s.q);

    double em = ell > 690.0 ? 0.0 : std::exp(-ell);
    double scaled_dvY = em * a * std::pow(s.V, a - 1.0) * s.q + s.p;
    double lo = c1 * va1 * (em - 1.0);
    double hi = c2 * va1 * (em - 1.0);
    flag(t, "dvY-lower", (lo - scaled_dvY) / va1);
    flag(t, "dvY-upper", (scaled_dvY - hi) / va1);

    flag(t, "combo-lower", (c2 * va1 - (-s.p)) / va1);
    flag(t, "combo-upper", ((-s.p) - c1 * va1) / va1);
  }
  return rep;
}

// supersolution along the characteristic through (y, v):
//   G = e^{K3 L t} A e^{t/eps} / ((1 + V^b)(1 + |Y - V^alpha|^m))
inline double supersolution_G(double y, double v, double t, const Params& p,
                              double K3) {
  CharParams cp = CharParams::from_params(p);
  CharPath path = integrate_char(y, v, t, cp);
  const CharState& s = path.states.back();
  double ell = t / p.epsilon;
  return std::exp(K3 * p.L * t) * p.A * scaled_psi(ell, s.w, p.m) /
         (1.0 + std::pow(s.V, p.b));
}

}  // namespace coagsed
