#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "coagsed/config.hpp"
#include "coagsed/util.hpp"

namespace coagsed {

// Model and scheme parameters plus the derived constants
//   dbar = 2 ceil( (alpha/(alpha+1-gamma) - 1) / 2 )
//   bbar = alpha dbar + 2
//   C0   = (M1 A)^{1/(m-1)}
//   d    = floor((b-2)/alpha), lowered by one if odd
// Validation modes:
//   theorem26: b >= max(bbar, 2 gamma + 1), m > max(2(gamma+1)/alpha, b/alpha + 1)
//   relaxed:   any b, m > 2 (logged as a warning)
struct Params {
  double epsilon = 0.05;
  double alpha = 0.5;
  double gamma = 1.2;
  double b = 6.0;
  int m = 6;
  double A = 1.0;
  double M1 = 100.0;
  double M2 = 100.0;
  double L = 1.0;   // drift amplitude of the supersolution characteristics
  double K3 = 1.0;  // supersolution growth-rate constant

  // derived
  int dbar = 0;
  double bbar = 0.0;
  double C0 = 0.0;
  int d = 0;

  bool theorem26_mode = true;

  double t_over_eps(double t) const { return t / epsilon; }
};

inline int derived_dbar(double alpha, double gamma) {
  if (gamma >= 1.0 + alpha)
    throw std::domain_error("derived_constants: gamma must be < 1 + alpha");
  double x = 0.5 * (alpha / (alpha + 1.0 - gamma) - 1.0);
  return 2 * static_cast<int>(std::ceil(x));
}

inline int derived_d(double b, double alpha) {
  int f = static_cast<int>(std::floor((b - 2.0) / alpha));
  if (f % 2 != 0) f -= 1;
  return f;
}

inline Params derived_constants(double epsilon, double alpha, double gamma, double b,
                                int m, double A, double M1, double M2,
                                bool theorem26_mode = true) {
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw std::domain_error("params: epsilon must lie in (0,1)");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::domain_error("params: alpha must lie in (0,1)");
  if (!(gamma > 1.0 && gamma < 1.0 + alpha))
    throw std::domain_error("params: gamma must lie in (1, 1+alpha)");
  if (!(A > 0.0)) throw std::domain_error("params: A must be positive");
  if (!(M1 > 0.0 && M2 > 0.0)) throw std::domain_error("params: M1, M2 must be > 0");

  Params p;
  p.epsilon = epsilon;
  p.alpha = alpha;
  p.gamma = gamma;
  p.b = b;
  p.m = m;
  p.A = A;
  p.M1 = M1;
  p.M2 = M2;
  p.theorem26_mode = theorem26_mode;

  p.dbar = derived_dbar(alpha, gamma);
  p.bbar = alpha * p.dbar + 2.0;
  if (m < 2) throw std::domain_error("params: m must be >= 2");
  p.C0 = std::pow(M1 * A, 1.0 / (m - 1));
  p.d = derived_d(b, alpha);

  if (theorem26_mode) {
    double b_min = std::max(p.bbar, 2.0 * gamma + 1.0);
    double m_min = std::max(2.0 * (gamma + 1.0) / alpha, b / alpha + 1.0);
    if (b < b_min)
      throw std::domain_error("params: theorem26 mode needs b >= " +
                              std::to_string(b_min));
    if (!(m > m_min))
      throw std::domain_error("params: theorem26 mode needs m > " +
                              std::to_string(m_min));
  } else {
    if (!(b > 2.0 && m > 2))
      throw std::domain_error("params: relaxed mode still needs b, m > 2");
    log_warn("params: relaxed mode, b/m below the existence-theorem thresholds");
  }
  return p;
}

inline Params params_from_config(const Config& cfg) {
  bool t26 = cfg.get_str("params.mode", "relaxed") == "theorem26";
  Params p = derived_constants(
      cfg.get_num("params.epsilon", 0.05), cfg.get_num("params.alpha", 0.5),
      cfg.get_num("params.gamma", 1.2), cfg.get_num("params.b", 6.0),
      cfg.get_int("params.m", 6), cfg.get_num("params.A", 1.0),
      cfg.get_num("params.M1", 100.0), cfg.get_num("params.M2", 100.0), t26);
  p.L = cfg.get_num("params.L", 1.0);
  p.K3 = cfg.get_num("params.K3", 1.0);
  return p;
}

// L assembled from the proof constants: L = C_gamma K0 K1 K2 A^3 with
// C_gamma = 1 + 2^{-gamma}.
inline double assemble_drift_amplitude(double gamma, double K0, double K1, double K2,
                                       double A) {
  double c_gamma = 1.0 + std::pow(2.0, -gamma);
  return c_gamma * K0 * K1 * K2 * A * A * A;
}

}  // namespace coagsed
