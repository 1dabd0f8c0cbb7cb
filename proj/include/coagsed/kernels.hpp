#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "coagsed/config.hpp"
#include "coagsed/util.hpp"

namespace coagsed {

// Coagulation kernels. Two families:
//   sum   K(v,w) = v^gamma + w^gamma
//   rain  K(v,w) = |v^alpha - w^alpha| (v^{1/3} + w^{1/3})^2
// each optionally scaled by a constant factor and truncated by the
// continuous cutoff chi_N (1 on [0, N/2], 0 on [N, inf), linear ramp
// in between).
struct KernelSpec {
  enum class Family { sum, rain };

  Family family = Family::sum;
  double gamma = 1.2;   // sum exponent; also the declared homogeneity bound
  double alpha = 0.5;   // rain exponent
  double scale = 1.0;   // dimensionless prefactor (epsilon-scaling)
  std::optional<double> truncation_N;  // absent = no truncation
  double K0 = 1.0;      // declared constant for K <= K0 (v^gamma + w^gamma)

  static KernelSpec sum_kernel(double gamma, double scale = 1.0) {
    KernelSpec k;
    k.family = Family::sum;
    k.gamma = gamma;
    k.scale = scale;
    k.K0 = 1.0;
    return k;
  }

  static KernelSpec rain_kernel(double alpha, double gamma_bound, double K0,
                                double scale = 1.0) {
    KernelSpec k;
    k.family = Family::rain;
    k.alpha = alpha;
    k.gamma = gamma_bound;
    k.K0 = K0;
    k.scale = scale;
    return k;
  }

  static KernelSpec from_config(const Config& cfg) {
    std::string type = cfg.get_str("kernel.type", "sum");
    KernelSpec k;
    if (type == "sum") {
      k = sum_kernel(cfg.get_num("kernel.gamma", cfg.get_num("params.gamma", 1.2)));
    } else if (type == "rain") {
      double alpha = cfg.get_num("kernel.alpha", cfg.get_num("params.alpha", 0.5));
      double gb = cfg.get_num("kernel.gamma", alpha + 2.0 / 3.0);
      k = rain_kernel(alpha, gb, cfg.get_num("kernel.K0", 4.0));
    } else {
      throw std::runtime_error("kernel.type must be sum or rain, got " + type);
    }
    k.scale = cfg.get_num("kernel.epsilon_scale", 1.0);
    if (cfg.has("kernel.truncation_N")) {
      double N = cfg.get_num("kernel.truncation_N", 0.0);
      if (N <= 0.0) throw std::domain_error("kernel.truncation_N must be > 0");
      k.truncation_N = N;
    }
    return k;
  }
};

// chi_N: continuous, 1 on [0, N/2], 0 on [N, inf), linear ramp between
inline double truncation_cutoff(double u, double N) {
  if (u <= 0.5 * N) return 1.0;
  if (u >= N) return 0.0;
  return (N - u) / (0.5 * N);
}

inline double eval_kernel(const KernelSpec& spec, double v, double w) {
  if (!(v > 0.0) || !(w > 0.0))
    throw std::domain_error("eval_kernel: volumes must be positive");
  double base;
  switch (spec.family) {
    case KernelSpec::Family::sum:
      base = std::pow(v, spec.gamma) + std::pow(w, spec.gamma);
      break;
    case KernelSpec::Family::rain: {
      double cs = std::cbrt(v) + std::cbrt(w);
      base = std::fabs(std::pow(v, spec.alpha) - std::pow(w, spec.alpha)) * cs * cs;
      break;
    }
    default:
      base = 0.0;
  }
  double k = spec.scale * base;
  if (spec.truncation_N) k *= truncation_cutoff(v + w, *spec.truncation_N);
  return k;
}

inline KernelSpec truncate(const KernelSpec& spec, double N) {
  if (!(N > 0.0)) throw std::domain_error("truncate: N must be > 0");
  KernelSpec out = spec;
  out.truncation_N = N;
  return out;
}

// ---------------------------------------------------------------------------
// structural-assumption sampling checks
// ---------------------------------------------------------------------------

struct KernelViolation {
  double v, w;
  double lhs, rhs;
  std::string which;  // "monotone-difference" or "upper-bound"
};

struct KernelCheckReport {
  std::vector<KernelViolation> violations;
  double fitted_K0 = 0.0;  // smallest admissible K0 seen on the sample
  bool ok() const { return violations.empty(); }
};

// Draws sample_count pairs and checks
//  (i)  K(v-w, w) <= K(v, w) for 0 < w <= v/2
//  (ii) K(v, w)   <= K0 (v^gamma + w^gamma)
// Report-only; never throws on violations.
inline KernelCheckReport check_structural_assumptions(const KernelSpec& spec,
                                                      long sample_count,
                                                      std::uint64_t seed,
                                                      double v_lo = 1e-3,
                                                      double v_hi = 1e3) {
  KernelCheckReport rep;
  for (long i = 0; i < sample_count; ++i) {
    SplitMix64 rng = stream_for(seed, static_cast<std::uint64_t>(i));
    double v = rng.log_uniform(v_lo, v_hi);
    double w = rng.uniform(0.0, 0.5 * v);
    if (w <= 0.0) continue;
    double lhs = eval_kernel(spec, v - w, w);
    double rhs = eval_kernel(spec, v, w);
    if (lhs > rhs * (1.0 + 1e-13))
      rep.violations.push_back({v, w, lhs, rhs, "monotone-difference"});

    double v2 = rng.log_uniform(v_lo, v_hi);
    double w2 = rng.log_uniform(v_lo, v_hi);
    double k = eval_kernel(spec, v2, w2);
    double env = std::pow(v2, spec.gamma) + std::pow(w2, spec.gamma);
    rep.fitted_K0 = std::max(rep.fitted_K0, k / env);
    if (k > spec.K0 * env * (1.0 + 1e-13))
      rep.violations.push_back({v2, w2, k, spec.K0 * env, "upper-bound"});
  }
  return rep;
}

// smallest K0 such that K <= K0 (v^gamma + w^gamma) on the sample
inline double fit_K0(const KernelSpec& spec, long sample_count, std::uint64_t seed,
                     double v_lo = 1e-3, double v_hi = 1e3) {
  KernelSpec unb = spec;
  unb.K0 = std::numeric_limits<double>::infinity();
  return check_structural_assumptions(unb, sample_count, seed, v_lo, v_hi).fitted_K0;
}

}  // namespace coagsed
