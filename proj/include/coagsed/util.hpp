#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace coagsed {

// ---------------------------------------------------------------------------
// logging, controlled by COAG_LOG in {quiet, info, debug}
// ---------------------------------------------------------------------------

enum class LogLevel { quiet = 0, info = 1, debug = 2 };

inline LogLevel log_level() {
  static LogLevel lvl = [] {
    const char* e = std::getenv("COAG_LOG");
    if (!e) return LogLevel::info;
    std::string s(e);
    if (s == "quiet") return LogLevel::quiet;
    if (s == "debug") return LogLevel::debug;
    return LogLevel::info;
  }();
  return lvl;
}

template <class... Args>
inline void log_info(const char* fmt, Args... args) {
  if (log_level() >= LogLevel::info) {
    std::fprintf(stderr, "[coagsed] ");
    std::fprintf(stderr, fmt, args...);
    std::fprintf(stderr, "\n");
  }
}

template <class... Args>
inline void log_debug(const char* fmt, Args... args) {
  if (log_level() >= LogLevel::debug) {
    std::fprintf(stderr, "[coagsed:dbg] ");
    std::fprintf(stderr, fmt, args...);
    std::fprintf(stderr, "\n");
  }
}

inline void log_warn(const std::string& msg) {
  if (log_level() >= LogLevel::info)
    std::fprintf(stderr, "[coagsed:warn] %s\n", msg.c_str());
}

// ---------------------------------------------------------------------------
// chunked parallel loop over [0, n); serial when threads <= 1.
// Writers must touch disjoint ranges so results do not depend on the
// thread count.
// ---------------------------------------------------------------------------

inline void parallel_for(std::size_t n, int threads,
                         const std::function<void(std::size_t, std::size_t)>& body) {
  if (threads <= 1 || n < 2) {
    body(0, n);
    return;
  }
  std::size_t nt = std::min<std::size_t>(threads, n);
  std::vector<std::thread> pool;
  pool.reserve(nt);
  std::size_t chunk = (n + nt - 1) / nt;
  for (std::size_t t = 0; t < nt; ++t) {
    std::size_t lo = t * chunk;
    std::size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&body, lo, hi] { body(lo, hi); });
  }
  for (auto& th : pool) th.join();
}

// ---------------------------------------------------------------------------
// deterministic RNG: splitmix64 seeded streams, uniform doubles in [0,1)
// ---------------------------------------------------------------------------

struct SplitMix64 {
  std::uint64_t state;
  explicit SplitMix64(std::uint64_t seed) : state(seed) {}
  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  // uniform in [0,1)
  double u01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  // uniform in [a,b)
  double uniform(double a, double b) { return a + (b - a) * u01(); }
  // log-uniform in [a,b], a,b > 0
  double log_uniform(double a, double b) {
    return std::exp(uniform(std::log(a), std::log(b)));
  }
};

// independent stream for sample #i of a seeded experiment
inline SplitMix64 stream_for(std::uint64_t seed, std::uint64_t index) {
  SplitMix64 mix(seed ^ (0x9e3779b97f4a7c15ULL * (index + 1)));
  mix.next();
  return mix;
}

// ---------------------------------------------------------------------------
// small numeric helpers
// ---------------------------------------------------------------------------

inline double ipow(double x, int n) {
  double r = 1.0;
  for (int k = 0; k < n; ++k) r *= x;
  return r;
}

// psi(z) = 1 / (1 + |z|^m)
inline double psi_m(double z, int m) { return 1.0 / (1.0 + ipow(std::fabs(z), m)); }

// e^ell * psi(e^ell * z) evaluated without overflow for large ell.
inline double scaled_psi(double ell, double z, int m) {
  double az = std::fabs(z);
  if (az == 0.0) return std::exp(ell);
  double u = ell + std::log(az);  // log of |e^ell z|
  double mu = m * u;
  if (mu > 700.0) return std::exp(ell - mu);  // 1 dominated by |e^l z|^m
  if (mu < -700.0) return std::exp(ell);
  return std::exp(ell) / (1.0 + std::exp(mu));
}

// exp with saturation instead of inf for readability in guards
inline double exp_clamped(double x) {
  if (x > 709.0) return std::numeric_limits<double>::infinity();
  return std::exp(x);
}

inline bool close_rel(double a, double b, double rtol, double atol = 0.0) {
  return std::fabs(a - b) <= rtol * std::max(std::fabs(a), std::fabs(b)) + atol;
}

// thrown when an explicit step would violate its positivity/stability bound
struct StabilityError : std::runtime_error {
  double required_dt;
  StabilityError(const std::string& msg, double dt_ok)
      : std::runtime_error(msg), required_dt(dt_ok) {}
};

// ---------------------------------------------------------------------------
// adaptive Simpson quadrature
// ---------------------------------------------------------------------------

namespace detail {
template <class F>
double simpson(const F& f, double a, double fa, double b, double fb, double m,
               double fm) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

template <class F>
double adsimp(const F& f, double a, double fa, double b, double fb, double m,
              double fm, double whole, double tol, int depth) {
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = simpson(f, a, fa, m, fm, lm, flm);
  double right = simpson(f, m, fm, b, fb, rm, frm);
  double delta = left + right - whole;
  if (depth <= 0 || std::fabs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  return adsimp(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
         adsimp(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}
}  // namespace detail

// integral of f over [a,b]; tol is an absolute tolerance target
template <class F>
double integrate_adaptive(const F& f, double a, double b, double tol = 1e-10,
                          int max_depth = 40) {
  if (a == b) return 0.0;
  double m = 0.5 * (a + b);
  double fa = f(a), fb = f(b), fm = f(m);
  double whole = detail::simpson(f, a, fa, b, fb, m, fm);
  return detail::adsimp(f, a, fa, b, fb, m, fm, whole, tol, max_depth);
}

}  // namespace coagsed
