// Acceptance suite: one pass/fail line per criterion, all criteria executed
// even after a failure, nonzero exit if any hard criterion fails.

#include <cstdio>
#include <cstring>
#include <cstdarg>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "coagsed/coagsed.hpp"
#include "coagsed/driver.hpp"

using namespace coagsed;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int id, const char* name, bool pass, const std::string& detail,
            bool hard = true) {
  std::printf("[%s] criterion %2d: %-34s %s\n", pass ? "PASS" : "FAIL", id, name,
              detail.c_str());
  std::fflush(stdout);
  if (!pass && hard) ++failures;
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof(buf), f, ap);
  va_end(ap);
  return buf;
}

Params base_params(double eps) {
  return derived_constants(eps, 0.5, 1.2, 6.0, 6, 1.0, 100.0, 100.0, false);
}

// ---------------------------------------------------------------------- C1
void criterion_1() {
  const long n = 1000000;
  long bad = 0;
  for (long i = 0; i < n; ++i) {
    SplitMix64 rng = stream_for(0xfeed, static_cast<std::uint64_t>(i));
    double xi = rng.uniform(-100.0, 100.0);
    double b1 = rng.uniform(-100.0, 100.0);
    double b2 = rng.uniform(-100.0, 100.0);
    int m = 2 + static_cast<int>(rng.next() % 9);
    if (!lemma_211_check(xi, b1, b2, m)) ++bad;
  }
  report(1, "exact product-lemma suite", bad == 0,
         fmt("%ld samples, %ld violations (tolerance 0)", n, bad));
}

// ------------------------------------------------------------------ C2 + C8
struct Run2D {
  Trajectory traj;
  GridPtr grid;
  double drift;
};

Run2D criterion2_run(int ny, int q, double dt) {
  Params p = base_params(0.05);
  auto g = Grid2D::make(-2.5, 5.5, ny, 0.0625, 16.0, q);
  auto table = KernelTable::from_spec(g, KernelSpec::sum_kernel(p.gamma));
  Field2D f0 = init_field(g, p);
  Run2D out{run_splitting(f0, table, p, 0.1, dt, 8), g, 0.0};
  out.drift = max_mass_drift(out.traj);
  return out;
}

void criterion_2_and_8() {
  const double dt = 0.0025;
  Run2D base = criterion2_run(128, 16, dt);
  Run2D half = criterion2_run(128, 16, 0.5 * dt);

  bool small = base.drift < 1e-6 && half.drift < 1e-6;
  bool at_floor = base.drift < 1e-10 && half.drift < 1e-10;
  double order = at_floor ? 2.0 : std::log2(base.drift / half.drift);
  bool order_ok = at_floor || order >= 1.8;
  report(2, "2-d mass conservation", small && order_ok,
         at_floor ? fmt("drift %.2e / %.2e (both at the roundoff floor; "
                        "ledger closes exactly, no dt-dependent term to fit)",
                        base.drift, half.drift)
                  : fmt("drift %.2e / %.2e, measured order %.2f", base.drift,
                        half.drift, order));

  // criterion 8: envelope constants fitted on the base run (with a declared
  // 10% convergence margin) stay valid at doubled resolution
  Params p = base_params(0.05);
  std::vector<double> times;
  for (const auto& s : base.traj.snapshots) times.push_back(s.time);
  double margin = 2.0 * base.grid->dy;
  EnvelopeFit fit = fit_envelope_constants(base.traj.snapshots, times, p, margin);
  Params q = p;
  q.M1 = fit.M1 * 1.10;
  q.M2 = fit.M2 * 1.10;
  q.C0 = std::pow(q.M1 * q.A, 1.0 / (q.m - 1));

  std::size_t viol_base = 0, neg = 0;
  for (const auto& s : base.traj.snapshots) {
    auto rep = envelope_check(s, s.time, q, 1e-9, margin);
    viol_base += rep.violations.size();
    neg += rep.negative_nodes;
  }
  Run2D fine = criterion2_run(255, 32, dt);
  std::size_t viol_fine = 0;
  for (const auto& s : fine.traj.snapshots) {
    auto rep = envelope_check(s, s.time, q, 1e-9, margin);
    viol_fine += rep.violations.size();
    neg += rep.negative_nodes;
  }
  report(8, "envelope across resolutions",
         viol_base == 0 && viol_fine == 0 && neg == 0 && fit.converged,
         fmt("M1=%.1f M2=%.1f (x1.10), violations base=%zu doubled=%zu",
             fit.M1, fit.M2, viol_base, viol_fine));
}

// ---------------------------------------------------------------------- C3
void criterion_3() {
  double alpha = 0.5, gamma = 1.2;  // gamma - alpha = 0.7
  auto g = VGrid1D::make(0.125, 64.0, 7);
  bool grid_ok = g->n() == 64;
  Profile1D g0(g);
  for (std::size_t j = 0; j < g->n(); ++j)
    g0.g[j] = 1.0 / (1.0 + ipow(g->v[j], 6));
  auto traj = evolve_diagonal(g0, 1.0, 0.01, alpha, gamma, 25);
  double m0 = traj.mass_series.front();
  double drift = 0.0;
  for (double m : traj.mass_series)
    drift = std::max(drift, std::fabs(m - m0) / m0);

  double worst_identity = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Profile1D r(g);
    SplitMix64 rng(seed);
    for (auto& x : r.g) x = rng.u01();
    for (std::size_t j = g->n() - g->q; j < g->n(); ++j) r.g[j] = 0.0;  // closed
    auto rhs = diagonal_rhs(r, alpha, gamma);
    double net = 0.0, scale = 0.0;
    for (std::size_t j = 0; j < g->n(); ++j) {
      net += g->v[j] * g->w[j] * rhs.rate[j];
      scale += g->v[j] * g->w[j] * std::fabs(rhs.rate[j]);
    }
    worst_identity = std::max(worst_identity, std::fabs(net) / scale);
  }
  report(3, "diagonal-limit mass conservation",
         grid_ok && drift < 1e-8 && worst_identity < 1e-10,
         fmt("M1 drift %.2e (< 1e-8), identity defect %.2e (< 1e-10)", drift,
             worst_identity));
}

// ---------------------------------------------------------------------- C4
void criterion_4() {
  Params p = derived_constants(0.1, 0.5, 1.2, 4.0, 10, 1.0, 16.0, 100.0, true);
  auto g = Grid2D::make(-3.0, 5.0, 48, 0.0625, 16.0, 8);  // 48 x 65
  auto table = KernelTable::from_spec(
      g, truncate(KernelSpec::sum_kernel(p.gamma), g->v.back()));
  Field2D f0 = init_field(g, p);

  double T = 0.1;
  PicardState st;
  for (int attempt = 0; attempt < 3; ++attempt) {
    std::vector<double> tg;
    for (int k = 0; k <= 16; ++k) tg.push_back(T * k / 16);
    st = picard_solve(f0, tg, table, p, 1e-12, 9);
    if (!st.ratios.empty() && st.ratios.front() <= 0.5) break;
    T *= 0.4 / std::max(st.ratios.empty() ? 1.0 : st.ratios.front(), 0.4);
  }
  bool enough = st.ratios.size() >= 6;
  bool first_ok = enough && st.ratios.front() <= 0.5;
  bool all_ok = enough;
  double worst = 0.0;
  for (double r : st.ratios) {
    worst = std::max(worst, r);
    if (r > 0.6) all_ok = false;
  }
  report(4, "Picard contraction", enough && first_ok && all_ok,
         fmt("T=%.3g, %zu ratios, first %.3f, max %.3f (all <= 0.6)", T,
             st.ratios.size(), st.ratios.empty() ? -1.0 : st.ratios.front(),
             worst));
}

// ---------------------------------------------------------------------- C5
void criterion_5() {
  CharParams cp{0.01, 0.5, 1.2, 1.0, 8};
  const int n = 10000;
  long violations = 0;
  long fd_bad = 0;
  double worst_fd = 0.0;
  for (int trial = 0; trial < n; ++trial) {
    SplitMix64 rng = stream_for(20250810, static_cast<std::uint64_t>(trial));
    double v0 = rng.uniform(1.0, 10.0);
    double y0 = rng.uniform(-2.0, std::pow(v0 / 3.0, cp.alpha));
    CharPath path = integrate_char(y0, v0, 1.0, cp, 1e-10, 1e-13);
    violations += static_cast<long>(check_prop44(path, 1e-6).violations.size());

    double h = 1e-4 * v0;
    CharPath up = integrate_char(y0, v0 + h, 1.0, cp, 1e-10, 1e-13);
    CharPath dn = integrate_char(y0, v0 - h, 1.0, cp, 1e-10, 1e-13);
    double fd_q = (up.states.back().V - dn.states.back().V) / (2.0 * h);
    double fd_p = (up.states.back().w - dn.states.back().w) / (2.0 * h);
    double eq = std::fabs(path.states.back().q - fd_q) / std::fabs(fd_q);
    double ep = std::fabs(path.states.back().p - fd_p) / std::fabs(fd_p);
    double e = std::max(eq, ep);
    worst_fd = std::max(worst_fd, e);
    if (e > 1e-4) ++fd_bad;
  }
  report(5, "characteristics bounds", violations == 0 && fd_bad == 0,
         fmt("%d paths, %ld bound violations, worst FD mismatch %.2e", n,
             violations, worst_fd));
}

// ---------------------------------------------------------------------- C6
void criterion_6() {
  auto sweep_max = [&](int kmax) {
    double worst = 0.0;
    for (double eps : {0.1, 0.05}) {
      Params p = base_params(eps);
      for (double tt : {0.1, 0.5, 1.0})
        for (int k = 0; k <= kmax; ++k)
          for (double sgn : {-1.0, 1.0}) {
            double y = 1.0 + sgn * std::exp2(k) * 1e-3;
            worst = std::max(worst, semigroup_psi_integral(y, 1.0, tt, p) /
                                        semigroup_psi_bound(y, 1.0, tt, p));
          }
    }
    return worst;
  };
  double c_base = sweep_max(12);
  double c_wide = sweep_max(25);
  bool ok = std::isfinite(c_base) && c_wide <= c_base * 1.05;
  report(6, "semigroup-decay estimate", ok,
         fmt("fitted C %.4f, doubled sweep %.4f (growth %.2f%%)", c_base, c_wide,
             100.0 * (c_wide / c_base - 1.0)));
}

// ------------------------------------------------------------------ C7 + C9
void criterion_7_and_9() {
  Params p0 = base_params(0.05);
  auto g = Grid2D::make(-2.5, 5.5, 128, 0.0625, 16.0, 16);
  auto table = KernelTable::from_spec(g, KernelSpec::sum_kernel(p0.gamma));
  Field2D f0 = init_field(g, p0);
  double t_end = 0.5, delta = 0.25;

  auto vg = VGrid1D::from_grid(*g);
  Profile1D g0 = y_marginal(f0, vg);
  double ddt = 0.45 * diagonal_stable_dt(g0, p0.alpha, p0.gamma);
  DiagonalTrajectory dtraj =
      evolve_diagonal(g0, t_end, ddt, p0.alpha, p0.gamma, 1 << 30);

  std::vector<double> eps_list = {0.2, 0.1, 0.05};
  std::vector<double> fracs, l1s;
  for (double eps : eps_list) {
    Params p = p0;
    p.epsilon = eps;
    Trajectory tr = run_splitting(f0, table, p, t_end, 0.0, 1 << 30);
    const Field2D& last = tr.snapshots.back();
    fracs.push_back(dirac_concentration(last, delta, p.alpha));
    l1s.push_back(marginal_l1_error(last, dtraj.profiles.back()));
  }

  bool decreasing = fracs[0] > fracs[1] && fracs[1] > fracs[2];
  double chat = 0.0;
  for (std::size_t k = 0; k < eps_list.size(); ++k)
    chat = std::max(chat, fracs[k] / concentration_bound_shape(eps_list[k],
                                                               t_end, p0.m));
  bool bounded = true;
  for (std::size_t k = 0; k < eps_list.size(); ++k)
    if (fracs[k] >
        chat * concentration_bound_shape(eps_list[k], t_end, p0.m) * (1.0 + 1e-12))
      bounded = false;
  report(7, "Dirac concentration sweep", decreasing && bounded,
         fmt("fractions %.4f / %.4f / %.4f strictly decreasing, C-hat %.3f",
             fracs[0], fracs[1], fracs[2], chat));

  // criterion 9 is reported, never a hard failure
  bool monotone = l1s[0] >= l1s[1] && l1s[1] >= l1s[2];
  std::printf("        trend table (epsilon, L1 marginal error, concentration):\n");
  for (std::size_t k = 0; k < eps_list.size(); ++k)
    std::printf("          %-5g  %.6e  %.6e\n", eps_list[k], l1s[k], fracs[k]);
  report(9, "diagonal-limit trend (reported)", true,
         fmt("L1 errors %.4e / %.4e / %.4e, monotone nonincreasing: %s",
             l1s[0], l1s[1], l1s[2], monotone ? "yes" : "no"),
         false);
}

// --------------------------------------------------------------------- C10
void criterion_10() {
  const char* cfg_text =
      "params.epsilon = 0.1\nparams.alpha = 0.5\nparams.gamma = 1.2\n"
      "params.b = 6\nparams.m = 6\nparams.A = 1.0\nparams.mode = relaxed\n"
      "kernel.type = sum\ngrid.y_min = -3\ngrid.y_max = 5\ngrid.ny = 49\n"
      "grid.v_min = 0.0625\ngrid.v_max = 16\ngrid.q = 6\n"
      "solver.type = splitting\nsolver.T = 0.04\nsolver.dt = 0.004\n"
      "solver.snapshot_every = 4\nrun.seed = 11\n";
  fs::path dir = fs::temp_directory_path() / "coagsed_acceptance_det";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ofstream(dir / "cfg.txt") << cfg_text;

  CliContext ctx;
  ctx.cfg = Config::from_file((dir / "cfg.txt").string());
  ctx.seed = 11;
  ctx.threads = 1;
  ctx.out_dir = (dir / "a").string();
  int rc1 = cmd_run2d(ctx);
  ctx.out_dir = (dir / "b").string();
  int rc2 = cmd_run2d(ctx);

  bool same = rc1 == exit_ok && rc2 == exit_ok;
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(dir / "a")) {
    fs::path twin = dir / "b" / e.path().filename();
    if (!fs::exists(twin)) {
      same = false;
      break;
    }
    std::ifstream f1(e.path(), std::ios::binary), f2(twin, std::ios::binary);
    std::stringstream s1, s2;
    s1 << f1.rdbuf();
    s2 << f2.rdbuf();
    if (s1.str() != s2.str()) same = false;
    ++files;
  }
  report(10, "determinism", same && files >= 4,
         fmt("%zu output files compared byte for byte", files));
}

}  // namespace

int main() {
  std::printf("acceptance suite\n");
  criterion_1();
  criterion_2_and_8();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7_and_9();
  criterion_10();
  std::printf("%s (%d hard failure%s)\n", failures == 0 ? "ALL PASS" : "FAILED",
              failures, failures == 1 ? "" : "s");
  return failures == 0 ? 0 : 1;
}
