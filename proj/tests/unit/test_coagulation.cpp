#include <catch2/catch_amalgamated.hpp>

#include <algorithm>

#include "coagsed/coagulation.hpp"
#include "coagsed/grid.hpp"

using namespace coagsed;

namespace {

Params test_params() {
  return derived_constants(0.1, 0.5, 1.2, 6.0, 6, 1.0, 16.0, 100.0, false);
}

Field2D random_field(GridPtr g, std::uint64_t seed) {
  Field2D f(g);
  SplitMix64 rng(seed);
  for (auto& h : f.h) h = rng.u01();
  return f;
}

}  // namespace

TEST_CASE("zero field gives zero rates", "[coagulation]") {
  auto g = Grid2D::make(-2.0, 2.0, 9, 0.25, 4.0, 4);
  auto table = KernelTable::from_spec(g, KernelSpec::sum_kernel(1.2));
  Field2D zero(g);
  CoagRates r = apply_symmetric(zero, table);
  for (double x : r.gain) REQUIRE(x == 0.0);
  for (double x : r.loss) REQUIRE(x == 0.0);
  CHECK(r.mass_flux_beyond() == 0.0);
}

TEST_CASE("constant-kernel sanity: number decays, mass is conserved",
          "[coagulation]") {
  auto g = Grid2D::make(-1.0, 1.0, 3, 1.0 / 16.0, 16.0, 6);
  auto table = KernelTable::from_function(g, [](double, double) { return 1.0; });
  Params p = test_params();
  Field2D f = init_field(g, p);

  auto number = [&](const Field2D& u) {
    double n = 0.0;
    for (std::size_t i = 0; i < g->ny(); ++i)
      for (std::size_t j = 0; j < g->nv(); ++j)
        n += g->wy[i] * g->wv[j] * u.at(i, j);
    return n;
  };

  double n0 = number(f);
  double m0 = total_mass(f);
  double dt = 1e-3;
  double lost = 0.0;
  for (int step = 0; step < 200; ++step) {
    CoagRates r = apply_symmetric(f, table);
    lost += dt * r.mass_flux_beyond();
    for (std::size_t k = 0; k < f.h.size(); ++k) {
      f.h[k] += dt * (r.gain[k] - r.loss[k]);
      REQUIRE(f.h[k] >= -1e-15);
    }
  }
  CHECK(number(f) < n0);
  CHECK_THAT(total_mass(f) + lost, Catch::Matchers::WithinRel(m0, 1e-12));
}

TEST_CASE("two-point field: diagonal pair deposits on the doubled node",
          "[coagulation]") {
  auto g = Grid2D::make(-1.0, 1.0, 3, 0.25, 16.0, 4);
  KernelSpec spec = KernelSpec::sum_kernel(1.2);
  auto table = KernelTable::from_spec(g, spec);

  std::size_t j0 = 4;  // v0 = 0.5
  double v0 = g->v[j0];
  std::size_t j1 = j0 + g->q;  // 2 v0, exact node
  Field2D f(g);
  double h0 = 0.7, h1 = 0.2;
  f.at(1, j0) = h0;
  f.at(1, j1) = h1;

  CoagRates r = apply_symmetric(f, table);
  std::size_t nv = g->nv();

  // three events: (v0,v0) -> 2v0 exact node, (2v0,v0) -> 3v0 split,
  // (2v0,2v0) -> 4v0 exact node
  double r0 = 0.5 * eval_kernel(spec, v0, v0) * h0 * h0 * g->wv[j0] * g->wv[j0];
  double r1 = eval_kernel(spec, 2.0 * v0, v0) * h1 * h0 * g->wv[j1] * g->wv[j0];
  double r2 = 0.5 * eval_kernel(spec, 2.0 * v0, 2.0 * v0) * h1 * h1 * g->wv[j1] *
              g->wv[j1];
  double u = 3.0 * v0;
  std::size_t bi = 0;
  while (g->v[bi + 1] < u) ++bi;
  double lam = (g->v[bi + 1] - u) / (g->v[bi + 1] - g->v[bi]);
  std::size_t j2 = j0 + 2 * g->q;

  for (std::size_t j = 0; j < nv; ++j) {
    double expect = 0.0;
    if (j == j1) expect = r0 / g->wv[j1];
    else if (j == bi) expect = lam * r1 / g->wv[bi];
    else if (j == bi + 1) expect = (1.0 - lam) * r1 / g->wv[bi + 1];
    else if (j == j2) expect = r2 / g->wv[j2];
    if (expect == 0.0) REQUIRE(r.gain[1 * nv + j] == 0.0);
    else REQUIRE_THAT(r.gain[1 * nv + j], Catch::Matchers::WithinRel(expect, 1e-13));
  }

  // loss at v0 collects both partners
  double a_v0 = eval_kernel(spec, v0, v0) * h0 * g->wv[j0] +
                eval_kernel(spec, v0, 2.0 * v0) * h1 * g->wv[j1];
  CHECK_THAT(r.loss[1 * nv + j0], Catch::Matchers::WithinRel(h0 * a_v0, 1e-13));

  // the 3v0 deposit conserves number and first moment across the bracket
  double num = r.gain[1 * nv + bi] * g->wv[bi] + r.gain[1 * nv + bi + 1] * g->wv[bi + 1];
  double mom = r.gain[1 * nv + bi] * g->wv[bi] * g->v[bi] +
               r.gain[1 * nv + bi + 1] * g->wv[bi + 1] * g->v[bi + 1];
  CHECK_THAT(num, Catch::Matchers::WithinRel(r1, 1e-12));
  CHECK_THAT(mom, Catch::Matchers::WithinRel(r1 * u, 1e-12));
}

TEST_CASE("bilinear rates: zero slot, asymmetry, Dirac columns", "[coagulation]") {
  auto g = Grid2D::make(-1.0, 1.0, 5, 0.25, 16.0, 4);
  auto table = KernelTable::from_spec(g, KernelSpec::sum_kernel(1.2));
  Field2D a = random_field(g, 21);
  Field2D zero(g);

  CoagRates rz = apply_bilinear(a, zero, table);
  for (double x : rz.gain) REQUIRE(x == 0.0);
  for (double x : rz.loss) REQUIRE(x == 0.0);

  // a = b reproduces the symmetric operator exactly (same discrete sum)
  CoagRates rs = apply_symmetric(a, table);
  CoagRates rb = apply_bilinear(a, a, table);
  for (std::size_t k = 0; k < rs.gain.size(); ++k) {
    REQUIRE(rb.gain[k] == rs.gain[k]);
    REQUIRE(rb.loss[k] == rs.loss[k]);
  }

  // Dirac-like columns at v0 produce gain near 2 v0 only
  std::size_t j0 = 6;
  Field2D da(g), db(g);
  for (std::size_t i = 0; i < g->ny(); ++i) {
    da.at(i, j0) = 1.0;
    db.at(i, j0) = 2.0;
  }
  CoagRates rd = apply_bilinear(da, db, table);
  std::size_t nv = g->nv();
  for (std::size_t i = 0; i < g->ny(); ++i)
    for (std::size_t j = 0; j < nv; ++j) {
      if (j == j0 + static_cast<std::size_t>(g->q))
        REQUIRE(rd.gain[i * nv + j] > 0.0);
      else
        REQUIRE(rd.gain[i * nv + j] == 0.0);
    }

  auto bad = Grid2D::make(-1.0, 1.0, 5, 0.25, 16.0, 4);
  Field2D other(bad);
  CHECK_THROWS_AS(apply_bilinear(a, other, table), std::domain_error);
}

TEST_CASE("discrete mass balance holds to 1e-12 per row", "[coagulation]") {
  auto g = Grid2D::make(-2.0, 2.0, 7, 1.0 / 8.0, 32.0, 5);
  Params p = test_params();
  for (auto spec : {KernelSpec::sum_kernel(1.2),
                    KernelSpec::rain_kernel(0.5, 0.5 + 2.0 / 3.0, 4.0)}) {
    auto table = KernelTable::from_spec(g, spec);
    Field2D f = random_field(g, 5);
    CoagRates r = apply_symmetric(f, table);
    CHECK(mass_balance_defect(r) < 1e-12);

    Field2D smooth = init_field(g, p);
    CoagRates r2 = apply_symmetric(smooth, table);
    CHECK(mass_balance_defect(r2) < 1e-12);
  }
}

TEST_CASE("positivity and y-row locality", "[coagulation]") {
  auto g = Grid2D::make(-2.0, 2.0, 9, 0.25, 8.0, 6);
  auto table = KernelTable::from_spec(g, KernelSpec::sum_kernel(1.3));
  Field2D f = random_field(g, 17);
  CoagRates r = apply_symmetric(f, table);
  for (double x : r.gain) REQUIRE(x >= 0.0);
  for (double x : r.loss) REQUIRE(x >= 0.0);

  // permuting y-rows commutes with the operator
  std::vector<std::size_t> perm = {3, 1, 4, 0, 8, 2, 7, 5, 6};
  Field2D fp(g);
  for (std::size_t i = 0; i < g->ny(); ++i)
    for (std::size_t j = 0; j < g->nv(); ++j) fp.at(i, j) = f.at(perm[i], j);
  CoagRates rp = apply_symmetric(fp, table);
  std::size_t nv = g->nv();
  for (std::size_t i = 0; i < g->ny(); ++i)
    for (std::size_t j = 0; j < nv; ++j) {
      REQUIRE(rp.gain[i * nv + j] == r.gain[perm[i] * nv + j]);
      REQUIRE(rp.loss[i * nv + j] == r.loss[perm[i] * nv + j]);
    }
}

TEST_CASE("rate_a agrees with the kernel quadrature and the tail estimate is finite",
          "[coagulation]") {
  auto g = Grid2D::make(-2.0, 2.0, 9, 0.25, 8.0, 6);
  Params p = test_params();
  KernelSpec spec = KernelSpec::sum_kernel(p.gamma);
  Field2D f = init_field(g, p);

  double a = rate_a(f, 0.5, 1.0, spec);
  // sum kernel: a = v^gamma M_0(y) + M_gamma(y)
  double expect = std::pow(1.0, p.gamma) * moment_k(f, 0.0, 0.5) +
                  moment_k(f, p.gamma, 0.5);
  CHECK_THAT(a, Catch::Matchers::WithinRel(expect, 1e-12));

  CHECK(rate_a(Field2D(g), 0.0, 1.0, spec) == 0.0);

  double tail = loss_tail_estimate(spec, p, 1.0, g->v.back(), 0.05);
  CHECK(std::isfinite(tail));
  CHECK(tail >= 0.0);
}
