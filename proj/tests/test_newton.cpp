#include <catch2/catch.hpp>

#include "dsmap/newton.hpp"
#include "test_support.hpp"

using namespace dsmap;
using R = mpreal;
using C = Complex<R>;
using dsmap::testing::Rng;

namespace {
constexpr int kDigits = 60;

struct PrecisionSetup {
  PrecisionSetup() { real_traits<R>::set_working_digits(kDigits); }
} const precision_setup;

R tol10(int e) { return pow10<R>(-e); }

NewtonSolver<R> make_solver(int grid = 256) {
  auto params = MapParams<R>::standard(kDigits);
  auto opts = NewtonOptions<R>::defaults(kDigits);
  opts.grid = grid;
  return NewtonSolver<R>(params, opts);
}
}  // namespace

TEST_CASE("the unperturbed circle is an exact fixed point", "[newton]") {
  auto solver = make_solver();
  auto sol = solver.solve(C{}, PeriodicFunction<R>::zero(0, kDigits), C{});
  REQUIRE(sol.defect == 0);
  REQUIRE(sol.iterations == 0);
}

TEST_CASE("a converged torus is a fixed point of the step", "[newton]") {
  auto solver = make_solver();
  auto series = compute_series(solver.params(), 20, kDigits);
  C eps(R(1) / 12);
  auto seed = seed_from_series(solver, series, eps, 20);
  auto sol = solver.solve(eps, seed.u, seed.c);
  REQUIRE(sol.defect < solver.options().tol);
  auto again = solver.step(sol);
  R vnorm = norm_sobolev(again.u - sol.u, R(0));
  REQUIRE(vnorm < tol10(kDigits - 25));
  REQUIRE(abs(again.c - sol.c) < tol10(kDigits - 25));
  REQUIRE(again.defect < 100 * solver.options().tol);
}

TEST_CASE("quadratic contraction from a series seed", "[newton]") {
  auto solver = make_solver(512);
  auto series = compute_series(solver.params(), 20, kDigits);
  C eps(R(1) / 10);
  auto seed = seed_from_series(solver, series, eps, 20);
  std::vector<R> history;
  auto sol = solver.solve(eps, seed.u, seed.c, &history);
  REQUIRE(sol.defect < solver.options().tol);
  REQUIRE(history.size() >= 2);
  const R floor_val = pow10<R>(-(kDigits - 12));
  for (std::size_t j = 0; j + 1 < history.size(); ++j) {
    if (history[j + 1] < floor_val) break;  // at the roundoff floor
    REQUIRE(history[j + 1] <= 1000 * history[j] * history[j]);
  }
}

TEST_CASE("step increment matches the stage-ii closed form", "[newton]") {
  auto solver = make_solver();
  auto params = solver.params();
  auto series = compute_series(params, 14, kDigits);
  C eps(R(1) / 11);
  auto seed = seed_from_series(solver, series, eps, 8);  // deliberately rough
  auto next = solver.step(seed);
  C delta_impl = next.c - seed.c;

  // rebuild delta through the public operators
  const int n = 256;
  FftPlan<R> plan(n, kDigits);
  C b = params.conformal_factor(eps);
  auto freq = params.omega;
  auto e = defect_grid(params, seed.u, seed.c, eps, plan);
  PeriodicFunction<R> hp = derivative(seed.u);
  hp.set_mode(0, hp.mode(0) + C(R(1)));
  auto gh = synthesize(hp, plan);
  auto ghm = synthesize(shift(hp, -freq.omega), plan);
  std::vector<C> rphi(n), rnu(n);
  for (int j = 0; j < n; ++j) {
    auto jj = static_cast<std::size_t>(j);
    rphi[jj] = -(gh[jj] * e[jj]);
    rnu[jj] = -gh[jj];
  }
  auto phi = solve_dplus_b(analyze(rphi, 63, kDigits, plan), b, freq);
  auto nufn = solve_dplus_b(analyze(rnu, 63, kDigits, plan), b, freq);
  auto gphi = synthesize(phi, plan);
  auto gnu = synthesize(nufn, plan);
  C aphi, anu;
  for (int j = 0; j < n; ++j) {
    auto jj = static_cast<std::size_t>(j);
    C den = gh[jj] * ghm[jj];
    aphi += gphi[jj] / den;
    anu += gnu[jj] / den;
  }
  C delta_closed = aphi / anu;
  REQUIRE(abs(delta_closed - delta_impl) < tol10(kDigits - 20) * (R(1) + abs(delta_impl)));
}

TEST_CASE("step defect matches an independent evaluation", "[newton][property]") {
  auto solver = make_solver();
  auto series = compute_series(solver.params(), 12, kDigits);
  C eps(R(1) / 15, R(1) / 40);
  auto seed = seed_from_series(solver, series, eps, 7);
  auto next = solver.step(seed);
  R independent = defect(solver.params(), next.u, next.c, eps, solver.options().grid);
  REQUIRE(abs(independent - next.defect) <= tol10(kDigits - 10) * (independent + tol10(20)));
}

TEST_CASE("factorized operator equals the direct commutator form", "[newton][property]") {
  auto params = MapParams<R>::standard(kDigits);
  Rng<R> rng(51);
  const int n = 256;
  FftPlan<R> plan(n, kDigits);
  for (int rep = 0; rep < 5; ++rep) {
    auto u = rng.periodic(6, kDigits) * C(R(1) / 400);  // keeps h' away from zero
    auto v = rng.periodic(6, kDigits) * C(R(1) / 40);
    C eps = rng.cunit() * R(1) / 5;
    C b = params.conformal_factor(eps);
    auto freq = params.omega;
    PeriodicFunction<R> hp = derivative(u);
    hp.set_mode(0, hp.mode(0) + C(R(1)));
    auto gh = synthesize(hp, plan);
    auto ghm = synthesize(shift(hp, -freq.omega), plan);
    auto ghp = synthesize(shift(hp, freq.omega), plan);
    auto gu = synthesize(u, plan);
    auto gv = synthesize(v, plan);
    auto gvp = synthesize(shift(v, freq.omega), plan);
    auto gvm = synthesize(shift(v, -freq.omega), plan);

    // direct: h' (D_u E v) - v (D_u E h'); the V'' terms cancel exactly
    std::vector<C> lhs(n);
    for (int j = 0; j < n; ++j) {
      auto jj = static_cast<std::size_t>(j);
      C theta(R(j) / n);
      C vpp = eps * params.eval_v_second(theta + gu[jj]);
      C dev = gvp[jj] - (C(R(1)) + b) * gv[jj] + b * gvm[jj] + vpp * gv[jj];
      C deh = ghp[jj] - (C(R(1)) + b) * gh[jj] + b * ghm[jj] + vpp * gh[jj];
      lhs[jj] = gh[jj] * dev - gv[jj] * deh;
    }

    // factorized: D_+^b [ -h' h'(.-w) D_- [ v/h' ] ], the inner operator
    // evaluated pointwise (v/h' is not band-limited, its tail cancels in the
    // product). The result is band-limited, so the outer shift is exact.
    std::vector<C> inner(n);
    for (int j = 0; j < n; ++j) {
      auto jj = static_cast<std::size_t>(j);
      C dw = gvm[jj] / ghm[jj] - gv[jj] / gh[jj];
      inner[jj] = -(gh[jj] * ghm[jj]) * dw;
    }
    auto innerf = analyze(inner, n / 4 - 1, kDigits, plan);
    auto rhsf = shift(innerf, freq.omega) - innerf * b;
    auto grhs = synthesize(rhsf, plan);
    R err(0), scale(0);
    using std::max;
    for (int j = 0; j < n; ++j) {
      auto jj = static_cast<std::size_t>(j);
      err = max(err, abs(grhs[jj] - lhs[jj]));
      scale = max(scale, abs(lhs[jj]));
    }
    REQUIRE(err < tol10(kDigits - 12) * scale);
  }
}

TEST_CASE("phase normalization keeps the torus solved and zero-mean", "[newton]") {
  auto solver = make_solver();
  auto series = compute_series(solver.params(), 16, kDigits);
  C eps(R(1) / 9, R(1) / 60);
  auto seed = seed_from_series(solver, series, eps, 16);
  auto sol = solver.solve(eps, seed.u, seed.c);
  REQUIRE(abs(mean(sol.u)) < tol10(kDigits - 35));
  REQUIRE(sol.defect < 100 * solver.options().tol);
}

TEST_CASE("continuation: constant path repeats the solution", "[newton]") {
  auto solver = make_solver();
  auto series = compute_series(solver.params(), 16, kDigits);
  C eps(R(1) / 14);
  auto seed = seed_from_series(solver, series, eps, 16);
  auto start = solver.solve(eps, seed.u, seed.c);
  auto log = continue_path(solver, {eps, eps, eps}, start);
  REQUIRE(log.accepted.size() == 3);
  for (const auto& s : log.accepted) {
    REQUIRE(abs(s.c - start.c) < tol10(kDigits - 25));
    REQUIRE(norm_sobolev(s.u - start.u, R(0)) < tol10(kDigits - 25));
  }
}

TEST_CASE("continuation along the real axis keeps the drift real", "[newton][slow]") {
  auto solver = make_solver(512);
  auto series = compute_series(solver.params(), 24, kDigits);
  C eps0(R(1) / 100);
  auto seed = seed_from_series(solver, series, eps0, 24);
  auto start = solver.solve(eps0, seed.u, seed.c);
  std::vector<C> path;
  for (int i = 1; i <= 6; ++i) path.push_back(C(R(1) / 100 + R(29) / 100 * R(i) / 6));
  auto log = continue_path(solver, path, start);
  for (const auto& s : log.accepted) REQUIRE(abs(s.c.im) < tol10(kDigits - 25));
  REQUIRE(abs(log.accepted.back().eps.re - R(3) / 10) < tol10(kDigits - 30));
}

TEST_CASE("continuation into a pole fails by step collapse", "[newton][slow]") {
  auto solver = make_solver(512);
  auto series = compute_series(solver.params(), 24, kDigits);
  // head straight into the divisor point b(eps) = e^{2 pi i 34 w}
  C pole(R("0.38017724"), R("0.21256674"));
  C eps0 = pole * R(1) / 4;
  auto seed = seed_from_series(solver, series, eps0, -1);
  auto start = solver.solve(eps0, seed.u, seed.c);
  std::vector<C> path;
  for (int i = 1; i <= 4; ++i) path.push_back(pole * (R(1) / 4 + R(3) / 4 * R(i) / 4));
  REQUIRE_THROWS_AS(continue_path(solver, path, start, 5), StepFailure);
}

TEST_CASE("small loop away from every pole has trivial monodromy", "[newton][slow]") {
  auto solver = make_solver();
  auto series = compute_series(solver.params(), 16, kDigits);
  LoopPath<R> loop{C(R(2) / 25), R(1) / 100, 8, R(0)};
  auto pts = loop.points(kDigits);
  auto seed = seed_from_series(solver, series, pts[0], 16);
  auto start = solver.solve(pts[0], seed.u, seed.c);
  auto res = monodromy_loop(solver, loop, start, 4);
  REQUIRE(res.defect_u < tol10(kDigits - 35));
  REQUIRE(res.defect_c < tol10(kDigits - 35));
  REQUIRE(res.instances.size() == 4);
  REQUIRE(res.path.size() == 8);
}

TEST_CASE("loop paths validate their shape and report clearance", "[newton]") {
  LoopPath<R> bad{C(R(1) / 2), R(-1), 16, R(0)};
  REQUIRE_THROWS_AS(bad.points(kDigits), Error);
  LoopPath<R> few{C(R(1) / 2), R(1) / 10, 4, R(0)};
  REQUIRE_THROWS_AS(few.points(kDigits), Error);
  LoopPath<R> loop{C{}, R(1) / 10, 16, R(0)};
  std::vector<C> poles{C(R(1) / 2)};
  R clear = loop.clearance(poles, kDigits);
  REQUIRE(clear > R(39) / 100);
  REQUIRE(clear < R(41) / 100);
}

TEST_CASE("degenerate graph detection", "[newton]") {
  auto solver = make_solver();
  // u = -sin(2 pi theta)/(2 pi) puts h'(0) = 1 + u'(0) exactly at zero,
  // and theta = 0 is a grid point
  PeriodicFunction<R> u(1, kDigits);
  const R pi4 = 4 * real_traits<R>::pi();
  u.set_mode(1, C(R(0), R(1) / pi4));
  u.set_mode(-1, C(R(0), R(-1) / pi4));
  TorusSolution<R> sol{C(R(1) / 10), u, C{}, R(1), 0};
  REQUIRE_THROWS_AS(solver.step(sol), DegenerateH);
}
