#include <catch2/catch.hpp>

#include <sstream>

#include "dsmap/lindstedt.hpp"
#include "dsmap/trig_series.hpp"
#include "test_support.hpp"

using namespace dsmap;
using R = mpreal;
using C = Complex<R>;
using dsmap::testing::Rng;

namespace {
constexpr int kDigits = 50;

struct PrecisionSetup {
  PrecisionSetup() { real_traits<R>::set_working_digits(kDigits); }
} const precision_setup;

R tol10(int e) { return pow10<R>(-e); }

LindstedtSeries<R> standard_series(int order, int digits = kDigits) {
  return compute_series(MapParams<R>::standard(digits), order, digits);
}
}  // namespace

TEST_CASE("drift coefficients are trivial through the conformal order", "[lindstedt]") {
  auto s = standard_series(3);
  REQUIRE(abs(s.c[0]) == 0);
  REQUIRE(abs(s.c[1]) == 0);
  REQUIRE(abs(s.c[2]) == 0);
  REQUIRE(abs(s.c[3] - C(s.params.omega.omega)) < tol10(kDigits - 10));
}

TEST_CASE("order zero is the trivial solution", "[lindstedt]") {
  auto s = standard_series(0);
  REQUIRE(s.order == 0);
  REQUIRE(s.u[0].trimmed().trunc() == 0);
  REQUIRE(abs(mean(s.u[0])) == 0);
  REQUIRE(abs(s.c[0]) == 0);
}

TEST_CASE("first order matches the hand-derived divisor formula", "[lindstedt]") {
  auto s = standard_series(1);
  using std::cos;
  R div = 2 * (cos(two_pi<R>() * s.params.omega.omega) - 1);
  // S_1 = -(1/2pi) sin(2 pi theta), so uhat_1(+-1) = -+1/(4 pi i) / div
  C expect_p = C(R(0), R(1) / (4 * real_traits<R>::pi())) / div;
  C expect_m = C(R(0), R(-1) / (4 * real_traits<R>::pi())) / div;
  REQUIRE(abs(s.u[1].mode(1) - expect_p) < tol10(kDigits - 10));
  REQUIRE(abs(s.u[1].mode(-1) - expect_m) < tol10(kDigits - 10));
  REQUIRE(s.u[1].trunc() == 1);
}

TEST_CASE("every order has vanishing average", "[lindstedt][property]") {
  auto s = standard_series(25);
  for (int k = 0; k <= 25; ++k) REQUIRE(abs(mean(s.u[static_cast<std::size_t>(k)])) == 0);
}

TEST_CASE("evaluate: zero eps, pure drift, naive-summation oracle", "[lindstedt]") {
  auto s = standard_series(12);
  auto [u0, c0] = evaluate(s, C{}, 12);
  REQUIRE(abs(c0) == 0);
  for (int l = -u0.trunc(); l <= u0.trunc(); ++l) REQUIRE(abs(u0.mode(l)) == 0);

  C eps(R(3) / 100, R(1) / 100);
  auto [u3, c3] = evaluate(s, eps, 3);
  REQUIRE(abs(c3 - C(s.params.omega.omega) * pow_int(eps, 3u)) < tol10(kDigits - 10));

  auto [u, c] = evaluate(s, eps, 12);
  C direct_c{};
  PeriodicFunction<R> direct_u(u.trunc(), kDigits);
  C ppow(R(1));
  for (int k = 0; k <= 12; ++k) {
    direct_c += s.c[static_cast<std::size_t>(k)] * ppow;
    for (int l = -12; l <= 12; ++l)
      if (l >= -direct_u.trunc() && l <= direct_u.trunc())
        direct_u.set_mode(l, direct_u.mode(l) + s.u[static_cast<std::size_t>(k)].mode(l) * ppow);
    ppow *= eps;
  }
  REQUIRE(abs(c - direct_c) < tol10(kDigits - 10) * (R(1) + abs(direct_c)));
  REQUIRE(dsmap::testing::rel_coeff_distance(u, direct_u) < tol10(kDigits - 10));
}

TEST_CASE("defect vanishes on the unperturbed circle and sees drift corruption",
          "[lindstedt]") {
  auto params = MapParams<R>::standard(kDigits);
  auto zero = PeriodicFunction<R>::zero(0, kDigits);
  REQUIRE(defect(params, zero, C{}, C{}, 1024) == 0);

  auto s = standard_series(8);
  C eps(R(1) / 200);
  auto [u, c] = evaluate(s, eps, 8);
  R base = defect(params, u, c, eps, defect_grid_size(u.trunc()));
  R corrupted = defect(params, u, c + C(R(1) / 1000), eps, defect_grid_size(u.trunc()));
  REQUIRE(corrupted >= R(1) / 1000 - base);
}

TEST_CASE("truncation-order defect slope: O(eps^{N+1})", "[lindstedt][slow]") {
  auto s = standard_series(5);
  auto params = s.params;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  using std::exp;
  using std::log;
  for (int i = 0; i < 6; ++i) {
    R eps = exp(log(R(1) / 1000) + R(i) / 5 * log(R(10)));
    auto [u, c] = evaluate(s, C(eps), 5);
    R dv = defect(params, u, c, C(eps), defect_grid_size(u.trunc()));
    double lx = static_cast<double>(log(eps)), ly = static_cast<double>(log(dv));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++n;
  }
  double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  REQUIRE(slope > 5.9);
  REQUIRE(slope < 6.1);
}

TEST_CASE("embedding: rigid rotation, mean, and direct map iteration", "[lindstedt]") {
  auto params = MapParams<R>::standard(kDigits);
  auto [k1, k2] = embedding(PeriodicFunction<R>::zero(0, kDigits), params.omega);
  REQUIRE(abs(mean(k2) - C(params.omega.omega)) < tol10(kDigits - 10));
  REQUIRE(k2.trimmed().trunc() == 0);

  auto s = standard_series(10);
  C eps(R(1) / 50);
  auto [u, c] = evaluate(s, eps, 10);
  auto [e1, e2] = embedding(u, params.omega);
  REQUIRE(abs(mean(e2) - C(params.omega.omega)) < tol10(kDigits - 10));

  // direct iteration of the map family whose invariance error is the defect
  // functional: y+ = b y + c - eps V'(x), x+ = x + y+
  C b = params.conformal_factor(eps);
  R dv = defect(params, u, c, eps, defect_grid_size(u.trunc()));
  R worst(0);
  for (int j = 0; j < 64; ++j) {
    R theta = R(j) / 64;
    C x = C(theta) + eval(e1, theta);
    C y = eval(e2, theta);
    C ynext = b * y + c - eps * params.eval_v_prime(x);
    C xnext = x + ynext;
    C xs = C(theta + params.omega.omega) + eval(e1, R(theta + params.omega.omega));
    C ys = eval(e2, R(theta + params.omega.omega));
    using std::max;
    worst = max(worst, max(abs(xnext - xs), abs(ynext - ys)));
  }
  REQUIRE(worst < 8 * dv + tol10(kDigits - 8));
}

TEST_CASE("conservative recursion has vanishing forcing averages", "[lindstedt]") {
  auto params = MapParams<R>::standard(kDigits);
  auto means = symplectic_zero_average_check(params, 20, kDigits);
  REQUIRE(means.size() == 21);
  REQUIRE(means[0] == 0);
  auto s = compute_series(params, 20, TruncationSchedule{}, kDigits, true);
  for (int k = 1; k <= 20; ++k) {
    R scale = norm_rho(s.u[static_cast<std::size_t>(k)], R(0), NormVariant::l2_root);
    using std::max;
    REQUIRE(means[static_cast<std::size_t>(k)] < tol10(kDigits - 15) * max(R(1), scale));
  }
}

TEST_CASE("non-zero-mean forcing breaks the recursion at first order", "[lindstedt]") {
  auto params = MapParams<R>::standard(kDigits);
  params.v_prime_mean = R(1) / 10;
  REQUIRE_THROWS_AS(compute_series(params, 3, TruncationSchedule{}, kDigits, true),
                    NonZeroAverage);
}

TEST_CASE("series file round trip preserves the data and its invariants", "[lindstedt][io]") {
  auto s = standard_series(7);
  std::stringstream ss;
  save_series(ss, s, "order = 7");
  auto t = load_series<R>(ss);
  REQUIRE(t.order == s.order);
  REQUIRE(t.digits == s.digits);
  REQUIRE(abs(t.params.omega.omega - s.params.omega.omega) == 0);
  REQUIRE(t.params.conformal_exponent == s.params.conformal_exponent);
  for (int k = 0; k <= 7; ++k) {
    REQUIRE(abs(t.c[static_cast<std::size_t>(k)] - s.c[static_cast<std::size_t>(k)]) == 0);
    REQUIRE(abs(mean(t.u[static_cast<std::size_t>(k)])) == 0);
    REQUIRE(dsmap::testing::rel_coeff_distance(t.u[static_cast<std::size_t>(k)],
                                               s.u[static_cast<std::size_t>(k)]) == 0);
  }
  // defect computed from the reloaded series agrees end to end
  C eps(R(1) / 150);
  auto [u1, c1] = evaluate(s, eps, 7);
  auto [u2, c2] = evaluate(t, eps, 7);
  R d1 = defect(s.params, u1, c1, eps, defect_grid_size(u1.trunc()));
  R d2 = defect(t.params, u2, c2, eps, defect_grid_size(u2.trunc()));
  REQUIRE(abs(d1 - d2) <= tol10(kDigits - 10) * d1);

  std::stringstream bad("#ls v2\nN=1\n");
  REQUIRE_THROWS_AS(load_series<R>(bad), FormatError);
}

TEST_CASE("order consistency: forcing recomputed from stored orders", "[lindstedt][property]") {
  auto s = standard_series(12);
  std::vector<PeriodicFunction<R>> u(s.u.begin(), s.u.begin() + 13);
  auto orders = trig_orders(u, 11);
  const R inv_tp = R(1) / two_pi<R>();
  for (int k = 4; k <= 12; ++k) {
    // S_k = -(1/2pi) (sin composition)_{k-1}; c_k = -mean(S_k)
    C ck = mean(orders.s[static_cast<std::size_t>(k - 1)]) * inv_tp;
    REQUIRE(abs(ck - s.c[static_cast<std::size_t>(k)]) <
            tol10(kDigits - 10) * (R(1) + abs(s.c[static_cast<std::size_t>(k)])));
  }
}

TEST_CASE("real parameters keep the series in the real class", "[lindstedt]") {
  auto s = standard_series(15);
  C eps(R(1) / 40);
  auto [u, c] = evaluate(s, eps, 15);
  REQUIRE(abs(c.im) < tol10(kDigits - 10));
  R scale = norm_rho(u, R(0), NormVariant::l2_root);
  for (int j = 0; j < 32; ++j) {
    C v = eval(u, R(R(j) / 32));
    REQUIRE(abs(v.im) < tol10(kDigits - 10) * (R(1) + scale));
  }
}

TEST_CASE("schedule caps the stored bandwidth", "[lindstedt]") {
  TruncationSchedule tight{4, 1, 8};
  auto s = compute_series(MapParams<R>::standard(kDigits), 12, tight, kDigits);
  for (int k = 1; k <= 12; ++k)
    REQUIRE(s.u[static_cast<std::size_t>(k)].trunc() <= tight.order_cap(k));
}

TEST_CASE("defect rejects undersized grids", "[lindstedt]") {
  auto params = MapParams<R>::standard(kDigits);
  PeriodicFunction<R> u(10, kDigits);
  REQUIRE_THROWS_AS(defect(params, u, C{}, C{}, 16), Error);
}

TEST_CASE("two-harmonic forcing keeps the structural identities", "[lindstedt]") {
  auto params = MapParams<R>::standard(kDigits);
  params.v_prime.push_back({2, R(1) / 17, R(1) / 23});
  auto s = compute_series(params, 8, kDigits);
  REQUIRE(abs(s.c[3] - C(params.omega.omega)) < tol10(kDigits - 10));
  for (int k = 0; k <= 8; ++k) REQUIRE(abs(mean(s.u[static_cast<std::size_t>(k)])) == 0);
  C eps(R(1) / 300);
  auto [u, c] = evaluate(s, eps, 8);
  R d1 = defect(params, u, c, eps, defect_grid_size(u.trunc()));
  auto [u2, c2] = evaluate(s, eps * (R(1) / 2), 8);
  R d2 = defect(params, u2, c2, eps * (R(1) / 2), defect_grid_size(u2.trunc()));
  REQUIRE(d1 / d2 > R(450));  // truncation order 8: halving eps divides by ~2^9
  REQUIRE(d1 / d2 < R(580));
}
