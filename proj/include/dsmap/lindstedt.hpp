#pragma once

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "dsmap/cohomology.hpp"
#include "dsmap/complex.hpp"
#include "dsmap/fft.hpp"
#include "dsmap/frequency.hpp"
#include "dsmap/periodic_function.hpp"
#include "dsmap/scalar.hpp"
#include "dsmap/trig_series.hpp"

namespace dsmap {

/// One term a_h sin(2 pi h x) + b_h cos(2 pi h x) of the forcing V'.
template <class R>
struct VHarmonic {
  int index = 1;
  R sin_coeff{};
  R cos_coeff{};
};

/// Family parameters: the forcing V' (zero mean unless a constant part is
/// injected deliberately), the exponent q of the conformal factor
/// b(eps) = 1 - eps^q, and the rotation number.
template <class R>
struct MapParams {
  std::vector<VHarmonic<R>> v_prime;
  R v_prime_mean{};
  int conformal_exponent = 3;
  Frequency<R> omega;

  /// V'(x) = sin(2 pi x)/(2 pi), b(eps) = 1 - eps^3, golden rotation number.
  static MapParams standard(int digits) {
    PrecisionGuard<R> guard(digits);
    MapParams p;
    p.v_prime.push_back({1, R(1) / two_pi<R>(), R(0)});
    p.omega = Frequency<R>::golden(digits);
    return p;
  }

  int max_harmonic() const {
    int h = 0;
    for (const auto& t : v_prime) h = std::max(h, t.index);
    return h;
  }

  /// V'(x) for complex x.
  Complex<R> eval_v_prime(const Complex<R>& x) const {
    const R tp = two_pi<R>();
    Complex<R> acc(v_prime_mean);
    for (const auto& t : v_prime) {
      Complex<R> a(tp * R(t.index) * x.re, tp * R(t.index) * x.im);
      acc += sin(a) * t.sin_coeff + cos(a) * t.cos_coeff;
    }
    return acc;
  }

  /// V''(x) for complex x.
  Complex<R> eval_v_second(const Complex<R>& x) const {
    const R tp = two_pi<R>();
    Complex<R> acc;
    for (const auto& t : v_prime) {
      Complex<R> a(tp * R(t.index) * x.re, tp * R(t.index) * x.im);
      acc += (cos(a) * t.sin_coeff - sin(a) * t.cos_coeff) * (tp * R(t.index));
    }
    return acc;
  }

  Complex<R> conformal_factor(const Complex<R>& eps) const {
    return Complex<R>(R(1)) - pow_int(eps, static_cast<unsigned>(conformal_exponent));
  }
};

/// Per-order truncation cap M_k = min(m0 + delta k, m_cap).
struct TruncationSchedule {
  int m0 = 32;
  int delta = 2;
  int m_cap = 2048;

  int order_cap(int k) const { return std::min(m0 + delta * k, m_cap); }
};

/// The formal solution through order N: u_eps = sum u_k eps^k and
/// c(eps) = sum c_k eps^k, with mean(u_k) = 0 at every order.
template <class R>
struct LindstedtSeries {
  int order = 0;
  std::vector<PeriodicFunction<R>> u;
  std::vector<Complex<R>> c;
  MapParams<R> params;
  TruncationSchedule schedule;
  int digits = 0;
  std::vector<R> s_mean_abs;  // |mean(S_k)| recorded during the recursion
  std::vector<R> s_norm_l2;   // grid L2 norm of S_k, same bookkeeping
};

namespace detail {

/// Forward FFT of a real grid, returning retained modes as a PeriodicFunction
/// plus the (exactly real) grid average.
template <class R>
PeriodicFunction<R> analyze_real(const std::vector<R>& values, int m_keep, int digits,
                                 const FftPlan<R>& plan) {
  std::vector<Complex<R>> buf(values.size());
  for (std::size_t j = 0; j < values.size(); ++j) buf[j].re = values[j];
  return analyze(std::move(buf), m_keep, digits, plan);
}

}  // namespace detail

/// Order-by-order construction of the series. The recursion solves, per
/// order k,
///   L_omega u_k = S_k - u_{k-q} + u_{k-q}(. - omega) + c_k   (k > q)
/// with c_k = -mean(S_k), after the exceptional low orders c_k = 0 (k < q)
/// and c_q = omega. conservative = true runs the b = 1, c = 0 recursion
/// L_omega u_k = S_k instead.
template <class R>
LindstedtSeries<R> compute_series(const MapParams<R>& params, int N,
                                  const TruncationSchedule& schedule, int digits,
                                  bool conservative = false) {
  PrecisionGuard<R> guard(digits);
  if (N < 0) throw Error("lindstedt: negative order");
  const int q = params.conformal_exponent;
  if (q < 1) throw Error("lindstedt: conformal exponent must be >= 1");
  const std::size_t nharm = params.v_prime.size();

  // Bandwidth bookkeeping: band_trig[h][k] bounds the bandwidth of the
  // composition coefficients at order k, band_u[k] the one of u_k after the
  // schedule cap. Grid sizes follow from these, so every stored grid holds
  // exact samples of the (possibly truncated) recursion.
  std::vector<int> band_u(static_cast<std::size_t>(N) + 1, 0);
  std::vector<std::vector<int>> band_trig(nharm);
  for (std::size_t hi = 0; hi < nharm; ++hi)
    band_trig[hi].assign(static_cast<std::size_t>(std::max(N, 1)), 0);
  int band_top = 0;
  for (int k = 1; k <= N; ++k) {
    int bs = 0;
    for (std::size_t hi = 0; hi < nharm; ++hi) {
      int h = params.v_prime[hi].index;
      int b = (k - 1 == 0) ? h : 0;
      for (int m = 0; m <= k - 2; ++m)
        b = std::max(b, band_trig[hi][static_cast<std::size_t>(k - 2 - m)] +
                            band_u[static_cast<std::size_t>(m + 1)]);
      if (k - 1 < std::max(N, 1)) band_trig[hi][static_cast<std::size_t>(k - 1)] = b;
      bs = std::max(bs, b);
    }
    int bu = bs;
    if (!conservative && k > q) bu = std::max(bu, band_u[static_cast<std::size_t>(k - q)]);
    band_u[static_cast<std::size_t>(k)] = std::min(bu, schedule.order_cap(k));
    band_top = std::max({band_top, bs, band_u[static_cast<std::size_t>(k)]});
  }

  const std::size_t n = next_pow2(2 * static_cast<std::size_t>(std::max(band_top, 1)) + 2);
  FftPlan<R> plan(n, digits);
  RotationPhases<R> phases(params.omega, std::max(band_top, 1), digits);
  const SolveTolerances<R> tol = SolveTolerances<R>::defaults(digits);

  LindstedtSeries<R> series;
  series.order = N;
  series.params = params;
  series.schedule = schedule;
  series.digits = digits;
  series.u.push_back(PeriodicFunction<R>::zero(0, digits));
  series.c.push_back(Complex<R>{});
  series.s_mean_abs.push_back(R(0));  // S_0 vanishes identically
  series.s_norm_l2.push_back(R(0));
  if (N == 0) return series;

  std::vector<TrigRecurrence<R, R>> rec;
  rec.reserve(nharm);
  for (std::size_t hi = 0; hi < nharm; ++hi)
    rec.emplace_back(params.v_prime[hi].index, n, digits);

  std::vector<std::vector<R>> pu(static_cast<std::size_t>(N) + 1);
  std::vector<R> s_grid(n);
  R t1;

  for (int k = 1; k <= N; ++k) {
    // composition coefficients through order k-1, then S_k = -(comp)_{k-1}
    if (k >= 2)
      for (auto& r : rec) r.extend(pu);
    for (std::size_t j = 0; j < n; ++j) s_grid[j] = R(0);
    for (std::size_t hi = 0; hi < nharm; ++hi) {
      const auto& sg = rec[hi].s(k - 1);
      const auto& cg = rec[hi].c(k - 1);
      const R& a = params.v_prime[hi].sin_coeff;
      const R& b = params.v_prime[hi].cos_coeff;
      for (std::size_t j = 0; j < n; ++j) {
        if (!(a == 0)) {
          t1 = sg[j];
          t1 *= a;
          s_grid[j] -= t1;
        }
        if (!(b == 0)) {
          t1 = cg[j];
          t1 *= b;
          s_grid[j] -= t1;
        }
      }
    }
    if (k == 1 && !(params.v_prime_mean == 0))
      for (std::size_t j = 0; j < n; ++j) s_grid[j] -= params.v_prime_mean;

    int band_comp = params.max_harmonic();
    if (k > 1)
      for (std::size_t hi = 0; hi < nharm; ++hi)
        band_comp = std::max(band_comp, band_trig[hi][static_cast<std::size_t>(k - 1)]);
    const int band_s = std::min<int>(static_cast<int>(n) / 2 - 1,
                                     std::max(band_u[static_cast<std::size_t>(k)], band_comp));
    PeriodicFunction<R> s_hat = detail::analyze_real(s_grid, band_s, digits, plan);
    const Complex<R> s_mean = mean(s_hat);
    series.s_mean_abs.push_back(abs(s_mean));
    {
      using std::sqrt;
      R acc(0), sq(0);
      for (std::size_t j = 0; j < n; ++j) {
        sq = s_grid[j];
        sq *= s_grid[j];
        acc += sq;
      }
      series.s_norm_l2.push_back(sqrt(acc / R(static_cast<long>(n))));
    }

    // drift coefficient
    Complex<R> ck;
    if (!conservative) {
      if (k == q)
        ck = Complex<R>(params.omega.omega);
      else if (k > q)
        ck = -s_mean;
    }
    series.c.push_back(ck);

    // right-hand side of the order-k cohomology equation
    const int bu = band_u[static_cast<std::size_t>(k)];
    PeriodicFunction<R> rhs(bu, digits);
    for (int l = -bu; l <= bu; ++l) rhs.set_mode(l, s_hat.mode(l));
    if (!conservative && k > q) {
      const PeriodicFunction<R>& prev = series.u[static_cast<std::size_t>(k - q)];
      for (int l = -prev.trunc(); l <= prev.trunc(); ++l) {
        if (l == 0 || l < -bu || l > bu) continue;
        rhs.set_mode(l, rhs.mode(l) + prev.mode(l) * (phases.rotation(-l) - Complex<R>(R(1))));
      }
    }
    // the recursion is broken if the solvable-average condition fails
    {
      Complex<R> zero_check = s_mean + ck - (k == q && !conservative
                                                 ? Complex<R>(params.omega.omega)
                                                 : Complex<R>{});
      R scale = detail::coeff_scale(s_hat);
      using std::max;
      if (abs(zero_check) > tol.zero_mean_rel * max(scale, R(1)))
        throw NonZeroAverage("lindstedt: order " + std::to_string(k) +
                             " right-hand side has non-vanishing average");
    }
    rhs.set_mode(0, Complex<R>{});

    PeriodicFunction<R> uk = solve_lomega(rhs, phases, tol);
    series.u.push_back(uk);

    // grid of k * u_k for the trig recurrences
    std::vector<Complex<R>> ug = synthesize(uk, plan);
    pu[static_cast<std::size_t>(k)].resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      pu[static_cast<std::size_t>(k)][j] = ug[j].re;
      pu[static_cast<std::size_t>(k)][j] *= R(k);
    }
  }
  return series;
}

template <class R>
LindstedtSeries<R> compute_series(const MapParams<R>& params, int N, int digits) {
  return compute_series(params, N, TruncationSchedule{}, digits);
}

/// |mean(S_k)| for k <= N under the conservative (b = 1, c = 0) recursion;
/// structurally these vanish, so the returned values sit at roundoff level.
template <class R>
std::vector<R> symplectic_zero_average_check(const MapParams<R>& params, int N, int digits) {
  LindstedtSeries<R> s = compute_series(params, N, TruncationSchedule{}, digits, true);
  return s.s_mean_abs;
}

/// Horner evaluation of (u_eps, c(eps)) through order up_to.
template <class R>
std::pair<PeriodicFunction<R>, Complex<R>> evaluate(const LindstedtSeries<R>& series,
                                                    const Complex<R>& eps, int up_to) {
  PrecisionGuard<R> guard(series.digits);
  if (up_to < 0 || up_to > series.order) throw Error("lindstedt evaluate: order out of range");
  int band = 0;
  for (int k = 0; k <= up_to; ++k)
    band = std::max(band, series.u[static_cast<std::size_t>(k)].trunc());
  std::vector<Complex<R>> acc(2 * static_cast<std::size_t>(band) + 1);
  Complex<R> cacc;
  for (int k = up_to; k >= 0; --k) {
    const PeriodicFunction<R>& uk = series.u[static_cast<std::size_t>(k)];
    for (int l = -band; l <= band; ++l) {
      Complex<R>& a = acc[static_cast<std::size_t>(l + band)];
      a *= eps;
      a += uk.mode(l);
    }
    cacc *= eps;
    cacc += series.c[static_cast<std::size_t>(k)];
  }
  PeriodicFunction<R> u(band, series.digits);
  for (int l = -band; l <= band; ++l) u.set_mode(l, acc[static_cast<std::size_t>(l + band)]);
  if (!finite(cacc)) throw OverflowError("lindstedt evaluate: drift overflow");
  return {std::move(u), cacc};
}

/// Grid of the invariance defect
///   E(t) = u(t+w) - (1+b) u(t) + b u(t-w) + (1-b) w - c + eps V'(t + u(t))
/// with b = 1 - eps^q, sampled at t_j = j/n.
template <class R>
std::vector<Complex<R>> defect_grid(const MapParams<R>& params, const PeriodicFunction<R>& u,
                                    const Complex<R>& c, const Complex<R>& eps,
                                    const FftPlan<R>& plan) {
  PrecisionGuard<R> guard(u.digits());
  const std::size_t n = plan.size();
  const Complex<R> b = params.conformal_factor(eps);
  const Complex<R> one_plus_b = Complex<R>(R(1)) + b;
  const Complex<R> drift_term = (Complex<R>(R(1)) - b) * params.omega.omega - c;
  std::vector<Complex<R>> gu = synthesize(u, plan);
  std::vector<Complex<R>> gup = synthesize(shift(u, params.omega.omega), plan);
  std::vector<Complex<R>> gum = synthesize(shift(u, -params.omega.omega), plan);
  const R inv_n = R(1) / R(static_cast<long>(n));
  std::vector<Complex<R>> e(n);
  for (std::size_t j = 0; j < n; ++j) {
    Complex<R> theta(R(static_cast<long>(j)) * inv_n);
    Complex<R> v = params.eval_v_prime(theta + gu[j]);
    e[j] = gup[j] - one_plus_b * gu[j] + b * gum[j] + drift_term + eps * v;
  }
  return e;
}

inline int defect_grid_size(int trunc) {
  return static_cast<int>(next_pow2(std::max(4 * static_cast<std::size_t>(trunc) + 1,
                                             std::size_t{1024})));
}

/// Sup over the grid of |E|; the grid must resolve 4M+1 points.
template <class R>
R defect(const MapParams<R>& params, const PeriodicFunction<R>& u, const Complex<R>& c,
         const Complex<R>& eps, int grid) {
  PrecisionGuard<R> guard(u.digits());
  if (grid < 4 * u.trunc() + 1) throw Error("defect: grid must have at least 4M+1 points");
  FftPlan<R> plan(next_pow2(static_cast<std::size_t>(grid)), u.digits());
  std::vector<Complex<R>> e = defect_grid(params, u, c, eps, plan);
  using std::max;
  R sup(0);
  for (const auto& z : e) sup = max(sup, abs(z));
  if (!real_traits<R>::finite(sup)) throw OverflowError("defect overflow");
  return sup;
}

/// Parameterization data of the invariant circle: the periodic part of the
/// angle component and the full second component
///   K_2 = omega + u(t) - u(t - omega).
template <class R>
std::pair<PeriodicFunction<R>, PeriodicFunction<R>> embedding(const PeriodicFunction<R>& u,
                                                              const Frequency<R>& freq) {
  PrecisionGuard<R> guard(u.digits());
  PeriodicFunction<R> k2 = u - shift(u, -freq.omega);
  k2.set_mode(0, k2.mode(0) + Complex<R>(freq.omega));
  return {u, std::move(k2)};
}

// --- series file format -----------------------------------------------------

template <class R>
void save_series(std::ostream& os, const LindstedtSeries<R>& s,
                 const std::string& config_echo = {}) {
  os << "#ls v1\n";
  os << "N=" << s.order << "\n";
  os << "digits=" << s.digits << "\n";
  os << "omega=" << real_traits<R>::to_string(s.params.omega.omega) << "\n";
  os << "nu=" << real_traits<R>::to_string(s.params.omega.nu) << "\n";
  os << "tau=" << real_traits<R>::to_string(s.params.omega.tau) << "\n";
  os << "exponent=" << s.params.conformal_exponent << "\n";
  os << "m0=" << s.schedule.m0 << " delta=" << s.schedule.delta << " m_cap=" << s.schedule.m_cap
     << "\n";
  os << "vprime=";
  for (std::size_t i = 0; i < s.params.v_prime.size(); ++i) {
    if (i) os << ",";
    os << s.params.v_prime[i].index << ":" << real_traits<R>::to_string(s.params.v_prime[i].sin_coeff)
       << ":" << real_traits<R>::to_string(s.params.v_prime[i].cos_coeff);
  }
  os << "\n";
  if (!config_echo.empty()) {
    std::istringstream es(config_echo);
    std::string line;
    while (std::getline(es, line)) os << "# " << line << "\n";
  }
  for (int k = 0; k <= s.order; ++k) {
    os << "[" << k << "] c=" << to_string(s.c[static_cast<std::size_t>(k)]) << "\n";
    write_text(os, s.u[static_cast<std::size_t>(k)]);
  }
}

template <class R>
LindstedtSeries<R> load_series(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "#ls v1")
    throw FormatError("series file: bad or missing '#ls v1' header");
  auto keyline = [&](const char* key) {
    if (!std::getline(is, line) || line.rfind(key, 0) != 0)
      throw FormatError(std::string("series file: missing ") + key + " line");
    return line.substr(std::string(key).size());
  };
  LindstedtSeries<R> s;
  s.order = std::stoi(keyline("N="));
  s.digits = std::stoi(keyline("digits="));
  PrecisionGuard<R> guard(s.digits);
  s.params.omega.omega = real_traits<R>::from_string(keyline("omega="));
  s.params.omega.nu = real_traits<R>::from_string(keyline("nu="));
  s.params.omega.tau = real_traits<R>::from_string(keyline("tau="));
  s.params.conformal_exponent = std::stoi(keyline("exponent="));
  {
    std::istringstream ms(keyline("m0="));
    ms >> s.schedule.m0;
    std::string tok;
    while (ms >> tok) {
      if (tok.rfind("delta=", 0) == 0) s.schedule.delta = std::stoi(tok.substr(6));
      if (tok.rfind("m_cap=", 0) == 0) s.schedule.m_cap = std::stoi(tok.substr(6));
    }
  }
  {
    std::string v = keyline("vprime=");
    std::istringstream vs(v);
    std::string term;
    while (std::getline(vs, term, ',')) {
      std::size_t a = term.find(':');
      std::size_t b = term.find(':', a + 1);
      if (a == std::string::npos || b == std::string::npos)
        throw FormatError("series file: bad vprime term");
      VHarmonic<R> h;
      h.index = std::stoi(term.substr(0, a));
      h.sin_coeff = real_traits<R>::from_string(term.substr(a + 1, b - a - 1));
      h.cos_coeff = real_traits<R>::from_string(term.substr(b + 1));
      s.params.v_prime.push_back(std::move(h));
    }
  }
  std::streampos mark = is.tellg();
  while (std::getline(is, line) && line.rfind("# ", 0) == 0) mark = is.tellg();
  is.seekg(mark);
  for (int k = 0; k <= s.order; ++k) {
    if (!std::getline(is, line)) throw FormatError("series file: truncated order list");
    std::istringstream hs(line);
    std::string tag, ctag;
    if (!(hs >> tag >> ctag) || tag != "[" + std::to_string(k) + "]" || ctag.rfind("c=", 0) != 0)
      throw FormatError("series file: bad order header at k=" + std::to_string(k));
    std::string sre = ctag.substr(2), sim;
    if (!(hs >> sim)) throw FormatError("series file: bad drift value at k=" + std::to_string(k));
    s.c.push_back(Complex<R>(real_traits<R>::from_string(sre), real_traits<R>::from_string(sim)));
    PeriodicFunction<R> uk = read_text<R>(is);
    if (uk.digits() != s.digits)
      throw PrecisionMismatch("series file: order " + std::to_string(k) +
                              " stored at a different precision");
    s.u.push_back(std::move(uk));
  }
  return s;
}

}  // namespace dsmap
