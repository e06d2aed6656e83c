#pragma once

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "dsmap/complex.hpp"
#include "dsmap/lindstedt.hpp"
#include "dsmap/scalar.hpp"

namespace dsmap {

struct SingularSystem : Error {
  using Error::Error;
};

/// Where a scalar eps-series was read off the function-valued series.
template <class R>
struct SeriesProbe {
  enum Kind { probe_theta, fourier_mode, drift } kind = probe_theta;
  Complex<R> theta{};
  int mode = 0;

  static SeriesProbe at_theta(Complex<R> t) { return {probe_theta, std::move(t), 0}; }
  static SeriesProbe at_mode(int l) { return {fourier_mode, {}, l}; }
  static SeriesProbe drift_series() { return {drift, {}, 0}; }

  std::string label() const {
    switch (kind) {
      case probe_theta: return "theta:" + real_traits<R>::to_string(theta.re);
      case fourier_mode: return "mode:" + std::to_string(mode);
      case drift: return "drift";
    }
    return {};
  }
};

template <class R>
struct ScalarSeries {
  std::vector<Complex<R>> coeffs;
  SeriesProbe<R> provenance;
  int digits = 0;

  int top_order() const { return static_cast<int>(coeffs.size()) - 1; }
};

/// Reads one scalar series out of the Lindstedt data: u_k evaluated at a
/// probe angle, a fixed Fourier mode of u_k, or the drift coefficients.
template <class R>
ScalarSeries<R> extract_scalar_series(const LindstedtSeries<R>& s, const SeriesProbe<R>& probe,
                                      int top_order = -1) {
  PrecisionGuard<R> guard(s.digits);
  const int K = top_order < 0 ? s.order : top_order;
  if (K > s.order) throw Error("extract_scalar_series: series order too low");
  ScalarSeries<R> out;
  out.provenance = probe;
  out.digits = s.digits;
  out.coeffs.reserve(static_cast<std::size_t>(K) + 1);
  for (int k = 0; k <= K; ++k) {
    switch (probe.kind) {
      case SeriesProbe<R>::probe_theta:
        out.coeffs.push_back(eval(s.u[static_cast<std::size_t>(k)], probe.theta));
        break;
      case SeriesProbe<R>::fourier_mode:
        out.coeffs.push_back(s.u[static_cast<std::size_t>(k)].mode(probe.mode));
        break;
      case SeriesProbe<R>::drift:
        out.coeffs.push_back(s.c[static_cast<std::size_t>(k)]);
        break;
    }
  }
  return out;
}

template <class R>
void write_scalar_series(std::ostream& os, const ScalarSeries<R>& s) {
  os << "#ss v1\n";
  os << "K=" << s.top_order() << "\n";
  os << "digits=" << s.digits << "\n";
  os << "probe=" << s.provenance.label() << "\n";
  for (const auto& g : s.coeffs) os << to_string(g) << "\n";
}

template <class R>
ScalarSeries<R> read_scalar_series(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "#ss v1")
    throw FormatError("scalar series: bad or missing '#ss v1' header");
  if (!std::getline(is, line) || line.rfind("K=", 0) != 0)
    throw FormatError("scalar series: missing K=");
  int K = std::stoi(line.substr(2));
  if (!std::getline(is, line) || line.rfind("digits=", 0) != 0)
    throw FormatError("scalar series: missing digits=");
  ScalarSeries<R> s;
  s.digits = std::stoi(line.substr(7));
  PrecisionGuard<R> guard(s.digits);
  if (!std::getline(is, line) || line.rfind("probe=", 0) != 0)
    throw FormatError("scalar series: missing probe=");
  for (int k = 0; k <= K; ++k) {
    if (!std::getline(is, line)) throw FormatError("scalar series: truncated coefficients");
    std::istringstream ls(line);
    std::string re, im;
    if (!(ls >> re >> im)) throw FormatError("scalar series: bad coefficient line");
    s.coeffs.push_back(Complex<R>(real_traits<R>::from_string(re), real_traits<R>::from_string(im)));
  }
  return s;
}

namespace detail {

/// Dense LU with partial pivoting; solves in place, returns the ratio of the
/// largest to the smallest pivot as a cheap conditioning proxy.
template <class R>
R lu_solve(std::vector<std::vector<Complex<R>>>& a, std::vector<Complex<R>>& rhs) {
  const std::size_t n = a.size();
  using std::max;
  using std::min;
  R scale(0);
  for (const auto& row : a)
    for (const auto& z : row) scale = max(scale, abs(z));
  if (scale == 0) throw SingularSystem("linear system: zero matrix");
  R piv_max(0), piv_min(0);
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t best = col;
    R best_mag = abs(a[perm[col]][col]);
    for (std::size_t row = col + 1; row < n; ++row) {
      R mag = abs(a[perm[row]][col]);
      if (mag > best_mag) {
        best = row;
        best_mag = mag;
      }
    }
    std::swap(perm[col], perm[best]);
    if (best_mag == 0) throw SingularSystem("linear system: exactly singular pivot");
    piv_max = col == 0 ? best_mag : max(piv_max, best_mag);
    piv_min = col == 0 ? best_mag : min(piv_min, best_mag);
    const Complex<R>& d = a[perm[col]][col];
    for (std::size_t row = col + 1; row < n; ++row) {
      Complex<R> f = a[perm[row]][col] / d;
      if (f.re == 0 && f.im == 0) continue;
      for (std::size_t cc = col; cc < n; ++cc) a[perm[row]][cc] -= f * a[perm[col]][cc];
      rhs[perm[row]] -= f * rhs[perm[col]];
    }
  }
  std::vector<Complex<R>> x(n);
  for (std::size_t col = n; col-- > 0;) {
    Complex<R> acc = rhs[perm[col]];
    for (std::size_t cc = col + 1; cc < n; ++cc) acc -= a[perm[col]][cc] * x[cc];
    x[col] = acc / a[perm[col]][col];
  }
  rhs = std::move(x);
  return piv_max / piv_min;
}

}  // namespace detail

/// Rational approximant P/Q with deg P = p, deg Q = q, Q(0) = 1, matching the
/// input series through order p + q.
template <class R>
struct PadeApproximant {
  std::vector<Complex<R>> p;
  std::vector<Complex<R>> q;
  int digits = 0;
  double condition_log10 = 0;  // log10 of the pivot-ratio proxy
  int deflated = 0;            // denominator degrees removed at a degenerate entry

  int deg_p() const { return static_cast<int>(p.size()) - 1; }
  int deg_q() const { return static_cast<int>(q.size()) - 1; }
};

/// Solves the q x q Toeplitz system for the denominator, then reads the
/// numerator off the low-order equations. An exactly singular system marks a
/// degenerate table entry (the function is rational of lower type); with
/// deflate_degenerate the denominator degree is reduced until the system is
/// solvable, otherwise the degeneracy is reported.
template <class R>
PadeApproximant<R> build_pade(const ScalarSeries<R>& s, int p, int q,
                              bool deflate_degenerate = false) {
  PrecisionGuard<R> guard(s.digits);
  if (p < 0 || q < 0) throw Error("pade: negative degree");
  if (s.top_order() < p + q) throw Error("pade: series too short for requested degrees");
  auto g = [&](int i) -> Complex<R> {
    return i < 0 ? Complex<R>{} : s.coeffs[static_cast<std::size_t>(i)];
  };
  PadeApproximant<R> out;
  out.digits = s.digits;
  int q_eff = q;
  for (;;) {
    out.q.assign(static_cast<std::size_t>(q_eff) + 1, Complex<R>{});
    out.q[0] = Complex<R>(R(1));
    if (q_eff == 0) break;
    std::vector<std::vector<Complex<R>>> a(static_cast<std::size_t>(q_eff));
    std::vector<Complex<R>> rhs(static_cast<std::size_t>(q_eff));
    for (int i = 0; i < q_eff; ++i) {
      a[static_cast<std::size_t>(i)].resize(static_cast<std::size_t>(q_eff));
      for (int j = 1; j <= q_eff; ++j)
        a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j - 1)] = g(p + 1 + i - j);
      rhs[static_cast<std::size_t>(i)] = -g(p + 1 + i);
    }
    try {
      R cond = detail::lu_solve(a, rhs);
      using std::log10;
      out.condition_log10 = static_cast<double>(log10(cond));
      for (int j = 1; j <= q_eff; ++j)
        out.q[static_cast<std::size_t>(j)] = rhs[static_cast<std::size_t>(j - 1)];
      break;
    } catch (const SingularSystem&) {
      if (!deflate_degenerate) throw;
      --q_eff;
      ++out.deflated;
    }
  }
  out.p.assign(static_cast<std::size_t>(p) + 1, Complex<R>{});
  for (int i = 0; i <= p; ++i) {
    Complex<R> acc = g(i);
    for (int j = 1; j <= std::min(i, q_eff); ++j)
      acc += g(i - j) * out.q[static_cast<std::size_t>(j)];
    out.p[static_cast<std::size_t>(i)] = acc;
  }
  return out;
}

/// Maclaurin coefficients of P/Q through order top, by long division.
template <class R>
std::vector<Complex<R>> maclaurin(const PadeApproximant<R>& a, int top) {
  PrecisionGuard<R> guard(a.digits);
  std::vector<Complex<R>> r(static_cast<std::size_t>(top) + 1);
  for (int k = 0; k <= top; ++k) {
    Complex<R> acc = k <= a.deg_p() ? a.p[static_cast<std::size_t>(k)] : Complex<R>{};
    for (int j = 1; j <= std::min(k, a.deg_q()); ++j)
      acc -= a.q[static_cast<std::size_t>(j)] * r[static_cast<std::size_t>(k - j)];
    r[static_cast<std::size_t>(k)] = acc;
  }
  return r;
}

template <class R>
struct RootSet {
  std::vector<Complex<R>> roots;
  std::vector<R> residuals;  // |poly(root)|
  int sweeps = 0;
};

namespace detail {

template <class R>
void horner_value_derivative(const std::vector<Complex<R>>& c, const Complex<R>& z, Complex<R>& v,
                             Complex<R>& dv) {
  v = Complex<R>{};
  dv = Complex<R>{};
  for (std::size_t k = c.size(); k-- > 0;) {
    dv *= z;
    dv += v;
    v *= z;
    v += c[k];
  }
}

}  // namespace detail

/// All complex roots by Aberth-Ehrlich simultaneous iteration with Newton
/// polishing, ordered by modulus then argument. Coefficients are low order
/// first.
template <class R>
RootSet<R> polynomial_roots(const std::vector<Complex<R>>& coeffs, int digits,
                            int max_sweeps = 500) {
  PrecisionGuard<R> guard(digits);
  using std::max;
  // effective degree: drop an exactly-zero leading coefficient block
  int deg = static_cast<int>(coeffs.size()) - 1;
  while (deg > 0 && coeffs[static_cast<std::size_t>(deg)].re == 0 &&
         coeffs[static_cast<std::size_t>(deg)].im == 0)
    --deg;
  RootSet<R> out;
  if (deg < 1) return out;
  std::vector<Complex<R>> c(coeffs.begin(), coeffs.begin() + deg + 1);

  const R tol = pow10<R>(-(digits - 10));
  std::vector<Complex<R>> z(static_cast<std::size_t>(deg));
  {
    using std::pow;
    R r0 = pow(abs(c[0]) / abs(c[static_cast<std::size_t>(deg)]), R(1) / deg);
    if (!(r0 > 0) || !real_traits<R>::finite(r0)) r0 = R(1);
    const R tp = two_pi<R>();
    for (int i = 0; i < deg; ++i)
      z[static_cast<std::size_t>(i)] =
          r0 * cis(R(tp * R(4 * i + 1) / R(4 * deg) + R(1) / 2));
  }
  Complex<R> v, dv;
  int sweep = 0;
  bool done = false;
  for (; sweep < max_sweeps && !done; ++sweep) {
    R max_step(0);
    for (int i = 0; i < deg; ++i) {
      Complex<R>& zi = z[static_cast<std::size_t>(i)];
      detail::horner_value_derivative(c, zi, v, dv);
      if (v.re == 0 && v.im == 0) continue;
      Complex<R> nm;
      if (dv.re == 0 && dv.im == 0)
        nm = Complex<R>(R(1) / 100);  // nudge off a critical point
      else
        nm = v / dv;
      Complex<R> sum;
      for (int j = 0; j < deg; ++j)
        if (j != i) {
          Complex<R> d = zi - z[static_cast<std::size_t>(j)];
          if (d.re == 0 && d.im == 0) d = Complex<R>(tol);
          sum += Complex<R>(R(1)) / d;
        }
      Complex<R> denom = Complex<R>(R(1)) - nm * sum;
      Complex<R> step = (denom.re == 0 && denom.im == 0) ? nm : nm / denom;
      zi -= step;
      max_step = max(max_step, abs(step) / max(R(1), abs(zi)));
    }
    done = max_step < tol;
  }
  // per-root Newton polish
  for (int i = 0; i < deg; ++i) {
    Complex<R>& zi = z[static_cast<std::size_t>(i)];
    for (int it = 0; it < 8; ++it) {
      detail::horner_value_derivative(c, zi, v, dv);
      if ((v.re == 0 && v.im == 0) || (dv.re == 0 && dv.im == 0)) break;
      Complex<R> step = v / dv;
      zi -= step;
      if (abs(step) < tol * max(R(1), abs(zi))) break;
    }
  }
  if (!done) {
    // Clustered roots stall the step criterion at their conditioning floor;
    // accept the polished set if the residuals clear the d/2-digit gate,
    // otherwise report the stall.
    R cmax(0);
    for (const auto& cc : c) cmax = max(cmax, abs(cc));
    R rmax(0);
    for (int i = 0; i < deg; ++i) {
      detail::horner_value_derivative(c, z[static_cast<std::size_t>(i)], v, dv);
      rmax = max(rmax, abs(v));
    }
    if (rmax > pow10<R>(-(digits / 2)) * cmax)
      throw NonConvergence("polynomial roots: Aberth iteration did not settle after " +
                           std::to_string(max_sweeps) + " sweeps (residual " + rmax.str(3) +
                           ")");
  }
  std::sort(z.begin(), z.end(), [](const Complex<R>& a, const Complex<R>& b) {
    R ma = abs(a), mb = abs(b);
    if (ma != mb) return ma < mb;
    return arg(a) < arg(b);
  });
  out.roots = std::move(z);
  out.sweeps = sweep;
  out.residuals.reserve(static_cast<std::size_t>(deg));
  for (const auto& r : out.roots) {
    detail::horner_value_derivative(c, r, v, dv);
    out.residuals.push_back(abs(v));
  }
  return out;
}

template <class R>
RootSet<R> denominator_roots(const PadeApproximant<R>& a, int max_sweeps = 500) {
  if (a.deg_q() < 1) throw Error("denominator_roots: q must be at least 1");
  return polynomial_roots(a.q, a.digits, max_sweeps);
}

template <class R>
struct Pole {
  Complex<R> location;
  R match_distance;
  std::pair<int, int> source_orders;
  R numerator_zero_distance;  // distance to the nearest numerator zero
};

template <class R>
struct PoleSet {
  std::vector<Pole<R>> poles;    // mutual matches that survived filtering
  std::vector<Pole<R>> flagged;  // suspected pole-zero doublets, kept for inspection
  R filter_tol;
};

/// Cross-order stable poles: denominator roots of two approximants of the
/// same series that are mutual nearest neighbors within filter_tol, reported
/// at the pair midpoint. Roots sitting on top of a numerator zero are
/// flagged as doublets rather than silently dropped.
template <class R>
PoleSet<R> stable_poles(const PadeApproximant<R>& a1, const PadeApproximant<R>& a2,
                        const R& filter_tol) {
  PrecisionGuard<R> guard(a1.digits);
  if (a1.digits != a2.digits) throw PrecisionMismatch("stable_poles: precision mismatch");
  PoleSet<R> out;
  out.filter_tol = filter_tol;
  if (a1.deg_q() < 1 || a2.deg_q() < 1) return out;
  RootSet<R> r1 = denominator_roots(a1);
  RootSet<R> r2 = denominator_roots(a2);
  std::vector<Complex<R>> zeros;
  for (const auto& a : {&a1, &a2}) {
    if (a->deg_p() < 1) continue;
    RootSet<R> z = polynomial_roots(a->p, a->digits);
    zeros.insert(zeros.end(), z.roots.begin(), z.roots.end());
  }
  auto nearest = [](const std::vector<Complex<R>>& v, const Complex<R>& z) {
    std::size_t best = 0;
    R bd = abs(v[0] - z);
    for (std::size_t j = 1; j < v.size(); ++j) {
      R d = abs(v[j] - z);
      if (d < bd) {
        bd = d;
        best = j;
      }
    }
    return std::make_pair(best, bd);
  };
  const R half = R(1) / 2;
  for (std::size_t i = 0; i < r1.roots.size(); ++i) {
    auto [j, dij] = nearest(r2.roots, r1.roots[i]);
    if (dij > filter_tol) continue;
    auto [iback, dji] = nearest(r1.roots, r2.roots[j]);
    if (iback != i) continue;  // not a mutual pair
    Pole<R> pole;
    pole.location = (r1.roots[i] + r2.roots[j]) * half;
    pole.match_distance = dij;
    pole.source_orders = {a1.deg_q(), a2.deg_q()};
    pole.numerator_zero_distance = zeros.empty() ? R(0) : nearest(zeros, pole.location).second;
    using std::max;
    // Doublet test: a nearby numerator zero alone is not disqualifying --
    // genuine weak poles carry one because their residue is tiny. Only pairs
    // that are also loosely locked across the two orders are noise.
    R lock_floor = filter_tol * filter_tol * max(R(1), abs(pole.location));
    bool zero_on_top = !zeros.empty() && pole.numerator_zero_distance < 10 * pole.match_distance;
    if (zero_on_top && pole.match_distance > lock_floor)
      out.flagged.push_back(std::move(pole));
    else
      out.poles.push_back(std::move(pole));
  }
  auto by_modulus = [](const Pole<R>& a, const Pole<R>& b) {
    R ma = abs(a.location), mb = abs(b.location);
    if (ma != mb) return ma < mb;
    return arg(a.location) < arg(b.location);
  };
  std::sort(out.poles.begin(), out.poles.end(), by_modulus);
  std::sort(out.flagged.begin(), out.flagged.end(), by_modulus);
  return out;
}

/// Images 1 - eps^exponent of the pole locations (the conformal-factor plane).
template <class R>
std::vector<Complex<R>> map_conformal(const PoleSet<R>& poles, int exponent) {
  std::vector<Complex<R>> out;
  out.reserve(poles.poles.size());
  for (const auto& p : poles.poles)
    out.push_back(Complex<R>(R(1)) - pow_int(p.location, static_cast<unsigned>(exponent)));
  return out;
}

namespace detail {

template <class R>
std::string csv_number(const R& v) {
  return v.str(30);
}

inline std::string csv_number(const double& v) { return real_traits<double>::to_string(v); }

}  // namespace detail

/// One row per stable pole, 30 significant digits.
template <class R>
void write_poles_csv(std::ostream& os, const PoleSet<R>& poles, int exponent) {
  os << "re,im,modulus,match_distance,b_re,b_im,abs_b_minus_1\n";
  for (const auto& p : poles.poles) {
    Complex<R> b = Complex<R>(R(1)) - pow_int(p.location, static_cast<unsigned>(exponent));
    R babs_m1 = abs(b) - 1;
    if (babs_m1 < 0) babs_m1 = -babs_m1;
    os << detail::csv_number(p.location.re) << "," << detail::csv_number(p.location.im) << ","
       << detail::csv_number(abs(p.location)) << "," << detail::csv_number(p.match_distance)
       << "," << detail::csv_number(b.re) << "," << detail::csv_number(b.im) << ","
       << detail::csv_number(babs_m1) << "\n";
  }
}

}  // namespace dsmap
