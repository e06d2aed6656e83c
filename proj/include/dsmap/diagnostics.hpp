#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "dsmap/lindstedt.hpp"
#include "dsmap/periodic_function.hpp"

namespace dsmap {

/// Which norm family a coefficient sequence is measured in.
struct NormKind {
  enum Family { analytic, sobolev } family = analytic;
  double param = 0;  // rho for analytic, r for sobolev
  NormVariant variant = NormVariant::as_printed;

  static NormKind analytic_norm(double rho, NormVariant v = NormVariant::as_printed) {
    return {analytic, rho, v};
  }
  static NormKind sobolev_norm(double r) { return {sobolev, r, NormVariant::as_printed}; }

  std::string label() const {
    std::string base = family == analytic ? "analytic(rho=" : "sobolev(r=";
    base += std::to_string(param) + ")";
    if (family == analytic) {
      switch (variant) {
        case NormVariant::as_printed: break;
        case NormVariant::l2_root: base += "[l2_root]"; break;
        case NormVariant::ell1: base += "[ell1]"; break;
        case NormVariant::sup: base += "[sup]"; break;
      }
    }
    return base;
  }
};

/// Sequence of (k, (1/k) log ||u_k||) samples; orders with vanishing
/// coefficient are excluded and recorded.
struct NormSequence {
  NormKind kind;
  std::vector<int> k;
  std::vector<double> value;
  std::vector<int> excluded;
  int k_min = 0, k_max = 0;
};

/// Growth-rate samples of the series coefficients. Norms are accumulated at
/// the working precision (the coefficients overrun double range long before
/// the end of a production series); only the logarithm is downcast.
template <class R>
NormSequence norm_sequence(const LindstedtSeries<R>& series, const NormKind& kind, int k_min,
                           int k_max) {
  if (k_min < 1 || k_max > series.order || k_min > k_max)
    throw Error("norm_sequence: order window out of range");
  PrecisionGuard<R> guard(series.digits);
  NormSequence out;
  out.kind = kind;
  out.k_min = k_min;
  out.k_max = k_max;
  using std::log;
  for (int k = k_min; k <= k_max; ++k) {
    const PeriodicFunction<R>& uk = series.u[static_cast<std::size_t>(k)];
    R nv = kind.family == NormKind::analytic ? norm_rho(uk, R(kind.param), kind.variant)
                                             : norm_sobolev(uk, R(kind.param));
    if (nv == 0) {
      out.excluded.push_back(k);
      continue;
    }
    R val = log(nv) / R(k);
    out.k.push_back(k);
    out.value.push_back(static_cast<double>(val));
  }
  return out;
}

/// Fit of value(k) = log(a) + c log(k + b) over a window of orders.
struct GevreyFit {
  double a = 0, b = 0, c = 0;
  double residual = 0;  // RMS of the fit residuals
  int k_min = 0, k_max = 0;
  int iterations = 0;
  bool converged = false;
};

namespace detail {

/// Damped Gauss-Newton on parameters (log a, b, c); deterministic
/// initialization from the top half of the window.
inline GevreyFit fit_gevrey_impl(const std::vector<double>& ks, const std::vector<double>& ys,
                                 int k_min, int k_max) {
  const std::size_t n = ks.size();
  if (n < 10) throw Error("fit_gevrey: need at least 10 points in the window");

  // initial slope of value vs log k over the top half
  std::size_t half = n / 2;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = half; i < n; ++i) {
    double x = std::log(ks[i]);
    sx += x;
    sy += ys[i];
    sxx += x * x;
    sxy += x * ys[i];
  }
  double m = static_cast<double>(n - half);
  double c0 = (m * sxy - sx * sy) / std::max(m * sxx - sx * sx, 1e-300);
  double loga = ys[n - 1] - c0 * std::log(ks[n - 1]);
  double b = 0, c = c0;

  double lambda = 1e-3;
  double prev_ssr = std::numeric_limits<double>::infinity();
  GevreyFit fit;
  fit.k_min = k_min;
  fit.k_max = k_max;
  int iter = 0;
  for (; iter < 200; ++iter) {
    // normal equations of the linearized model
    double jtj[3][3] = {};
    double jtr[3] = {};
    double ssr = 0;
    for (std::size_t i = 0; i < n; ++i) {
      double kb = ks[i] + b;
      if (kb < 1e-9) kb = 1e-9;
      double lg = std::log(kb);
      double r = loga + c * lg - ys[i];
      double j0 = 1, j1 = c / kb, j2 = lg;
      double jv[3] = {j0, j1, j2};
      for (int p = 0; p < 3; ++p) {
        jtr[p] += jv[p] * r;
        for (int q = 0; q < 3; ++q) jtj[p][q] += jv[p] * jv[q];
      }
      ssr += r * r;
    }
    double gnorm = std::sqrt(jtr[0] * jtr[0] + jtr[1] * jtr[1] + jtr[2] * jtr[2]);
    if (gnorm < 1e-12) {
      fit.converged = true;
      prev_ssr = ssr;
      break;
    }
    // Levenberg damping, retried until the step reduces the residual
    bool stepped = false;
    for (int attempt = 0; attempt < 30; ++attempt) {
      double a3[3][3];
      for (int p = 0; p < 3; ++p)
        for (int q = 0; q < 3; ++q) a3[p][q] = jtj[p][q] + (p == q ? lambda * jtj[p][p] : 0);
      double rhs[3] = {-jtr[0], -jtr[1], -jtr[2]};
      // 3x3 Gaussian elimination
      int piv[3] = {0, 1, 2};
      for (int col = 0; col < 3; ++col) {
        int best = col;
        for (int row = col + 1; row < 3; ++row)
          if (std::fabs(a3[piv[row]][col]) > std::fabs(a3[piv[best]][col])) best = row;
        std::swap(piv[col], piv[best]);
        double d = a3[piv[col]][col];
        if (std::fabs(d) < 1e-300) break;
        for (int row = col + 1; row < 3; ++row) {
          double f = a3[piv[row]][col] / d;
          for (int cc = col; cc < 3; ++cc) a3[piv[row]][cc] -= f * a3[piv[col]][cc];
          rhs[piv[row]] -= f * rhs[piv[col]];
        }
      }
      double dx[3];
      for (int col = 2; col >= 0; --col) {
        double acc = rhs[piv[col]];
        for (int cc = col + 1; cc < 3; ++cc) acc -= a3[piv[col]][cc] * dx[cc];
        dx[col] = acc / a3[piv[col]][col];
      }
      double nloga = loga + dx[0], nb = b + dx[1], nc = c + dx[2];
      if (nb <= -(ks[0] - 1e-6)) nb = -(ks[0] - 1e-6);  // keep k+b positive on the window
      double nssr = 0;
      for (std::size_t i = 0; i < n; ++i) {
        double r = nloga + nc * std::log(std::max(ks[i] + nb, 1e-9)) - ys[i];
        nssr += r * r;
      }
      if (nssr < ssr) {
        loga = nloga;
        b = nb;
        c = nc;
        lambda = std::max(lambda / 3, 1e-12);
        prev_ssr = nssr;
        stepped = true;
        break;
      }
      lambda *= 10;
    }
    if (!stepped) {
      prev_ssr = ssr;
      break;
    }
  }
  fit.a = std::exp(loga);
  fit.b = b;
  fit.c = c;
  fit.iterations = iter;
  if (!fit.converged) fit.converged = iter < 200;
  fit.residual = std::sqrt(prev_ssr / static_cast<double>(n));
  return fit;
}

}  // namespace detail

/// Nonlinear least squares of the sequence over [k_min, k_max]; runs in
/// double precision on the logged values.
inline GevreyFit fit_gevrey(const NormSequence& seq, int k_min, int k_max) {
  std::vector<double> ks, ys;
  for (std::size_t i = 0; i < seq.k.size(); ++i)
    if (seq.k[i] >= k_min && seq.k[i] <= k_max && std::isfinite(seq.value[i])) {
      ks.push_back(static_cast<double>(seq.k[i]));
      ys.push_back(seq.value[i]);
    }
  return detail::fit_gevrey_impl(ks, ys, k_min, k_max);
}

inline GevreyFit fit_gevrey(const NormSequence& seq) {
  if (seq.k.empty()) throw Error("fit_gevrey: empty sequence");
  return fit_gevrey(seq, seq.k.front(), seq.k.back());
}

/// One entry of the growth-class report: the fitted exponent sigma ~ c and
/// scale R ~ a per norm family.
struct GevreyReportEntry {
  NormKind kind;
  GevreyFit fit;
  double sigma() const { return fit.c; }
  double scale() const { return fit.a; }
};

template <class R>
GevreyReportEntry gevrey_report_entry(const LindstedtSeries<R>& series, const NormKind& kind,
                                      int k_min, int k_max) {
  NormSequence seq = norm_sequence(series, kind, k_min, k_max);
  GevreyReportEntry e;
  e.kind = kind;
  e.fit = fit_gevrey(seq, k_min, k_max);
  return e;
}

}  // namespace dsmap
