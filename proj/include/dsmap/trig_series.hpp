#pragma once

#include <cstddef>
#include <vector>

#include "dsmap/fft.hpp"
#include "dsmap/periodic_function.hpp"
#include "dsmap/scalar.hpp"

namespace dsmap {

namespace detail {

template <class R>
inline void grid_fma(R& acc, const R& a, const R& b, R& t1, R&) {
  t1 = a;
  t1 *= b;
  acc += t1;
}

template <class R>
inline void grid_fma(Complex<R>& acc, const Complex<R>& a, const Complex<R>& b, R& t1, R& t2) {
  t1 = a.re;
  t1 *= b.re;
  acc.re += t1;
  t2 = a.im;
  t2 *= b.im;
  acc.re -= t2;
  t1 = a.re;
  t1 *= b.im;
  acc.im += t1;
  t2 = a.im;
  t2 *= b.re;
  acc.im += t2;
}

template <class R>
inline void grid_scale(R& v, const R& s) {
  v *= s;
}

template <class R>
inline void grid_scale(Complex<R>& v, const R& s) {
  v.re *= s;
  v.im *= s;
}

template <class R>
inline R grid_cast(const R& x, const R*) {
  return x;
}

template <class R>
inline Complex<R> grid_cast(const R& x, const Complex<R>*) {
  return Complex<R>(x);
}

}  // namespace detail

/// Order-by-order coefficients of sin(2 pi h (theta + u)) and
/// cos(2 pi h (theta + u)) on a uniform grid, where u = sum_k u_k eps^k with
/// u_0 = 0. Differentiating in eps gives the recurrences
///   (N+1) S_{N+1} = 2 pi h sum_{m=0..N} C_{N-m} (m+1) u_{m+1},
///   (N+1) C_{N+1} = -2 pi h sum_{m=0..N} S_{N-m} (m+1) u_{m+1},
/// seeded by S_0 = sin(2 pi h theta), C_0 = cos(2 pi h theta). The caller
/// supplies grids of pu_m = m u_m. Grid values are exact samples as long as
/// the grid resolves the bandwidth of every retained order.
template <class R, class V>
class TrigRecurrence {
 public:
  TrigRecurrence(int harmonic, std::size_t n, int digits) : digits_(digits) {
    PrecisionGuard<R> guard(digits);
    const R tp = two_pi<R>();
    tp_h_ = tp * R(harmonic);
    std::vector<V> s0(n), c0(n);
    using std::cos;
    using std::sin;
    for (std::size_t j = 0; j < n; ++j) {
      R a = tp_h_ * R(static_cast<long>(j)) / R(static_cast<long>(n));
      s0[j] = detail::grid_cast(sin(a), static_cast<const V*>(nullptr));
      c0[j] = detail::grid_cast(cos(a), static_cast<const V*>(nullptr));
    }
    s_.push_back(std::move(s0));
    c_.push_back(std::move(c0));
  }

  int built() const { return static_cast<int>(s_.size()) - 1; }
  const std::vector<V>& s(int k) const { return s_[static_cast<std::size_t>(k)]; }
  const std::vector<V>& c(int k) const { return c_[static_cast<std::size_t>(k)]; }

  /// Appends order built()+1. pu[m] must hold the grid of m*u_m for
  /// 1 <= m <= built()+1.
  void extend(const std::vector<std::vector<V>>& pu) {
    PrecisionGuard<R> guard(digits_);
    const int next = built() + 1;
    if (static_cast<int>(pu.size()) <= next) throw Error("trig recurrence: missing u grids");
    const std::size_t n = s_[0].size();
    std::vector<V> sn(n), cn(n);
    R t1, t2;
    for (int m = 0; m < next; ++m) {
      const std::vector<V>& cm = c_[static_cast<std::size_t>(next - 1 - m)];
      const std::vector<V>& sm = s_[static_cast<std::size_t>(next - 1 - m)];
      const std::vector<V>& pm = pu[static_cast<std::size_t>(m + 1)];
      for (std::size_t j = 0; j < n; ++j) {
        detail::grid_fma(sn[j], cm[j], pm[j], t1, t2);
        detail::grid_fma(cn[j], sm[j], pm[j], t1, t2);
      }
    }
    R scale = tp_h_ / R(next);
    R nscale = -scale;
    for (std::size_t j = 0; j < n; ++j) {
      detail::grid_scale(sn[j], scale);
      detail::grid_scale(cn[j], nscale);
    }
    s_.push_back(std::move(sn));
    c_.push_back(std::move(cn));
  }

 private:
  int digits_;
  R tp_h_;
  std::vector<std::vector<V>> s_;
  std::vector<std::vector<V>> c_;
};

template <class R>
struct TrigOrders {
  std::vector<PeriodicFunction<R>> s;
  std::vector<PeriodicFunction<R>> c;
};

/// Coefficient functions of sin(2 pi h (theta + u_eps)) and cos(...) through
/// order N for u_eps = sum u_k eps^k given as Fourier data. Requires u[0] = 0.
template <class R>
TrigOrders<R> trig_orders(const std::vector<PeriodicFunction<R>>& u, int N, int harmonic = 1,
                          int m_cap = -1) {
  if (u.empty()) throw Error("trig_orders: need at least u_0");
  const int digits = u[0].digits();
  PrecisionGuard<R> guard(digits);
  if (u[0].trimmed().trunc() != 0 || !(mean(u[0]) == Complex<R>{}))
    throw Error("trig_orders: u_0 must vanish identically");
  if (static_cast<int>(u.size()) <= N) throw Error("trig_orders: need u_1..u_N");

  int max_band = 0;
  for (int k = 1; k <= N; ++k) max_band = std::max(max_band, u[static_cast<std::size_t>(k)].trunc());
  const int band_top = harmonic + N * max_band;  // bandwidth bound at order N
  const std::size_t n = next_pow2(2 * static_cast<std::size_t>(band_top) + 2);
  FftPlan<R> plan(n, digits);

  std::vector<std::vector<Complex<R>>> pu(static_cast<std::size_t>(N) + 1);
  for (int m = 1; m <= N; ++m) {
    pu[static_cast<std::size_t>(m)] = synthesize(u[static_cast<std::size_t>(m)], plan);
    for (auto& v : pu[static_cast<std::size_t>(m)]) v *= R(m);
  }

  TrigRecurrence<R, Complex<R>> rec(harmonic, n, digits);
  for (int k = 1; k <= N; ++k) rec.extend(pu);

  TrigOrders<R> out;
  for (int k = 0; k <= N; ++k) {
    int band = std::min<int>(harmonic + k * max_band, static_cast<int>(n) / 2 - 1);
    if (m_cap >= 0) band = std::min(band, m_cap);
    out.s.push_back(analyze(rec.s(k), band, digits, plan).trimmed());
    out.c.push_back(analyze(rec.c(k), band, digits, plan).trimmed());
    for (int l = -out.s.back().trunc(); l <= out.s.back().trunc(); ++l)
      if (!finite(out.s.back().mode(l))) throw OverflowError("trig_orders overflow");
  }
  return out;
}

}  // namespace dsmap
