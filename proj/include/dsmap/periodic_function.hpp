#pragma once

#include <algorithm>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "dsmap/complex.hpp"
#include "dsmap/fft.hpp"
#include "dsmap/scalar.hpp"

namespace dsmap {

/// Finite Fourier representation of a 1-periodic function,
///   f(theta) = sum_{|l| <= M} fhat_l e^{2 pi i l theta},
/// with general complex coefficients (no Hermitian-symmetry constraint) at a
/// recorded working precision. Values are immutable in spirit: operations
/// return new functions.
template <class R>
class PeriodicFunction {
 public:
  PeriodicFunction() : trunc_(0), digits_(real_traits<R>::working_digits()), modes_(1) {}

  PeriodicFunction(int trunc, int digits)
      : trunc_(trunc), digits_(digits), modes_(2 * static_cast<std::size_t>(trunc) + 1) {
    if (trunc < 0) throw Error("periodic function: negative truncation order");
  }

  static PeriodicFunction zero(int trunc, int digits) { return PeriodicFunction(trunc, digits); }

  int trunc() const { return trunc_; }
  int digits() const { return digits_; }

  const Complex<R>& mode(int l) const {
    if (l < -trunc_ || l > trunc_) return zero_mode();
    return modes_[static_cast<std::size_t>(l + trunc_)];
  }

  void set_mode(int l, Complex<R> v) {
    if (l < -trunc_ || l > trunc_) throw Error("periodic function: mode outside truncation");
    modes_[static_cast<std::size_t>(l + trunc_)] = std::move(v);
  }

  /// Copy with truncation order changed; dropped modes are discarded,
  /// new modes are zero.
  PeriodicFunction resized(int new_trunc) const {
    PeriodicFunction out(new_trunc, digits_);
    int m = std::min(trunc_, new_trunc);
    for (int l = -m; l <= m; ++l) out.set_mode(l, mode(l));
    return out;
  }

  /// Smallest truncation that keeps every nonzero coefficient.
  PeriodicFunction trimmed() const {
    int m = 0;
    for (int l = -trunc_; l <= trunc_; ++l)
      if (!(mode(l).re == 0 && mode(l).im == 0)) m = std::max(m, std::abs(l));
    return resized(m);
  }

  friend PeriodicFunction operator+(const PeriodicFunction& f, const PeriodicFunction& g) {
    check_same_precision(f, g);
    PeriodicFunction out(std::max(f.trunc_, g.trunc_), f.digits_);
    for (int l = -out.trunc_; l <= out.trunc_; ++l) out.set_mode(l, f.mode(l) + g.mode(l));
    return out;
  }
  friend PeriodicFunction operator-(const PeriodicFunction& f, const PeriodicFunction& g) {
    check_same_precision(f, g);
    PeriodicFunction out(std::max(f.trunc_, g.trunc_), f.digits_);
    for (int l = -out.trunc_; l <= out.trunc_; ++l) out.set_mode(l, f.mode(l) - g.mode(l));
    return out;
  }
  friend PeriodicFunction operator*(const PeriodicFunction& f, const Complex<R>& s) {
    PeriodicFunction out = f;
    for (auto& m : out.modes_) m *= s;
    return out;
  }

  static void check_same_precision(const PeriodicFunction& f, const PeriodicFunction& g) {
    if (f.digits_ != g.digits_)
      throw PrecisionMismatch("periodic functions carry different precisions: " +
                              std::to_string(f.digits_) + " vs " + std::to_string(g.digits_));
  }

 private:
  static const Complex<R>& zero_mode() {
    static const Complex<R> z{};
    return z;
  }

  int trunc_;
  int digits_;
  std::vector<Complex<R>> modes_;
};

/// g(theta) = f(theta + a), i.e. ghat_l = fhat_l e^{2 pi i l a}. Exact on the
/// retained modes; a may be complex (analytic translation).
template <class R>
PeriodicFunction<R> shift(const PeriodicFunction<R>& f, const Complex<R>& a) {
  PrecisionGuard<R> guard(f.digits());
  PeriodicFunction<R> out(f.trunc(), f.digits());
  const Complex<R> w = cis(Complex<R>(two_pi<R>() * a.re, two_pi<R>() * a.im));
  const Complex<R> winv = cis(Complex<R>(-two_pi<R>() * a.re, -two_pi<R>() * a.im));
  Complex<R> wp(R(1)), wm(R(1));
  out.set_mode(0, f.mode(0));
  for (int l = 1; l <= f.trunc(); ++l) {
    wp *= w;
    wm *= winv;
    out.set_mode(l, f.mode(l) * wp);
    out.set_mode(-l, f.mode(-l) * wm);
  }
  return out;
}

template <class R>
PeriodicFunction<R> shift(const PeriodicFunction<R>& f, const R& a) {
  return shift(f, Complex<R>(a));
}

/// ghat_l = 2 pi i l fhat_l
template <class R>
PeriodicFunction<R> derivative(const PeriodicFunction<R>& f) {
  PrecisionGuard<R> guard(f.digits());
  PeriodicFunction<R> out(f.trunc(), f.digits());
  const R tp = two_pi<R>();
  for (int l = -f.trunc(); l <= f.trunc(); ++l) {
    R w = tp * R(l);
    const Complex<R>& m = f.mode(l);
    out.set_mode(l, Complex<R>(-w * m.im, w * m.re));
  }
  return out;
}

template <class R>
Complex<R> mean(const PeriodicFunction<R>& f) {
  return f.mode(0);
}

/// Fourier coefficients of the pointwise product, truncated to m_cap
/// (default: the exact bandwidth of the product).
template <class R>
PeriodicFunction<R> multiply(const PeriodicFunction<R>& f, const PeriodicFunction<R>& g,
                             int m_cap = -1) {
  PeriodicFunction<R>::check_same_precision(f, g);
  PrecisionGuard<R> guard(f.digits());
  int mexact = f.trunc() + g.trunc();
  int mout = (m_cap < 0) ? mexact : std::min(m_cap, mexact);
  PeriodicFunction<R> out(mout, f.digits());
  for (int l = -mout; l <= mout; ++l) {
    Complex<R> acc;
    R t1, t2;
    int mlo = std::max(-f.trunc(), l - g.trunc());
    int mhi = std::min(f.trunc(), l + g.trunc());
    for (int m = mlo; m <= mhi; ++m) {
      const Complex<R>& a = f.mode(m);
      const Complex<R>& b = g.mode(l - m);
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
    out.set_mode(l, acc);
    if (!finite(acc)) throw OverflowError("product coefficient overflow");
  }
  return out;
}

/// Value of the series at theta (complex theta evaluates on a strip).
template <class R>
Complex<R> eval(const PeriodicFunction<R>& f, const Complex<R>& theta) {
  PrecisionGuard<R> guard(f.digits());
  const R tp = two_pi<R>();
  const Complex<R> z = cis(Complex<R>(tp * theta.re, tp * theta.im));
  const Complex<R> zi = cis(Complex<R>(-tp * theta.re, -tp * theta.im));
  Complex<R> pos;  // sum_{l>=1} fhat_l z^l by Horner
  Complex<R> neg;
  for (int l = f.trunc(); l >= 1; --l) {
    pos += f.mode(l);
    pos *= z;
    neg += f.mode(-l);
    neg *= zi;
  }
  Complex<R> v = pos + neg + f.mode(0);
  if (!finite(v)) throw OverflowError("series evaluation overflow");
  return v;
}

template <class R>
Complex<R> eval(const PeriodicFunction<R>& f, const R& theta) {
  return eval(f, Complex<R>(theta));
}

enum class NormVariant {
  as_printed,  // sum |fhat_l|^2 e^{2 pi |l| rho}
  l2_root,     // square root of as_printed
  ell1,        // sum |fhat_l| e^{2 pi |l| rho}
  sup          // max |fhat_l| e^{2 pi |l| rho}
};

/// Weighted-coefficient norm on the strip of half-width rho.
template <class R>
R norm_rho(const PeriodicFunction<R>& f, const R& rho,
           NormVariant variant = NormVariant::as_printed) {
  PrecisionGuard<R> guard(f.digits());
  using std::exp;
  using std::max;
  using std::sqrt;
  const R w1 = exp(two_pi<R>() * rho);
  R w(1), acc(0);
  for (int l = 0; l <= f.trunc(); ++l) {
    if (l > 0) w *= w1;
    R pair;
    switch (variant) {
      case NormVariant::as_printed:
      case NormVariant::l2_root:
        pair = norm2(f.mode(l));
        if (l > 0) pair += norm2(f.mode(-l));
        break;
      case NormVariant::ell1:
        pair = abs(f.mode(l));
        if (l > 0) pair += abs(f.mode(-l));
        break;
      case NormVariant::sup:
        pair = max(abs(f.mode(l)), l > 0 ? abs(f.mode(-l)) : R(0));
        break;
    }
    if (variant == NormVariant::sup)
      acc = max(acc, pair * w);
    else
      acc += pair * w;
  }
  if (variant == NormVariant::l2_root) acc = sqrt(acc);
  if (!real_traits<R>::finite(acc)) throw OverflowError("strip norm overflow");
  return acc;
}

/// ( sum (2 pi l)^{2r} |fhat_l|^2 )^{1/2}; r = 0 is the L2 norm.
template <class R>
R norm_sobolev(const PeriodicFunction<R>& f, const R& r) {
  PrecisionGuard<R> guard(f.digits());
  using std::pow;
  using std::sqrt;
  R acc(0);
  if (r == 0) acc = norm2(f.mode(0));
  for (int l = 1; l <= f.trunc(); ++l) {
    R w = (r == 0) ? R(1) : pow(two_pi<R>() * R(l), 2 * r);
    acc += w * (norm2(f.mode(l)) + norm2(f.mode(-l)));
  }
  return sqrt(acc);
}

/// Samples f on the n-point uniform grid theta_j = j/n. Requires n > 2M.
template <class R>
std::vector<Complex<R>> synthesize(const PeriodicFunction<R>& f, const FftPlan<R>& plan) {
  const std::size_t n = plan.size();
  if (n < 2 * static_cast<std::size_t>(f.trunc()) + 1)
    throw Error("synthesize: grid too small for truncation order");
  std::vector<Complex<R>> buf(n);
  for (int l = 0; l <= f.trunc(); ++l) buf[static_cast<std::size_t>(l)] = f.mode(l);
  for (int l = 1; l <= f.trunc(); ++l) buf[n - static_cast<std::size_t>(l)] = f.mode(-l);
  // synthesis kernel e^{+2 pi i l j / n} = inverse transform without the 1/n
  plan.forward(buf);
  std::reverse(buf.begin() + 1, buf.end());
  return buf;
}

/// Trigonometric interpolation coefficients of grid samples, retaining
/// modes |l| <= m_keep.
template <class R>
PeriodicFunction<R> analyze(std::vector<Complex<R>> values, int m_keep, int digits,
                            const FftPlan<R>& plan) {
  const std::size_t n = plan.size();
  if (values.size() != n) throw Error("analyze: buffer size does not match plan");
  if (n < 2 * static_cast<std::size_t>(m_keep) + 1)
    throw Error("analyze: grid too small for requested modes");
  PrecisionGuard<R> guard(digits);
  plan.forward(values);  // fhat_l = (1/n) sum_j f_j e^{-2 pi i l j / n}
  const R inv_n = R(1) / R(static_cast<long>(n));
  PeriodicFunction<R> out(m_keep, digits);
  for (int l = -m_keep; l <= m_keep; ++l) {
    std::size_t bin = l >= 0 ? static_cast<std::size_t>(l) : n - static_cast<std::size_t>(-l);
    out.set_mode(l, values[bin] * inv_n);
  }
  return out;
}

/// Versioned text format: full-precision decimal strings, one mode per line.
template <class R>
void write_text(std::ostream& os, const PeriodicFunction<R>& f) {
  os << "#pf v1\n";
  os << "M=" << f.trunc() << "\n";
  os << "digits=" << f.digits() << "\n";
  for (int l = -f.trunc(); l <= f.trunc(); ++l)
    os << l << " " << real_traits<R>::to_string(f.mode(l).re) << " "
       << real_traits<R>::to_string(f.mode(l).im) << "\n";
}

template <class R>
PeriodicFunction<R> read_text(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "#pf v1")
    throw FormatError("periodic function: bad or missing '#pf v1' header");
  if (!std::getline(is, line) || line.rfind("M=", 0) != 0)
    throw FormatError("periodic function: missing M= line");
  int m = std::stoi(line.substr(2));
  if (!std::getline(is, line) || line.rfind("digits=", 0) != 0)
    throw FormatError("periodic function: missing digits= line");
  int digits = std::stoi(line.substr(7));
  PrecisionGuard<R> guard(digits);
  PeriodicFunction<R> out(m, digits);
  for (int i = 0; i < 2 * m + 1; ++i) {
    if (!std::getline(is, line)) throw FormatError("periodic function: truncated mode list");
    std::istringstream ls(line);
    int l;
    std::string sre, sim;
    if (!(ls >> l >> sre >> sim)) throw FormatError("periodic function: bad mode line");
    out.set_mode(l, Complex<R>(real_traits<R>::from_string(sre), real_traits<R>::from_string(sim)));
  }
  return out;
}

}  // namespace dsmap
