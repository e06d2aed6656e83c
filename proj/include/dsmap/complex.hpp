#pragma once

#include <string>
#include <utility>

#include "dsmap/scalar.hpp"

namespace dsmap {

/// Complex number over an arbitrary real scalar. std::complex is only
/// specified for the built-in floating types, so the multiprecision code
/// carries its own.
template <class R>
struct Complex {
  R re{};
  R im{};

  Complex() = default;
  Complex(R r) : re(std::move(r)) {}  // NOLINT: implicit real widening is intended
  Complex(R r, R i) : re(std::move(r)), im(std::move(i)) {}

  Complex& operator+=(const Complex& o) {
    re += o.re;
    im += o.im;
    return *this;
  }
  Complex& operator-=(const Complex& o) {
    re -= o.re;
    im -= o.im;
    return *this;
  }
  Complex& operator*=(const Complex& o) {
    R ac = re;
    ac *= o.re;
    R bd = im;
    bd *= o.im;
    R ad = re;
    ad *= o.im;
    im *= o.re;
    im += ad;
    re = ac;
    re -= bd;
    return *this;
  }
  Complex& operator*=(const R& s) {
    re *= s;
    im *= s;
    return *this;
  }
  Complex& operator/=(const Complex& o) {
    R d = o.re * o.re + o.im * o.im;
    R nre = re * o.re + im * o.im;
    R nim = im * o.re - re * o.im;
    re = nre / d;
    im = nim / d;
    return *this;
  }
  Complex& operator/=(const R& s) {
    re /= s;
    im /= s;
    return *this;
  }

  friend Complex operator+(Complex a, const Complex& b) { return a += b; }
  friend Complex operator-(Complex a, const Complex& b) { return a -= b; }
  friend Complex operator*(Complex a, const Complex& b) { return a *= b; }
  friend Complex operator*(Complex a, const R& s) { return a *= s; }
  friend Complex operator*(const R& s, Complex a) { return a *= s; }
  friend Complex operator/(Complex a, const Complex& b) { return a /= b; }
  friend Complex operator/(Complex a, const R& s) { return a /= s; }
  friend Complex operator-(const Complex& a) { return Complex(-a.re, -a.im); }
  friend bool operator==(const Complex& a, const Complex& b) {
    return a.re == b.re && a.im == b.im;
  }
};

template <class R>
Complex<R> conj(const Complex<R>& z) {
  return {z.re, -z.im};
}

/// |z|^2
template <class R>
R norm2(const Complex<R>& z) {
  return z.re * z.re + z.im * z.im;
}

template <class R>
R abs(const Complex<R>& z) {
  using std::hypot;
  return hypot(z.re, z.im);
}

template <class R>
R arg(const Complex<R>& z) {
  using std::atan2;
  return atan2(z.im, z.re);
}

/// cos(t) + i sin(t)
template <class R>
Complex<R> cis(const R& t) {
  using std::cos;
  using std::sin;
  return {cos(t), sin(t)};
}

/// exp(i t) for complex t = x + iy: e^{-y} (cos x + i sin x)
template <class R>
Complex<R> cis(const Complex<R>& t) {
  using std::exp;
  R scale = exp(-t.im);
  Complex<R> w = cis(t.re);
  w.re *= scale;
  w.im *= scale;
  return w;
}

template <class R>
Complex<R> sin(const Complex<R>& z) {
  using std::cos;
  using std::cosh;
  using std::sin;
  using std::sinh;
  return {sin(z.re) * cosh(z.im), cos(z.re) * sinh(z.im)};
}

template <class R>
Complex<R> cos(const Complex<R>& z) {
  using std::cos;
  using std::cosh;
  using std::sin;
  using std::sinh;
  return {cos(z.re) * cosh(z.im), -sin(z.re) * sinh(z.im)};
}

template <class R>
Complex<R> sqrt(const Complex<R>& z) {
  using std::sqrt;
  R r = abs(z);
  if (r == 0) return {};
  R t = sqrt((r + (z.re >= 0 ? z.re : -z.re)) / 2);
  R u = abs(z.im) / (2 * t);
  if (z.re >= 0) return {t, z.im >= 0 ? u : -u};
  return {u, z.im >= 0 ? t : -t};
}

template <class R>
bool finite(const Complex<R>& z) {
  return real_traits<R>::finite(z.re) && real_traits<R>::finite(z.im);
}

template <class R>
Complex<R> pow_int(Complex<R> base, unsigned e) {
  Complex<R> out(R(1));
  while (e) {
    if (e & 1u) out *= base;
    base *= base;
    e >>= 1u;
  }
  return out;
}

template <class R>
std::string to_string(const Complex<R>& z) {
  return real_traits<R>::to_string(z.re) + " " + real_traits<R>::to_string(z.im);
}

}  // namespace dsmap
