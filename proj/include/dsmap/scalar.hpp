#pragma once

#include <boost/multiprecision/mpfr.hpp>
#include <mpfr.h>

#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace dsmap {

namespace mp = boost::multiprecision;

/// Arbitrary-precision real scalar. The working precision (decimal digits)
/// is a per-thread setting; values inherit the precision of the operands
/// they are computed from, so a computation seeded at d digits stays at
/// d digits throughout.
using mpreal = mp::number<mp::mpfr_float_backend<0>, mp::et_off>;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct OverflowError : Error {
  using Error::Error;
};
struct PrecisionMismatch : Error {
  using Error::Error;
};
struct FormatError : Error {
  using Error::Error;
};
struct NonConvergence : Error {
  using Error::Error;
};

template <class R>
struct real_traits;

template <>
struct real_traits<double> {
  static constexpr bool variable_precision = false;
  static int working_digits() { return 15; }
  static void set_working_digits(int) {}
  static double to_digits(double x, int) { return x; }
  static double pi() { return 3.14159265358979323846264338327950288; }
  static bool finite(double x) { return std::isfinite(x); }
  static double from_string(const std::string& s) {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos == 0) throw FormatError("bad decimal literal: " + s);
    return v;
  }
  static std::string to_string(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
  }
};

template <>
struct real_traits<mpreal> {
  static constexpr bool variable_precision = true;
  static int working_digits() { return static_cast<int>(mpreal::default_precision()); }
  static void set_working_digits(int d) { mpreal::default_precision(d); }
  static mpreal to_digits(const mpreal& x, int d) {
    mpreal y = x;
    y.precision(static_cast<unsigned>(d));
    return y;
  }
  static mpreal pi() {
    mpreal v;
    mpfr_const_pi(v.backend().data(), MPFR_RNDN);
    return v;
  }
  static bool finite(const mpreal& x) {
    return mpfr_number_p(x.backend().data()) != 0;
  }
  static mpreal from_string(const std::string& s) { return mpreal(s); }
  static std::string to_string(const mpreal& v) { return v.str(0); }
};

/// Sets the thread's working precision for the lifetime of the guard.
template <class R>
class PrecisionGuard {
 public:
  explicit PrecisionGuard(int digits) : saved_(real_traits<R>::working_digits()) {
    real_traits<R>::set_working_digits(digits);
  }
  ~PrecisionGuard() { real_traits<R>::set_working_digits(saved_); }
  PrecisionGuard(const PrecisionGuard&) = delete;
  PrecisionGuard& operator=(const PrecisionGuard&) = delete;

 private:
  int saved_;
};

template <class R>
R two_pi() {
  return 2 * real_traits<R>::pi();
}

/// 10^-e at the current working precision; e may exceed the double range.
template <class R>
R pow10(long e) {
  return pow(R(10), e);
}

}  // namespace dsmap
