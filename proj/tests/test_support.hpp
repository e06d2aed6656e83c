#pragma once

#include <random>

#include "dsmap/periodic_function.hpp"

namespace dsmap::testing {

/// Deterministic random periodic functions; raw 64-bit draws are mapped to
/// [-1/2, 1/2] without distribution objects so streams are portable.
template <class R>
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  R uniform() {
    return R(static_cast<double>(gen_()) / 18446744073709551616.0) - R(1) / 2;
  }

  Complex<R> cunit() { return Complex<R>(uniform(), uniform()); }

  PeriodicFunction<R> periodic(int m, int digits, bool zero_mean = false) {
    PeriodicFunction<R> f(m, digits);
    for (int l = -m; l <= m; ++l) f.set_mode(l, cunit());
    if (zero_mean) f.set_mode(0, Complex<R>{});
    return f;
  }

 private:
  std::mt19937_64 gen_;
};

template <class R>
R rel_coeff_distance(const PeriodicFunction<R>& a, const PeriodicFunction<R>& b) {
  using std::max;
  R num(0), den(0);
  int m = max(a.trunc(), b.trunc());
  for (int l = -m; l <= m; ++l) {
    num = max(num, abs(a.mode(l) - b.mode(l)));
    den = max(den, abs(b.mode(l)));
  }
  return den == 0 ? num : num / den;
}

}  // namespace dsmap::testing
