#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "dsmap/complex.hpp"
#include "dsmap/scalar.hpp"

namespace dsmap {

inline std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

/// Radix-2 complex FFT at a fixed precision. The twiddle table is computed
/// once per plan with correctly rounded sin/cos, so transforms of band-limited
/// data recover coefficients to within a few ulps of the working precision.
template <class R>
class FftPlan {
 public:
  FftPlan(std::size_t n, int digits) : n_(n), digits_(digits) {
    if (n == 0 || (n & (n - 1)) != 0) throw Error("fft size must be a power of two");
    PrecisionGuard<R> guard(digits);
    w_.resize(n / 2);
    R step = two_pi<R>() / R(static_cast<long>(n));
    for (std::size_t j = 0; j < n / 2; ++j)
      w_[j] = cis(R(-step * R(static_cast<long>(j))));
    rev_.resize(n);
    std::size_t bits = 0;
    while ((std::size_t{1} << bits) < n) ++bits;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t r = 0;
      for (std::size_t b = 0; b < bits; ++b)
        if (i & (std::size_t{1} << b)) r |= std::size_t{1} << (bits - 1 - b);
      rev_[i] = static_cast<std::uint32_t>(r);
    }
    inv_n_ = R(1) / R(static_cast<long>(n));
  }

  std::size_t size() const { return n_; }
  int digits() const { return digits_; }

  /// Unscaled DFT with kernel e^{-2pi i jk/n}.
  void forward(std::vector<Complex<R>>& a) const { run(a, false); }

  /// Inverse DFT including the 1/n factor.
  void inverse(std::vector<Complex<R>>& a) const {
    run(a, true);
    for (auto& z : a) {
      z.re *= inv_n_;
      z.im *= inv_n_;
    }
  }

 private:
  void run(std::vector<Complex<R>>& a, bool inv) const {
    if (a.size() != n_) throw Error("fft: buffer size does not match plan");
    for (std::size_t i = 0; i < n_; ++i) {
      std::size_t j = rev_[i];
      if (i < j) std::swap(a[i], a[j]);
    }
    // scratch registers reused across every butterfly
    R t1, t2, tre, tim;
    for (std::size_t len = 2; len <= n_; len <<= 1) {
      std::size_t half = len >> 1;
      std::size_t stride = n_ / len;
      for (std::size_t base = 0; base < n_; base += len) {
        for (std::size_t k = 0; k < half; ++k) {
          const Complex<R>& w = w_[k * stride];
          Complex<R>& lo = a[base + k];
          Complex<R>& hi = a[base + k + half];
          // t = w * hi (conjugate twiddle for the inverse transform)
          t1 = w.re;
          t1 *= hi.re;
          t2 = w.im;
          t2 *= hi.im;
          tre = t1;
          if (inv)
            tre += t2;
          else
            tre -= t2;
          t1 = w.re;
          t1 *= hi.im;
          t2 = w.im;
          t2 *= hi.re;
          tim = t1;
          if (inv)
            tim -= t2;
          else
            tim += t2;
          hi.re = lo.re;
          hi.re -= tre;
          hi.im = lo.im;
          hi.im -= tim;
          lo.re += tre;
          lo.im += tim;
        }
      }
    }
  }

  std::size_t n_;
  int digits_;
  std::vector<Complex<R>> w_;
  std::vector<std::uint32_t> rev_;
  R inv_n_;
};

}  // namespace dsmap
