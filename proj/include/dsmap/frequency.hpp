#pragma once

#include "dsmap/complex.hpp"
#include "dsmap/scalar.hpp"

#include <vector>

namespace dsmap {

/// Rotation number together with the Diophantine parameters (nu, tau)
/// recorded for divisor-size diagnostics: |omega q - p| >= nu |q|^{-tau}.
template <class R>
struct Frequency {
  R omega;
  R nu;
  R tau;

  /// (1 + sqrt 5)/2 evaluated by high-precision square root.
  static Frequency golden(int digits) {
    PrecisionGuard<R> guard(digits);
    using std::sqrt;
    R s5 = sqrt(R(5));
    return Frequency{(1 + s5) / 2, (3 - s5) / 2, R(1)};
  }
};

/// Phase and divisor tables for a fixed rotation number, shared by the
/// spectral solvers: e^{+-2 pi i l omega} and the second-difference divisors
/// 2(cos(2 pi l omega) - 1) for 0 <= l <= max_mode.
template <class R>
class RotationPhases {
 public:
  RotationPhases(const Frequency<R>& freq, int max_mode, int digits)
      : digits_(digits), fwd_(static_cast<std::size_t>(max_mode) + 1),
        lomega_(static_cast<std::size_t>(max_mode) + 1) {
    PrecisionGuard<R> guard(digits);
    const R tpw = two_pi<R>() * freq.omega;
    for (int l = 0; l <= max_mode; ++l) {
      fwd_[static_cast<std::size_t>(l)] = cis(R(tpw * R(l)));
      lomega_[static_cast<std::size_t>(l)] = 2 * (fwd_[static_cast<std::size_t>(l)].re - 1);
    }
  }

  int max_mode() const { return static_cast<int>(fwd_.size()) - 1; }
  int digits() const { return digits_; }

  /// e^{2 pi i l omega}, any sign of l within the table.
  Complex<R> rotation(int l) const {
    return l >= 0 ? fwd_[static_cast<std::size_t>(l)] : conj(fwd_[static_cast<std::size_t>(-l)]);
  }

  /// 2 (cos(2 pi l omega) - 1), the symmetric-difference divisor.
  const R& lomega_divisor(int l) const {
    return lomega_[static_cast<std::size_t>(l >= 0 ? l : -l)];
  }

 private:
  int digits_;
  std::vector<Complex<R>> fwd_;
  std::vector<R> lomega_;
};

}  // namespace dsmap
