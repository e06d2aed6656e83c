#pragma once

#include <string>

#include "dsmap/frequency.hpp"
#include "dsmap/periodic_function.hpp"
#include "dsmap/scalar.hpp"

namespace dsmap {

struct NonZeroAverage : Error {
  using Error::Error;
};
struct DivisorUnderflow : Error {
  using Error::Error;
};

/// Thresholds for the mode-by-mode difference-equation solvers. Defaults
/// derive from the working precision d: averages must vanish to within
/// 10^-(d-8) of the data norm and divisors must stay above 10^-(d-5).
template <class R>
struct SolveTolerances {
  R zero_mean_rel;
  R divisor_floor;

  static SolveTolerances defaults(int digits) {
    PrecisionGuard<R> guard(digits);
    return {pow10<R>(-(digits - 8)), pow10<R>(-(digits - 5))};
  }
};

namespace detail {

template <class R>
R coeff_scale(const PeriodicFunction<R>& f) {
  using std::max;
  R s(0);
  for (int l = -f.trunc(); l <= f.trunc(); ++l) s = max(s, abs(f.mode(l)));
  return s;
}

template <class R>
void require_zero_mean(const PeriodicFunction<R>& f, const SolveTolerances<R>& tol,
                       const char* op) {
  R scale = coeff_scale(f);
  if (scale == 0) return;
  if (abs(mean(f)) > tol.zero_mean_rel * scale)
    throw NonZeroAverage(std::string(op) + ": right-hand side has non-vanishing average");
}

}  // namespace detail

/// Solves L_omega phi = eta with L_omega phi(t) = phi(t+w) - 2 phi(t) + phi(t-w),
/// normalized to mean(phi) = 0: phihat_l = etahat_l / (2 (cos(2 pi l w) - 1)).
template <class R>
PeriodicFunction<R> solve_lomega(const PeriodicFunction<R>& eta, const RotationPhases<R>& ph,
                                 const SolveTolerances<R>& tol) {
  PrecisionGuard<R> guard(eta.digits());
  detail::require_zero_mean(eta, tol, "L_omega solve");
  if (ph.max_mode() < eta.trunc()) throw Error("L_omega solve: phase table too short");
  PeriodicFunction<R> out(eta.trunc(), eta.digits());
  using std::abs;
  for (int l = 1; l <= eta.trunc(); ++l) {
    const R& d = ph.lomega_divisor(l);
    if (abs(d) < tol.divisor_floor)
      throw DivisorUnderflow("L_omega solve: divisor underflow at mode " + std::to_string(l));
    out.set_mode(l, eta.mode(l) / d);
    out.set_mode(-l, eta.mode(-l) / d);
  }
  return out;
}

template <class R>
PeriodicFunction<R> solve_lomega(const PeriodicFunction<R>& eta, const Frequency<R>& freq) {
  RotationPhases<R> ph(freq, eta.trunc(), eta.digits());
  return solve_lomega(eta, ph, SolveTolerances<R>::defaults(eta.digits()));
}

/// Solves D_- w = g with D_- w(t) = w(t-w) - w(t), normalized to mean(w) = 0:
/// what_l = ghat_l / (e^{-2 pi i l omega} - 1).
template <class R>
PeriodicFunction<R> solve_dminus(const PeriodicFunction<R>& g, const RotationPhases<R>& ph,
                                 const SolveTolerances<R>& tol) {
  PrecisionGuard<R> guard(g.digits());
  detail::require_zero_mean(g, tol, "D_minus solve");
  if (ph.max_mode() < g.trunc()) throw Error("D_minus solve: phase table too short");
  PeriodicFunction<R> out(g.trunc(), g.digits());
  for (int l = 1; l <= g.trunc(); ++l)
    for (int s : {l, -l}) {
      Complex<R> d = ph.rotation(-s) - Complex<R>(R(1));
      if (abs(d) < tol.divisor_floor)
        throw DivisorUnderflow("D_minus solve: divisor underflow at mode " + std::to_string(s));
      out.set_mode(s, g.mode(s) / d);
    }
  return out;
}

template <class R>
PeriodicFunction<R> solve_dminus(const PeriodicFunction<R>& g, const Frequency<R>& freq) {
  RotationPhases<R> ph(freq, g.trunc(), g.digits());
  return solve_dminus(g, ph, SolveTolerances<R>::defaults(g.digits()));
}

/// Solves D_+^b phi = g with D_+^b phi(t) = phi(t+w) - b phi(t):
/// phihat_l = ghat_l / (e^{2 pi i l omega} - b). The l = 0 divisor 1 - b is
/// legitimate but vanishes with the conformal factor; an underflow there
/// signals the parameter is too close to a singularity of the problem.
template <class R>
PeriodicFunction<R> solve_dplus_b(const PeriodicFunction<R>& g, const Complex<R>& b,
                                  const RotationPhases<R>& ph, const SolveTolerances<R>& tol) {
  PrecisionGuard<R> guard(g.digits());
  if (ph.max_mode() < g.trunc()) throw Error("D_plus solve: phase table too short");
  PeriodicFunction<R> out(g.trunc(), g.digits());
  for (int l = -g.trunc(); l <= g.trunc(); ++l) {
    Complex<R> d = ph.rotation(l) - b;
    if (abs(d) < tol.divisor_floor)
      throw DivisorUnderflow("D_plus solve: divisor underflow at mode " + std::to_string(l));
    out.set_mode(l, g.mode(l) / d);
  }
  return out;
}

template <class R>
PeriodicFunction<R> solve_dplus_b(const PeriodicFunction<R>& g, const Complex<R>& b,
                                  const Frequency<R>& freq) {
  RotationPhases<R> ph(freq, g.trunc(), g.digits());
  return solve_dplus_b(g, b, ph, SolveTolerances<R>::defaults(g.digits()));
}

}  // namespace dsmap
