#pragma once

#include <algorithm>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "dsmap/cohomology.hpp"
#include "dsmap/lindstedt.hpp"

namespace dsmap {

struct DegenerateH : Error {
  using Error::Error;
};
struct NoDeltaSolution : Error {
  using Error::Error;
};
struct StepFailure : Error {
  using Error::Error;
};

/// A solved (or candidate) torus at one parameter value.
template <class R>
struct TorusSolution {
  Complex<R> eps;
  PeriodicFunction<R> u;
  Complex<R> c;
  R defect{};
  int iterations = 0;
};

template <class R>
struct NewtonOptions {
  int grid = 512;   // power of two; modes above grid/4 are discarded
  int digits = 60;  // quad-precision class by default
  R tol;
  int max_iter = 30;
  R h_floor;
  R divisor_floor;
  R zero_mean_rel;
  bool normalize_phase = true;  // re-gauge converged tori to mean(u) = 0

  static NewtonOptions defaults(int digits) {
    PrecisionGuard<R> guard(digits);
    NewtonOptions o;
    o.digits = digits;
    o.tol = pow10<R>(-(digits - 20));
    o.h_floor = R(1) / 1000000;
    o.divisor_floor = pow10<R>(-(digits - 5));
    o.zero_mean_rel = pow10<R>(-(digits - 8));
    return o;
  }
};

/// Quasi-Newton engine for the invariance equation at fixed eps. Each step
/// solves the factorized modified Newton equation
///   D_+^b [ -h' h'(.-w) D_- [ v / h' ] ] = -h' (E - delta),
/// h' = 1 + du/dtheta, via the four-stage elimination: two D_+^b solves, the
/// drift increment delta from the zero-average condition, one D_- solve, and
/// the back-substitution v = h' w.
template <class R>
class NewtonSolver {
 public:
  NewtonSolver(MapParams<R> params, NewtonOptions<R> opts)
      : params_(std::move(params)), opts_(std::move(opts)),
        plan_(static_cast<std::size_t>(opts_.grid), opts_.digits),
        phases_(params_.omega, opts_.grid / 4, opts_.digits), m_keep_(opts_.grid / 4 - 1) {
    tol_.zero_mean_rel = opts_.zero_mean_rel;
    tol_.divisor_floor = opts_.divisor_floor;
  }

  const MapParams<R>& params() const { return params_; }
  const NewtonOptions<R>& options() const { return opts_; }
  int mode_cutoff() const { return m_keep_; }

  R measure_defect(const PeriodicFunction<R>& u, const Complex<R>& c,
                   const Complex<R>& eps) const {
    std::vector<Complex<R>> e = defect_grid(params_, u, c, eps, plan_);
    using std::max;
    R sup(0);
    for (const auto& z : e) sup = max(sup, abs(z));
    return sup;
  }

  TorusSolution<R> make_solution(const Complex<R>& eps, PeriodicFunction<R> u, Complex<R> c,
                                 int iterations = 0) const {
    TorusSolution<R> s{eps, std::move(u), std::move(c), R(0), iterations};
    s.defect = measure_defect(s.u, s.c, s.eps);
    return s;
  }

  TorusSolution<R> step(const TorusSolution<R>& sol) const {
    PrecisionGuard<R> guard(opts_.digits);
    const std::size_t n = plan_.size();
    const Complex<R> b = params_.conformal_factor(sol.eps);

    std::vector<Complex<R>> e = defect_grid(params_, sol.u, sol.c, sol.eps, plan_);

    PeriodicFunction<R> hp = derivative(sol.u);
    hp.set_mode(0, hp.mode(0) + Complex<R>(R(1)));
    std::vector<Complex<R>> gh = synthesize(hp, plan_);
    std::vector<Complex<R>> ghm = synthesize(shift(hp, -params_.omega.omega), plan_);
    {
      using std::min;
      R hmin = abs(gh[0]);
      for (const auto& z : gh) hmin = min(hmin, abs(z));
      for (const auto& z : ghm) hmin = min(hmin, abs(z));
      if (hmin < opts_.h_floor)
        throw DegenerateH("newton step: h' dropped below the graph floor");
    }

    // stage i: D_+^b phi = -h' E and D_+^b nu = -h'
    std::vector<Complex<R>> buf(n);
    for (std::size_t j = 0; j < n; ++j) buf[j] = -(gh[j] * e[j]);
    PeriodicFunction<R> phi =
        solve_dplus_b(analyze(std::move(buf), m_keep_, opts_.digits, plan_), b, phases_, tol_);
    buf.assign(n, Complex<R>{});
    for (std::size_t j = 0; j < n; ++j) buf[j] = -gh[j];
    PeriodicFunction<R> nu =
        solve_dplus_b(analyze(std::move(buf), m_keep_, opts_.digits, plan_), b, phases_, tol_);
    std::vector<Complex<R>> gphi = synthesize(phi, plan_);
    std::vector<Complex<R>> gnu = synthesize(nu, plan_);

    // stage ii: delta so that (phi - delta nu)/(h' h'(.-w)) has zero average
    Complex<R> aphi, anu;
    std::vector<Complex<R>> den(n);
    for (std::size_t j = 0; j < n; ++j) {
      den[j] = gh[j] * ghm[j];
      aphi += gphi[j] / den[j];
      anu += gnu[j] / den[j];
    }
    const R inv_n = R(1) / R(static_cast<long>(n));
    aphi *= inv_n;
    anu *= inv_n;
    if (abs(anu) < opts_.divisor_floor)
      throw NoDeltaSolution("newton step: drift direction average vanished");
    const Complex<R> delta = aphi / anu;

    // stage iii: D_- w = (phi - delta nu)/(-h' h'(.-w)), mean-zero branch
    buf.assign(n, Complex<R>{});
    for (std::size_t j = 0; j < n; ++j) buf[j] = (gphi[j] - delta * gnu[j]) / -den[j];
    PeriodicFunction<R> w =
        solve_dminus(analyze(std::move(buf), m_keep_, opts_.digits, plan_), phases_, tol_);
    std::vector<Complex<R>> gw = synthesize(w, plan_);

    // stage iv: v = h' w
    buf.assign(n, Complex<R>{});
    for (std::size_t j = 0; j < n; ++j) buf[j] = gh[j] * gw[j];
    PeriodicFunction<R> v = analyze(std::move(buf), m_keep_, opts_.digits, plan_);

    TorusSolution<R> next;
    next.eps = sol.eps;
    next.u = sol.u + v;
    next.c = sol.c + delta;
    next.iterations = sol.iterations + 1;
    next.defect = measure_defect(next.u, next.c, next.eps);
    return next;
  }

  /// Exact re-gauge along the phase family: mean(u) = 0 without changing the
  /// solved torus.
  TorusSolution<R> normalize_phase(TorusSolution<R> sol) const {
    PrecisionGuard<R> guard(opts_.digits);
    Complex<R> sigma = -mean(sol.u);
    if (sigma.re == 0 && sigma.im == 0) return sol;
    PeriodicFunction<R> shifted = shift(sol.u, sigma);
    shifted.set_mode(0, shifted.mode(0) + sigma);
    sol.u = std::move(shifted);
    sol.defect = measure_defect(sol.u, sol.c, sol.eps);
    return sol;
  }

  /// Newton iteration from a guess; quadratic once inside the basin.
  TorusSolution<R> solve(const Complex<R>& eps, const PeriodicFunction<R>& u0,
                         const Complex<R>& c0, std::vector<R>* defect_history = nullptr) const {
    PrecisionGuard<R> guard(opts_.digits);
    if (u0.digits() != opts_.digits)
      throw PrecisionMismatch("newton solve: guess precision differs from the solver's");
    TorusSolution<R> cur = make_solution(eps, u0, c0, 0);
    if (defect_history) defect_history->push_back(cur.defect);
    R best = cur.defect;
    int stale = 0;
    for (int it = 0; it < opts_.max_iter; ++it) {
      if (cur.defect < opts_.tol)
        return opts_.normalize_phase ? normalize_phase(std::move(cur)) : cur;
      cur = step(cur);
      if (defect_history) defect_history->push_back(cur.defect);
      if (cur.defect < best) {
        best = cur.defect;
        stale = 0;
      } else if (++stale >= 3) {
        break;  // stopped contracting well above tol
      }
    }
    if (cur.defect < opts_.tol)
      return opts_.normalize_phase ? normalize_phase(std::move(cur)) : cur;
    std::ostringstream msg;
    msg << "newton solve: no convergence at eps=(" << real_traits<R>::to_string(cur.eps.re)
        << "," << real_traits<R>::to_string(cur.eps.im) << "); defect history:";
    if (defect_history)
      for (const auto& d : *defect_history) msg << " " << d.str(3);
    else
      msg << " final " << cur.defect.str(3);
    throw NonConvergence(msg.str());
  }

 private:
  MapParams<R> params_;
  NewtonOptions<R> opts_;
  FftPlan<R> plan_;
  RotationPhases<R> phases_;
  int m_keep_;
  SolveTolerances<R> tol_;
};

/// Seed a solve from the stored series: evaluates (u, c) at eps, truncating
/// at seed_order; seed_order < 0 scans 1..min(N, 40) and keeps the truncation
/// with the smallest measured defect.
template <class R>
TorusSolution<R> seed_from_series(const NewtonSolver<R>& solver, const LindstedtSeries<R>& series,
                                  const Complex<R>& eps, int seed_order = -1) {
  PrecisionGuard<R> guard(solver.options().digits);
  const int sd = solver.options().digits;
  auto candidate = [&](int order) {
    auto [u, c] = evaluate(series, eps, order);
    if (series.digits != sd) {
      // round the seed into the solver's working precision
      PeriodicFunction<R> uc(u.trunc(), sd);
      for (int l = -u.trunc(); l <= u.trunc(); ++l)
        uc.set_mode(l, Complex<R>(real_traits<R>::to_digits(u.mode(l).re, sd),
                                  real_traits<R>::to_digits(u.mode(l).im, sd)));
      Complex<R> cc(real_traits<R>::to_digits(c.re, sd), real_traits<R>::to_digits(c.im, sd));
      return solver.make_solution(eps, std::move(uc), cc);
    }
    return solver.make_solution(eps, std::move(u), c);
  };
  if (seed_order >= 0) return candidate(std::min(seed_order, series.order));
  int top = std::min(series.order, 40);
  TorusSolution<R> best = candidate(1);
  for (int order = 2; order <= top; ++order) {
    TorusSolution<R> s = candidate(order);
    if (s.defect < best.defect) best = std::move(s);
  }
  return best;
}

/// One record per accepted continuation point.
template <class R>
struct ContinuationLog {
  std::vector<TorusSolution<R>> accepted;  // one per requested path point
  int halvings_used = 0;
};

/// Follows the path point by point, each solution seeding the next; on a
/// failed solve the step toward the next point is halved (up to max_halvings),
/// re-lengthening after two consecutive accepts.
template <class R>
ContinuationLog<R> continue_path(const NewtonSolver<R>& solver,
                                 const std::vector<Complex<R>>& path,
                                 const TorusSolution<R>& start, int max_halvings = 8) {
  PrecisionGuard<R> guard(solver.options().digits);
  if (path.empty()) throw Error("continue_path: empty path");
  ContinuationLog<R> log;
  TorusSolution<R> cur = start;
  const R one(1);
  for (std::size_t i = 0; i < path.size(); ++i) {
    Complex<R> from = cur.eps;
    const Complex<R>& target = path[i];
    R progress(0);  // fraction of the segment [from, target] already covered
    R frac(1);
    int halvings = 0;
    int streak = 0;
    while (progress < one) {
      using std::min;
      R next_progress = min(one, progress + frac);
      Complex<R> eps_try = from + (target - from) * next_progress;
      bool solved = false;
      std::string why;
      try {
        TorusSolution<R> sol = solver.solve(eps_try, cur.u, cur.c);
        cur = std::move(sol);
        solved = true;
      } catch (const NonConvergence& e) {
        why = e.what();
      } catch (const DivisorUnderflow& e) {
        why = e.what();
      } catch (const DegenerateH& e) {
        why = e.what();
      } catch (const NoDeltaSolution& e) {
        why = e.what();
      }
      if (solved) {
        progress = next_progress;
        if (++streak >= 2 && frac < one) {
          frac *= 2;
          streak = 0;
        }
      } else {
        if (++halvings > max_halvings)
          throw StepFailure("continuation: step collapsed after " +
                            std::to_string(max_halvings) + " halvings near eps=(" +
                            real_traits<R>::to_string(eps_try.re) + "," +
                            real_traits<R>::to_string(eps_try.im) + "); last: " + why);
        frac /= 2;
        streak = 0;
        log.halvings_used = std::max(log.halvings_used, halvings);
      }
    }
    log.accepted.push_back(cur);
  }
  return log;
}

/// Circular continuation path.
template <class R>
struct LoopPath {
  Complex<R> center;
  R radius;
  int steps = 64;
  R start_angle{};

  std::vector<Complex<R>> points(int digits) const {
    PrecisionGuard<R> guard(digits);
    if (steps < 8) throw Error("loop path: need at least 8 steps");
    if (!(radius > 0)) throw Error("loop path: radius must be positive");
    std::vector<Complex<R>> pts;
    pts.reserve(static_cast<std::size_t>(steps) + 1);
    const R tp = two_pi<R>();
    for (int j = 0; j <= steps; ++j)
      pts.push_back(center + radius * cis(R(start_angle + tp * R(j) / R(steps))));
    return pts;
  }

  /// Smallest distance from the path to any of the given points.
  R clearance(const std::vector<Complex<R>>& poles, int digits) const {
    PrecisionGuard<R> guard(digits);
    using std::min;
    R best(-1);
    for (const auto& p : points(digits))
      for (const auto& z : poles) {
        R d = abs(p - z);
        if (best < 0 || d < best) best = d;
      }
    return best;
  }
};

template <class R>
struct MonodromyResult {
  R defect_u;  // ||u_end - u_start||_0 / ||u_start||_0
  R defect_c;  // |c_end - c_start|
  TorusSolution<R> start;
  TorusSolution<R> end;
  std::vector<TorusSolution<R>> instances;  // evenly sampled along the loop
  std::vector<TorusSolution<R>> path;       // every accepted loop point
};

/// Continues a converged solution once around the loop and measures how far
/// the returned torus sits from the initial one. Trivial monodromy shows up
/// as defects at solver-tolerance level.
template <class R>
MonodromyResult<R> monodromy_loop(const NewtonSolver<R>& solver, const LoopPath<R>& loop,
                                  const TorusSolution<R>& seed, int instance_count = 6,
                                  int max_halvings = 8) {
  PrecisionGuard<R> guard(solver.options().digits);
  std::vector<Complex<R>> pts = loop.points(solver.options().digits);
  if (abs(seed.eps - pts.front()) > loop.radius / 1000)
    throw Error("monodromy_loop: seed is not at the loop start point");
  std::vector<Complex<R>> rest(pts.begin() + 1, pts.end());
  ContinuationLog<R> log = continue_path(solver, rest, seed, max_halvings);

  MonodromyResult<R> out;
  out.start = seed;
  out.end = log.accepted.back();
  out.path = std::move(log.accepted);
  R base = norm_sobolev(seed.u, R(0));
  out.defect_u = norm_sobolev(out.end.u - seed.u, R(0)) / base;
  out.defect_c = abs(out.end.c - seed.c);
  for (int j = 0; j < instance_count; ++j) {
    std::size_t idx = static_cast<std::size_t>((static_cast<long>(j) * loop.steps) / instance_count);
    if (idx == 0)
      out.instances.push_back(seed);
    else
      out.instances.push_back(out.path[idx - 1]);
  }
  return out;
}

}  // namespace dsmap
