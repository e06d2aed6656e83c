#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <json.hpp>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dsmap/diagnostics.hpp"
#include "dsmap/newton.hpp"
#include "dsmap/pade.hpp"
#include "dsmap/runconfig.hpp"
#include "dsmap/version.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace dsmap;
using R = mpreal;
using C = Complex<R>;

namespace {

struct StatusFile {
  std::vector<std::string> lines;
  bool all_ok = true;

  void record(const std::string& stage, bool ok, const std::string& detail) {
    lines.push_back(stage + " " + (ok ? "ok" : "fail") + " " + detail);
    all_ok = all_ok && ok;
    std::cout << "[" << (ok ? "ok" : "FAIL") << "] " << stage << ": " << detail << "\n";
  }

  void write(const fs::path& dir) const {
    std::ofstream os(dir / "status.txt");
    os << "status v1\n";
    for (const auto& l : lines) os << l << "\n";
  }
};

MapParams<R> make_params(const RunConfig& cfg) {
  PrecisionGuard<R> guard(cfg.digits);
  MapParams<R> p = MapParams<R>::standard(cfg.digits);
  p.conformal_exponent = cfg.exponent;
  if (cfg.omega != "golden") p.omega.omega = real_traits<R>::from_string(cfg.omega);
  return p;
}

SeriesProbe<R> parse_probe(const std::string& text, int digits) {
  PrecisionGuard<R> guard(digits);
  if (text == "drift") return SeriesProbe<R>::drift_series();
  if (text.rfind("theta:", 0) == 0)
    return SeriesProbe<R>::at_theta(C(real_traits<R>::from_string(text.substr(6))));
  if (text.rfind("mode:", 0) == 0) return SeriesProbe<R>::at_mode(std::stoi(text.substr(5)));
  throw Error("bad probe: " + text + " (want theta:<v>, mode:<l>, or drift)");
}

std::string meta_comment(const RunConfig& cfg) {
  return std::string("tool=") + kToolName + " " + kToolVersion + " config_hash=" + cfg.hash();
}

LindstedtSeries<R> load_series_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open series file " + path);
  return load_series<R>(is);
}

LindstedtSeries<R> obtain_series(const RunConfig& cfg, const std::string& seed_series,
                                 StatusFile& status) {
  if (!seed_series.empty()) {
    auto s = load_series_file(seed_series);
    status.record("load-series", true,
                  "N=" + std::to_string(s.order) + " digits=" + std::to_string(s.digits));
    return s;
  }
  auto t0 = std::chrono::steady_clock::now();
  TruncationSchedule sched{cfg.m0, cfg.delta, cfg.m_cap};
  auto s = compute_series(make_params(cfg), cfg.order, sched, cfg.digits);
  auto dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::cout << "  (series computed in " << std::fixed << std::setprecision(1) << dt << "s)\n";
  status.record("lindstedt", true,
                "N=" + std::to_string(cfg.order) + " digits=" + std::to_string(cfg.digits));
  return s;
}

double defect_slope(const MapParams<R>& params, const LindstedtSeries<R>& series, int up_to,
                    const R& eps_min, const R& eps_max, int points,
                    std::vector<std::pair<double, double>>* samples = nullptr) {
  PrecisionGuard<R> guard(series.digits);
  using std::exp;
  using std::log;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < points; ++i) {
    R t = points == 1 ? R(0) : R(i) / (points - 1);
    R eps = exp(log(eps_min) + t * (log(eps_max) - log(eps_min)));
    auto [u, c] = evaluate(series, C(eps), up_to);
    R dv = defect(params, u, c, C(eps), defect_grid_size(u.trunc()));
    double lx = static_cast<double>(log(eps));
    double ly = static_cast<double>(log(dv));
    if (samples) samples->push_back({static_cast<double>(eps), static_cast<double>(dv)});
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  double n = points;
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

int cmd_lindstedt(const RunConfig& cfg, const std::string& seed_series) {
  fs::create_directories(cfg.out);
  StatusFile status;
  try {
    auto series = obtain_series(cfg, seed_series, status);
    {
      std::ofstream os(fs::path(cfg.out) / "series.txt");
      save_series(os, series, cfg.echo() + meta_comment(cfg));
      status.record("write-series", true, "series.txt");
    }
    PrecisionGuard<R> guard(series.digits);
    const R tol = pow10<R>(-(series.digits - 10));
    bool drift_ok = true;
    for (int k = 0; k < std::min(series.order + 1, cfg.exponent); ++k)
      drift_ok = drift_ok && abs(series.c[static_cast<std::size_t>(k)]) <= tol;
    if (series.order >= cfg.exponent)
      drift_ok = drift_ok && abs(series.c[static_cast<std::size_t>(cfg.exponent)] -
                                 C(series.params.omega.omega)) <=
                                 tol * series.params.omega.omega;
    status.record("drift-structure", drift_ok,
                  "c_0..c_" + std::to_string(cfg.exponent - 1) + " = 0, c_" +
                      std::to_string(cfg.exponent) + " = omega");
    if (series.order >= 1) {
      int up_to = std::min(series.order, 10);
      double slope =
          defect_slope(series.params, series, up_to, R(1) / 1000, R(1) / 100, 4);
      bool ok = slope > up_to + 0.9 && slope < up_to + 1.1;
      std::ostringstream d;
      d << "order-" << up_to << " truncation slope " << std::setprecision(4) << slope
        << " (expect " << up_to + 1 << ")";
      status.record("defect-slope", ok, d.str());
    }
  } catch (const Error& e) {
    status.record("lindstedt", false, e.what());
  }
  status.write(cfg.out);
  return status.all_ok ? 0 : 1;
}

int cmd_norms(const RunConfig& cfg, const std::string& seed_series) {
  fs::create_directories(cfg.out);
  StatusFile status;
  try {
    auto series = obtain_series(cfg, seed_series, status);
    int kmin = cfg.fit_k_min > 0 ? cfg.fit_k_min : std::max(1, series.order / 4);
    int kmax = cfg.fit_k_max > 0 ? cfg.fit_k_max : series.order;
    auto run_kind = [&](const NormKind& kind, const std::string& label) {
      NormSequence seq = norm_sequence(series, kind, 1, kmax);
      GevreyFit fit = fit_gevrey(seq, kmin, kmax);
      std::string points_file = "norms_" + label + ".txt";
      {
        std::ofstream os(fs::path(cfg.out) / points_file);
        os << "# " << meta_comment(cfg) << "\n";
        os << "# k value  [" << kind.label() << "]\n";
        for (std::size_t i = 0; i < seq.k.size(); ++i)
          os << seq.k[i] << " " << real_traits<double>::to_string(seq.value[i]) << "\n";
      }
      json rep{{"tool", std::string(kToolName) + " " + kToolVersion},
               {"config_hash", cfg.hash()},
               {"kind", kind.label()},
               {"window", {kmin, kmax}},
               {"a", fit.a},
               {"b", fit.b},
               {"c", fit.c},
               {"sigma", fit.c},
               {"scale_R", fit.a},
               {"residual", fit.residual},
               {"converged", fit.converged},
               {"excluded_orders", seq.excluded},
               {"points_file", points_file}};
      std::ofstream os(fs::path(cfg.out) / ("norms_" + label + ".json"));
      os << rep.dump(2) << "\n";
      std::ostringstream d;
      d << "a=" << std::setprecision(6) << fit.a << " b=" << fit.b << " c=" << fit.c
        << " rms=" << fit.residual;
      status.record("fit-" + label, true, d.str());
    };
    for (double rho : parse_double_list(cfg.rho_list)) {
      std::ostringstream label;
      label << "analytic_rho" << rho;
      run_kind(NormKind::analytic_norm(rho), label.str());
    }
    for (double r : parse_double_list(cfg.r_list)) {
      std::ostringstream label;
      label << "sobolev_r" << r;
      run_kind(NormKind::sobolev_norm(r), label.str());
    }
  } catch (const Error& e) {
    status.record("norms", false, e.what());
  }
  status.write(cfg.out);
  return status.all_ok ? 0 : 1;
}

int cmd_poles(const RunConfig& cfg, const std::string& seed_series,
              const std::string& scalar_series_file) {
  fs::create_directories(cfg.out);
  StatusFile status;
  try {
    PrecisionGuard<R> guard(cfg.digits);
    ScalarSeries<R> g;
    if (!scalar_series_file.empty()) {
      std::ifstream is(scalar_series_file);
      if (!is) throw Error("cannot open scalar series " + scalar_series_file);
      g = read_scalar_series<R>(is);
      status.record("load-scalar-series", true, scalar_series_file);
    } else {
      auto series = obtain_series(cfg, seed_series, status);
      g = extract_scalar_series(series, parse_probe(cfg.probe, series.digits));
    }
    std::vector<int> degrees = cfg.pade_degrees;
    std::sort(degrees.begin(), degrees.end());
    degrees.erase(std::unique(degrees.begin(), degrees.end()), degrees.end());
    if (degrees.size() < 2) throw Error("poles: need at least two pade degrees");
    for (int p : degrees)
      if (2 * p > g.top_order())
        throw Error("poles: series order " + std::to_string(g.top_order()) +
                    " below 2*degree for [" + std::to_string(p) + "/" + std::to_string(p) + "]");
    if (degrees.front() == 0) {
      status.record("poles", true, "degenerate q=0 request: empty pole set (warning)");
      std::ofstream os(fs::path(cfg.out) / "poles.csv");
      os << "re,im,modulus,match_distance,b_re,b_im,abs_b_minus_1\n";
      status.write(cfg.out);
      return 0;
    }
    const R tol = real_traits<R>::from_string(cfg.filter_tol);
    std::vector<PadeApproximant<R>> approx;
    for (int p : degrees) {
      try {
        approx.push_back(build_pade(g, p, p));
        std::ostringstream d;
        d << "[" << p << "/" << p << "] cond~1e" << std::setprecision(3)
          << approx.back().condition_log10;
        status.record("pade-build", true, d.str());
      } catch (const SingularSystem& e) {
        status.record("pade-build", false,
                      "[" + std::to_string(p) + "/" + std::to_string(p) + "] " + e.what());
      }
    }
    if (approx.size() < 2) throw Error("poles: fewer than two approximants built");
    PoleSet<R> merged;
    merged.filter_tol = tol;
    for (std::size_t i = 0; i + 1 < approx.size(); ++i) {
      PoleSet<R> ps = stable_poles(approx[i], approx[i + 1], tol);
      auto absorb = [&](std::vector<Pole<R>>& dst, const std::vector<Pole<R>>& src) {
        for (const auto& p : src) {
          bool dup = false;
          for (const auto& q : dst)
            if (abs(q.location - p.location) < tol / 10) dup = true;
          if (!dup) dst.push_back(p);
        }
      };
      absorb(merged.poles, ps.poles);
      absorb(merged.flagged, ps.flagged);
    }
    std::sort(merged.poles.begin(), merged.poles.end(), [](const Pole<R>& a, const Pole<R>& b) {
      return abs(a.location) < abs(b.location);
    });
    {
      std::ofstream os(fs::path(cfg.out) / "poles.csv");
      write_poles_csv(os, merged, cfg.exponent);
      PoleSet<R> flagged_set;
      flagged_set.poles = merged.flagged;
      flagged_set.filter_tol = tol;
      std::ofstream osf(fs::path(cfg.out) / "poles_flagged.csv");
      write_poles_csv(osf, flagged_set, cfg.exponent);
      std::ofstream osm(fs::path(cfg.out) / "poles.meta");
      osm << meta_comment(cfg) << "\n" << cfg.echo();
    }
    {
      std::ofstream ose(fs::path(cfg.out) / "eps_plane.txt");
      ose << "# " << meta_comment(cfg) << "\n# re im\n";
      for (const auto& p : merged.poles)
        ose << p.location.re.str(30) << " " << p.location.im.str(30) << "\n";
      std::ofstream osb(fs::path(cfg.out) / "b_plane.txt");
      osb << "# " << meta_comment(cfg) << "\n# re im\n";
      for (const auto& b : map_conformal(merged, cfg.exponent))
        osb << b.re.str(30) << " " << b.im.str(30) << "\n";
      std::ofstream osc(fs::path(cfg.out) / "unit_circle.txt");
      osc << "# re im\n";
      for (int j = 0; j <= 256; ++j) {
        C z = cis(R(two_pi<R>() * R(j) / 256));
        osc << z.re.str(20) << " " << z.im.str(20) << "\n";
      }
    }
    std::ostringstream d;
    d << merged.poles.size() << " stable, " << merged.flagged.size() << " flagged";
    if (!merged.poles.empty())
      d << ", min modulus " << abs(merged.poles.front().location).str(8);
    status.record("poles", !merged.poles.empty(), d.str());
  } catch (const Error& e) {
    status.record("poles", false, e.what());
  }
  status.write(cfg.out);
  return status.all_ok ? 0 : 1;
}

std::vector<C> read_pole_locations(const std::string& csv_path, int digits) {
  PrecisionGuard<R> guard(digits);
  std::ifstream is(csv_path);
  if (!is) throw Error("cannot open poles csv " + csv_path);
  std::string line;
  std::getline(is, line);  // header
  std::vector<C> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string re, im;
    if (!std::getline(ls, re, ',') || !std::getline(ls, im, ',')) continue;
    out.push_back(C(real_traits<R>::from_string(re), real_traits<R>::from_string(im)));
  }
  return out;
}

int cmd_monodromy(const RunConfig& cfg, const std::string& seed_series,
                  const std::string& poles_csv) {
  fs::create_directories(cfg.out);
  StatusFile status;
  try {
    auto series = obtain_series(cfg, seed_series, status);
    PrecisionGuard<R> guard(cfg.newton_digits);
    MapParams<R> params = MapParams<R>::standard(cfg.newton_digits);
    params.conformal_exponent = cfg.exponent;
    if (cfg.omega != "golden") params.omega.omega = real_traits<R>::from_string(cfg.omega);
    NewtonOptions<R> opts = NewtonOptions<R>::defaults(cfg.newton_digits);
    opts.grid = cfg.newton_grid;
    opts.max_iter = cfg.newton_max_iter;
    if (!cfg.newton_tol.empty()) opts.tol = real_traits<R>::from_string(cfg.newton_tol);
    NewtonSolver<R> solver(params, opts);

    std::vector<C> centers;
    std::vector<R> radii;
    std::vector<C> known_poles;
    if (cfg.loop_center != "auto") {
      std::size_t comma = cfg.loop_center.find(',');
      if (comma == std::string::npos) throw Error("loop_center must be re,im or auto");
      centers.push_back(C(real_traits<R>::from_string(cfg.loop_center.substr(0, comma)),
                          real_traits<R>::from_string(cfg.loop_center.substr(comma + 1))));
      if (cfg.loop_radius == "auto") throw Error("explicit loop_center needs loop_radius");
      radii.push_back(real_traits<R>::from_string(cfg.loop_radius));
    } else {
      if (poles_csv.empty()) throw Error("monodromy: need --poles csv or explicit --center");
      known_poles = read_pole_locations(poles_csv, cfg.newton_digits);
      if (known_poles.empty()) throw Error("monodromy: poles csv is empty");
      // ranked by modulus; radius from the local cluster and the nearest
      // outside pole
      for (int i = 0; i < cfg.loop_count && i < static_cast<int>(known_poles.size()); ++i) {
        C center = known_poles[static_cast<std::size_t>(i)];
        R cluster_scale = abs(center) / 10;
        R diam(0);
        R dmin(-1);
        for (const auto& p : known_poles) {
          R dist = abs(p - center);
          if (dist == 0) continue;
          if (dist < cluster_scale)
            diam = std::max(diam, dist);
          else if (dmin < 0 || dist < dmin)
            dmin = dist;
        }
        R radius = std::max(R(3) / 2 * diam, abs(center) / 20);
        if (cfg.loop_radius != "auto") radius = real_traits<R>::from_string(cfg.loop_radius);
        else if (dmin > 0) radius = std::min(radius, R(2) / 5 * dmin);
        centers.push_back(center);
        radii.push_back(radius);
      }
    }

    for (std::size_t li = 0; li < centers.size(); ++li) {
      std::string tag = "loop" + std::to_string(li);
      try {
        LoopPath<R> loop{centers[li], radii[li], cfg.loop_steps, R(0)};
        if (!known_poles.empty()) {
          R clear = loop.clearance(known_poles, cfg.newton_digits);
          std::ostringstream d;
          d << "center=(" << centers[li].re.str(8) << "," << centers[li].im.str(8)
            << ") radius=" << radii[li].str(6) << " clearance=" << clear.str(4);
          status.record(tag + "-path", true, d.str());
        }
        auto pts = loop.points(cfg.newton_digits);
        int seed_order = cfg.seed_order == "auto" ? -1 : std::stoi(cfg.seed_order);
        auto t0 = std::chrono::steady_clock::now();
        auto seed = seed_from_series(solver, series, pts[0], seed_order);
        auto start = solver.solve(seed.eps, seed.u, seed.c);
        auto res = monodromy_loop(solver, loop, start, cfg.instances);
        auto dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        {
          std::ofstream os(fs::path(cfg.out) / (tag + "_log.txt"));
          os << "# " << meta_comment(cfg) << "\n# step eps_re eps_im c_re c_im defect iterations\n";
          int stepno = 0;
          auto row = [&](const TorusSolution<R>& s) {
            os << stepno++ << " " << s.eps.re.str(25) << " " << s.eps.im.str(25) << " "
               << s.c.re.str(25) << " " << s.c.im.str(25) << " " << s.defect.str(6) << " "
               << s.iterations << "\n";
          };
          row(res.start);
          for (const auto& s : res.path) row(s);
        }
        {
          std::ofstream os(fs::path(cfg.out) / (tag + "_summary.txt"));
          os << "# " << meta_comment(cfg) << "\n";
          os << "center " << centers[li].re.str(25) << " " << centers[li].im.str(25) << "\n";
          os << "radius " << radii[li].str(25) << "\n";
          os << "steps " << cfg.loop_steps << "\n";
          os << "monodromy_defect_u " << res.defect_u.str(10) << "\n";
          os << "monodromy_defect_c " << res.defect_c.str(10) << "\n";
        }
        std::cout << "instances (" << tag << "):\n";
        FftPlan<R> sample_plan(256, cfg.newton_digits);
        for (std::size_t j = 0; j < res.instances.size(); ++j) {
          const auto& inst = res.instances[j];
          std::cout << "  " << j + 1 << "  eps = " << inst.eps.re.str(7) << " + i "
                    << inst.eps.im.str(7) << "   c = " << inst.c.re.str(7) << " + i "
                    << inst.c.im.str(7) << "\n";
          std::string base = tag + "_instance" + std::to_string(j + 1);
          std::ofstream osf(fs::path(cfg.out) / (base + ".pf"));
          write_text(osf, inst.u);
          auto gu = synthesize(inst.u, sample_plan);
          std::ofstream osr(fs::path(cfg.out) / (base + "_re.txt"));
          std::ofstream osi(fs::path(cfg.out) / (base + "_im.txt"));
          osr << "# " << meta_comment(cfg) << "\n# theta re_u\n";
          osi << "# " << meta_comment(cfg) << "\n# theta im_u\n";
          for (std::size_t jj = 0; jj < gu.size(); ++jj) {
            R theta = R(static_cast<long>(jj)) / static_cast<long>(gu.size());
            osr << theta.str(10) << " " << gu[jj].re.str(20) << "\n";
            osi << theta.str(10) << " " << gu[jj].im.str(20) << "\n";
          }
        }
        std::cout << "  (" << tag << " completed in " << std::fixed << std::setprecision(1)
                  << dt << "s)\n";
        status.record(tag, true,
                      "defect_u=" + res.defect_u.str(4) + " defect_c=" + res.defect_c.str(4));
      } catch (const Error& e) {
        status.record(tag, false, e.what());
      }
    }
  } catch (const Error& e) {
    status.record("monodromy", false, e.what());
  }
  status.write(cfg.out);
  return status.all_ok ? 0 : 1;
}

int cmd_defect_scan(const RunConfig& cfg, const std::string& seed_series) {
  fs::create_directories(cfg.out);
  StatusFile status;
  try {
    auto series = obtain_series(cfg, seed_series, status);
    PrecisionGuard<R> guard(series.digits);
    std::vector<std::pair<double, double>> samples;
    double slope = defect_slope(series.params, series, series.order,
                                real_traits<R>::from_string(cfg.scan_eps_min),
                                real_traits<R>::from_string(cfg.scan_eps_max), cfg.scan_points,
                                &samples);
    std::ofstream os(fs::path(cfg.out) / "defect_scan.txt");
    os << "# " << meta_comment(cfg) << "\n# eps defect\n";
    for (auto& [e, dv] : samples)
      os << real_traits<double>::to_string(e) << " " << real_traits<double>::to_string(dv)
         << "\n";
    std::ostringstream d;
    d << "slope " << std::setprecision(5) << slope << " over " << cfg.scan_points
      << " points (order " << series.order << ", expect ~" << series.order + 1 << ")";
    status.record("defect-scan", true, d.str());
  } catch (const Error& e) {
    status.record("defect-scan", false, e.what());
  }
  status.write(cfg.out);
  return status.all_ok ? 0 : 1;
}

int cmd_selftest(const RunConfig& cfg) {
  fs::create_directories(cfg.out);
  StatusFile status;
  const int d = 50;
  PrecisionGuard<R> guard(d);
  std::mt19937_64 rng(12345);
  auto uniform = [&] { return R(static_cast<double>(rng()) / 1.8446744073709552e19) - R(1) / 2; };
  auto random_pf = [&](int m) {
    PeriodicFunction<R> f(m, d);
    for (int l = -m; l <= m; ++l) f.set_mode(l, C(uniform(), uniform()));
    return f;
  };
  try {
    {
      FftPlan<R> plan(64, d);
      auto f = random_pf(12);
      auto f2 = analyze(synthesize(f, plan), 12, d, plan);
      R err(0);
      for (int l = -12; l <= 12; ++l) err = std::max(err, abs(f2.mode(l) - f.mode(l)));
      status.record("fft-roundtrip", err < pow10<R>(-(d - 6)), "err=" + err.str(3));
    }
    {
      auto freq = Frequency<R>::golden(d);
      RotationPhases<R> ph(freq, 16, d);
      auto tolv = SolveTolerances<R>::defaults(d);
      R worst(0);
      for (int rep = 0; rep < 10; ++rep) {
        auto eta = random_pf(16);
        eta.set_mode(0, C());
        auto phi = solve_lomega(eta, ph, tolv);
        auto lhs = shift(phi, freq.omega) - phi * C(R(2)) + shift(phi, -freq.omega);
        R num(0), den(0);
        for (int l = -16; l <= 16; ++l) {
          num = std::max(num, abs(lhs.mode(l) - eta.mode(l)));
          den = std::max(den, abs(eta.mode(l)));
        }
        worst = std::max(worst, num / den);
      }
      status.record("lomega-residual", worst < pow10<R>(-(d - 10)), "rel=" + worst.str(3));
    }
    {
      ScalarSeries<R> geo;
      geo.digits = d;
      for (int k = 0; k < 8; ++k) geo.coeffs.push_back(C(R(1)));
      auto a = build_pade(geo, 0, 1);
      auto roots = denominator_roots(a);
      status.record("pade-geometric",
                    roots.roots.size() == 1 && abs(roots.roots[0] - C(R(1))) < pow10<R>(-(d - 15)),
                    "pole=" + roots.roots[0].re.str(6));
    }
    {
      // factorized modified-Newton operator equals the direct commutator form
      auto params = MapParams<R>::standard(d);
      auto u = random_pf(6) * C(R(1) / 500);
      auto v = random_pf(6) * C(R(1) / 50);
      C eps(R(1) / 10, R(1) / 30);
      C b = params.conformal_factor(eps);
      auto freq = params.omega;
      PeriodicFunction<R> hp = derivative(u);
      hp.set_mode(0, hp.mode(0) + C(R(1)));
      int n = 256;
      FftPlan<R> plan(static_cast<std::size_t>(n), d);
      auto gh = synthesize(hp, plan);
      auto ghm = synthesize(shift(hp, -freq.omega), plan);
      auto gv = synthesize(v, plan);
      auto gvp = synthesize(shift(v, freq.omega), plan);
      auto gvm = synthesize(shift(v, -freq.omega), plan);
      auto ghp = synthesize(shift(hp, freq.omega), plan);
      std::vector<C> lhs(static_cast<std::size_t>(n)), inner(static_cast<std::size_t>(n));
      for (int j = 0; j < n; ++j) {
        auto jj = static_cast<std::size_t>(j);
        C dev = gvp[jj] - (C(R(1)) + b) * gv[jj] + b * gvm[jj];
        C deh = ghp[jj] - (C(R(1)) + b) * gh[jj] + b * ghm[jj];
        lhs[jj] = gh[jj] * dev - gv[jj] * deh;
        C dw = gvm[jj] / ghm[jj] - gv[jj] / gh[jj];
        inner[jj] = -(gh[jj] * ghm[jj]) * dw;
      }
      auto innerf = analyze(inner, n / 4 - 1, d, plan);
      auto rhsf = shift(innerf, freq.omega) - innerf * b;
      auto grhs = synthesize(rhsf, plan);
      R err(0), scale(0);
      for (int j = 0; j < n; ++j) {
        auto jj = static_cast<std::size_t>(j);
        err = std::max(err, abs(grhs[jj] - lhs[jj]));
        scale = std::max(scale, abs(lhs[jj]));
      }
      status.record("factorization-identity", err / scale < pow10<R>(-(d - 12)),
                    "rel=" + (err / scale).str(3));
    }
    {
      auto params = MapParams<R>::standard(40);
      auto s = compute_series(params, 5, 40);
      bool ok = abs(s.c[3] - C(s.params.omega.omega)) < pow10<R>(-30);
      status.record("lindstedt-c3", ok, "c3-omega=" + abs(s.c[3] - C(s.params.omega.omega)).str(3));
    }
  } catch (const Error& e) {
    status.record("selftest", false, e.what());
  }
  status.write(cfg.out);
  return status.all_ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{std::string(kToolName) + " " + kToolVersion +
               " -- quasi-periodic circles of the dissipative standard map"};
  app.require_subcommand(1);

  RunConfig cfg;
  // --config loads first so explicit flags override file keys
  for (int i = 1; i + 1 < argc; ++i)
    if (std::string(argv[i]) == "--config") {
      try {
        cfg.load_file(argv[i + 1]);
      } catch (const Error& e) {
        std::cerr << e.what() << "\n";
        return 2;
      }
    }
  std::string config_path, seed_series, poles_csv, scalar_series;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "flat key = value config file");
    sub->add_option("--digits", cfg.digits, "working precision in decimal digits");
    sub->add_option("--order", cfg.order, "series order N");
    sub->add_option("--out", cfg.out, "output directory");
    sub->add_option("--workers", cfg.workers,
                    "worker count (reductions are order-fixed, results identical)");
    sub->add_option("--seed-series", seed_series, "existing series file to reuse");
    sub->add_option("--omega", cfg.omega, "rotation number: golden or decimal");
    sub->add_option("--exponent", cfg.exponent, "conformal exponent q in b = 1 - eps^q");
  };

  auto* c_lind = app.add_subcommand("lindstedt", "compute the series and self-check it");
  add_common(c_lind);
  c_lind->add_option("--m0", cfg.m0, "truncation schedule base");
  c_lind->add_option("--m-delta", cfg.delta, "truncation schedule slope");
  c_lind->add_option("--m-cap", cfg.m_cap, "truncation cap");

  auto* c_norms = app.add_subcommand("norms", "coefficient norm sequences and growth fits");
  add_common(c_norms);
  c_norms->add_option("--rho", cfg.rho_list, "analytic-norm widths, comma separated");
  c_norms->add_option("--r", cfg.r_list, "sobolev exponents, comma separated");
  c_norms->add_option("--k-min", cfg.fit_k_min, "fit window start (default order/4)");
  c_norms->add_option("--k-max", cfg.fit_k_max, "fit window end (default order)");

  auto* c_poles = app.add_subcommand("poles", "Pade denominator poles with cross-order filter");
  add_common(c_poles);
  c_poles->add_option("--probe", cfg.probe, "scalar probe: theta:<v> | mode:<l> | drift");
  c_poles->add_option("--degrees", cfg.pade_degrees, "diagonal degrees, e.g. 90 100");
  c_poles->add_option("--filter-tol", cfg.filter_tol, "cross-order matching tolerance");
  c_poles->add_option("--scalar-series", scalar_series, "read scalar series from file instead");

  auto* c_mon = app.add_subcommand("monodromy", "continuation loops around detected poles");
  add_common(c_mon);
  c_mon->add_option("--poles", poles_csv, "poles csv from the poles stage");
  c_mon->add_option("--center", cfg.loop_center, "loop center re,im (default: leading pole)");
  c_mon->add_option("--radius", cfg.loop_radius, "loop radius (default: auto)");
  c_mon->add_option("--steps", cfg.loop_steps, "loop steps");
  c_mon->add_option("--loops", cfg.loop_count, "how many top-ranked poles to loop");
  c_mon->add_option("--newton-digits", cfg.newton_digits, "newton working precision");
  c_mon->add_option("--newton-grid", cfg.newton_grid, "newton grid (power of two)");
  c_mon->add_option("--newton-tol", cfg.newton_tol, "newton convergence tolerance");
  c_mon->add_option("--seed-order", cfg.seed_order, "series truncation for seeds, or auto");
  c_mon->add_option("--instances", cfg.instances, "sampled instances per loop");

  auto* c_scan = app.add_subcommand("defect-scan", "invariance defect over an eps range");
  add_common(c_scan);
  c_scan->add_option("--eps-min", cfg.scan_eps_min, "smallest eps");
  c_scan->add_option("--eps-max", cfg.scan_eps_max, "largest eps");
  c_scan->add_option("--points", cfg.scan_points, "sample count");

  auto* c_self = app.add_subcommand("selftest", "fast internal consistency checks");
  add_common(c_self);

  CLI11_PARSE(app, argc, argv);

  try {
    cfg.validate();
    real_traits<R>::set_working_digits(cfg.digits);
    if (c_lind->parsed()) return cmd_lindstedt(cfg, seed_series);
    if (c_norms->parsed()) return cmd_norms(cfg, seed_series);
    if (c_poles->parsed()) return cmd_poles(cfg, seed_series, scalar_series);
    if (c_mon->parsed()) return cmd_monodromy(cfg, seed_series, poles_csv);
    if (c_scan->parsed()) return cmd_defect_scan(cfg, seed_series);
    if (c_self->parsed()) return cmd_selftest(cfg);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
