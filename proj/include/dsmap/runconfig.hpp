#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "dsmap/scalar.hpp"
#include "dsmap/version.hpp"

namespace dsmap {

/// Run configuration shared by every subcommand. Extended-precision values
/// are carried as decimal strings so a config file round-trips losslessly;
/// the flat key = value format accepts '#' comments.
struct RunConfig {
  int digits = 100;
  int order = 40;
  int m0 = 32;
  int delta = 2;
  int m_cap = 2048;
  std::string omega = "golden";  // "golden" or a decimal literal
  int exponent = 3;
  std::string probe = "theta:0.33";  // theta:<value> | mode:<l> | drift
  std::vector<int> pade_degrees = {90, 100};
  std::string filter_tol = "1e-3";
  int newton_digits = 60;
  int newton_grid = 512;
  std::string newton_tol = "";  // empty: 10^-(newton_digits-20)
  int newton_max_iter = 30;
  std::string seed_order = "auto";  // "auto" or an integer
  std::string loop_center = "auto";  // "auto" (leading pole) or "re,im"
  std::string loop_radius = "auto";  // "auto" or a decimal literal
  int loop_steps = 64;
  int loop_count = 1;
  int instances = 6;
  std::string scan_eps_min = "1e-3";
  std::string scan_eps_max = "1e-2";
  int scan_points = 8;
  std::string rho_list = "0.5,0.1,0.01,0.001";
  std::string r_list = "0,1,2,3,4,5,6";
  int fit_k_min = -1;  // -1: order/4
  int fit_k_max = -1;  // -1: order
  std::string out = "out";
  int workers = 1;

  void validate() const {
    auto positive = [](long v, const char* name) {
      if (v <= 0) throw Error(std::string("config: ") + name + " must be positive");
    };
    positive(digits, "digits");
    if (digits < 30) throw Error("config: digits must be at least 30");
    if (order < 0) throw Error("config: order must be nonnegative");
    positive(m0, "m0");
    if (delta < 0) throw Error("config: delta must be nonnegative");
    positive(m_cap, "m_cap");
    positive(exponent, "exponent");
    positive(newton_digits, "newton_digits");
    positive(newton_grid, "newton_grid");
    if ((newton_grid & (newton_grid - 1)) != 0)
      throw Error("config: newton_grid must be a power of two");
    positive(newton_max_iter, "newton_max_iter");
    if (loop_steps < 8) throw Error("config: loop_steps must be at least 8");
    positive(loop_count, "loop_count");
    positive(instances, "instances");
    positive(scan_points, "scan_points");
    positive(workers, "workers");
    for (int p : pade_degrees) positive(p, "pade_degrees entry");
  }

  /// Canonical text; identical configs echo to identical bytes.
  std::string echo() const {
    std::ostringstream os;
    os << "digits = " << digits << "\n";
    os << "order = " << order << "\n";
    os << "m0 = " << m0 << "\n";
    os << "delta = " << delta << "\n";
    os << "m_cap = " << m_cap << "\n";
    os << "omega = " << omega << "\n";
    os << "exponent = " << exponent << "\n";
    os << "probe = " << probe << "\n";
    os << "pade_degrees = ";
    for (std::size_t i = 0; i < pade_degrees.size(); ++i)
      os << (i ? "," : "") << pade_degrees[i];
    os << "\n";
    os << "filter_tol = " << filter_tol << "\n";
    os << "newton_digits = " << newton_digits << "\n";
    os << "newton_grid = " << newton_grid << "\n";
    os << "newton_tol = " << newton_tol << "\n";
    os << "newton_max_iter = " << newton_max_iter << "\n";
    os << "seed_order = " << seed_order << "\n";
    os << "loop_center = " << loop_center << "\n";
    os << "loop_radius = " << loop_radius << "\n";
    os << "loop_steps = " << loop_steps << "\n";
    os << "loop_count = " << loop_count << "\n";
    os << "instances = " << instances << "\n";
    os << "scan_eps_min = " << scan_eps_min << "\n";
    os << "scan_eps_max = " << scan_eps_max << "\n";
    os << "scan_points = " << scan_points << "\n";
    os << "rho_list = " << rho_list << "\n";
    os << "r_list = " << r_list << "\n";
    os << "fit_k_min = " << fit_k_min << "\n";
    os << "fit_k_max = " << fit_k_max << "\n";
    os << "workers = " << workers << "\n";
    return os.str();
  }

  std::string hash() const {
    // FNV-1a over the canonical echo
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : echo()) {
      h ^= ch;
      h *= 1099511628211ULL;
    }
    std::ostringstream os;
    os << std::hex << h;
    return os.str();
  }

  void set_key(const std::string& key, const std::string& value) {
    auto to_int = [&](const char* name) {
      try {
        return std::stoi(value);
      } catch (...) {
        throw Error(std::string("config: bad integer for ") + name + ": " + value);
      }
    };
    if (key == "digits") digits = to_int("digits");
    else if (key == "order") order = to_int("order");
    else if (key == "m0") m0 = to_int("m0");
    else if (key == "delta") delta = to_int("delta");
    else if (key == "m_cap") m_cap = to_int("m_cap");
    else if (key == "omega") omega = value;
    else if (key == "exponent") exponent = to_int("exponent");
    else if (key == "probe") probe = value;
    else if (key == "pade_degrees") {
      pade_degrees.clear();
      std::istringstream ss(value);
      std::string tok;
      while (std::getline(ss, tok, ',')) pade_degrees.push_back(std::stoi(tok));
    } else if (key == "filter_tol") filter_tol = value;
    else if (key == "newton_digits") newton_digits = to_int("newton_digits");
    else if (key == "newton_grid") newton_grid = to_int("newton_grid");
    else if (key == "newton_tol") newton_tol = value;
    else if (key == "newton_max_iter") newton_max_iter = to_int("newton_max_iter");
    else if (key == "seed_order") seed_order = value;
    else if (key == "loop_center") loop_center = value;
    else if (key == "loop_radius") loop_radius = value;
    else if (key == "loop_steps") loop_steps = to_int("loop_steps");
    else if (key == "loop_count") loop_count = to_int("loop_count");
    else if (key == "instances") instances = to_int("instances");
    else if (key == "scan_eps_min") scan_eps_min = value;
    else if (key == "scan_eps_max") scan_eps_max = value;
    else if (key == "scan_points") scan_points = to_int("scan_points");
    else if (key == "rho_list") rho_list = value;
    else if (key == "r_list") r_list = value;
    else if (key == "fit_k_min") fit_k_min = to_int("fit_k_min");
    else if (key == "fit_k_max") fit_k_max = to_int("fit_k_max");
    else if (key == "out") out = value;
    else if (key == "workers") workers = to_int("workers");
    else throw Error("config: unknown key '" + key + "'");
  }

  void load_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw Error("config: cannot open " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      std::size_t hash_pos = line.find('#');
      if (hash_pos != std::string::npos) line = line.substr(0, hash_pos);
      auto strip = [](std::string s) {
        std::size_t a = s.find_first_not_of(" \t\r");
        if (a == std::string::npos) return std::string();
        std::size_t b = s.find_last_not_of(" \t\r");
        return s.substr(a, b - a + 1);
      };
      line = strip(line);
      if (line.empty()) continue;
      std::size_t eq = line.find('=');
      if (eq == std::string::npos)
        throw Error("config: line " + std::to_string(lineno) + " is not key = value");
      set_key(strip(line.substr(0, eq)), strip(line.substr(eq + 1)));
    }
  }
};

/// Deterministic comma/space list parsing for CLI flag values.
inline std::vector<double> parse_double_list(const std::string& s) {
  std::vector<double> out;
  std::istringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ','))
    if (!tok.empty()) out.push_back(std::stod(tok));
  return out;
}

}  // namespace dsmap
