#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cemwave/errors.hpp"

namespace cemwave {

/// One experiment description: grid sizes (the coarse size, J and ell may be
/// sweep lists), time stepping, medium, source and output switches.
struct ExperimentConfig {
  int n_fine = 160;
  std::vector<int> n_coarse = {20};
  std::vector<int> J = {4};
  std::vector<int> ell = {3};
  double tau = 1e-4;
  double T = 0.4;
  std::vector<double> snapshots = {0.1, 0.2, 0.3, 0.4};

  std::string medium = "generator"; // constant | file | generator
  double medium_value = 1.0;
  std::string medium_file;
  double contrast = 1e4;
  std::uint64_t seed = 7;
  int channels = 3;
  int inclusions = 12;

  double rho = 1.0;
  std::string rho_file;

  std::string source = "example1"; // none | example1 | wavelet
  double f0 = 20.0;
  double delta = 0.02;
  double center_x = 0.5, center_y = 0.5;
  bool wavelet_literal_sign = false;

  std::string output_dir = "out";
  bool dump_fields = false;
  bool write_vtk = false;
  bool eigen_csv = false;
  std::string pressure_weight = "rho";     // rho | plain
  std::string gradient_sampling = "center"; // center | cell_average
  bool midpoint_source = false;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

template <typename T>
T parse_scalar(const std::string& v, const std::string& key);

template <>
inline int parse_scalar<int>(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    const int x = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config: cannot parse integer '" + v + "' for key " + key);
  }
}

template <>
inline double parse_scalar<double>(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config: cannot parse number '" + v + "' for key " + key);
  }
}

template <>
inline std::uint64_t parse_scalar<std::uint64_t>(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    const unsigned long long x = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config: cannot parse seed '" + v + "' for key " + key);
  }
}

inline bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config: cannot parse boolean '" + v + "' for key " + key);
}

template <typename T>
std::vector<T> parse_list(const std::string& v, const std::string& key) {
  std::vector<T> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(parse_scalar<T>(item, key));
  }
  return out;
}

} // namespace detail

/// Applies one `key = value` override.
inline void apply_config_entry(ExperimentConfig& c, const std::string& key, const std::string& value) {
  using namespace detail;
  if (key == "n_fine") c.n_fine = parse_scalar<int>(value, key);
  else if (key == "n_coarse") c.n_coarse = parse_list<int>(value, key);
  else if (key == "J") c.J = parse_list<int>(value, key);
  else if (key == "ell") c.ell = parse_list<int>(value, key);
  else if (key == "tau") c.tau = parse_scalar<double>(value, key);
  else if (key == "T") c.T = parse_scalar<double>(value, key);
  else if (key == "snapshots") c.snapshots = parse_list<double>(value, key);
  else if (key == "medium") c.medium = value;
  else if (key == "medium_value") c.medium_value = parse_scalar<double>(value, key);
  else if (key == "medium_file") c.medium_file = value;
  else if (key == "contrast") c.contrast = parse_scalar<double>(value, key);
  else if (key == "seed") c.seed = parse_scalar<std::uint64_t>(value, key);
  else if (key == "channels") c.channels = parse_scalar<int>(value, key);
  else if (key == "inclusions") c.inclusions = parse_scalar<int>(value, key);
  else if (key == "rho") c.rho = parse_scalar<double>(value, key);
  else if (key == "rho_file") c.rho_file = value;
  else if (key == "source") c.source = value;
  else if (key == "f0") c.f0 = parse_scalar<double>(value, key);
  else if (key == "delta") c.delta = parse_scalar<double>(value, key);
  else if (key == "center_x") c.center_x = parse_scalar<double>(value, key);
  else if (key == "center_y") c.center_y = parse_scalar<double>(value, key);
  else if (key == "wavelet_literal_sign") c.wavelet_literal_sign = parse_bool(value, key);
  else if (key == "output_dir") c.output_dir = value;
  else if (key == "dump_fields") c.dump_fields = parse_bool(value, key);
  else if (key == "write_vtk") c.write_vtk = parse_bool(value, key);
  else if (key == "eigen_csv") c.eigen_csv = parse_bool(value, key);
  else if (key == "pressure_weight") c.pressure_weight = value;
  else if (key == "gradient_sampling") c.gradient_sampling = value;
  else if (key == "midpoint_source") c.midpoint_source = parse_bool(value, key);
  else throw ConfigError("config: unknown key '" + key + "'");
}

inline ExperimentConfig parse_config_stream(std::istream& in) {
  ExperimentConfig c;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: line " + std::to_string(lineno) + " is not 'key = value'");
    apply_config_entry(c, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
  }
  return c;
}

inline ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path);
  return parse_config_stream(in);
}

inline void validate_config(const ExperimentConfig& c) {
  if (c.n_coarse.empty() || c.J.empty() || c.ell.empty())
    throw ConfigError("config: empty sweep list");
  if (!(c.tau > 0.0) || !(c.T > 0.0)) throw ConfigError("config: tau and T must be positive");
  const double nt = c.T / c.tau;
  if (std::abs(nt - std::lround(nt)) > 1e-8 * std::max(1.0, nt))
    throw ConfigError("config: T/tau must be an integer");
  for (double t : c.snapshots) {
    const double r = t / c.tau;
    if (t < 0.0 || t > c.T + 1e-12 || std::abs(r - std::lround(r)) > 1e-8 * std::max(1.0, r))
      throw ConfigError("config: snapshot time " + std::to_string(t) +
                        " is not a multiple of tau within [0, T]");
  }
  for (int J : c.J)
    if (J < 1) throw ConfigError("config: J must be >= 1");
  for (int l : c.ell)
    if (l < 1) throw ConfigError("config: ell must be >= 1");
  for (int nc : c.n_coarse)
    if (nc < 2 || c.n_fine % nc != 0)
      throw ConfigError("config: n_coarse " + std::to_string(nc) +
                        " must be >= 2 and divide n_fine " + std::to_string(c.n_fine));
  if (c.medium != "constant" && c.medium != "file" && c.medium != "generator")
    throw ConfigError("config: medium must be constant, file or generator");
  if (c.medium == "file" && c.medium_file.empty())
    throw ConfigError("config: medium = file requires medium_file");
  if (c.source != "none" && c.source != "example1" && c.source != "wavelet")
    throw ConfigError("config: source must be none, example1 or wavelet");
  if (c.pressure_weight != "rho" && c.pressure_weight != "plain")
    throw ConfigError("config: pressure_weight must be rho or plain");
  if (c.gradient_sampling != "center" && c.gradient_sampling != "cell_average")
    throw ConfigError("config: gradient_sampling must be center or cell_average");
  if (!(c.rho > 0.0) && c.rho_file.empty()) throw ConfigError("config: rho must be positive");
}

/// Full resolved configuration, echoed into the output directory.
inline std::string render_config(const ExperimentConfig& c) {
  std::ostringstream out;
  out.imbue(std::locale::classic());
  out.precision(17);
  auto list_int = [](const std::vector<int>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s;
  };
  auto list_dbl = [](const std::vector<double>& v) {
    std::ostringstream s;
    s.imbue(std::locale::classic());
    s.precision(17);
    for (std::size_t i = 0; i < v.size(); ++i) s << (i ? "," : "") << v[i];
    return s.str();
  };
  out << "n_fine = " << c.n_fine << "\n"
      << "n_coarse = " << list_int(c.n_coarse) << "\n"
      << "J = " << list_int(c.J) << "\n"
      << "ell = " << list_int(c.ell) << "\n"
      << "tau = " << c.tau << "\n"
      << "T = " << c.T << "\n"
      << "snapshots = " << list_dbl(c.snapshots) << "\n"
      << "medium = " << c.medium << "\n"
      << "medium_value = " << c.medium_value << "\n"
      << "medium_file = " << c.medium_file << "\n"
      << "contrast = " << c.contrast << "\n"
      << "seed = " << c.seed << "\n"
      << "channels = " << c.channels << "\n"
      << "inclusions = " << c.inclusions << "\n"
      << "rho = " << c.rho << "\n"
      << "rho_file = " << c.rho_file << "\n"
      << "source = " << c.source << "\n"
      << "f0 = " << c.f0 << "\n"
      << "delta = " << c.delta << "\n"
      << "center_x = " << c.center_x << "\n"
      << "center_y = " << c.center_y << "\n"
      << "wavelet_literal_sign = " << (c.wavelet_literal_sign ? "true" : "false") << "\n"
      << "output_dir = " << c.output_dir << "\n"
      << "dump_fields = " << (c.dump_fields ? "true" : "false") << "\n"
      << "write_vtk = " << (c.write_vtk ? "true" : "false") << "\n"
      << "eigen_csv = " << (c.eigen_csv ? "true" : "false") << "\n"
      << "pressure_weight = " << c.pressure_weight << "\n"
      << "gradient_sampling = " << c.gradient_sampling << "\n"
      << "midpoint_source = " << (c.midpoint_source ? "true" : "false") << "\n";
  return out.str();
}

} // namespace cemwave
