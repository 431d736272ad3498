#include "tbmimo/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace tbmimo {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  size_t pos = 0;
  double d;
  try {
    d = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad number for " + key + ": '" + v + "'");
  }
  if (pos != v.size())
    throw std::invalid_argument("config: trailing junk for " + key + ": '" + v + "'");
  return d;
}

long long parse_int(const std::string& key, const std::string& v) {
  const double d = parse_double(key, v);
  if (d != std::floor(d))
    throw std::invalid_argument("config: " + key + " must be an integer");
  return static_cast<long long>(d);
}

std::vector<double> parse_double_list(const std::string& key, const std::string& v) {
  // "lo:step:hi" expands inclusively; otherwise a comma list
  if (v.find(':') != std::string::npos) {
    const auto parts = [&] {
      std::vector<std::string> p;
      std::stringstream ss(v);
      std::string item;
      while (std::getline(ss, item, ':')) p.push_back(trim(item));
      return p;
    }();
    if (parts.size() != 3)
      throw std::invalid_argument("config: range for " + key + " must be lo:step:hi");
    const double lo = parse_double(key, parts[0]);
    const double step = parse_double(key, parts[1]);
    const double hi = parse_double(key, parts[2]);
    if (!(step > 0.0))
      throw std::invalid_argument("config: range step for " + key + " must be positive");
    std::vector<double> out;
    for (double x = lo; x <= hi + 1e-9; x += step) out.push_back(x);
    return out;
  }
  std::vector<double> out;
  for (const auto& item : split_list(v)) out.push_back(parse_double(key, item));
  return out;
}

std::string fmt9(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string join_doubles(const std::vector<double>& v) {
  std::string s;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    s += fmt9(v[i]);
  }
  return s;
}

}  // namespace

bool is_known_method(const std::string& name) {
  static const char* known[] = {"mimo",       "ts-half",      "ts-Nhalf",
                                "tap",        "tb-spheroidal", "tb-minimax"};
  return std::any_of(std::begin(known), std::end(known),
                     [&](const char* k) { return name == k; });
}

void ExperimentConfig::validate() const {
  if (tx_elements < 1 || rx_elements < 1)
    throw std::invalid_argument("config: element counts must be positive");
  if (!(spacing_wavelengths > 0.0))
    throw std::invalid_argument("config: spacing must be positive");
  if (!(sector_min_deg < sector_max_deg))
    throw std::invalid_argument("config: sector_min must be < sector_max");
  if (out_abs_deg <= std::max(std::abs(sector_min_deg), std::abs(sector_max_deg)))
    throw std::invalid_argument("config: out_abs_deg must clear the sector");
  if (!(in_grid_step_deg > 0.0) || !(out_grid_step_deg > 0.0) ||
      !(music_grid_step_deg > 0.0))
    throw std::invalid_argument("config: grid steps must be positive");
  if (methods.empty()) throw std::invalid_argument("config: methods list is empty");
  for (const auto& m : methods)
    if (!is_known_method(m))
      throw std::invalid_argument("config: unknown method '" + m + "'");
  if (estimator != "music" && estimator != "esprit")
    throw std::invalid_argument("config: estimator must be music or esprit");
  if (target_angles_deg.empty())
    throw std::invalid_argument("config: no targets");
  for (double t : target_angles_deg)
    if (t < sector_min_deg || t > sector_max_deg)
      throw std::invalid_argument("config: target outside the sector");
  if (!(total_energy > 0.0))
    throw std::invalid_argument("config: total_energy must be positive");
  if (num_pulses < 1) throw std::invalid_argument("config: num_pulses must be >= 1");
  if (snr_db.empty()) throw std::invalid_argument("config: snr_db list is empty");
  if (num_runs < 1) throw std::invalid_argument("config: num_runs must be >= 1");
  if (!(gamma > 0.0)) throw std::invalid_argument("config: gamma must be positive");
  if (workers < 0) throw std::invalid_argument("config: workers must be >= 0");
  if (out_dir.empty()) throw std::invalid_argument("config: out_dir is empty");
}

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig cfg;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                  " has no '='");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (val.empty())
      throw std::invalid_argument("config: empty value for " + key);

    if (key == "tx_elements") cfg.tx_elements = static_cast<int>(parse_int(key, val));
    else if (key == "rx_elements") cfg.rx_elements = static_cast<int>(parse_int(key, val));
    else if (key == "spacing_wavelengths") cfg.spacing_wavelengths = parse_double(key, val);
    else if (key == "sector_min_deg") cfg.sector_min_deg = parse_double(key, val);
    else if (key == "sector_max_deg") cfg.sector_max_deg = parse_double(key, val);
    else if (key == "out_abs_deg") cfg.out_abs_deg = parse_double(key, val);
    else if (key == "in_grid_step_deg") cfg.in_grid_step_deg = parse_double(key, val);
    else if (key == "out_grid_step_deg") cfg.out_grid_step_deg = parse_double(key, val);
    else if (key == "methods") cfg.methods = split_list(val);
    else if (key == "estimator") cfg.estimator = val;
    else if (key == "target_angles_deg") cfg.target_angles_deg = parse_double_list(key, val);
    else if (key == "total_energy") cfg.total_energy = parse_double(key, val);
    else if (key == "num_pulses") cfg.num_pulses = static_cast<int>(parse_int(key, val));
    else if (key == "snr_db") cfg.snr_db = parse_double_list(key, val);
    else if (key == "num_runs") cfg.num_runs = static_cast<int>(parse_int(key, val));
    else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(parse_int(key, val));
    else if (key == "gamma") cfg.gamma = parse_double(key, val);
    else if (key == "music_grid_step_deg") cfg.music_grid_step_deg = parse_double(key, val);
    else if (key == "workers") cfg.workers = static_cast<int>(parse_int(key, val));
    else if (key == "out_dir") cfg.out_dir = val;
    else if (key == "audit") cfg.audit = (parse_int(key, val) != 0);
    else
      throw std::invalid_argument("config: unknown key '" + key + "' on line " +
                                  std::to_string(lineno));
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("config: cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str());
}

std::string canonical_config(const ExperimentConfig& cfg) {
  std::string s;
  s += "tx_elements = " + std::to_string(cfg.tx_elements) + "\n";
  s += "rx_elements = " + std::to_string(cfg.rx_elements) + "\n";
  s += "spacing_wavelengths = " + fmt9(cfg.spacing_wavelengths) + "\n";
  s += "sector_min_deg = " + fmt9(cfg.sector_min_deg) + "\n";
  s += "sector_max_deg = " + fmt9(cfg.sector_max_deg) + "\n";
  s += "out_abs_deg = " + fmt9(cfg.out_abs_deg) + "\n";
  s += "in_grid_step_deg = " + fmt9(cfg.in_grid_step_deg) + "\n";
  s += "out_grid_step_deg = " + fmt9(cfg.out_grid_step_deg) + "\n";
  std::string ms;
  for (size_t i = 0; i < cfg.methods.size(); ++i) {
    if (i) ms += ", ";
    ms += cfg.methods[i];
  }
  s += "methods = " + ms + "\n";
  s += "estimator = " + cfg.estimator + "\n";
  s += "target_angles_deg = " + join_doubles(cfg.target_angles_deg) + "\n";
  s += "total_energy = " + fmt9(cfg.total_energy) + "\n";
  s += "num_pulses = " + std::to_string(cfg.num_pulses) + "\n";
  s += "snr_db = " + join_doubles(cfg.snr_db) + "\n";
  s += "num_runs = " + std::to_string(cfg.num_runs) + "\n";
  s += "seed = " + std::to_string(cfg.seed) + "\n";
  s += "gamma = " + fmt9(cfg.gamma) + "\n";
  s += "music_grid_step_deg = " + fmt9(cfg.music_grid_step_deg) + "\n";
  s += "workers = " + std::to_string(cfg.workers) + "\n";
  s += "out_dir = " + cfg.out_dir + "\n";
  s += "audit = " + std::string(cfg.audit ? "1" : "0") + "\n";
  return s;
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
  const std::string text = canonical_config(cfg);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) h = (h ^ c) * 0x100000001b3ULL;
  return h;
}

}  // namespace tbmimo
