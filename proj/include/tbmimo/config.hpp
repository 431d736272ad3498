#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace tbmimo {

// Flat key = value experiment description (lists comma-separated, '#' starts
// a comment, "lo:step:hi" expands to an inclusive range for snr_db).
struct ExperimentConfig {
  int tx_elements = 10;
  int rx_elements = 10;
  double spacing_wavelengths = 0.5;

  double sector_min_deg = -5.0;
  double sector_max_deg = 5.0;
  double out_abs_deg = 15.0;
  double in_grid_step_deg = 0.1;
  double out_grid_step_deg = 0.5;

  std::vector<std::string> methods;  // mimo, ts-half, ts-Nhalf, tap,
                                     // tb-spheroidal, tb-minimax
  std::string estimator = "music";   // music | esprit

  std::vector<double> target_angles_deg = {-1.0, 1.0};
  double total_energy = 10.0;
  int num_pulses = 300;

  std::vector<double> snr_db;
  int num_runs = 500;
  std::uint64_t seed = 1;
  double gamma = 0.38;
  double music_grid_step_deg = 0.02;

  int workers = 0;  // 0 = hardware concurrency
  std::string out_dir = "out";
  bool audit = false;

  void validate() const;
};

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::string& path);

// Deterministic round-trippable echo of the configuration.
std::string canonical_config(const ExperimentConfig& cfg);

// FNV-1a over the canonical text.
std::uint64_t config_hash(const ExperimentConfig& cfg);

bool is_known_method(const std::string& name);

}  // namespace tbmimo
