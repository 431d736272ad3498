#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tbmimo/config.hpp"
#include "tbmimo/crb.hpp"
#include "tbmimo/estimators.hpp"

namespace tbmimo {

// Everything derived once per method before any Monte Carlo trial runs.
struct MethodSetup {
  std::string name;
  UlaGeometry tx_effective;  // ts-Nhalf swaps in its 2-element geometry
  BeamspaceMatrix C;
  double zeta_wavelengths = 0.0;
  Eigen::VectorXd spheroidal_eigenvalues;  // spheroidal-based designs only
  double minimax_objective = 0.0;          // tb-minimax only
  double minimax_min_out_slack = 0.0;      // tb-minimax only
  double g_beam = 0.0;                     // tb-minimax only
};

MethodSetup build_method(const std::string& name, const ExperimentConfig& cfg);

// Scenario for one (method, snr) cell: unit noise, reflection variance set
// by the per-target SNR definition sigma_alpha^2 / sigma_z^2.
Scenario make_scenario(const MethodSetup& m, const ExperimentConfig& cfg,
                       double snr_db);

struct SweepCell {
  std::string method;
  double snr_db = 0.0;
  double rmse_all_deg = 0.0;
  double rmse_resolved_deg = 0.0;
  double prob_resolution = 0.0;
  double crb_sto_deg = 0.0;  // sqrt(mean per-target bound), degrees
  double crb_det_deg = 0.0;
  int runs = 0;
};

struct TrialRecord {
  int method_idx = 0, snr_idx = 0, run_idx = 0;
  std::vector<double> estimates_deg;
  bool resolved = false;
};

struct MethodFailure {
  std::string method;
  std::string message;
};

struct SweepResult {
  std::vector<SweepCell> cells;  // config method order, then snr order
  std::vector<TrialRecord> audit;
  std::vector<MethodFailure> failures;
  std::vector<MethodSetup> setups;  // successfully designed methods
  std::uint64_t seed = 0;
  std::uint64_t cfg_hash = 0;
};

// Full Monte Carlo sweep.  Per-trial RNG substreams are keyed on
// (seed, method index, snr index, run index) so neither the worker count nor
// the scheduling order can change any number in the output.
SweepResult run_sweep(const ExperimentConfig& cfg);

// sweep.csv, audit.csv (optional), per-method design/beampattern tables, a
// plotting script, the canonical config echo and a run_info.txt (the only
// non-deterministic file) under out_dir.
void emit_outputs(const SweepResult& res, const ExperimentConfig& cfg,
                  const std::string& out_dir);

// Deterministic per-trial seed (exposed for tests).
std::uint64_t trial_seed(std::uint64_t master, int method_idx, int snr_idx,
                         int run_idx);

// One simulated trial -> estimates, shared by run_sweep and the estimate
// subcommand.
TrialOutcome run_single_trial(const MethodSetup& m, const ExperimentConfig& cfg,
                              double snr_db, std::uint64_t seed_for_trial,
                              const MusicGridCache* music_cache,
                              const PhaseLookupTable* lut);

std::vector<double> music_search_grid(const ExperimentConfig& cfg);

}  // namespace tbmimo
