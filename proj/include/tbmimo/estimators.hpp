#pragma once

#include <Eigen/Dense>
#include <vector>

#include "tbmimo/array_model.hpp"
#include "tbmimo/beamspace.hpp"

namespace tbmimo {

struct SubspaceDecomp {
  Eigen::MatrixXcd signal;      // columns spanning the L principal directions
  Eigen::MatrixXcd noise;       // orthogonal complement
  Eigen::VectorXd eigenvalues;  // all eigenvalues, descending
};

// Eigendecomposition of a (sample) covariance into signal/noise subspaces.
// Rejects inputs that are not Hermitian within 1e-8 relative.
SubspaceDecomp subspace_decompose(const Eigen::MatrixXcd& R, int num_sources);

// Precomputed per-grid-point quantities shared by every trial of a method.
struct MusicGridCache {
  std::vector<double> theta_deg;
  Eigen::MatrixXcd vtilde;    // unscaled virtual steering per grid point
  Eigen::VectorXd numerator;  // N * ||C^H a||^2
};

MusicGridCache make_music_cache(const BeamspaceMatrix& C, const UlaGeometry& tx,
                                const UlaGeometry& rx,
                                const std::vector<double>& grid_deg);

// f(theta) = N a^H C C^H a / (v^H (I - Es Es^H) v); strictly positive.
std::vector<double> music_spectrum(const SubspaceDecomp& d, const MusicGridCache& cache);
std::vector<double> music_spectrum(const SubspaceDecomp& d, const BeamspaceMatrix& C,
                                   const UlaGeometry& tx, const UlaGeometry& rx,
                                   const std::vector<double>& grid_deg);

struct PeakSet {
  std::vector<double> angles_deg;   // ascending
  bool fewer_than_requested = false;
};

// Up to `count` tallest interior local maxima, each refined by a three-point
// parabola through the log spectrum.  Grid step must be <= 0.05 deg.
PeakSet find_peaks(const std::vector<double>& grid_deg,
                   const std::vector<double>& spectrum, int count);

// Unwrapped phase difference Omega(theta) = arg(c2^H a / c1^H a) between the
// two beams, anchored so the value nearest the grid midpoint lies in
// (-pi, pi].  Must be strictly monotone to be invertible.
struct PhaseLookupTable {
  std::vector<double> theta_deg;
  std::vector<double> omega;      // radians, unwrapped
  std::vector<double> amplitude;  // |c2^H a| / |c1^H a|
  bool decreasing = false;

  double omega_at(double theta_deg_query) const;
  // theta for every 2*pi-shifted copy of the principal arg inside the table
  std::vector<double> invert_candidates(double omega_principal) const;
};

PhaseLookupTable build_phase_lut(const BeamspaceMatrix& C, const UlaGeometry& tx,
                                 const std::vector<double>& grid_deg);

enum class EspritPartition {
  tb_halves,     // two beams: rows split N | N
  mimo_overlap,  // full waveform set: first/last (M-1)*N rows
};

struct EspritOptions {
  bool tls = false;  // total-least-squares rotation solve (default LS)
};

struct EspritResult {
  std::vector<double> angles_deg;  // ascending, one per source
  std::vector<bool> clamped;       // true where the arg fell outside the table
};

// Rotational-invariance estimator.  tb_halves maps eigenvalue args through
// the lookup table (candidates beyond one principal branch are disambiguated
// by correlating the eigenvector image E1 w against the receive steering
// vector); mimo_overlap inverts the single-element phase shift analytically.
EspritResult esprit_estimate(const SubspaceDecomp& d, EspritPartition part,
                             const UlaGeometry& tx, const UlaGeometry& rx,
                             const PhaseLookupTable* lut,
                             const EspritOptions& opts = {});

// Per-truth absolute errors: each true angle is charged the distance to its
// nearest estimate (ties toward the smaller estimate index).
std::vector<double> truth_errors(const std::vector<double>& estimates_deg,
                                 const std::vector<double>& truth_deg);

// True when at least two estimates exist and every per-truth error is at
// most half of the smallest spacing between true angles.
bool resolution_check(const std::vector<double>& estimates_deg,
                      const std::vector<double>& truth_deg);

struct TrialOutcome {
  std::vector<double> estimates_deg;
  bool resolved = false;
};

enum class RmseVariant { all_runs, resolved_only };

// sqrt of the mean squared per-truth error over runs (and targets).
// resolved_only averages over resolved runs; NaN when none resolved.
double rmse(const std::vector<TrialOutcome>& runs,
            const std::vector<double>& truth_deg, RmseVariant variant);

struct Aggregate {
  double rmse_all = 0.0;
  double rmse_resolved = 0.0;  // NaN when no run resolved
  double prob_resolution = 0.0;
  int resolved_count = 0;
};

Aggregate aggregate_trials(const std::vector<TrialOutcome>& runs,
                           const std::vector<double>& truth_deg);

}  // namespace tbmimo
