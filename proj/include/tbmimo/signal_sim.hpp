#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "tbmimo/array_model.hpp"
#include "tbmimo/beamspace.hpp"

namespace tbmimo {

struct Target {
  double angle_deg = 0.0;
  double reflection_var = 1.0;  // average reflected power, Swerling II
};

// Everything needed to synthesize beamspace snapshots for one method cell.
// tx is the effective transmit geometry (C.entries.rows() must match it).
struct Scenario {
  UlaGeometry tx;
  UlaGeometry rx;
  BeamspaceMatrix C;
  std::vector<Target> targets;
  double total_energy = 1.0;  // E, split evenly across waveforms
  double noise_var = 1.0;     // sigma_z^2 per virtual element
  int num_pulses = 1;         // Q

  void validate() const;
  double energy_scale() const;           // sqrt(E / waveforms)
  Eigen::MatrixXcd manifold() const;     // V, (K N) x L virtual steering
  std::uint64_t fingerprint() const;
};

struct SimOptions {
  bool fix_unit_reflection = false;  // debug hook: alpha = 1 for all targets
};

struct SnapshotSet {
  Eigen::MatrixXcd data;  // (K N) x Q, one pulse per column
  std::uint64_t seed = 0;
  std::uint64_t scenario_fingerprint = 0;
};

// y(tau) = V alpha(tau) + z(tau); alpha and z redrawn each pulse from
// substreams keyed by (seed, pulse) so results do not depend on scheduling.
SnapshotSet simulate_snapshots(const Scenario& s, std::uint64_t seed,
                               const SimOptions& opts = {});

// R = V S V^H + sigma_z^2 I
Eigen::MatrixXcd exact_covariance(const Scenario& s);

// (1/Q) Y Y^H, re-Hermitianized against round-off
Eigen::MatrixXcd sample_covariance(const Eigen::MatrixXcd& snapshots);

// Gram matrix of the M orthonormal baseband waveforms
// phi_m(t) = sqrt(1/T) exp(j 2 pi m t / T), integrated on a uniform grid.
Eigen::MatrixXcd waveform_gram(int num_waveforms, int samples_per_pulse);

}  // namespace tbmimo
