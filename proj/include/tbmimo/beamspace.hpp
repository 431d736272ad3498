#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "tbmimo/array_model.hpp"
#include "tbmimo/socp.hpp"

namespace tbmimo {

// Angular sector of interest plus the discretized grids used by the designs.
// out_grid may cover a union of intervals (e.g. both sides of the sector).
struct Sector {
  double theta_min_deg = 0.0;
  double theta_max_deg = 0.0;
  std::vector<double> in_grid;   // degrees, strictly increasing, inside sector
  std::vector<double> out_grid;  // degrees, strictly increasing, outside sector

  void validate() const;
};

// Sector [tmin, tmax] with stopband [-90, -out_abs] U [out_abs, 90].
Sector make_sector(double theta_min_deg, double theta_max_deg,
                   double out_abs_deg, double in_step_deg = 0.1,
                   double out_step_deg = 0.5);

enum class BeamspaceMethod {
  identity,
  spheroidal,
  spheroidal_rotated,
  minimax,
  ts_half,
  ts_n_half,
  tap,
};

std::string to_string(BeamspaceMethod m);

// Transmit beamspace weights, one column per transmitted waveform.
struct BeamspaceMatrix {
  BeamspaceMethod method = BeamspaceMethod::identity;
  Eigen::MatrixXcd entries;  // (transmit elements) x (waveforms)

  int num_waveforms() const { return static_cast<int>(entries.cols()); }
  void validate() const;

  static BeamspaceMatrix identity_matrix(int m);
};

// A = integral over the sector of a(theta) a^H(theta) dtheta (theta in rad).
// Composite Simpson seeded by the in-grid density, refined by doubling until
// the Frobenius-relative change drops below 1e-8; throws if the cap on
// refinement is hit (suggesting a denser grid).
Eigen::MatrixXcd sector_correlation(const UlaGeometry& tx, const Sector& sector,
                                    int max_doublings = 8);

struct SpheroidalDesign {
  BeamspaceMatrix C;              // K principal eigenvectors, unit columns
  Eigen::VectorXd eigenvalues;    // all M eigenvalues of A, descending
};

// K principal eigenvectors of the sector correlation.  Each column's phase is
// fixed so its largest-magnitude entry is real positive.
SpheroidalDesign spheroidal_design(const Eigen::MatrixXcd& A, int K);

// C * Q with Q unitary (checked to 1e-10); preserves C C^H and hence the
// total transmit pattern while redistributing power across waveforms.
BeamspaceMatrix rotate_for_uniformity(const BeamspaceMatrix& C,
                                      const Eigen::MatrixXcd& Q);

// The K=2 rotation [[r, r], [r, -r]], r = sqrt(1/2).
Eigen::MatrixXcd default_rotation_k2();

// Desired beamspace response d(theta) for the minimax fit.
struct PhaseTarget {
  int num_beams = 0;
  std::function<Eigen::VectorXcd(double theta_deg)> d;
};

// d(theta) = gain * [1, exp(-j pi element_offset sin(theta))]: two beams whose
// phase difference mimics a second copy of the receive array displaced by
// element_offset half-wavelengths, so with element_offset = N the 2N virtual
// elements form one contiguous (2N-1)-half-wavelength aperture and the phase
// difference carries a rotational invariance usable by ESPRIT.
PhaseTarget ideal_two_beam_target(double element_offset, double gain);

struct MinimaxResult {
  BeamspaceMatrix C;                     // columns scaled to unit norm
  double objective = 0.0;                // eps* = max in-grid fit residual
  Eigen::VectorXd column_norms;          // pre-normalization column norms
  Eigen::VectorXd out_slack_raw;         // gamma - |C_raw^H a| per out point
  Eigen::VectorXd out_slack_normalized;  // same after unit-norm scaling
  int newton_iterations = 0;
};

// min over C of max_i ||C^H a(theta_i) - d(theta_i)|| subject to
// ||C^H a(theta_j)|| <= gamma on every out-grid point and ||c_k|| <= 1 per
// column, solved as an epigraph second-order cone program; columns are scaled
// to unit norm afterwards (the ball constraint keeps that scaling from
// lifting the out-of-sector response above gamma).
MinimaxResult minimax_design(const UlaGeometry& tx, const Sector& sector,
                             const PhaseTarget& target, double gamma,
                             const SocpOptions& opts = {});

struct BaselineDesign {
  BeamspaceMatrix C;
  UlaGeometry effective_tx;      // differs from tx only for ts_n_half
  double zeta_wavelengths = 0.0; // subaperture separation (ts/tap kinds)
};

// Reference designs: identity (all waveforms, full energy split), ts_half
// (first two elements), ts_n_half (two subapertures separated by n_rx/2
// wavelengths, realized as an effective 2-element geometry since the
// physical grid cannot provide that spacing), tap (block [[w,0],[0,w]] over
// the two overlapping (M-1)-element subarrays).  For tap with no w given the
// weights are computed from `sector` by averaging the two principal
// eigenvectors of the (M-1)-element sector correlation.
BaselineDesign baseline_matrix(BeamspaceMethod kind, const UlaGeometry& tx,
                               const Eigen::VectorXd* w = nullptr,
                               int n_rx = 0, const Sector* sector = nullptr);

struct BeampatternTable {
  std::vector<double> theta_deg;
  Eigen::MatrixXd per_waveform;  // rows = grid, cols = waveforms, |c_k^H a|^2
  Eigen::VectorXd total;         // a^H C C^H a
};

BeampatternTable beampattern(const BeamspaceMatrix& C, const UlaGeometry& tx,
                             const std::vector<double>& grid_deg);

// c^H A c / (2 pi c^H c): fraction of transmit energy landing in the sector
// (the 2 pi normalizes against the full u-circle).
double energy_concentration(const Eigen::VectorXcd& c, const Eigen::MatrixXcd& A);

// Integral over u = sin(theta) in [-1, 1] of |c^H a(u)|^2; for
// half-wavelength spacing this equals 2 ||c||^2 exactly (diagnostic).
double u_space_energy(const Eigen::VectorXcd& c, const UlaGeometry& tx);

// One-call design helpers ------------------------------------------------

// Spheroidal design straight from the sector, optionally rotated (K = 2 uses
// the default rotation).
SpheroidalDesign design_tb_spheroidal(const UlaGeometry& tx, const Sector& sector,
                                      int K, bool rotated);

struct TbMinimaxDesign {
  MinimaxResult result;
  double g_beam = 0.0;        // realized mean in-sector per-beam gain
  double target_gain = 0.0;   // calibrated gain used inside d(theta)
  int calibration_iters = 0;
};

// Two-beam minimax design with the target gain calibrated so the solved
// columns already have ~unit norm (the final exact normalization then cannot
// push the out-of-sector response past gamma).
TbMinimaxDesign design_tb_minimax(const UlaGeometry& tx, const Sector& sector,
                                  int n_rx, double gamma);

}  // namespace tbmimo
