#pragma once

#include <Eigen/Dense>

#include "tbmimo/signal_sim.hpp"

namespace tbmimo {

// d/dtheta of the virtual steering vector (theta in radians):
// scale * [ (C^H a') kron b + (C^H a) kron b' ].
Eigen::VectorXcd manifold_derivative(const UlaGeometry& tx, const UlaGeometry& rx,
                                     const Eigen::MatrixXcd& C, AngleDeg theta,
                                     double scale);

struct CrbResult {
  Eigen::MatrixXd matrix;           // L x L bound, radians^2
  Eigen::VectorXd per_target_deg2;  // diagonal converted to degrees^2
  bool deterministic = false;
};

// Stochastic (Swerling II) bound:
//   CRB = sigma_z^2 / (2 Q) * { Re[ D^H P_perp D  hadamard  G^T ] }^-1
// with P_perp = I - V (V^H V)^-1 V^H and G = S V^H R^-1 V S.
CrbResult stochastic_crb(const Scenario& s);

// Deterministic variant: G replaced by a fixed reflection covariance S_hat
// (defaults to diag of the scenario's reflection variances).
CrbResult deterministic_crb(const Scenario& s,
                            const Eigen::MatrixXd* S_hat = nullptr);

// Independent algebra route for the conventional full-waveform radar
// (identity beamspace): builds u = sqrt(E/M) a kron b and its derivative by
// explicit loops and projects via a QR factor instead of the normal
// equations.  Exists purely to cross-check stochastic_crb.
CrbResult stochastic_crb_traditional_mimo(const Scenario& s);

}  // namespace tbmimo
