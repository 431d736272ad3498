#pragma once

#include <Eigen/Dense>
#include <complex>

#include "tbmimo/angles.hpp"

namespace tbmimo {

using cxd = std::complex<double>;

// Uniform linear array, element m sits at m * spacing_wavelengths * lambda
// along the array axis (m = 0 .. num_elements-1).
struct UlaGeometry {
  int num_elements = 0;
  double spacing_wavelengths = 0.5;

  void validate() const;
};

// Steering vector: element m = exp(-j * 2*pi * spacing * m * sin(theta)).
Eigen::VectorXcd steering_vector(const UlaGeometry& g, AngleDeg theta);

// d/dtheta of the steering vector, theta in RADIANS (per-radian derivative).
Eigen::VectorXcd steering_derivative(const UlaGeometry& g, AngleDeg theta);

// Beamspace virtual steering vector: scale * (C^H a(theta)) kron b(theta).
// Entry k*N + n equals scale * (C^H a)_k * b_n.  C must have tx.num_elements
// rows; pass the identity for a conventional (full waveform) MIMO model.
Eigen::VectorXcd virtual_steering(const UlaGeometry& tx, const UlaGeometry& rx,
                                  const Eigen::MatrixXcd& C, AngleDeg theta,
                                  double scale);

}  // namespace tbmimo
