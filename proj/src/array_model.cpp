#include "tbmimo/array_model.hpp"

#include <stdexcept>

namespace tbmimo {

void UlaGeometry::validate() const {
  if (num_elements < 1)
    throw std::invalid_argument("UlaGeometry: num_elements must be >= 1");
  if (!(spacing_wavelengths > 0.0))
    throw std::invalid_argument("UlaGeometry: spacing must be positive");
}

Eigen::VectorXcd steering_vector(const UlaGeometry& g, AngleDeg theta) {
  g.validate();
  const double phase_rate = -2.0 * kPi * g.spacing_wavelengths * std::sin(theta.rad());
  Eigen::VectorXcd a(g.num_elements);
  for (int m = 0; m < g.num_elements; ++m)
    a(m) = std::polar(1.0, phase_rate * m);
  return a;
}

Eigen::VectorXcd steering_derivative(const UlaGeometry& g, AngleDeg theta) {
  g.validate();
  const double s = std::sin(theta.rad());
  const double c = std::cos(theta.rad());
  const double w = 2.0 * kPi * g.spacing_wavelengths;
  Eigen::VectorXcd d(g.num_elements);
  for (int m = 0; m < g.num_elements; ++m) {
    // a_m = exp(-j w m sin t)  =>  a_m' = -j w m cos t * a_m
    d(m) = cxd(0.0, -w * m * c) * std::polar(1.0, -w * m * s);
  }
  return d;
}

Eigen::VectorXcd virtual_steering(const UlaGeometry& tx, const UlaGeometry& rx,
                                  const Eigen::MatrixXcd& C, AngleDeg theta,
                                  double scale) {
  if (C.rows() != tx.num_elements)
    throw std::invalid_argument("virtual_steering: C has " +
                                std::to_string(C.rows()) +
                                " rows, transmit array has " +
                                std::to_string(tx.num_elements) + " elements");
  const Eigen::VectorXcd a = steering_vector(tx, theta);
  const Eigen::VectorXcd b = steering_vector(rx, theta);
  const Eigen::VectorXcd ca = C.adjoint() * a;
  const int K = static_cast<int>(C.cols());
  const int N = rx.num_elements;
  Eigen::VectorXcd v(K * N);
  for (int k = 0; k < K; ++k)
    v.segment(k * N, N) = scale * ca(k) * b;
  return v;
}

}  // namespace tbmimo
