#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <complex>

#include "tbmimo/array_model.hpp"
#include "tbmimo/rng.hpp"

using namespace tbmimo;

namespace {

Eigen::MatrixXcd random_matrix(int rows, int cols, SplitMix64& rng) {
  Eigen::MatrixXcd m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) {
      double a, b;
      rng.next_gaussian_pair(a, b);
      m(i, j) = cxd(a, b);
    }
  return m;
}

}  // namespace

TEST_CASE("steering vector matches the closed form at 30 degrees") {
  const UlaGeometry g{3, 0.5};
  const Eigen::VectorXcd a = steering_vector(g, AngleDeg(30.0));
  REQUIRE(a.size() == 3);
  CHECK(std::abs(a(0) - cxd(1.0, 0.0)) < 1e-12);
  CHECK(std::abs(a(1) - cxd(0.0, -1.0)) < 1e-12);  // exp(-j pi sin 30) = -j
  CHECK(std::abs(a(2) - cxd(-1.0, 0.0)) < 1e-12);
}

TEST_CASE("steering vector has unit-magnitude entries and norm sqrt(M)") {
  SplitMix64 rng{12345};
  for (int trial = 0; trial < 20; ++trial) {
    const int m = 1 + static_cast<int>(rng.next() % 12);
    const double theta = -80.0 + 160.0 * rng.next_unit();
    const Eigen::VectorXcd a = steering_vector(UlaGeometry{m, 0.5}, AngleDeg(theta));
    CHECK(a(0) == cxd(1.0, 0.0));
    for (int i = 0; i < m; ++i) CHECK(std::abs(std::abs(a(i)) - 1.0) < 1e-14);
    CHECK(a.norm() == doctest::Approx(std::sqrt(double(m))).epsilon(1e-14));
  }
}

TEST_CASE("steering derivative matches central finite differences") {
  const UlaGeometry g{10, 0.5};
  const double h_deg = 5e-4;
  for (double theta : {-40.0, -5.0, 0.0, 3.0, 17.0, 62.0}) {
    const Eigen::VectorXcd d = steering_derivative(g, AngleDeg(theta));
    const Eigen::VectorXcd hi = steering_vector(g, AngleDeg(theta + h_deg));
    const Eigen::VectorXcd lo = steering_vector(g, AngleDeg(theta - h_deg));
    const Eigen::VectorXcd fd = (hi - lo) / (2.0 * deg2rad(h_deg));
    CHECK((d - fd).norm() / fd.norm() < 1e-6);
  }
}

TEST_CASE("steering derivative vanishes at endfire") {
  const UlaGeometry g{6, 0.5};
  CHECK(steering_derivative(g, AngleDeg(90.0)).norm() < 1e-12);
  CHECK(steering_derivative(g, AngleDeg(-90.0)).norm() < 1e-12);
}

TEST_CASE("virtual steering is the kron of beamspace and receive responses") {
  SplitMix64 rng{777};
  const UlaGeometry tx{4, 0.5};
  const UlaGeometry rx{3, 0.5};
  const Eigen::MatrixXcd C = random_matrix(4, 2, rng);
  const double scale = 1.7;
  const AngleDeg theta(12.0);

  const Eigen::VectorXcd v = virtual_steering(tx, rx, C, theta, scale);
  REQUIRE(v.size() == 2 * 3);

  const Eigen::VectorXcd beams = C.adjoint() * steering_vector(tx, theta);
  const Eigen::VectorXcd b = steering_vector(rx, theta);
  for (int k = 0; k < 2; ++k)
    for (int n = 0; n < 3; ++n)
      CHECK(std::abs(v(k * 3 + n) - scale * beams(k) * b(n)) < 1e-12);
}

TEST_CASE("identity beamspace reduces the virtual array to a kron b") {
  const UlaGeometry g{2, 0.5};
  const Eigen::MatrixXcd I2 = Eigen::MatrixXcd::Identity(2, 2);
  const AngleDeg theta(-23.0);
  const Eigen::VectorXcd v = virtual_steering(g, g, I2, theta, 1.0);
  const Eigen::VectorXcd a = steering_vector(g, theta);
  for (int k = 0; k < 2; ++k)
    for (int n = 0; n < 2; ++n)
      CHECK(std::abs(v(k * 2 + n) - a(k) * a(n)) < 1e-14);
}

TEST_CASE("angles beyond endfire are rejected") {
  CHECK_THROWS_AS(AngleDeg(90.0001), std::domain_error);
  CHECK_THROWS_AS(AngleDeg(-91.0), std::domain_error);
  CHECK_THROWS_AS(AngleDeg(std::nan("")), std::domain_error);
  CHECK_NOTHROW(AngleDeg(90.0));
  CHECK_NOTHROW(AngleDeg(-90.0));
}

TEST_CASE("geometry validation rejects nonsense") {
  CHECK_THROWS(UlaGeometry{0, 0.5}.validate());
  CHECK_THROWS(UlaGeometry{-3, 0.5}.validate());
  CHECK_THROWS(UlaGeometry{4, 0.0}.validate());
  CHECK_THROWS(UlaGeometry{4, -0.5}.validate());
  CHECK_NOTHROW(UlaGeometry{1, 0.5}.validate());
}

TEST_CASE("virtual steering rejects a beamspace with the wrong row count") {
  const UlaGeometry tx{4, 0.5};
  const UlaGeometry rx{3, 0.5};
  const Eigen::MatrixXcd bad = Eigen::MatrixXcd::Identity(3, 2);
  CHECK_THROWS(virtual_steering(tx, rx, bad, AngleDeg(0.0), 1.0));
}
