#include "tbmimo/crb.hpp"

#include <cmath>
#include <stdexcept>

namespace tbmimo {

Eigen::VectorXcd manifold_derivative(const UlaGeometry& tx, const UlaGeometry& rx,
                                     const Eigen::MatrixXcd& C, AngleDeg theta,
                                     double scale) {
  if (C.rows() != tx.num_elements)
    throw std::invalid_argument("manifold_derivative: C rows do not match geometry");
  const Eigen::VectorXcd a = steering_vector(tx, theta);
  const Eigen::VectorXcd ap = steering_derivative(tx, theta);
  const Eigen::VectorXcd b = steering_vector(rx, theta);
  const Eigen::VectorXcd bp = steering_derivative(rx, theta);
  const Eigen::VectorXcd ca = C.adjoint() * a;
  const Eigen::VectorXcd cap = C.adjoint() * ap;
  const int K = static_cast<int>(C.cols());
  const int N = rx.num_elements;
  Eigen::VectorXcd d(K * N);
  for (int k = 0; k < K; ++k)
    d.segment(k * N, N) = scale * (cap(k) * b + ca(k) * bp);
  return d;
}

namespace {

CrbResult crb_common(const Scenario& s, const Eigen::MatrixXcd& weight,
                     bool deterministic) {
  const int L = static_cast<int>(s.targets.size());
  const Eigen::MatrixXcd V = s.manifold();
  const int kn = static_cast<int>(V.rows());

  Eigen::MatrixXcd D(kn, L);
  for (int l = 0; l < L; ++l)
    D.col(l) = manifold_derivative(s.tx, s.rx, s.C.entries,
                                   AngleDeg(s.targets[static_cast<size_t>(l)].angle_deg),
                                   s.energy_scale());

  const Eigen::MatrixXcd VhV = V.adjoint() * V;
  Eigen::FullPivLU<Eigen::MatrixXcd> vlu(VhV);
  if (!vlu.isInvertible())
    throw std::runtime_error(
        "crb: steering matrix is rank deficient (coincident targets?)");
  const Eigen::MatrixXcd proj_d = D - V * vlu.solve(V.adjoint() * D);  // P_perp D
  const Eigen::MatrixXcd dpd = D.adjoint() * proj_d;

  const Eigen::MatrixXd fisher_scaled =
      (dpd.array() * weight.transpose().array()).real().matrix();

  Eigen::FullPivLU<Eigen::MatrixXd> flu(fisher_scaled);
  if (!flu.isInvertible())
    throw std::runtime_error(
        "crb: Fisher information is singular; the target geometry is degenerate "
        "for this design");

  CrbResult out;
  out.deterministic = deterministic;
  out.matrix = (s.noise_var / (2.0 * s.num_pulses)) * flu.inverse();
  const double r2d = 180.0 / kPi;
  out.per_target_deg2 = out.matrix.diagonal() * (r2d * r2d);
  return out;
}

}  // namespace

CrbResult stochastic_crb(const Scenario& s) {
  s.validate();
  const int L = static_cast<int>(s.targets.size());
  const Eigen::MatrixXcd V = s.manifold();
  Eigen::VectorXd vars(L);
  for (int l = 0; l < L; ++l)
    vars(l) = s.targets[static_cast<size_t>(l)].reflection_var;

  const Eigen::MatrixXcd R = exact_covariance(s);
  Eigen::LLT<Eigen::MatrixXcd> rllt(R);
  if (rllt.info() != Eigen::Success)
    throw std::runtime_error("crb: covariance is not positive definite");
  const Eigen::MatrixXcd G =
      vars.asDiagonal() * (V.adjoint() * rllt.solve(V)) * vars.asDiagonal();
  return crb_common(s, G, false);
}

CrbResult deterministic_crb(const Scenario& s, const Eigen::MatrixXd* S_hat) {
  s.validate();
  const int L = static_cast<int>(s.targets.size());
  Eigen::MatrixXd sh;
  if (S_hat) {
    if (S_hat->rows() != L || S_hat->cols() != L)
      throw std::invalid_argument("deterministic_crb: S_hat must be L x L");
    sh = *S_hat;
  } else {
    sh = Eigen::MatrixXd::Zero(L, L);
    for (int l = 0; l < L; ++l)
      sh(l, l) = s.targets[static_cast<size_t>(l)].reflection_var;
  }
  return crb_common(s, sh.cast<cxd>(), true);
}

CrbResult stochastic_crb_traditional_mimo(const Scenario& s) {
  s.validate();
  const int M = s.tx.num_elements;
  const int N = s.rx.num_elements;
  if (s.C.num_waveforms() != M ||
      (s.C.entries - Eigen::MatrixXcd::Identity(M, M)).norm() > 1e-14)
    throw std::invalid_argument(
        "stochastic_crb_traditional_mimo: requires the identity beamspace");

  const int L = static_cast<int>(s.targets.size());
  const double scale = std::sqrt(s.total_energy / M);
  Eigen::MatrixXcd U(M * N, L), Ud(M * N, L);
  for (int l = 0; l < L; ++l) {
    const AngleDeg th(s.targets[static_cast<size_t>(l)].angle_deg);
    const double sth = std::sin(th.rad());
    const double cth = std::cos(th.rad());
    const double wa = 2.0 * kPi * s.tx.spacing_wavelengths;
    const double wb = 2.0 * kPi * s.rx.spacing_wavelengths;
    for (int m = 0; m < M; ++m)
      for (int n = 0; n < N; ++n) {
        const double ph = -(wa * m + wb * n) * sth;
        const cxd u = std::polar(scale, ph);
        U(m * N + n, l) = u;
        Ud(m * N + n, l) = u * cxd(0.0, -(wa * m + wb * n) * cth);
      }
  }

  // projector through a thin QR factor rather than the normal equations
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(U);
  const Eigen::MatrixXcd Qthin =
      qr.householderQ() * Eigen::MatrixXcd::Identity(M * N, L);
  const Eigen::MatrixXcd proj_d = Ud - Qthin * (Qthin.adjoint() * Ud);

  Eigen::VectorXd vars(L);
  for (int l = 0; l < L; ++l)
    vars(l) = s.targets[static_cast<size_t>(l)].reflection_var;
  Eigen::MatrixXcd R = U * vars.asDiagonal() * U.adjoint();
  R += s.noise_var * Eigen::MatrixXcd::Identity(M * N, M * N);
  Eigen::PartialPivLU<Eigen::MatrixXcd> rlu(R);
  const Eigen::MatrixXcd G =
      vars.asDiagonal() * (U.adjoint() * rlu.solve(U)) * vars.asDiagonal();

  const Eigen::MatrixXcd dpd = Ud.adjoint() * proj_d;
  const Eigen::MatrixXd fisher_scaled =
      (dpd.array() * G.transpose().array()).real().matrix();
  Eigen::FullPivLU<Eigen::MatrixXd> flu(fisher_scaled);
  if (!flu.isInvertible())
    throw std::runtime_error("stochastic_crb_traditional_mimo: singular Fisher matrix");

  CrbResult out;
  out.matrix = (s.noise_var / (2.0 * s.num_pulses)) * flu.inverse();
  const double r2d = 180.0 / kPi;
  out.per_target_deg2 = out.matrix.diagonal() * (r2d * r2d);
  return out;
}

}  // namespace tbmimo
