#include "tbmimo/beamspace.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <cmath>
#include <stdexcept>

namespace tbmimo {

namespace {

std::vector<double> linspace_step(double lo, double hi, double step) {
  std::vector<double> g;
  const int n = static_cast<int>(std::floor((hi - lo) / step + 1e-9));
  g.reserve(n + 1);
  for (int i = 0; i <= n; ++i) g.push_back(lo + i * step);
  if (g.back() < hi - 1e-9) g.push_back(hi);
  return g;
}

// composite Simpson of a(th) a^H(th) over [lo, hi] radians with n intervals
Eigen::MatrixXcd simpson_outer(const UlaGeometry& tx, double lo, double hi, int n) {
  const int M = tx.num_elements;
  const double h = (hi - lo) / n;
  Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(M, M);
  for (int i = 0; i <= n; ++i) {
    const double th = lo + i * h;
    const Eigen::VectorXcd a = steering_vector(tx, AngleDeg(rad2deg(th)));
    double wgt = (i == 0 || i == n) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    acc.noalias() += wgt * (a * a.adjoint());
  }
  return (h / 3.0) * acc;
}

}  // namespace

void Sector::validate() const {
  if (!(theta_min_deg < theta_max_deg))
    throw std::invalid_argument("Sector: theta_min must be < theta_max");
  if (theta_min_deg < -90.0 || theta_max_deg > 90.0)
    throw std::invalid_argument("Sector: sector must lie inside [-90, 90]");
  if (in_grid.empty()) throw std::invalid_argument("Sector: empty in_grid");
  auto strictly_increasing = [](const std::vector<double>& g) {
    for (size_t i = 1; i < g.size(); ++i)
      if (!(g[i] > g[i - 1])) return false;
    return true;
  };
  if (!strictly_increasing(in_grid))
    throw std::invalid_argument("Sector: in_grid not strictly increasing");
  if (!strictly_increasing(out_grid))
    throw std::invalid_argument("Sector: out_grid not strictly increasing");
  for (double th : in_grid)
    if (th < theta_min_deg - 1e-12 || th > theta_max_deg + 1e-12)
      throw std::invalid_argument("Sector: in_grid point outside sector");
  for (double th : out_grid) {
    if (th >= theta_min_deg && th <= theta_max_deg)
      throw std::invalid_argument("Sector: out_grid point inside sector");
    if (th < -90.0 || th > 90.0)
      throw std::invalid_argument("Sector: out_grid point outside [-90, 90]");
  }
}

Sector make_sector(double theta_min_deg, double theta_max_deg, double out_abs_deg,
                   double in_step_deg, double out_step_deg) {
  Sector s;
  s.theta_min_deg = theta_min_deg;
  s.theta_max_deg = theta_max_deg;
  s.in_grid = linspace_step(theta_min_deg, theta_max_deg, in_step_deg);
  auto left = linspace_step(-90.0, -out_abs_deg, out_step_deg);
  auto right = linspace_step(out_abs_deg, 90.0, out_step_deg);
  s.out_grid = left;
  s.out_grid.insert(s.out_grid.end(), right.begin(), right.end());
  s.validate();
  return s;
}

std::string to_string(BeamspaceMethod m) {
  switch (m) {
    case BeamspaceMethod::identity: return "identity";
    case BeamspaceMethod::spheroidal: return "spheroidal";
    case BeamspaceMethod::spheroidal_rotated: return "spheroidal-rotated";
    case BeamspaceMethod::minimax: return "minimax";
    case BeamspaceMethod::ts_half: return "ts-half";
    case BeamspaceMethod::ts_n_half: return "ts-N-half";
    case BeamspaceMethod::tap: return "tap";
  }
  return "unknown";
}

void BeamspaceMatrix::validate() const {
  if (entries.rows() < 1 || entries.cols() < 1)
    throw std::invalid_argument("BeamspaceMatrix: empty matrix");
  if (!entries.allFinite())
    throw std::invalid_argument("BeamspaceMatrix: non-finite entries");
}

BeamspaceMatrix BeamspaceMatrix::identity_matrix(int m) {
  BeamspaceMatrix b;
  b.method = BeamspaceMethod::identity;
  b.entries = Eigen::MatrixXcd::Identity(m, m);
  return b;
}

Eigen::MatrixXcd sector_correlation(const UlaGeometry& tx, const Sector& sector,
                                    int max_doublings) {
  tx.validate();
  sector.validate();
  const double lo = deg2rad(sector.theta_min_deg);
  const double hi = deg2rad(sector.theta_max_deg);
  int n = static_cast<int>(sector.in_grid.size()) - 1;
  if (n < 16) n = 16;
  if (n % 2 == 1) ++n;

  Eigen::MatrixXcd prev = simpson_outer(tx, lo, hi, n);
  for (int pass = 0; pass < max_doublings; ++pass) {
    n *= 2;
    Eigen::MatrixXcd cur = simpson_outer(tx, lo, hi, n);
    const double rel = (cur - prev).norm() / cur.norm();
    if (rel < 1e-8) return cur;
    prev = cur;
  }
  throw std::runtime_error(
      "sector_correlation: quadrature did not settle; supply a denser in-sector "
      "grid (try step <= " +
      std::to_string((sector.in_grid[1] - sector.in_grid[0]) / 4.0) + " deg)");
}

SpheroidalDesign spheroidal_design(const Eigen::MatrixXcd& A, int K) {
  const int M = static_cast<int>(A.rows());
  if (A.cols() != M) throw std::invalid_argument("spheroidal_design: A not square");
  if (K < 1 || K > M)
    throw std::invalid_argument("spheroidal_design: K must be in [1, M]");
  if ((A - A.adjoint()).norm() > 1e-8 * std::max(1.0, A.norm()))
    throw std::invalid_argument("spheroidal_design: A not Hermitian");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(A);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("spheroidal_design: eigendecomposition failed");

  SpheroidalDesign out;
  out.eigenvalues = es.eigenvalues().reverse();
  if (out.eigenvalues(M - 1) < -1e-10 * std::max(1.0, out.eigenvalues(0)))
    throw std::invalid_argument("spheroidal_design: A not positive semidefinite");

  Eigen::MatrixXcd C(M, K);
  for (int k = 0; k < K; ++k) {
    Eigen::VectorXcd v = es.eigenvectors().col(M - 1 - k);
    // deterministic phase: largest-magnitude entry made real positive
    int imax = 0;
    double best = 0;
    for (int m = 0; m < M; ++m)
      if (std::abs(v(m)) > best) { best = std::abs(v(m)); imax = m; }
    v *= std::conj(v(imax)) / std::abs(v(imax));
    C.col(k) = v;
  }
  out.C.method = BeamspaceMethod::spheroidal;
  out.C.entries = std::move(C);
  return out;
}

BeamspaceMatrix rotate_for_uniformity(const BeamspaceMatrix& C,
                                      const Eigen::MatrixXcd& Q) {
  const int K = C.num_waveforms();
  if (Q.rows() != K || Q.cols() != K)
    throw std::invalid_argument("rotate_for_uniformity: Q must be KxK");
  if ((Q.adjoint() * Q - Eigen::MatrixXcd::Identity(K, K)).norm() > 1e-10)
    throw std::invalid_argument("rotate_for_uniformity: Q not unitary");
  BeamspaceMatrix out;
  out.method = C.method == BeamspaceMethod::spheroidal
                   ? BeamspaceMethod::spheroidal_rotated
                   : C.method;
  out.entries = C.entries * Q;
  return out;
}

Eigen::MatrixXcd default_rotation_k2() {
  const double r = std::sqrt(0.5);
  Eigen::MatrixXcd Q(2, 2);
  Q << r, r, r, -r;
  return Q;
}

PhaseTarget ideal_two_beam_target(double element_offset, double gain) {
  if (!(element_offset > 0.0))
    throw std::invalid_argument("ideal_two_beam_target: element_offset must be > 0");
  PhaseTarget t;
  t.num_beams = 2;
  t.d = [element_offset, gain](double theta_deg) {
    Eigen::VectorXcd d(2);
    d(0) = gain;
    d(1) = gain * std::polar(1.0, -kPi * element_offset * std::sin(deg2rad(theta_deg)));
    return d;
  };
  return t;
}

namespace {

// rows of the real-stacked map x -> C^H a(theta) for one beam:
//   Re(c^H a) = Re(a)^T Re(c) + Im(a)^T Im(c)
//   Im(c^H a) = Im(a)^T Re(c) - Re(a)^T Im(c)
SocpCone angle_cone(const Eigen::VectorXcd& a, const Eigen::VectorXcd* d, int K) {
  const int M = static_cast<int>(a.size());
  SocpCone cone;
  cone.A = Eigen::MatrixXd::Zero(2 * K, 2 * M * K);
  cone.b = Eigen::VectorXd::Zero(2 * K);
  const Eigen::VectorXd u = a.real();
  const Eigen::VectorXd w = a.imag();
  for (int k = 0; k < K; ++k) {
    cone.A.block(2 * k, 2 * M * k, 1, M) = u.transpose();
    cone.A.block(2 * k, 2 * M * k + M, 1, M) = w.transpose();
    cone.A.block(2 * k + 1, 2 * M * k, 1, M) = w.transpose();
    cone.A.block(2 * k + 1, 2 * M * k + M, 1, M) = -u.transpose();
    if (d) {
      cone.b(2 * k) = (*d)(k).real();
      cone.b(2 * k + 1) = (*d)(k).imag();
    }
  }
  return cone;
}

Eigen::MatrixXcd unpack_columns(const Eigen::VectorXd& x, int M, int K) {
  Eigen::MatrixXcd C(M, K);
  for (int k = 0; k < K; ++k)
    for (int m = 0; m < M; ++m)
      C(m, k) = cxd(x(2 * M * k + m), x(2 * M * k + M + m));
  return C;
}

}  // namespace

MinimaxResult minimax_design(const UlaGeometry& tx, const Sector& sector,
                             const PhaseTarget& target, double gamma,
                             const SocpOptions& opts) {
  tx.validate();
  sector.validate();
  if (!(gamma > 0.0))
    throw std::invalid_argument("minimax_design: gamma must be positive");
  if (target.num_beams < 1 || !target.d)
    throw std::invalid_argument("minimax_design: empty phase target");

  const int M = tx.num_elements;
  const int K = target.num_beams;

  MinimaxSocp prob;
  for (double th : sector.in_grid) {
    const Eigen::VectorXcd a = steering_vector(tx, AngleDeg(th));
    const Eigen::VectorXcd d = target.d(th);
    if (d.size() != K)
      throw std::invalid_argument("minimax_design: target beam count mismatch");
    prob.fit.push_back(angle_cone(a, &d, K));
  }
  // the out-of-sector caps plus one unit ball per column; the ball keeps the
  // final unit-norm scaling a near no-op so it cannot break cap feasibility
  prob.cap_radius.resize(static_cast<Eigen::Index>(sector.out_grid.size()) + K);
  for (size_t j = 0; j < sector.out_grid.size(); ++j) {
    const Eigen::VectorXcd a = steering_vector(tx, AngleDeg(sector.out_grid[j]));
    prob.cap.push_back(angle_cone(a, nullptr, K));
    prob.cap_radius(static_cast<Eigen::Index>(j)) = gamma;
  }
  for (int k = 0; k < K; ++k) {
    SocpCone ball;
    ball.A = Eigen::MatrixXd::Zero(2 * M, 2 * M * K);
    ball.A.block(0, 2 * M * k, 2 * M, 2 * M).setIdentity();
    ball.b = Eigen::VectorXd::Zero(2 * M);
    prob.cap.push_back(std::move(ball));
    prob.cap_radius(static_cast<Eigen::Index>(sector.out_grid.size()) + k) = 1.0;
  }

  SocpSolution s = solve_minimax_socp(prob, opts);
  if (!s.converged)
    throw std::runtime_error("minimax_design: cone solver did not converge");

  const Eigen::MatrixXcd raw = unpack_columns(s.x, M, K);

  MinimaxResult res;
  res.newton_iterations = s.newton_iters;
  res.objective = 0.0;
  for (double th : sector.in_grid) {
    const Eigen::VectorXcd a = steering_vector(tx, AngleDeg(th));
    res.objective = std::max(res.objective,
                             (raw.adjoint() * a - target.d(th)).norm());
  }
  res.column_norms.resize(K);
  for (int k = 0; k < K; ++k) res.column_norms(k) = raw.col(k).norm();

  Eigen::MatrixXcd unit = raw;
  for (int k = 0; k < K; ++k) {
    if (res.column_norms(k) < 1e-12)
      throw std::runtime_error("minimax_design: solved column is numerically zero");
    unit.col(k) /= res.column_norms(k);
  }

  const auto out_n = static_cast<Eigen::Index>(sector.out_grid.size());
  res.out_slack_raw.resize(out_n);
  res.out_slack_normalized.resize(out_n);
  for (Eigen::Index j = 0; j < out_n; ++j) {
    const Eigen::VectorXcd a =
        steering_vector(tx, AngleDeg(sector.out_grid[static_cast<size_t>(j)]));
    res.out_slack_raw(j) = gamma - (raw.adjoint() * a).norm();
    res.out_slack_normalized(j) = gamma - (unit.adjoint() * a).norm();
  }

  res.C.method = BeamspaceMethod::minimax;
  res.C.entries = std::move(unit);
  return res;
}

BaselineDesign baseline_matrix(BeamspaceMethod kind, const UlaGeometry& tx,
                               const Eigen::VectorXd* w, int n_rx,
                               const Sector* sector) {
  tx.validate();
  const int M = tx.num_elements;
  BaselineDesign out;
  out.effective_tx = tx;
  switch (kind) {
    case BeamspaceMethod::identity: {
      out.C = BeamspaceMatrix::identity_matrix(M);
      return out;
    }
    case BeamspaceMethod::ts_half: {
      if (M < 2) throw std::invalid_argument("baseline_matrix: ts-half needs M >= 2");
      out.C.method = kind;
      out.C.entries = Eigen::MatrixXcd::Zero(M, 2);
      out.C.entries(0, 0) = 1.0;
      out.C.entries(1, 1) = 1.0;
      out.zeta_wavelengths = tx.spacing_wavelengths;
      return out;
    }
    case BeamspaceMethod::ts_n_half: {
      // A separation of n_rx half-wavelengths is not realizable on the
      // physical grid when n_rx >= M, so the subaperture pair is modeled
      // directly as a 2-element geometry with that spacing.
      if (n_rx < 1)
        throw std::invalid_argument("baseline_matrix: ts-N-half needs n_rx");
      out.effective_tx = UlaGeometry{2, 0.5 * n_rx};
      out.C.method = kind;
      out.C.entries = Eigen::MatrixXcd::Identity(2, 2);
      out.zeta_wavelengths = 0.5 * n_rx;
      return out;
    }
    case BeamspaceMethod::tap: {
      if (M < 2) throw std::invalid_argument("baseline_matrix: tap needs M >= 2");
      Eigen::VectorXd wv;
      if (w) {
        if (w->size() != M - 1)
          throw std::invalid_argument("baseline_matrix: tap weights must have M-1 entries");
        wv = *w;
      } else {
        if (!sector)
          throw std::invalid_argument(
              "baseline_matrix: tap needs either explicit weights or a sector");
        const UlaGeometry sub{M - 1, tx.spacing_wavelengths};
        const Eigen::MatrixXcd A9 = sector_correlation(sub, *sector);
        const SpheroidalDesign sd = spheroidal_design(A9, 2);
        Eigen::VectorXd avg =
            0.5 * (sd.C.entries.col(0).real() + sd.C.entries.col(1).real());
        const double imag_part = sd.C.entries.imag().norm();
        if (imag_part > 1e-8)
          throw std::runtime_error(
              "baseline_matrix: tap default weights expect a symmetric sector");
        wv = avg / avg.norm();
      }
      out.C.method = kind;
      out.C.entries = Eigen::MatrixXcd::Zero(M, 2);
      out.C.entries.block(0, 0, M - 1, 1) = wv.cast<cxd>();
      out.C.entries.block(1, 1, M - 1, 1) = wv.cast<cxd>();
      out.zeta_wavelengths = tx.spacing_wavelengths;
      return out;
    }
    default:
      throw std::invalid_argument(
          "baseline_matrix: kind must be identity, ts-half, ts-N-half or tap");
  }
}

BeampatternTable beampattern(const BeamspaceMatrix& C, const UlaGeometry& tx,
                             const std::vector<double>& grid_deg) {
  C.validate();
  if (C.entries.rows() != tx.num_elements)
    throw std::invalid_argument("beampattern: C rows do not match geometry");
  const int K = C.num_waveforms();
  BeampatternTable t;
  t.theta_deg = grid_deg;
  t.per_waveform.resize(static_cast<Eigen::Index>(grid_deg.size()), K);
  t.total.resize(static_cast<Eigen::Index>(grid_deg.size()));
  for (size_t i = 0; i < grid_deg.size(); ++i) {
    const Eigen::VectorXcd a = steering_vector(tx, AngleDeg(grid_deg[i]));
    const Eigen::VectorXcd ca = C.entries.adjoint() * a;
    for (int k = 0; k < K; ++k)
      t.per_waveform(static_cast<Eigen::Index>(i), k) = std::norm(ca(k));
    t.total(static_cast<Eigen::Index>(i)) = ca.squaredNorm();
  }
  return t;
}

double energy_concentration(const Eigen::VectorXcd& c, const Eigen::MatrixXcd& A) {
  const double denom = 2.0 * kPi * c.squaredNorm();
  if (denom <= 0.0) throw std::invalid_argument("energy_concentration: zero vector");
  return (c.adjoint() * A * c)(0).real() / denom;
}

double u_space_energy(const Eigen::VectorXcd& c, const UlaGeometry& tx) {
  tx.validate();
  if (c.size() != tx.num_elements)
    throw std::invalid_argument("u_space_energy: size mismatch");
  const int n = 4096;  // Simpson nodes; integrand is a low-order trig polynomial
  const double h = 2.0 / n;
  double acc = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double u = -1.0 + i * h;
    cxd s = 0.0;
    for (int m = 0; m < tx.num_elements; ++m)
      s += std::conj(c(m)) * std::polar(1.0, -2.0 * kPi * tx.spacing_wavelengths * m * u);
    const double f = std::norm(s);
    const double wgt = (i == 0 || i == n) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    acc += wgt * f;
  }
  return acc * h / 3.0;
}

SpheroidalDesign design_tb_spheroidal(const UlaGeometry& tx, const Sector& sector,
                                      int K, bool rotated) {
  const Eigen::MatrixXcd A = sector_correlation(tx, sector);
  SpheroidalDesign d = spheroidal_design(A, K);
  if (rotated) {
    if (K != 2)
      throw std::invalid_argument("design_tb_spheroidal: default rotation is K=2 only");
    d.C = rotate_for_uniformity(d.C, default_rotation_k2());
  }
  return d;
}

TbMinimaxDesign design_tb_minimax(const UlaGeometry& tx, const Sector& sector,
                                  int n_rx, double gamma) {
  if (!(gamma > 0.0))
    throw std::invalid_argument("design_tb_minimax: gamma must be positive");
  // Solve against a slightly tightened cap so the exact unit-norm scaling at
  // the end cannot push the out-of-sector response past the requested gamma.
  const double gamma_solve = gamma * (1.0 - 2e-3);

  // initial gain guess: per-beam share of the spheroidal design's in-sector power
  const SpheroidalDesign sph = design_tb_spheroidal(tx, sector, 2, true);
  const BeampatternTable bp = beampattern(sph.C, tx, sector.in_grid);
  double g = std::sqrt(bp.total.mean() / 2.0);

  TbMinimaxDesign out;
  MinimaxResult res;
  for (int it = 0; it < 30; ++it) {
    res = minimax_design(tx, sector, ideal_two_beam_target(n_rx, g), gamma_solve);
    const double nu = res.column_norms.mean();
    out.calibration_iters = it + 1;
    if (std::getenv("TBMIMO_SOCP_TRACE"))
      std::fprintf(stderr, "calib it=%d g=%.6g nu=%.6g norms=[%.6g %.6g] obj=%.6g\n",
                   it, g, nu, res.column_norms(0), res.column_norms(1),
                   res.objective);
    if (std::abs(nu - 1.0) <= 5e-4) break;
    g /= nu;
  }
  if (std::abs(res.column_norms.mean() - 1.0) > 5e-3)
    throw std::runtime_error("design_tb_minimax: gain calibration did not settle");

  // final slack bookkeeping against the requested (untightened) gamma
  for (Eigen::Index j = 0; j < res.out_slack_normalized.size(); ++j) {
    const Eigen::VectorXcd a = steering_vector(
        tx, AngleDeg(sector.out_grid[static_cast<size_t>(j)]));
    res.out_slack_normalized(j) = gamma - (res.C.entries.adjoint() * a).norm();
  }

  double gain_acc = 0.0;
  for (double th : sector.in_grid) {
    const Eigen::VectorXcd a = steering_vector(tx, AngleDeg(th));
    gain_acc += (res.C.entries.adjoint() * a).cwiseAbs().mean();
  }
  out.g_beam = gain_acc / static_cast<double>(sector.in_grid.size());
  out.target_gain = g;
  out.result = std::move(res);
  return out;
}

}  // namespace tbmimo
