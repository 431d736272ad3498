#include "tbmimo/verify.hpp"

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "tbmimo/crb.hpp"
#include "tbmimo/estimators.hpp"
#include "tbmimo/rng.hpp"

namespace tbmimo {

namespace {

Eigen::MatrixXcd random_matrix(int rows, int cols, std::uint64_t seed) {
  SplitMix64 g{seed};
  Eigen::MatrixXcd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    double g0, g1;
    g.next_gaussian_pair(g0, g1);
    m(i) = cxd(g0, g1);
  }
  return m;
}

}  // namespace

int run_verification(std::ostream& os) {
  struct Check {
    std::string name;
    std::function<bool()> fn;
  };

  const UlaGeometry tx{10, 0.5};
  const UlaGeometry rx{10, 0.5};
  const Sector sector = make_sector(-5.0, 5.0, 15.0);

  std::vector<Check> checks;

  checks.push_back({"steering vector norm and M=3 closed form", [&] {
    const Eigen::VectorXcd a = steering_vector(tx, AngleDeg(30.0));
    if (std::abs(a.squaredNorm() - 10.0) > 1e-12) return false;
    const Eigen::VectorXcd a3 = steering_vector(UlaGeometry{3, 0.5}, AngleDeg(30.0));
    return std::abs(a3(0) - cxd(1, 0)) < 1e-12 &&
           std::abs(a3(1) - cxd(0, -1)) < 1e-12 &&
           std::abs(a3(2) - cxd(-1, 0)) < 1e-12;
  }});

  checks.push_back({"steering derivative matches central differences", [&] {
    const double h = 1e-6;
    const double th = 10.0;
    const Eigen::VectorXcd d = steering_derivative(tx, AngleDeg(th));
    const Eigen::VectorXcd fd =
        (steering_vector(tx, AngleDeg(th + rad2deg(h))) -
         steering_vector(tx, AngleDeg(th - rad2deg(h)))) /
        (2.0 * h);
    return (d - fd).norm() / d.norm() < 1e-6;
  }});

  checks.push_back({"virtual steering equals explicit kronecker product", [&] {
    const Eigen::MatrixXcd C = random_matrix(10, 2, 7);
    const AngleDeg th(12.5);
    const Eigen::VectorXcd v = virtual_steering(tx, rx, C, th, 2.0);
    const Eigen::VectorXcd ca = C.adjoint() * steering_vector(tx, th);
    const Eigen::VectorXcd b = steering_vector(rx, th);
    for (int k = 0; k < 2; ++k)
      for (int n = 0; n < 10; ++n)
        if (std::abs(v(k * 10 + n) - 2.0 * ca(k) * b(n)) > 1e-12) return false;
    return true;
  }});

  checks.push_back({"identity-beamspace virtual array has M+N-1 distinct entries", [&] {
    const Eigen::VectorXcd v = virtual_steering(
        tx, rx, Eigen::MatrixXcd::Identity(10, 10), AngleDeg(17.0), 1.0);
    std::vector<cxd> uniq;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      bool seen = false;
      for (const cxd& u : uniq)
        if (std::abs(u - v(i)) < 1e-9) { seen = true; break; }
      if (!seen) uniq.push_back(v(i));
    }
    return uniq.size() == 19;
  }});

  checks.push_back({"sector correlation is Hermitian PSD with trace M*|sector|", [&] {
    const Eigen::MatrixXcd A = sector_correlation(tx, sector);
    if ((A - A.adjoint()).norm() > 1e-10) return false;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(A);
    if (es.eigenvalues()(0) < -1e-10) return false;
    const double expected = 10.0 * deg2rad(10.0);
    return std::abs(A.trace().real() - expected) < 1e-8;
  }});

  checks.push_back({"spheroidal design: orthonormal, concentration ordered", [&] {
    const Eigen::MatrixXcd A = sector_correlation(tx, sector);
    const SpheroidalDesign d = spheroidal_design(A, 2);
    const Eigen::MatrixXcd gram = d.C.entries.adjoint() * d.C.entries;
    if ((gram - Eigen::MatrixXcd::Identity(2, 2)).norm() > 1e-10) return false;
    const double g1 = energy_concentration(d.C.entries.col(0), A);
    const double g2 = energy_concentration(d.C.entries.col(1), A);
    return g1 >= g2 && g2 > 0.0;
  }});

  checks.push_back({"rotation preserves C C^H", [&] {
    const SpheroidalDesign d = design_tb_spheroidal(tx, sector, 2, false);
    const BeamspaceMatrix r = rotate_for_uniformity(d.C, default_rotation_k2());
    return (d.C.entries * d.C.entries.adjoint() -
            r.entries * r.entries.adjoint()).norm() < 1e-12;
  }});

  checks.push_back({"u-space energy identity for a random weight vector", [&] {
    Eigen::VectorXcd c = random_matrix(10, 1, 11);
    const double integral = u_space_energy(c, tx);
    return std::abs(integral - 2.0 * c.squaredNorm()) < 1e-8 * c.squaredNorm();
  }});

  checks.push_back({"noise projector identity I - Es Es^H = En En^H", [&] {
    Scenario s;
    s.tx = tx; s.rx = rx;
    s.C = BeamspaceMatrix::identity_matrix(10);
    s.targets = {{-1.0, 2.0}, {1.0, 2.0}};
    s.total_energy = 10.0;
    s.num_pulses = 100;
    const SubspaceDecomp d = subspace_decompose(exact_covariance(s), 2);
    const Eigen::MatrixXcd I = Eigen::MatrixXcd::Identity(100, 100);
    return ((I - d.signal * d.signal.adjoint()) -
            d.noise * d.noise.adjoint()).norm() < 1e-8;
  }});

  checks.push_back({"snapshot synthesis is deterministic and hits V exactly "
                    "with unit reflections and no noise", [&] {
    Scenario s;
    s.tx = tx; s.rx = rx;
    s.C = BeamspaceMatrix::identity_matrix(10);
    s.targets = {{-1.0, 1.0}, {1.0, 1.0}};
    s.total_energy = 10.0;
    s.num_pulses = 16;
    const SnapshotSet s1 = simulate_snapshots(s, 42);
    const SnapshotSet s2 = simulate_snapshots(s, 42);
    if ((s1.data - s2.data).norm() != 0.0) return false;
    Scenario clean = s;
    clean.targets = {{1.0, 1.0}};
    clean.noise_var = 1e-30;
    clean.num_pulses = 1;
    SimOptions opts;
    opts.fix_unit_reflection = true;
    const SnapshotSet sn = simulate_snapshots(clean, 3, opts);
    const Eigen::VectorXcd v = clean.manifold().col(0);
    return (sn.data.col(0) - v).norm() / v.norm() < 1e-9;
  }});

  checks.push_back({"waveform gram is the identity", [&] {
    const Eigen::MatrixXcd G = waveform_gram(10, 64);
    return (G - Eigen::MatrixXcd::Identity(10, 10)).cwiseAbs().maxCoeff() < 1e-9;
  }});

  checks.push_back({"phase table is monotone and round-trips", [&] {
    const BaselineDesign b = baseline_matrix(BeamspaceMethod::ts_n_half, tx, nullptr, 10);
    const PhaseLookupTable lut =
        build_phase_lut(b.C, b.effective_tx, sector.in_grid);
    for (size_t i = 0; i < lut.theta_deg.size(); i += 10) {
      const double w = lut.omega[i];
      const double wp = std::atan2(std::sin(w), std::cos(w));
      const auto cands = lut.invert_candidates(wp);
      bool hit = false;
      for (double c : cands)
        if (std::abs(c - lut.theta_deg[i]) < 1e-6) hit = true;
      if (!hit) return false;
    }
    return true;
  }});

  checks.push_back({"esprit recovers exact-covariance targets", [&] {
    const BaselineDesign b = baseline_matrix(BeamspaceMethod::ts_half, tx);
    Scenario s;
    s.tx = tx; s.rx = rx;
    s.C = b.C;
    s.targets = {{-1.0, 1.0}, {1.0, 1.0}};
    s.total_energy = 10.0;
    s.num_pulses = 300;
    const SubspaceDecomp d = subspace_decompose(exact_covariance(s), 2);
    const PhaseLookupTable lut = build_phase_lut(b.C, tx, sector.in_grid);
    const EspritResult er =
        esprit_estimate(d, EspritPartition::tb_halves, tx, rx, &lut);
    return std::abs(er.angles_deg[0] + 1.0) < 1e-4 &&
           std::abs(er.angles_deg[1] - 1.0) < 1e-4;
  }});

  checks.push_back({"crb scales exactly as 1/Q", [&] {
    Scenario s;
    s.tx = tx; s.rx = rx;
    s.C = BeamspaceMatrix::identity_matrix(10);
    s.targets = {{-1.0, 1.0}, {1.0, 1.0}};
    s.total_energy = 10.0;
    s.num_pulses = 300;
    const CrbResult c1 = stochastic_crb(s);
    s.num_pulses = 600;
    const CrbResult c2 = stochastic_crb(s);
    return (c1.matrix - 2.0 * c2.matrix).cwiseAbs().maxCoeff() <
           1e-12 * c1.matrix.cwiseAbs().maxCoeff();
  }});

  int failures = 0;
  for (const auto& c : checks) {
    bool ok = false;
    std::string err;
    try {
      ok = c.fn();
    } catch (const std::exception& e) {
      err = e.what();
    }
    os << (ok ? "[ok]   " : "[FAIL] ") << c.name;
    if (!ok && !err.empty()) os << " (" << err << ")";
    os << "\n";
    if (!ok) ++failures;
  }
  os << (failures == 0 ? "verification passed" : "verification FAILED") << " ("
     << checks.size() - failures << "/" << checks.size() << " checks)\n";
  return failures;
}

}  // namespace tbmimo
