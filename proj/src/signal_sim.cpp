#include "tbmimo/signal_sim.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "tbmimo/rng.hpp"

namespace tbmimo {

void Scenario::validate() const {
  tx.validate();
  rx.validate();
  C.validate();
  if (C.entries.rows() != tx.num_elements)
    throw std::invalid_argument("Scenario: C rows do not match transmit geometry");
  if (targets.empty()) throw std::invalid_argument("Scenario: no targets");
  const int kn = C.num_waveforms() * rx.num_elements;
  if (static_cast<int>(targets.size()) > kn - 1)
    throw std::invalid_argument(
        "Scenario: need targets <= waveforms*rx_elements - 1 for a noise subspace");
  for (const auto& t : targets) {
    if (t.angle_deg < -90.0 || t.angle_deg > 90.0)
      throw std::invalid_argument("Scenario: target angle outside [-90, 90]");
    if (!(t.reflection_var > 0.0))
      throw std::invalid_argument("Scenario: reflection variance must be positive");
  }
  if (!(total_energy > 0.0)) throw std::invalid_argument("Scenario: E must be positive");
  if (!(noise_var > 0.0)) throw std::invalid_argument("Scenario: noise variance must be positive");
  if (num_pulses < 1) throw std::invalid_argument("Scenario: need at least one pulse");
}

double Scenario::energy_scale() const {
  return std::sqrt(total_energy / C.num_waveforms());
}

Eigen::MatrixXcd Scenario::manifold() const {
  const int kn = C.num_waveforms() * rx.num_elements;
  Eigen::MatrixXcd V(kn, targets.size());
  for (size_t l = 0; l < targets.size(); ++l)
    V.col(static_cast<Eigen::Index>(l)) =
        virtual_steering(tx, rx, C.entries, AngleDeg(targets[l].angle_deg),
                         energy_scale());
  return V;
}

std::uint64_t Scenario::fingerprint() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a over the defining doubles
  auto fold = [&h](double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    h = (h ^ bits) * 0x100000001b3ULL;
  };
  fold(tx.num_elements);
  fold(tx.spacing_wavelengths);
  fold(rx.num_elements);
  fold(rx.spacing_wavelengths);
  fold(static_cast<double>(C.method));
  for (Eigen::Index i = 0; i < C.entries.size(); ++i) {
    fold(C.entries(i).real());
    fold(C.entries(i).imag());
  }
  for (const auto& t : targets) {
    fold(t.angle_deg);
    fold(t.reflection_var);
  }
  fold(total_energy);
  fold(noise_var);
  fold(num_pulses);
  return h;
}

SnapshotSet simulate_snapshots(const Scenario& s, std::uint64_t seed,
                               const SimOptions& opts) {
  s.validate();
  const int kn = s.C.num_waveforms() * s.rx.num_elements;
  const int L = static_cast<int>(s.targets.size());
  const Eigen::MatrixXcd V = s.manifold();

  SnapshotSet out;
  out.seed = seed;
  out.scenario_fingerprint = s.fingerprint();
  out.data.resize(kn, s.num_pulses);

  Eigen::VectorXcd alpha(L);
  const double zs = std::sqrt(s.noise_var / 2.0);
  for (int tau = 0; tau < s.num_pulses; ++tau) {
    SplitMix64 g{substream(seed, static_cast<std::uint64_t>(tau))};
    if (opts.fix_unit_reflection) {
      alpha.setOnes();
    } else {
      for (int l = 0; l < L; ++l) {
        double g0, g1;
        g.next_gaussian_pair(g0, g1);
        const double as = std::sqrt(s.targets[static_cast<size_t>(l)].reflection_var / 2.0);
        alpha(l) = cxd(as * g0, as * g1);
      }
    }
    Eigen::VectorXcd col = V * alpha;
    for (int i = 0; i < kn; ++i) {
      double g0, g1;
      g.next_gaussian_pair(g0, g1);
      col(i) += cxd(zs * g0, zs * g1);
    }
    out.data.col(tau) = col;
  }
  return out;
}

Eigen::MatrixXcd exact_covariance(const Scenario& s) {
  s.validate();
  const Eigen::MatrixXcd V = s.manifold();
  Eigen::VectorXd vars(s.targets.size());
  for (size_t l = 0; l < s.targets.size(); ++l)
    vars(static_cast<Eigen::Index>(l)) = s.targets[l].reflection_var;
  const int kn = static_cast<int>(V.rows());
  return V * vars.asDiagonal() * V.adjoint() +
         s.noise_var * Eigen::MatrixXcd::Identity(kn, kn);
}

Eigen::MatrixXcd sample_covariance(const Eigen::MatrixXcd& snapshots) {
  if (snapshots.cols() < 1)
    throw std::invalid_argument("sample_covariance: no snapshots");
  Eigen::MatrixXcd R = (snapshots * snapshots.adjoint()) /
                       static_cast<double>(snapshots.cols());
  return 0.5 * (R + R.adjoint());
}

Eigen::MatrixXcd waveform_gram(int num_waveforms, int samples_per_pulse) {
  if (num_waveforms < 1)
    throw std::invalid_argument("waveform_gram: need at least one waveform");
  if (samples_per_pulse < 4 * num_waveforms)
    throw std::invalid_argument(
        "waveform_gram: undersampled, need samples_per_pulse >= 4 * waveforms");
  const int S = samples_per_pulse;
  Eigen::MatrixXcd G(num_waveforms, num_waveforms);
  for (int m = 1; m <= num_waveforms; ++m)
    for (int p = 1; p <= num_waveforms; ++p) {
      cxd acc = 0.0;
      for (int sidx = 0; sidx < S; ++sidx)
        acc += std::polar(1.0, 2.0 * kPi * (m - p) * sidx / S);
      G(m - 1, p - 1) = acc / static_cast<double>(S);
    }
  return G;
}

}  // namespace tbmimo
