#include "tbmimo/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace tbmimo {

namespace {

double wrap_pm_pi(double x) {
  x = std::fmod(x + kPi, 2.0 * kPi);
  if (x < 0) x += 2.0 * kPi;
  return x - kPi;
}

}  // namespace

SubspaceDecomp subspace_decompose(const Eigen::MatrixXcd& R, int num_sources) {
  const int n = static_cast<int>(R.rows());
  if (R.cols() != n) throw std::invalid_argument("subspace_decompose: R not square");
  if (num_sources < 1 || num_sources >= n)
    throw std::invalid_argument("subspace_decompose: need 1 <= sources < dim");
  if ((R - R.adjoint()).norm() > 1e-8 * std::max(1.0, R.norm()))
    throw std::invalid_argument("subspace_decompose: input not Hermitian");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (R + R.adjoint()));
  if (es.info() != Eigen::Success)
    throw std::runtime_error("subspace_decompose: eigendecomposition failed");

  SubspaceDecomp d;
  d.eigenvalues = es.eigenvalues().reverse();
  d.signal.resize(n, num_sources);
  for (int l = 0; l < num_sources; ++l)
    d.signal.col(l) = es.eigenvectors().col(n - 1 - l);
  d.noise = es.eigenvectors().leftCols(n - num_sources);
  return d;
}

MusicGridCache make_music_cache(const BeamspaceMatrix& C, const UlaGeometry& tx,
                                const UlaGeometry& rx,
                                const std::vector<double>& grid_deg) {
  C.validate();
  if (grid_deg.empty()) throw std::invalid_argument("make_music_cache: empty grid");
  const int K = C.num_waveforms();
  const int N = rx.num_elements;
  MusicGridCache cache;
  cache.theta_deg = grid_deg;
  cache.vtilde.resize(K * N, static_cast<Eigen::Index>(grid_deg.size()));
  cache.numerator.resize(static_cast<Eigen::Index>(grid_deg.size()));
  for (size_t i = 0; i < grid_deg.size(); ++i) {
    const AngleDeg th(grid_deg[i]);
    cache.vtilde.col(static_cast<Eigen::Index>(i)) =
        virtual_steering(tx, rx, C.entries, th, 1.0);
    const Eigen::VectorXcd ca = C.entries.adjoint() * steering_vector(tx, th);
    cache.numerator(static_cast<Eigen::Index>(i)) = N * ca.squaredNorm();
  }
  return cache;
}

std::vector<double> music_spectrum(const SubspaceDecomp& d, const MusicGridCache& cache) {
  if (d.signal.rows() != cache.vtilde.rows())
    throw std::invalid_argument("music_spectrum: subspace/grid dimension mismatch");
  const size_t G = cache.theta_deg.size();
  std::vector<double> f(G);
  for (size_t i = 0; i < G; ++i) {
    const auto v = cache.vtilde.col(static_cast<Eigen::Index>(i));
    const double num = cache.numerator(static_cast<Eigen::Index>(i));
    double denom = num - (d.signal.adjoint() * v).squaredNorm();
    denom = std::max(denom, num * 1e-18);  // round-off guard at the poles
    f[i] = num / denom;
  }
  return f;
}

std::vector<double> music_spectrum(const SubspaceDecomp& d, const BeamspaceMatrix& C,
                                   const UlaGeometry& tx, const UlaGeometry& rx,
                                   const std::vector<double>& grid_deg) {
  return music_spectrum(d, make_music_cache(C, tx, rx, grid_deg));
}

PeakSet find_peaks(const std::vector<double>& grid_deg,
                   const std::vector<double>& spectrum, int count) {
  if (grid_deg.size() != spectrum.size())
    throw std::invalid_argument("find_peaks: grid/spectrum size mismatch");
  if (grid_deg.size() < 3) throw std::invalid_argument("find_peaks: grid too short");
  if (count < 1) throw std::invalid_argument("find_peaks: count must be >= 1");
  for (size_t i = 1; i < grid_deg.size(); ++i) {
    const double h = grid_deg[i] - grid_deg[i - 1];
    if (!(h > 0.0)) throw std::invalid_argument("find_peaks: grid not increasing");
    if (h > 0.05 + 1e-12)
      throw std::invalid_argument("find_peaks: grid step above 0.05 deg");
  }

  std::vector<size_t> maxima;
  for (size_t i = 1; i + 1 < spectrum.size(); ++i)
    if (spectrum[i] > spectrum[i - 1] && spectrum[i] >= spectrum[i + 1])
      maxima.push_back(i);

  std::sort(maxima.begin(), maxima.end(),
            [&](size_t a, size_t b) { return spectrum[a] > spectrum[b]; });
  if (maxima.size() > static_cast<size_t>(count)) maxima.resize(count);

  PeakSet out;
  out.fewer_than_requested = maxima.size() < static_cast<size_t>(count);
  for (size_t i : maxima) {
    const double hl = grid_deg[i] - grid_deg[i - 1];
    const double hr = grid_deg[i + 1] - grid_deg[i];
    const double h = 0.5 * (hl + hr);
    const double tiny = std::numeric_limits<double>::min();
    const double ym = std::log(std::max(spectrum[i - 1], tiny));
    const double y0 = std::log(std::max(spectrum[i], tiny));
    const double yp = std::log(std::max(spectrum[i + 1], tiny));
    const double curv = ym - 2.0 * y0 + yp;
    double offset = 0.0;
    if (curv < -1e-300) offset = 0.5 * h * (ym - yp) / curv;
    offset = std::clamp(offset, -h, h);
    out.angles_deg.push_back(grid_deg[i] + offset);
  }
  std::sort(out.angles_deg.begin(), out.angles_deg.end());
  return out;
}

PhaseLookupTable build_phase_lut(const BeamspaceMatrix& C, const UlaGeometry& tx,
                                 const std::vector<double>& grid_deg) {
  C.validate();
  if (C.num_waveforms() != 2)
    throw std::invalid_argument("build_phase_lut: needs exactly two beams");
  if (grid_deg.size() < 2)
    throw std::invalid_argument("build_phase_lut: grid too short");

  PhaseLookupTable lut;
  lut.theta_deg = grid_deg;
  lut.omega.resize(grid_deg.size());
  lut.amplitude.resize(grid_deg.size());

  double prev_arg = 0.0;
  for (size_t i = 0; i < grid_deg.size(); ++i) {
    const Eigen::VectorXcd a = steering_vector(tx, AngleDeg(grid_deg[i]));
    const cxd r1 = C.entries.col(0).adjoint() * a;
    const cxd r2 = C.entries.col(1).adjoint() * a;
    if (std::abs(r1) <= 1e-6)
      throw std::runtime_error(
          "build_phase_lut: first beam has a null inside the sector");
    const cxd ratio = r2 / r1;
    lut.amplitude[i] = std::abs(ratio);
    const double arg = std::arg(ratio);
    lut.omega[i] = (i == 0) ? arg : lut.omega[i - 1] + wrap_pm_pi(arg - prev_arg);
    prev_arg = arg;
  }

  // re-anchor: the sample nearest the sector midpoint gets the principal branch
  const double mid = 0.5 * (grid_deg.front() + grid_deg.back());
  size_t imid = 0;
  for (size_t i = 1; i < grid_deg.size(); ++i)
    if (std::abs(grid_deg[i] - mid) < std::abs(grid_deg[imid] - mid)) imid = i;
  const double shift =
      2.0 * kPi * std::round(lut.omega[imid] / (2.0 * kPi));
  for (double& w : lut.omega) w -= shift;

  const bool inc = lut.omega[1] > lut.omega[0];
  for (size_t i = 1; i < lut.omega.size(); ++i) {
    const bool step_inc = lut.omega[i] > lut.omega[i - 1];
    if (step_inc != inc || lut.omega[i] == lut.omega[i - 1])
      throw std::runtime_error(
          "build_phase_lut: unwrapped phase is not strictly monotone, "
          "rotational invariance is not invertible for this design");
  }
  lut.decreasing = !inc;
  return lut;
}

double PhaseLookupTable::omega_at(double theta_deg_query) const {
  const auto& g = theta_deg;
  if (theta_deg_query <= g.front()) return omega.front();
  if (theta_deg_query >= g.back()) return omega.back();
  const auto it = std::upper_bound(g.begin(), g.end(), theta_deg_query);
  const size_t i = static_cast<size_t>(it - g.begin());
  const double f = (theta_deg_query - g[i - 1]) / (g[i] - g[i - 1]);
  return omega[i - 1] + f * (omega[i] - omega[i - 1]);
}

std::vector<double> PhaseLookupTable::invert_candidates(double omega_principal) const {
  const double lo = std::min(omega.front(), omega.back());
  const double hi = std::max(omega.front(), omega.back());
  std::vector<double> thetas;
  const int kmin = static_cast<int>(std::floor((lo - omega_principal) / (2.0 * kPi)));
  const int kmax = static_cast<int>(std::ceil((hi - omega_principal) / (2.0 * kPi)));
  for (int k = kmin; k <= kmax; ++k) {
    const double w = omega_principal + 2.0 * kPi * k;
    if (w < lo || w > hi) continue;
    // binary search on the monotone table
    size_t a = 0, b = omega.size() - 1;
    while (b - a > 1) {
      const size_t m = (a + b) / 2;
      const bool left = decreasing ? (w > omega[m]) : (w < omega[m]);
      if (left) b = m; else a = m;
    }
    const double span = omega[b] - omega[a];
    const double f = span == 0.0 ? 0.0 : (w - omega[a]) / span;
    thetas.push_back(theta_deg[a] + f * (theta_deg[b] - theta_deg[a]));
  }
  return thetas;
}

EspritResult esprit_estimate(const SubspaceDecomp& d, EspritPartition part,
                             const UlaGeometry& tx, const UlaGeometry& rx,
                             const PhaseLookupTable* lut,
                             const EspritOptions& opts) {
  const int L = static_cast<int>(d.signal.cols());
  const int rows = static_cast<int>(d.signal.rows());
  const int N = rx.num_elements;

  Eigen::MatrixXcd E1, E2;
  if (part == EspritPartition::tb_halves) {
    if (rows != 2 * N)
      throw std::invalid_argument("esprit_estimate: tb_halves needs 2N rows");
    if (!lut)
      throw std::invalid_argument("esprit_estimate: tb_halves needs a lookup table");
    E1 = d.signal.topRows(N);
    E2 = d.signal.bottomRows(N);
  } else {
    if (rows % N != 0)
      throw std::invalid_argument("esprit_estimate: rows not a multiple of N");
    const int M = rows / N;
    if (M < 2)
      throw std::invalid_argument("esprit_estimate: mimo_overlap needs M >= 2");
    E1 = d.signal.topRows((M - 1) * N);
    E2 = d.signal.bottomRows((M - 1) * N);
  }

  Eigen::MatrixXcd phi;
  if (!opts.tls) {
    phi = (E1.adjoint() * E1).ldlt().solve(E1.adjoint() * E2);
  } else {
    Eigen::MatrixXcd stacked(E1.rows(), 2 * L);
    stacked << E1, E2;
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(stacked, Eigen::ComputeFullV);
    const Eigen::MatrixXcd V12 = svd.matrixV().block(0, L, L, L);
    const Eigen::MatrixXcd V22 = svd.matrixV().block(L, L, L, L);
    phi = -V12 * V22.inverse();
  }

  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> ces(phi);
  if (ces.info() != Eigen::Success)
    throw std::runtime_error("esprit_estimate: eigendecomposition failed");

  std::vector<std::pair<double, bool>> found;  // angle, clamped
  for (int l = 0; l < L; ++l) {
    const double w = std::arg(ces.eigenvalues()(l));
    if (part == EspritPartition::mimo_overlap) {
      const double s = -w / (2.0 * kPi * tx.spacing_wavelengths);
      const double sc = std::clamp(s, -1.0, 1.0);
      found.emplace_back(rad2deg(std::asin(sc)), sc != s);
      continue;
    }
    const std::vector<double> cands = lut->invert_candidates(w);
    if (cands.empty()) {
      // outside the invertible span: clamp to the nearer table edge
      const double dfront = std::abs(wrap_pm_pi(w - lut->omega.front()));
      const double dback = std::abs(wrap_pm_pi(w - lut->omega.back()));
      found.emplace_back(dfront <= dback ? lut->theta_deg.front()
                                         : lut->theta_deg.back(),
                         true);
    } else if (cands.size() == 1) {
      found.emplace_back(cands[0], false);
    } else {
      // several branches land inside the sector; pick the one whose receive
      // steering best matches the eigenvector image E1 w_l (exactly b(theta)
      // in the noiseless case)
      const Eigen::VectorXcd e = E1 * ces.eigenvectors().col(l);
      double best = -1.0;
      double best_theta = cands[0];
      for (double cand : cands) {
        const Eigen::VectorXcd b = steering_vector(rx, AngleDeg(cand));
        const double score = std::abs(b.dot(e)) / (b.norm() * e.norm() + 1e-300);
        if (score > best) { best = score; best_theta = cand; }
      }
      found.emplace_back(best_theta, false);
    }
  }

  std::sort(found.begin(), found.end());
  EspritResult res;
  for (auto& [ang, cl] : found) {
    res.angles_deg.push_back(ang);
    res.clamped.push_back(cl);
  }
  return res;
}

std::vector<double> truth_errors(const std::vector<double>& estimates_deg,
                                 const std::vector<double>& truth_deg) {
  if (estimates_deg.empty())
    throw std::invalid_argument("truth_errors: no estimates");
  std::vector<double> errs;
  errs.reserve(truth_deg.size());
  for (double t : truth_deg) {
    double best = std::numeric_limits<double>::infinity();
    for (double e : estimates_deg) {
      const double d = std::abs(e - t);
      if (d < best) best = d;  // strict: ties keep the earlier estimate
    }
    errs.push_back(best);
  }
  return errs;
}

bool resolution_check(const std::vector<double>& estimates_deg,
                      const std::vector<double>& truth_deg) {
  if (truth_deg.size() < 2)
    throw std::invalid_argument("resolution_check: needs at least two true angles");
  if (estimates_deg.size() < 2) return false;
  std::vector<double> t = truth_deg;
  std::sort(t.begin(), t.end());
  double min_gap = std::numeric_limits<double>::infinity();
  for (size_t i = 1; i < t.size(); ++i) min_gap = std::min(min_gap, t[i] - t[i - 1]);
  const auto errs = truth_errors(estimates_deg, truth_deg);
  for (double e : errs)
    if (e > 0.5 * min_gap) return false;
  return true;
}

Aggregate aggregate_trials(const std::vector<TrialOutcome>& runs,
                           const std::vector<double>& truth_deg) {
  if (runs.empty()) throw std::invalid_argument("aggregate_trials: no runs");
  Aggregate agg;
  double sum_all = 0.0, sum_res = 0.0;
  size_t n_all = 0, n_res = 0;
  for (const auto& r : runs) {
    const auto errs = truth_errors(r.estimates_deg, truth_deg);
    for (double e : errs) {
      sum_all += e * e;
      ++n_all;
      if (r.resolved) { sum_res += e * e; ++n_res; }
    }
    if (r.resolved) ++agg.resolved_count;
  }
  agg.rmse_all = std::sqrt(sum_all / static_cast<double>(n_all));
  agg.rmse_resolved = n_res == 0
                          ? std::numeric_limits<double>::quiet_NaN()
                          : std::sqrt(sum_res / static_cast<double>(n_res));
  agg.prob_resolution =
      static_cast<double>(agg.resolved_count) / static_cast<double>(runs.size());
  return agg;
}

double rmse(const std::vector<TrialOutcome>& runs,
            const std::vector<double>& truth_deg, RmseVariant variant) {
  const Aggregate agg = aggregate_trials(runs, truth_deg);
  return variant == RmseVariant::all_runs ? agg.rmse_all : agg.rmse_resolved;
}

}  // namespace tbmimo
