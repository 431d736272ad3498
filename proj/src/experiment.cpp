#include "tbmimo/experiment.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "tbmimo/rng.hpp"

namespace tbmimo {

namespace {

std::string fmt9(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

Sector sector_from(const ExperimentConfig& cfg) {
  return make_sector(cfg.sector_min_deg, cfg.sector_max_deg, cfg.out_abs_deg,
                     cfg.in_grid_step_deg, cfg.out_grid_step_deg);
}

std::vector<double> linspace_step(double lo, double hi, double step) {
  std::vector<double> g;
  const int n = static_cast<int>(std::floor((hi - lo) / step + 1e-9));
  for (int i = 0; i <= n; ++i) g.push_back(lo + i * step);
  if (g.back() < hi - 1e-9) g.push_back(hi);
  return g;
}

}  // namespace

std::vector<double> music_search_grid(const ExperimentConfig& cfg) {
  return linspace_step(cfg.sector_min_deg, cfg.sector_max_deg,
                       cfg.music_grid_step_deg);
}

MethodSetup build_method(const std::string& name, const ExperimentConfig& cfg) {
  if (!is_known_method(name))
    throw std::invalid_argument("build_method: unknown method '" + name + "'");
  const UlaGeometry tx{cfg.tx_elements, cfg.spacing_wavelengths};
  const Sector sector = sector_from(cfg);

  MethodSetup m;
  m.name = name;
  m.tx_effective = tx;
  if (name == "mimo") {
    const BaselineDesign b = baseline_matrix(BeamspaceMethod::identity, tx);
    m.C = b.C;
  } else if (name == "ts-half") {
    const BaselineDesign b = baseline_matrix(BeamspaceMethod::ts_half, tx);
    m.C = b.C;
    m.zeta_wavelengths = b.zeta_wavelengths;
  } else if (name == "ts-Nhalf") {
    const BaselineDesign b =
        baseline_matrix(BeamspaceMethod::ts_n_half, tx, nullptr, cfg.rx_elements);
    m.C = b.C;
    m.tx_effective = b.effective_tx;
    m.zeta_wavelengths = b.zeta_wavelengths;
  } else if (name == "tap") {
    const BaselineDesign b =
        baseline_matrix(BeamspaceMethod::tap, tx, nullptr, 0, &sector);
    m.C = b.C;
    m.zeta_wavelengths = b.zeta_wavelengths;
  } else if (name == "tb-spheroidal") {
    const SpheroidalDesign d = design_tb_spheroidal(tx, sector, 2, true);
    m.C = d.C;
    m.spheroidal_eigenvalues = d.eigenvalues;
  } else {  // tb-minimax
    const TbMinimaxDesign d =
        design_tb_minimax(tx, sector, cfg.rx_elements, cfg.gamma);
    m.C = d.result.C;
    m.minimax_objective = d.result.objective;
    m.minimax_min_out_slack = d.result.out_slack_normalized.minCoeff();
    m.g_beam = d.g_beam;
  }
  return m;
}

Scenario make_scenario(const MethodSetup& m, const ExperimentConfig& cfg,
                       double snr_db) {
  Scenario s;
  s.tx = m.tx_effective;
  s.rx = UlaGeometry{cfg.rx_elements, cfg.spacing_wavelengths};
  s.C = m.C;
  const double var = std::pow(10.0, snr_db / 10.0);
  for (double ang : cfg.target_angles_deg) s.targets.push_back({ang, var});
  s.total_energy = cfg.total_energy;
  s.noise_var = 1.0;
  s.num_pulses = cfg.num_pulses;
  return s;
}

std::uint64_t trial_seed(std::uint64_t master, int method_idx, int snr_idx,
                         int run_idx) {
  std::uint64_t s = substream(master, 0x7472696cULL);  // sweep domain tag
  s = substream(s, static_cast<std::uint64_t>(method_idx));
  s = substream(s, static_cast<std::uint64_t>(snr_idx));
  s = substream(s, static_cast<std::uint64_t>(run_idx));
  return s;
}

TrialOutcome run_single_trial(const MethodSetup& m, const ExperimentConfig& cfg,
                              double snr_db, std::uint64_t seed_for_trial,
                              const MusicGridCache* music_cache,
                              const PhaseLookupTable* lut) {
  const Scenario scen = make_scenario(m, cfg, snr_db);
  const int L = static_cast<int>(cfg.target_angles_deg.size());
  const SnapshotSet snaps = simulate_snapshots(scen, seed_for_trial);
  const Eigen::MatrixXcd R = sample_covariance(snaps.data);
  const SubspaceDecomp dec = subspace_decompose(R, L);

  TrialOutcome out;
  if (cfg.estimator == "music") {
    if (!music_cache)
      throw std::invalid_argument("run_single_trial: missing MUSIC cache");
    const std::vector<double> spectrum = music_spectrum(dec, *music_cache);
    const PeakSet peaks = find_peaks(music_cache->theta_deg, spectrum, L);
    out.estimates_deg = peaks.angles_deg;
    if (out.estimates_deg.empty()) {
      // no interior maximum at all: keep the trial accountable through the
      // in-sector argmax (counts as unresolved below)
      size_t imax = 0;
      for (size_t i = 1; i < spectrum.size(); ++i)
        if (spectrum[i] > spectrum[imax]) imax = i;
      out.estimates_deg.push_back(music_cache->theta_deg[imax]);
    }
  } else {
    const EspritPartition part = m.C.num_waveforms() == 2
                                     ? EspritPartition::tb_halves
                                     : EspritPartition::mimo_overlap;
    const EspritResult er =
        esprit_estimate(dec, part, scen.tx, scen.rx, lut);
    out.estimates_deg = er.angles_deg;
  }
  out.resolved = cfg.target_angles_deg.size() >= 2
                     ? resolution_check(out.estimates_deg, cfg.target_angles_deg)
                     : !out.estimates_deg.empty();
  return out;
}

SweepResult run_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.target_angles_deg.size() < 2)
    throw std::invalid_argument("run_sweep: needs at least two targets");

  SweepResult res;
  res.seed = cfg.seed;
  res.cfg_hash = config_hash(cfg);

  const int n_methods = static_cast<int>(cfg.methods.size());
  const int n_snr = static_cast<int>(cfg.snr_db.size());
  const int n_runs = cfg.num_runs;

  struct MethodRuntime {
    MethodSetup setup;
    bool ok = false;
    std::string error;
    MusicGridCache music_cache;
    PhaseLookupTable lut;
    bool has_lut = false;
  };
  std::vector<MethodRuntime> rt(n_methods);
  const std::vector<double> grid = music_search_grid(cfg);
  const Sector sector = sector_from(cfg);
  const UlaGeometry rx{cfg.rx_elements, cfg.spacing_wavelengths};

  for (int mi = 0; mi < n_methods; ++mi) {
    auto& r = rt[mi];
    try {
      r.setup = build_method(cfg.methods[mi], cfg);
      if (cfg.estimator == "music") {
        r.music_cache = make_music_cache(r.setup.C, r.setup.tx_effective, rx, grid);
      } else if (r.setup.C.num_waveforms() == 2) {
        r.lut = build_phase_lut(r.setup.C, r.setup.tx_effective, sector.in_grid);
        r.has_lut = true;
      }
      r.ok = true;
    } catch (const std::exception& e) {
      r.error = e.what();
      res.failures.push_back({cfg.methods[mi], e.what()});
    }
  }

  // flat deterministic trial table over surviving methods
  struct Task { int mi, si, ri; };
  std::vector<Task> tasks;
  tasks.reserve(static_cast<size_t>(n_methods) * n_snr * n_runs);
  for (int mi = 0; mi < n_methods; ++mi) {
    if (!rt[mi].ok) continue;
    for (int si = 0; si < n_snr; ++si)
      for (int ri = 0; ri < n_runs; ++ri) tasks.push_back({mi, si, ri});
  }

  std::vector<TrialOutcome> outcomes(tasks.size());
  std::atomic<size_t> next{0};
  std::mutex fail_mutex;
  std::vector<std::pair<int, std::string>> trial_failures;

  int workers = cfg.workers > 0
                    ? cfg.workers
                    : static_cast<int>(std::thread::hardware_concurrency());
  if (workers < 1) workers = 1;

  auto worker_fn = [&]() {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      const Task t = tasks[i];
      try {
        const auto& r = rt[t.mi];
        outcomes[i] = run_single_trial(
            r.setup, cfg, cfg.snr_db[static_cast<size_t>(t.si)],
            trial_seed(cfg.seed, t.mi, t.si, t.ri),
            cfg.estimator == "music" ? &r.music_cache : nullptr,
            r.has_lut ? &r.lut : nullptr);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lk(fail_mutex);
        trial_failures.emplace_back(t.mi, e.what());
      }
    }
  };

  if (workers == 1) {
    worker_fn();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker_fn);
    for (auto& th : pool) th.join();
  }

  // a trial-level failure poisons its whole method, others keep their results
  for (const auto& [mi, msg] : trial_failures) {
    if (rt[mi].ok) {
      rt[mi].ok = false;
      rt[mi].error = msg;
      res.failures.push_back({cfg.methods[static_cast<size_t>(mi)], msg});
    }
  }

  std::vector<std::vector<TrialOutcome>> per_cell(
      static_cast<size_t>(n_methods) * n_snr);
  for (size_t i = 0; i < tasks.size(); ++i) {
    const Task t = tasks[i];
    if (!rt[t.mi].ok) continue;
    per_cell[static_cast<size_t>(t.mi) * n_snr + t.si].push_back(outcomes[i]);
    if (cfg.audit) {
      TrialRecord rec;
      rec.method_idx = t.mi;
      rec.snr_idx = t.si;
      rec.run_idx = t.ri;
      rec.estimates_deg = outcomes[i].estimates_deg;
      rec.resolved = outcomes[i].resolved;
      res.audit.push_back(rec);
    }
  }
  if (cfg.audit) {
    std::sort(res.audit.begin(), res.audit.end(),
              [](const TrialRecord& a, const TrialRecord& b) {
                return std::tie(a.method_idx, a.snr_idx, a.run_idx) <
                       std::tie(b.method_idx, b.snr_idx, b.run_idx);
              });
  }

  for (int mi = 0; mi < n_methods; ++mi) {
    if (!rt[mi].ok) continue;
    res.setups.push_back(rt[mi].setup);
    for (int si = 0; si < n_snr; ++si) {
      const auto& trials = per_cell[static_cast<size_t>(mi) * n_snr + si];
      const Aggregate agg = aggregate_trials(trials, cfg.target_angles_deg);
      SweepCell cell;
      cell.method = cfg.methods[static_cast<size_t>(mi)];
      cell.snr_db = cfg.snr_db[static_cast<size_t>(si)];
      cell.rmse_all_deg = agg.rmse_all;
      cell.rmse_resolved_deg = agg.rmse_resolved;
      cell.prob_resolution = agg.prob_resolution;
      cell.runs = static_cast<int>(trials.size());
      const Scenario scen =
          make_scenario(rt[mi].setup, cfg, cfg.snr_db[static_cast<size_t>(si)]);
      try {
        cell.crb_sto_deg = std::sqrt(stochastic_crb(scen).per_target_deg2.mean());
        cell.crb_det_deg = std::sqrt(deterministic_crb(scen).per_target_deg2.mean());
      } catch (const std::exception&) {
        cell.crb_sto_deg = std::numeric_limits<double>::quiet_NaN();
        cell.crb_det_deg = std::numeric_limits<double>::quiet_NaN();
      }
      res.cells.push_back(cell);
    }
  }
  return res;
}

void emit_outputs(const SweepResult& res, const ExperimentConfig& cfg,
                  const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const fs::path dir(out_dir);

  {
    std::ofstream f(dir / "sweep.csv");
    f << "method,snr_db,rmse_all_deg,rmse_resolved_deg,prob_resolution,"
         "crb_sto_deg,crb_det_deg,runs,seed\n";
    for (const auto& c : res.cells)
      f << c.method << ',' << fmt9(c.snr_db) << ',' << fmt9(c.rmse_all_deg) << ','
        << fmt9(c.rmse_resolved_deg) << ',' << fmt9(c.prob_resolution) << ','
        << fmt9(c.crb_sto_deg) << ',' << fmt9(c.crb_det_deg) << ',' << c.runs
        << ',' << res.seed << '\n';
  }

  if (cfg.audit) {
    std::ofstream f(dir / "audit.csv");
    const size_t L = cfg.target_angles_deg.size();
    f << "method,snr_db,run,resolved,n_estimates";
    for (size_t l = 1; l <= L; ++l) f << ",est" << l << "_deg";
    for (size_t l = 1; l <= L; ++l) f << ",err" << l << "_deg";
    f << '\n';
    for (const auto& r : res.audit) {
      f << cfg.methods[static_cast<size_t>(r.method_idx)] << ','
        << fmt9(cfg.snr_db[static_cast<size_t>(r.snr_idx)]) << ',' << r.run_idx
        << ',' << (r.resolved ? 1 : 0) << ',' << r.estimates_deg.size();
      for (size_t l = 0; l < L; ++l)
        f << ',' << (l < r.estimates_deg.size() ? fmt9(r.estimates_deg[l]) : "nan");
      const auto errs = truth_errors(r.estimates_deg, cfg.target_angles_deg);
      for (size_t l = 0; l < L; ++l) f << ',' << fmt9(errs[l]);
      f << '\n';
    }
  }

  const std::vector<double> full_grid = [] {
    std::vector<double> g;
    for (int i = -900; i <= 900; ++i) g.push_back(i * 0.1);
    return g;
  }();
  for (const auto& m : res.setups) {
    {
      const BeampatternTable bp = beampattern(m.C, m.tx_effective, full_grid);
      std::ofstream f(dir / ("beampattern_" + m.name + ".csv"));
      f << "theta_deg";
      for (int k = 1; k <= m.C.num_waveforms(); ++k) f << ",p" << k;
      f << ",total\n";
      for (size_t i = 0; i < bp.theta_deg.size(); ++i) {
        f << fmt9(bp.theta_deg[i]);
        for (int k = 0; k < m.C.num_waveforms(); ++k)
          f << ',' << fmt9(bp.per_waveform(static_cast<Eigen::Index>(i), k));
        f << ',' << fmt9(bp.total(static_cast<Eigen::Index>(i))) << '\n';
      }
    }
    {
      std::ofstream f(dir / ("design_" + m.name + ".csv"));
      for (int k = 1; k <= m.C.num_waveforms(); ++k)
        f << (k > 1 ? "," : "") << 'c' << k << "_re,c" << k << "_im";
      f << '\n';
      for (Eigen::Index row = 0; row < m.C.entries.rows(); ++row) {
        for (int k = 0; k < m.C.num_waveforms(); ++k)
          f << (k > 0 ? "," : "") << fmt9(m.C.entries(row, k).real()) << ','
            << fmt9(m.C.entries(row, k).imag());
        f << '\n';
      }
    }
    {
      std::ofstream f(dir / ("design_info_" + m.name + ".txt"));
      f << "method = " << m.name << "\n";
      f << "tx_elements_effective = " << m.tx_effective.num_elements << "\n";
      f << "tx_spacing_wavelengths = " << fmt9(m.tx_effective.spacing_wavelengths)
        << "\n";
      f << "waveforms = " << m.C.num_waveforms() << "\n";
      if (m.zeta_wavelengths != 0.0)
        f << "zeta_wavelengths = " << fmt9(m.zeta_wavelengths) << "\n";
      if (m.spheroidal_eigenvalues.size() > 0) {
        f << "sector_correlation_eigenvalues =";
        for (Eigen::Index i = 0; i < m.spheroidal_eigenvalues.size(); ++i)
          f << ' ' << fmt9(m.spheroidal_eigenvalues(i));
        f << "\n";
      }
      if (m.name == "tb-minimax") {
        f << "minimax_objective = " << fmt9(m.minimax_objective) << "\n";
        f << "min_out_of_sector_slack = " << fmt9(m.minimax_min_out_slack) << "\n";
        f << "g_beam = " << fmt9(m.g_beam) << "\n";
      }
    }
  }

  {
    char hash_line[64];
    std::snprintf(hash_line, sizeof hash_line, "# hash = %016llx\n",
                  static_cast<unsigned long long>(res.cfg_hash));
    std::ofstream f(dir / "config_echo.cfg");
    f << hash_line << canonical_config(cfg);
  }

  {
    std::ofstream f(dir / "plot_sweep.py");
    f << R"PY(#!/usr/bin/env python3
"""Plot RMSE / resolution curves from sweep.csv (written next to this script)."""
import csv
import os
import sys
from collections import defaultdict

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))
rows = list(csv.DictReader(open(os.path.join(here, "sweep.csv"))))
by_method = defaultdict(list)
for r in rows:
    by_method[r["method"]].append(r)

fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(12, 5))
for method, rs in by_method.items():
    rs.sort(key=lambda r: float(r["snr_db"]))
    snr = [float(r["snr_db"]) for r in rs]
    ax1.semilogy(snr, [float(r["rmse_all_deg"]) for r in rs], marker="o", label=method)
    ax1.semilogy(snr, [float(r["crb_sto_deg"]) for r in rs], linestyle="--",
                 label=method + " crb")
    ax2.plot(snr, [float(r["prob_resolution"]) for r in rs], marker="o", label=method)
ax1.set_xlabel("SNR (dB)"); ax1.set_ylabel("RMSE (deg)"); ax1.legend(fontsize=7)
ax2.set_xlabel("SNR (dB)"); ax2.set_ylabel("P(resolution)"); ax2.legend(fontsize=7)
fig.tight_layout()
out = os.path.join(here, "sweep.png")
fig.savefig(out, dpi=150)
print("wrote", out)
)PY";
  }

  {
    std::ofstream f(dir / "run_info.txt");
    const auto now = std::chrono::system_clock::now();
    const std::time_t tt = std::chrono::system_clock::to_time_t(now);
    char ts[64];
    std::strftime(ts, sizeof ts, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&tt));
    char hash_line[32];
    std::snprintf(hash_line, sizeof hash_line, "%016llx",
                  static_cast<unsigned long long>(res.cfg_hash));
    f << "timestamp = " << ts << "\n";
    f << "seed = " << res.seed << "\n";
    f << "config_hash = " << hash_line << "\n";
    for (const auto& fail : res.failures)
      f << "failed_method = " << fail.method << ": " << fail.message << "\n";
  }
}

}  // namespace tbmimo
