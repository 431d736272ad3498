#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "tbmimo/experiment.hpp"
#include "tbmimo/verify.hpp"

namespace {

using namespace tbmimo;

struct CommonArgs {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int workers = -1;
  std::string out_dir;
  std::vector<std::string> methods;
  std::string estimator;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool config_required = true) {
  auto* c = cmd->add_option("--config", args.config_path, "experiment config file");
  if (config_required) c->required();
  cmd->add_option("--seed", args.seed, "master RNG seed override")
      ->each([&args](const std::string&) { args.seed_set = true; });
  cmd->add_option("--workers", args.workers, "worker thread count override");
  cmd->add_option("--out", args.out_dir, "output directory override");
  cmd->add_option("--method", args.methods, "method(s) to run, repeatable")
      ->take_all();
  cmd->add_option("--estimator", args.estimator, "music | esprit")
      ->check(CLI::IsMember({"music", "esprit"}));
}

ExperimentConfig resolve(const CommonArgs& args) {
  ExperimentConfig cfg = load_config(args.config_path);
  if (args.seed_set) cfg.seed = args.seed;
  if (args.workers >= 0) cfg.workers = args.workers;
  if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
  if (!args.methods.empty()) cfg.methods = args.methods;
  if (!args.estimator.empty()) cfg.estimator = args.estimator;
  cfg.validate();
  return cfg;
}

std::string fmt9(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

void write_design_outputs(const ExperimentConfig& cfg, bool with_design_files) {
  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);
  SweepResult partial;
  partial.seed = cfg.seed;
  partial.cfg_hash = config_hash(cfg);
  for (const auto& name : cfg.methods) {
    try {
      partial.setups.push_back(build_method(name, cfg));
      std::cout << "designed " << name << "\n";
    } catch (const std::exception& e) {
      partial.failures.push_back({name, e.what()});
      std::cerr << "design failed for " << name << ": " << e.what() << "\n";
    }
  }
  // reuse the sweep emitter for the per-method tables only
  SweepResult empty_cells = partial;
  ExperimentConfig c2 = cfg;
  c2.audit = false;
  emit_outputs(empty_cells, c2, cfg.out_dir);
  // design/beampattern tables are what these subcommands are about; drop the
  // empty sweep.csv to avoid confusion
  fs::remove(fs::path(cfg.out_dir) / "sweep.csv");
  fs::remove(fs::path(cfg.out_dir) / "plot_sweep.py");
  if (!with_design_files)
    for (const auto& m : partial.setups) {
      fs::remove(fs::path(cfg.out_dir) / ("design_" + m.name + ".csv"));
      fs::remove(fs::path(cfg.out_dir) / ("design_info_" + m.name + ".txt"));
    }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"transmit-beamspace MIMO radar DOA simulation"};
  app.require_subcommand(1);

  CommonArgs design_args, bp_args, sim_args, est_args, crb_args, sweep_args;

  auto* design = app.add_subcommand("design", "build beamspace matrices and tables");
  add_common(design, design_args);

  auto* bp = app.add_subcommand("beampattern", "emit transmit beampattern tables");
  add_common(bp, bp_args);

  auto* sim = app.add_subcommand("simulate", "write one trial's snapshots as CSV");
  add_common(sim, sim_args);
  double sim_snr = 0.0;
  sim->add_option("--snr-db", sim_snr, "per-target SNR in dB");

  auto* est = app.add_subcommand("estimate", "run one simulated trial end to end");
  add_common(est, est_args);
  double est_snr = 10.0;
  est->add_option("--snr-db", est_snr, "per-target SNR in dB");

  auto* crb = app.add_subcommand("crb", "emit Cramer-Rao bound table");
  add_common(crb, crb_args);

  auto* sweep = app.add_subcommand("sweep", "full Monte Carlo SNR sweep");
  add_common(sweep, sweep_args);
  bool audit = false;
  sweep->add_flag("--audit", audit, "also write per-trial audit.csv");

  auto* verify = app.add_subcommand("verify", "run built-in invariant checks");

  CLI11_PARSE(app, argc, argv);

  try {
    if (design->parsed()) {
      write_design_outputs(resolve(design_args), true);
    } else if (bp->parsed()) {
      write_design_outputs(resolve(bp_args), false);
    } else if (sim->parsed()) {
      ExperimentConfig cfg = resolve(sim_args);
      const MethodSetup m = build_method(cfg.methods.front(), cfg);
      const Scenario scen = make_scenario(m, cfg, sim_snr);
      const SnapshotSet snaps =
          simulate_snapshots(scen, trial_seed(cfg.seed, 0, 0, 0));
      std::filesystem::create_directories(cfg.out_dir);
      std::ofstream f(std::filesystem::path(cfg.out_dir) / "snapshots.csv");
      f << "pulse,row,re,im\n";
      for (Eigen::Index q = 0; q < snaps.data.cols(); ++q)
        for (Eigen::Index r = 0; r < snaps.data.rows(); ++r)
          f << q << ',' << r << ',' << fmt9(snaps.data(r, q).real()) << ','
            << fmt9(snaps.data(r, q).imag()) << '\n';
      std::cout << "wrote " << (std::filesystem::path(cfg.out_dir) / "snapshots.csv")
                << " (" << snaps.data.rows() << " x " << snaps.data.cols()
                << ", method " << m.name << ", snr " << fmt9(sim_snr) << " dB)\n";
    } else if (est->parsed()) {
      ExperimentConfig cfg = resolve(est_args);
      const UlaGeometry rx{cfg.rx_elements, cfg.spacing_wavelengths};
      const Sector sector = make_sector(cfg.sector_min_deg, cfg.sector_max_deg,
                                        cfg.out_abs_deg, cfg.in_grid_step_deg,
                                        cfg.out_grid_step_deg);
      for (const auto& name : cfg.methods) {
        const MethodSetup m = build_method(name, cfg);
        MusicGridCache cache;
        PhaseLookupTable lut;
        const MusicGridCache* cache_ptr = nullptr;
        const PhaseLookupTable* lut_ptr = nullptr;
        if (cfg.estimator == "music") {
          cache = make_music_cache(m.C, m.tx_effective, rx, music_search_grid(cfg));
          cache_ptr = &cache;
        } else if (m.C.num_waveforms() == 2) {
          lut = build_phase_lut(m.C, m.tx_effective, sector.in_grid);
          lut_ptr = &lut;
        }
        const TrialOutcome out = run_single_trial(
            m, cfg, est_snr, trial_seed(cfg.seed, 0, 0, 0), cache_ptr, lut_ptr);
        std::cout << name << " (" << cfg.estimator << ", snr " << fmt9(est_snr)
                  << " dB): estimates [deg]";
        for (double e : out.estimates_deg) std::cout << ' ' << fmt9(e);
        std::cout << (out.resolved ? "  resolved" : "  not resolved") << "\n";
      }
    } else if (crb->parsed()) {
      ExperimentConfig cfg = resolve(crb_args);
      std::filesystem::create_directories(cfg.out_dir);
      std::ofstream f(std::filesystem::path(cfg.out_dir) / "crb.csv");
      f << "snr_db,method,target_index,crb_deg,crb_sqrt_deg,variant\n";
      for (const auto& name : cfg.methods) {
        const MethodSetup m = build_method(name, cfg);
        for (double snr : cfg.snr_db) {
          const Scenario scen = make_scenario(m, cfg, snr);
          for (const bool det : {false, true}) {
            const CrbResult r = det ? deterministic_crb(scen) : stochastic_crb(scen);
            for (Eigen::Index l = 0; l < r.per_target_deg2.size(); ++l)
              f << fmt9(snr) << ',' << name << ',' << l << ','
                << fmt9(r.per_target_deg2(l)) << ','
                << fmt9(std::sqrt(r.per_target_deg2(l))) << ','
                << (det ? "deterministic" : "stochastic") << '\n';
          }
        }
      }
      std::cout << "wrote " << (std::filesystem::path(cfg.out_dir) / "crb.csv") << "\n";
    } else if (sweep->parsed()) {
      ExperimentConfig cfg = resolve(sweep_args);
      if (audit) cfg.audit = true;
      const SweepResult res = run_sweep(cfg);
      emit_outputs(res, cfg, cfg.out_dir);
      std::cout << "sweep complete: " << res.cells.size() << " cells -> "
                << cfg.out_dir << "/sweep.csv\n";
      for (const auto& fail : res.failures)
        std::cerr << "method failed: " << fail.method << ": " << fail.message
                  << "\n";
      return res.failures.empty() ? 0 : 2;
    } else if (verify->parsed()) {
      return run_verification(std::cout) == 0 ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
