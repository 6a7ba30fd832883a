// Command-line driver: FOM runs, offline stages, single ROM runs, benchmark
// tables and mesh-size sweeps.  Exit code 0 on success, 2 when a report is
// flagged unstable, 1 on errors.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"
#include "srom/srom.hpp"

namespace fs = std::filesystem;
using namespace srom;

namespace {

struct Overrides {
  std::string config;
  std::optional<int> nx, n_t, n_mu, z_ref, repeats, targets_mu, targets_t, m_hyp;
  std::optional<std::size_t> n;
  std::optional<double> n_pct, dt, cfl_fraction, threshold;
  std::optional<std::uint64_t> seed;
  std::string interpolation, shift_mode;

  cli::RunConfig resolve() const {
    auto rc = cli::load_config(config);
    auto& tc = rc.tc;
    if (nx) tc.nx = *nx;
    if (n_t) tc.n_t = *n_t;
    if (n_mu) tc.n_mu = *n_mu;
    if (z_ref) tc.z_ref = *z_ref;
    if (m_hyp) tc.m_hyp = *m_hyp;
    if (dt) tc.time_step.dt = *dt;
    if (cfl_fraction) tc.time_step.cfl_fraction = *cfl_fraction;
    if (seed) tc.calibration.seed = *seed;
    if (targets_mu) tc.targets_mu = *targets_mu;
    if (targets_t) tc.targets_t = *targets_t;
    if (repeats) rc.experiment.repeats = *repeats;
    if (threshold) rc.experiment.instability_threshold = *threshold;
    if (n_pct) {
      tc.n_fraction = *n_pct / 100.0;
      rc.n.reset();
    }
    if (n) rc.n = *n;
    if (interpolation == "global") tc.interpolation = ShiftInterpolation::GlobalLagrange;
    else if (interpolation == "bilinear") tc.interpolation = ShiftInterpolation::Bilinear;
    if (shift_mode == "reference") tc.shift_mode = ShiftMode::ReferenceComposed;
    else if (shift_mode == "pairwise") tc.shift_mode = ShiftMode::Pairwise;
    return rc;
  }
};

OfflineArtifacts offline_for(const cli::RunConfig& rc, const std::string& artifacts, bool need_hyper) {
  if (!artifacts.empty() && fs::exists(fs::path(artifacts) / "shifts.txt")) {
    auto off = load_offline(rc.tc, artifacts);
    if (need_hyper && !off.has_hyper()) build_hyper(off);
    return off;
  }
  auto off = build_offline(rc.tc);
  if (need_hyper) build_hyper(off);
  return off;
}

bool any_hyper(const std::vector<Variant>& vs) {
  for (auto v : vs)
    if (is_hyper_reduced(v)) return true;
  return false;
}

void print_summary(const ExperimentReport& r) {
  std::cout << report_row(r) << "\n";
}

int finish(const std::vector<ExperimentReport>& reports, const std::string& out) {
  std::cout << kReportHeader << "\n";
  bool unstable = false;
  for (const auto& r : reports) {
    print_summary(r);
    unstable = unstable || r.error.unstable;
  }
  emit_report(reports, out);
  std::cerr << "wrote " << out << "\n";
  return unstable ? 2 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Shifted-snapshot reduced-order models with adaptive hyper-reduction"};
  app.require_subcommand(1);
  app.fallthrough();
  Overrides ov;
  app.add_option("-c,--config", ov.config, "configuration file")->required()->check(CLI::ExistingFile);
  app.add_option("--nx", ov.nx, "cells per direction");
  app.add_option("--nt", ov.n_t, "time samples N_t");
  app.add_option("--nmu", ov.n_mu, "parameter samples N_mu");
  app.add_option("--z-ref", ov.z_ref, "reference sample index");
  app.add_option("--m-hyp", ov.m_hyp, "training parameters for hyper-reduction");
  app.add_option("--n", ov.n, "reduced mesh size (cells)");
  app.add_option("--n-pct", ov.n_pct, "reduced mesh size in percent of N");
  app.add_option("--dt", ov.dt, "time step override");
  app.add_option("--cfl-fraction", ov.cfl_fraction, "fraction of the CFL time step");
  app.add_option("--seed", ov.seed, "seed for candidate subsampling");
  app.add_option("--targets-mu", ov.targets_mu, "number of target mu values");
  app.add_option("--targets-t", ov.targets_t, "number of target times (static cases)");
  app.add_option("--repeats", ov.repeats, "timed repetitions per target");
  app.add_option("--threshold", ov.threshold, "instability threshold on E");
  app.add_option("--interpolation", ov.interpolation, "shift interpolation")->check(CLI::IsMember({"global", "bilinear"}));
  app.add_option("--shift-mode", ov.shift_mode, "shift table mode")->check(CLI::IsMember({"reference", "pairwise"}));

  auto* fom = app.add_subcommand("fom", "run the full-order model and store the trajectory");
  double fom_mu = 0.0;
  std::string fom_out;
  std::vector<double> fom_times;
  fom->add_option("--mu", fom_mu, "parameter value")->required();
  fom->add_option("--out", fom_out, "output directory")->required();
  fom->add_option("--times", fom_times, "record times (default: sample times)");

  auto* offline = app.add_subcommand("offline", "snapshots and calibrated shift table");
  std::string off_out;
  offline->add_option("--out", off_out, "artifact directory")->required();

  auto* hyper = app.add_subcommand("hyper-offline", "offline stage plus residual-based reduced meshes");
  std::string hyp_out;
  hyper->add_option("--out", hyp_out, "artifact directory")->required();

  auto* rom = app.add_subcommand("rom", "one ROM variant at one parameter");
  std::string rom_variant = "Adp-SS", rom_artifacts, rom_field;
  double rom_mu = 0.0;
  std::optional<double> rom_t;
  rom->add_option("--variant", rom_variant, "Adp-SS, N-Adp-SS, SS or S");
  rom->add_option("--mu", rom_mu, "parameter value")->required();
  rom->add_option("--t", rom_t, "time (static cases)");
  rom->add_option("--artifacts", rom_artifacts, "load offline artifacts from this directory");
  rom->add_option("--field-out", rom_field, "write the final ROM field here");

  auto* bench = app.add_subcommand("bench", "all configured variants over the target set");
  std::string bench_out, bench_artifacts, bench_variants;
  bench->add_option("--out", bench_out, "report CSV (default from config)");
  bench->add_option("--artifacts", bench_artifacts, "offline artifact directory");
  bench->add_option("--variants", bench_variants, "comma-separated variant list");

  auto* sweep = app.add_subcommand("sweep", "error versus reduced mesh size");
  std::string sweep_out, sweep_artifacts, sweep_n;
  sweep->add_option("--out", sweep_out, "report CSV (default from config)");
  sweep->add_option("--artifacts", sweep_artifacts, "offline artifact directory");
  sweep->add_option("--sizes", sweep_n, "comma-separated reduced mesh sizes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    const auto rc = ov.resolve();
    if (*fom) {
      const auto cfg = rc.tc.fom();
      if (rc.tc.is_static) throw ConfigError("case '" + rc.tc.label + "' has no time-dependent FOM");
      auto times = fom_times;
      if (times.empty()) times = build_param_grid(0.0, rc.tc.t_end, rc.tc.mu_lo, rc.tc.mu_hi, rc.tc.n_t, rc.tc.n_mu).t_nodes();
      const auto tr = run_fom(cfg, fom_mu, times);
      write_trajectory(fom_out, tr);
      std::cout << "steps = " << tr.steps << "\ndt = " << tr.dt << "\n";
      return 0;
    }
    if (*offline || *hyper) {
      const bool with_hyper = static_cast<bool>(*hyper);
      const auto out = with_hyper ? hyp_out : off_out;
      auto off = build_offline(rc.tc);
      if (with_hyper) build_hyper(off);
      save_offline(off, out);
      std::cout << "samples = " << off.pgrid.size() << "\nz_ref = " << off.z_ref
                << "\nadditivity_defect = " << off.shifts->additivity_defect << "\n";
      if (with_hyper) std::cout << "reduced_mesh_default_n = " << rc.mesh_size() << "\n";
      return 0;
    }
    if (*rom) {
      const auto v = parse_variant(rom_variant);
      const auto off = offline_for(rc, rom_artifacts, is_hyper_reduced(v));
      auto opt = rc.experiment;
      opt.mu_values = {rom_mu};
      if (rc.tc.is_static) opt.t_values = {rom_t.value_or(0.0)};
      const auto r = run_experiment(off, v, rc.mesh_size(), opt);
      const auto& s = r.runtime.split;
      std::cout << "variant = " << to_string(v) << "\nmu = " << rom_mu << "\nn = " << r.n << "\nerror = " << r.error.max_error
                << "\nunstable = " << (r.error.unstable ? 1 : 0) << "\nC = " << r.runtime.mean << "\nC_adapt = " << s.adapt
                << "\nC_A = " << s.assemble_A << "\nC_b = " << s.assemble_b << "\nC_ls = " << s.lsq << "\n";
      if (!rom_field.empty()) {
        if (rc.tc.is_static) throw ConfigError("--field-out is only available for time-dependent cases");
        RunOptions ro;
        ro.mu = rom_mu;
        ro.t_end = rc.tc.t_end;
        ro.dt = off.dt;
        if (v == Variant::AdpSS) ro.mesh = {MeshMode::Adaptive, off.reduced_mesh(v, rc.mesh_size()), off.z_ref};
        if (v == Variant::NAdpSS) ro.mesh = {MeshMode::Fixed, off.reduced_mesh(v, rc.mesh_size()), off.z_ref};
        const auto run = run_rom(off.model(v == Variant::S ? BasisMode::Plain : BasisMode::Shifted), ro);
        write_field(rom_field, run.final_field());
      }
      return r.error.unstable ? 2 : 0;
    }
    if (*bench) {
      const auto variants = bench_variants.empty() ? rc.variants : cli::parse_variants(bench_variants);
      const auto off = offline_for(rc, bench_artifacts, any_hyper(variants));
      std::vector<ExperimentReport> reports;
      for (auto v : variants) reports.push_back(run_experiment(off, v, rc.mesh_size(), rc.experiment));
      return finish(reports, bench_out.empty() ? rc.output : bench_out);
    }
    if (*sweep) {
      std::vector<std::size_t> sizes = rc.sweep_n;
      if (!sweep_n.empty()) {
        sizes.clear();
        for (const auto& s : cli::split_list(sweep_n)) sizes.push_back(std::stoul(s));
      }
      if (sizes.empty()) throw ConfigError("no reduced mesh sizes given for the sweep");
      const auto off = offline_for(rc, sweep_artifacts, true);
      std::vector<ExperimentReport> reports;
      for (auto v : rc.sweep_variants)
        for (auto n : sizes) reports.push_back(run_experiment(off, v, n, rc.experiment));
      std::string out = sweep_out;
      if (out.empty()) {
        const fs::path p(rc.output);
        out = (p.parent_path() / (p.stem().string() + "_sweep.csv")).string();
      }
      return finish(reports, out);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
