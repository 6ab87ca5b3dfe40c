// relspar: learn treatment policies under the relative-sparsity penalty and
// report selection-aware coefficient uncertainty over (gamma, lambda) grids.
//
// Subcommands: simulate, sweep, replicate, check. Exit codes: 0 success,
// 1 computational failure, 2 usage/config error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "relspar/check.hpp"
#include "relspar/dataset.hpp"
#include "relspar/diagram.hpp"
#include "relspar/errors.hpp"
#include "relspar/kernels.hpp"
#include "relspar/parallel.hpp"
#include "relspar/rng.hpp"

namespace {

constexpr const char* kVersion = "0.1.0";

using nlohmann::json;

struct GlobalFlags {
  int threads = 0;
  std::string kernels = "auto";
};

void apply_kernels(const std::string& choice) {
  if (choice == "auto") return;
  if (choice == "scalar")
    relspar::kernels::force_backend(relspar::kernels::Backend::scalar);
  else if (choice == "avx2")
    relspar::kernels::force_backend(relspar::kernels::Backend::avx2);
  else
    throw relspar::ConfigError("unknown --kernels value: " + choice);
}

json load_config_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw relspar::IoError("cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  json j;
  try {
    j = json::parse(ss.str());
  } catch (const json::exception& e) {
    throw relspar::ConfigError(std::string("config is not valid JSON: ") +
                               e.what());
  }
  // accept a previously written manifest as a config
  if (j.contains("config") && j.at("config").is_object()) j = j.at("config");
  return j;
}

// every resolved value is echoed into the manifest: no hidden defaults
json resolved_sweep_config(const relspar::SweepOptions& opt,
                           const std::vector<double>& gamma,
                           const std::vector<double>& lambda,
                           const GlobalFlags& g) {
  return json{
      {"gamma_grid", gamma},
      {"lambda_grid", lambda},  // empty = auto
      {"delta", opt.delta},
      {"baseline_variance", opt.baseline_variance},
      {"lambda_grid_size", opt.lambda_grid_size},
      {"kl_direction",
       opt.objective.kl_direction ==
               relspar::KlDirection::behavioral_to_suggested
           ? "behavioral_to_suggested"
           : "suggested_to_behavioral"},
      {"positivity_floor", opt.objective.positivity_floor},
      {"weight_cap", opt.objective.weight_cap},
      {"is_variant", opt.objective.is_variant},
      {"center_r", opt.inference.center_r},
      {"cond_limit", opt.inference.cond_limit},
      {"threads", g.threads},
      {"kernels", g.kernels},
  };
}

void write_manifest(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw relspar::IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

struct SweepFlagSet {
  std::vector<double> gamma{0.1, 1.0, 10.0};
  std::vector<double> lambda;  // empty = auto
  double delta = 1.0;
  int lambda_grid_size = 40;
  bool baseline = false;
  bool svg = false;
  bool standardize = false;
  bool center_r = false;
  double weight_cap = 0.0;
  double positivity_floor = 1e-8;
  std::string kl_direction = "behavioral_to_suggested";
  std::string is_variant = "trajectory";
};

void add_sweep_flags(CLI::App* cmd, SweepFlagSet& f) {
  cmd->add_option("--gamma", f.gamma, "gamma grid values");
  cmd->add_option("--lambda", f.lambda,
                  "lambda grid values (default: auto log grid)");
  cmd->add_option("--delta", f.delta, "adaptive weight exponent (> 0)");
  cmd->add_option("--lambda-grid-size", f.lambda_grid_size,
                  "points in the auto lambda grid");
  cmd->add_flag("--baseline-variance", f.baseline,
                "also emit the non-adaptive sandwich SEs (se_baseline column)");
  cmd->add_flag("--svg", f.svg, "render one SVG per gamma");
  cmd->add_flag("--center-r", f.center_r,
                "center the middle moment of the variance (sensitivity)");
  cmd->add_option("--weight-cap", f.weight_cap,
                  "importance weight cap (exploratory; must be 0 for sweeps)");
  cmd->add_option("--positivity-floor", f.positivity_floor,
                  "minimum behavioral probability of observed actions");
  cmd->add_option("--kl-direction", f.kl_direction,
                  "behavioral_to_suggested | suggested_to_behavioral");
  cmd->add_option("--is-variant", f.is_variant,
                  "importance sampling variant (only 'trajectory')");
}

relspar::SweepOptions to_sweep_options(const SweepFlagSet& f,
                                       const GlobalFlags& g) {
  relspar::SweepOptions opt;
  opt.delta = f.delta;
  opt.baseline_variance = f.baseline;
  opt.lambda_grid_size = f.lambda_grid_size;
  opt.threads = g.threads;
  opt.inference.center_r = f.center_r;
  opt.objective.weight_cap = f.weight_cap;
  opt.objective.positivity_floor = f.positivity_floor;
  opt.objective.is_variant = f.is_variant;
  if (f.kl_direction == "behavioral_to_suggested")
    opt.objective.kl_direction = relspar::KlDirection::behavioral_to_suggested;
  else if (f.kl_direction == "suggested_to_behavioral")
    opt.objective.kl_direction = relspar::KlDirection::suggested_to_behavioral;
  else
    throw relspar::ConfigError("unknown --kl-direction: " + f.kl_direction);
  if (f.delta <= 0.0) throw relspar::ParameterError("--delta must be > 0");
  opt.objective.validate();
  return opt;
}

int cmd_simulate(const std::string& config_path,
                 std::optional<std::uint64_t> seed, const std::string& out,
                 const GlobalFlags& g) {
  relspar::SimConfig cfg;
  if (!config_path.empty())
    cfg = relspar::SimConfig::from_json_text(load_config_json(config_path).dump());
  if (seed) cfg.seed = *seed;
  cfg.validate();

  const relspar::TrajectoryDataset data = relspar::simulate(cfg);
  relspar::write_trajectories(data, out);

  json manifest;
  manifest["command"] = "simulate";
  manifest["version"] = kVersion;
  manifest["config"] = json::parse(cfg.to_json_text());
  manifest["outputs"] = {out};
  char fp[20];
  std::snprintf(fp, sizeof(fp), "%016llx",
                static_cast<unsigned long long>(data.fingerprint()));
  manifest["dataset_fingerprint"] = fp;
  manifest["kernels"] = g.kernels;
  write_manifest(out + ".manifest.json", manifest);
  std::cout << "wrote " << out << " (n=" << data.n()
            << ", T+1=" << data.t_plus_1() << ", K=" << data.state_dim()
            << ")\n";
  return 0;
}

int emit_and_report(const relspar::SweepResult& result,
                    const relspar::EmpiricalSd* emp,
                    const std::filesystem::path& out_dir, bool svg,
                    json manifest) {
  std::vector<relspar::DiagramFormat> formats{relspar::DiagramFormat::csv};
  if (svg) formats.push_back(relspar::DiagramFormat::svg);
  const relspar::DiagramManifest dm =
      relspar::emit_diagram(result, emp, out_dir, formats);

  std::size_t failed = 0, total = 0;
  for (const auto& row : result.points)
    for (const auto& pt : row) {
      ++total;
      if (pt.failed) ++failed;
    }
  manifest["outputs"] = dm.files;
  manifest["grid_points"] = total;
  manifest["grid_points_failed"] = failed;
  if (failed > 0) {
    json errs = json::array();
    for (const auto& row : result.points)
      for (const auto& pt : row)
        if (pt.failed)
          errs.push_back({{"gamma", pt.gamma},
                          {"lambda", pt.lambda},
                          {"error", pt.error}});
    manifest["failures"] = errs;
  }
  write_manifest(out_dir / "manifest.json", manifest);

  std::cout << "sweep: " << (total - failed) << "/" << total
            << " grid points ok; outputs in " << out_dir.string() << "\n";
  return failed == total ? 1 : 0;
}

int cmd_sweep(const std::string& data_path, const std::string& out_dir,
              const SweepFlagSet& flags, bool standardize,
              const GlobalFlags& g) {
  relspar::SweepOptions opt = to_sweep_options(flags, g);
  relspar::TrajectoryDataset data = relspar::load_trajectories(data_path);
  json manifest;
  manifest["command"] = "sweep";
  manifest["version"] = kVersion;
  manifest["input"] = data_path;
  manifest["standardize"] = standardize;
  manifest["config"] = resolved_sweep_config(opt, flags.gamma, flags.lambda, g);

  if (standardize) {
    auto [scaled, tf] = relspar::standardize_states(data);
    data = std::move(scaled);
    manifest["standardization"] = {{"mean", tf.mean}, {"scale", tf.scale}};
  }
  const relspar::SweepResult result =
      relspar::sweep(data, flags.gamma, flags.lambda, opt);
  return emit_and_report(result, nullptr, out_dir, flags.svg,
                         std::move(manifest));
}

int cmd_replicate(const std::string& config_path, std::size_t replicates,
                  std::uint64_t master_seed, const std::string& out_dir,
                  const SweepFlagSet& flags, const GlobalFlags& g) {
  relspar::SweepOptions opt = to_sweep_options(flags, g);
  if (replicates < 2)
    throw relspar::ParameterError("--replicates must be >= 2");
  relspar::SimConfig cfg;
  if (!config_path.empty())
    cfg = relspar::SimConfig::from_json_text(load_config_json(config_path).dump());
  cfg.validate();

  // primary dataset and sweep fix the lambda grid for every replicate
  const relspar::TrajectoryDataset data = relspar::simulate(cfg);
  const relspar::SweepResult primary =
      relspar::sweep(data, flags.gamma, flags.lambda, opt);
  const relspar::EmpiricalSd emp = relspar::empirical_variance(
      cfg, primary.gamma_grid, primary.lambda_grid, replicates, master_seed,
      opt);

  json manifest;
  manifest["command"] = "replicate";
  manifest["version"] = kVersion;
  manifest["replicates"] = replicates;
  manifest["master_seed"] = master_seed;
  manifest["config"] = resolved_sweep_config(opt, primary.gamma_grid,
                                             primary.lambda_grid, g);
  manifest["config"]["sim"] = json::parse(cfg.to_json_text());
  int success = 0;
  for (const auto& row : emp.n_success)
    for (int c : row) success = std::max(success, c);
  manifest["replicates_succeeded_max"] = success;
  return emit_and_report(primary, &emp, out_dir, flags.svg,
                         std::move(manifest));
}

int cmd_check(bool perturb) {
  relspar::CheckOptions opt;
  opt.perturb_gradient = perturb;
  const std::vector<relspar::CheckLine> lines = relspar::run_checks(opt);
  bool all_pass = true;
  std::printf("%-40s %-6s %s\n", "check", "status", "detail");
  for (const auto& l : lines) {
    std::printf("%-40s %-6s %s\n", l.name.c_str(), l.pass ? "PASS" : "FAIL",
                l.detail.c_str());
    all_pass = all_pass && l.pass;
  }
  return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"relative-sparsity policy learning and selection-aware "
               "inference"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  GlobalFlags g;
  app.add_option("--threads", g.threads,
                 "worker threads for grid/replicate fan-out (0 = all cores)");
  app.add_option("--kernels", g.kernels, "auto | scalar | avx2");

  // simulate
  auto* sim = app.add_subcommand("simulate", "generate a trajectory CSV");
  std::string sim_config, sim_out;
  std::optional<std::uint64_t> sim_seed;
  sim->add_option("--config", sim_config, "simulation config JSON");
  sim->add_option("--seed", sim_seed, "override config seed");
  sim->add_option("--out", sim_out, "output CSV path")->required();

  // sweep
  auto* sw = app.add_subcommand("sweep",
                                "fit the (gamma, lambda) grid on a dataset");
  std::string sw_data, sw_out = ".";
  bool sw_standardize = false;
  SweepFlagSet sw_flags;
  sw->add_option("--data", sw_data, "trajectory CSV")->required();
  sw->add_option("--out-dir", sw_out, "output directory");
  sw->add_flag("--standardize", sw_standardize,
               "standardize states before fitting (opt-in)");
  add_sweep_flags(sw, sw_flags);

  // replicate
  auto* rep = app.add_subcommand(
      "replicate", "simulate+sweep replicates for empirical SEs");
  std::string rep_config, rep_out = ".";
  std::size_t rep_n = 0;
  std::uint64_t rep_seed = 1;
  SweepFlagSet rep_flags;
  rep->add_option("--config", rep_config, "simulation config JSON");
  rep->add_option("--replicates", rep_n, "number of replicates (>= 2)")
      ->required();
  rep->add_option("--master-seed", rep_seed, "seed for replicate substreams");
  rep->add_option("--out-dir", rep_out, "output directory");
  add_sweep_flags(rep, rep_flags);

  // check
  auto* chk = app.add_subcommand("check", "run built-in self-diagnostics");
  bool chk_perturb = false;
  chk->add_flag("--perturb-gradient", chk_perturb,
                "test hook: corrupt the gradient so checks must fail")
      ->group("");  // hidden

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
    app.exit(e);
    return 2;
  }

  try {
    apply_kernels(g.kernels);
    if (*sim) return cmd_simulate(sim_config, sim_seed, sim_out, g);
    if (*sw) return cmd_sweep(sw_data, sw_out, sw_flags, sw_standardize, g);
    if (*rep)
      return cmd_replicate(rep_config, rep_n, rep_seed, rep_out, rep_flags, g);
    if (*chk) return cmd_check(chk_perturb);
  } catch (const relspar::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const relspar::ParameterError& e) {
    std::cerr << "parameter error: " << e.what() << "\n";
    return 2;
  } catch (const relspar::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
