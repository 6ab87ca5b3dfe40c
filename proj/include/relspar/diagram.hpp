#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "relspar/dataset.hpp"
#include "relspar/inference.hpp"
#include "relspar/objective.hpp"
#include "relspar/policy.hpp"
#include "relspar/simulate.hpp"
#include "relspar/solvers.hpp"

namespace relspar {

struct SweepOptions {
  double delta = 1.0;            // adaptive-weight exponent
  bool baseline_variance = false;
  int lambda_grid_size = 40;     // auto grid: log-spaced over [1e-4, 1]*sat
  int threads = 0;               // 0 = hardware concurrency
  ObjectiveConfig objective;
  SolverOptions solver;
  InferenceOptions inference;
};

// One (gamma, lambda) grid point. Failed points keep their error text and
// leave the numeric fields NaN/empty.
struct SweepPoint {
  double gamma = 0.0;
  double lambda = 0.0;
  std::vector<double> beta;            // K
  std::vector<std::size_t> active;     // 0-based indices
  std::vector<double> se_theoretical;  // K
  std::vector<double> se_baseline;     // K, only with baseline_variance
  CoefficientVariance variance;        // active block + merged SEs
  double value = 0.0;
  double value_se = 0.0;
  bool converged = false;
  bool failed = false;
  std::string error;
};

struct SweepResult {
  std::vector<double> gamma_grid;
  std::vector<double> lambda_grid;
  std::vector<double> b_n;                     // K
  std::vector<double> se_behavioral;           // K, sqrt((I1^-1)_kk / n)
  std::vector<std::vector<SweepPoint>> points; // [gamma][lambda]
  std::vector<double> beta_gamma;              // flattened [gamma][k]
  std::vector<double> lambda_sat;              // per gamma
  // metadata
  double delta = 1.0;
  std::uint64_t dataset_fingerprint = 0;
  std::size_t n = 0, k_dim = 0;
  std::string kl_direction;
  bool centered_r = false;
  double weight_cap = 0.0;
  std::string kernel_backend;

  const SweepPoint& at(std::size_t gi, std::size_t li) const {
    return points[gi][li];
  }
};

// Full two-stage pipeline per gamma: behavioral fit (once), beta_{n,gamma},
// adaptive weights, then the ascending-lambda path with warm starts and
// per-point inference. An empty lambda_grid triggers the auto grid built
// from the largest per-gamma saturation lambda. Per-point failures are
// recorded; only a behavioral-fit failure aborts the sweep.
SweepResult sweep(const TrajectoryDataset& data,
                  std::vector<double> gamma_grid,
                  std::vector<double> lambda_grid,
                  const SweepOptions& options = {});

struct EmpiricalSd {
  std::vector<double> gamma_grid, lambda_grid;
  // sample SDs across successful replicates
  std::vector<std::vector<std::vector<double>>> coef_sd;  // [g][l][k]
  std::vector<std::vector<double>> value_sd;              // [g][l]
  std::vector<std::vector<int>> n_success;                // [g][l]
  int replicates = 0;
};

// Runs `replicates` independent simulate+sweep pipelines (behavioral fit
// refit per replicate) and reports across-replicate sample SDs of the
// coefficients and the value. Replicate r uses seed substream
// (master_seed, r) unless explicit_seeds is given.
EmpiricalSd empirical_variance(const SimConfig& sim_config,
                               const std::vector<double>& gamma_grid,
                               const std::vector<double>& lambda_grid,
                               std::size_t replicates,
                               std::uint64_t master_seed,
                               const SweepOptions& options = {},
                               const std::vector<std::uint64_t>*
                                   explicit_seeds = nullptr);

enum class DiagramFormat { csv, svg };

struct DiagramManifest {
  std::vector<std::string> files;  // relative to out_dir
  std::string json_text;           // manifest.json contents as written
};

// Writes diagram.csv (exact header
// gamma,lambda,k,beta,b_k,selected,se_theoretical,se_empirical,value,value_se,converged
// with ",se_baseline" appended when baseline SEs exist; k=0 rows carry the
// value), optional per-gamma SVG panels, and manifest.json.
DiagramManifest emit_diagram(const SweepResult& sweep,
                             const EmpiricalSd* empirical,
                             const std::filesystem::path& out_dir,
                             const std::vector<DiagramFormat>& formats);

// SVG renderer (one file per gamma); exposed for tests.
std::string render_diagram_svg(const SweepResult& sweep,
                               const EmpiricalSd* empirical, std::size_t gi);

}  // namespace relspar
