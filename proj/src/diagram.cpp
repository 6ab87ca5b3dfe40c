#include "relspar/diagram.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "relspar/errors.hpp"
#include "relspar/kernels.hpp"
#include "relspar/parallel.hpp"
#include "relspar/rng.hpp"

namespace relspar {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<double> checked_grid(std::vector<double> grid, const char* name,
                                 bool allow_zero) {
  for (double v : grid) {
    if (!std::isfinite(v) || v < 0.0 || (!allow_zero && v == 0.0))
      throw ParameterError(std::string(name) + " grid entries must be " +
                           (allow_zero ? "nonnegative" : "positive"));
  }
  std::sort(grid.begin(), grid.end());
  return grid;
}

std::vector<double> auto_lambda_grid(double lambda_sat_max, int size) {
  if (size < 1) throw ParameterError("lambda_grid_size must be >= 1");
  if (!(lambda_sat_max > 0.0)) return {0.0};
  std::vector<double> grid(size);
  if (size == 1) {
    grid[0] = lambda_sat_max;
    return grid;
  }
  for (int j = 0; j < size; ++j) {
    const double frac = static_cast<double>(j) / (size - 1);
    grid[j] = lambda_sat_max * std::pow(10.0, -4.0 * (1.0 - frac));
  }
  grid.back() = lambda_sat_max;
  return grid;
}

struct GammaStage {
  SolveReport beta_gamma;
  std::vector<double> weights;
  double lambda_sat = kNaN;
};

}  // namespace

SweepResult sweep(const TrajectoryDataset& data,
                  std::vector<double> gamma_grid,
                  std::vector<double> lambda_grid,
                  const SweepOptions& options) {
  if (gamma_grid.empty()) throw ParameterError("gamma grid is empty");
  gamma_grid = checked_grid(std::move(gamma_grid), "gamma", true);
  const bool auto_grid = lambda_grid.empty();
  if (!auto_grid)
    lambda_grid = checked_grid(std::move(lambda_grid), "lambda", true);
  options.objective.validate();
  if (options.objective.weight_cap > 0.0)
    throw ConfigError("sweep computes inference; weight_cap must be off");

  const std::size_t n_threads = resolve_threads(options.threads);
  const std::size_t k_dim = data.state_dim();

  SweepResult out;
  out.n = data.n();
  out.k_dim = k_dim;
  out.delta = options.delta;
  out.dataset_fingerprint = data.fingerprint();
  out.kl_direction =
      options.objective.kl_direction == KlDirection::behavioral_to_suggested
          ? "behavioral_to_suggested"
          : "suggested_to_behavioral";
  out.centered_r = options.inference.center_r;
  out.weight_cap = options.objective.weight_cap;
  out.kernel_backend =
      std::string(kernels::backend_name(kernels::active_backend()));

  // behavioral stage is shared by every grid point; failure here fails the
  // whole sweep
  const BehavioralFit fit = fit_behavioral(data);
  const Eigen::MatrixXd q = behavioral_influence(fit);
  out.b_n = fit.b_n.values;
  const std::vector<std::size_t> all_idx =
      ActiveSet::full(k_dim).indices;
  const std::vector<double> behav_var = coef_variance_behavioral(fit, all_idx);
  out.se_behavioral.resize(k_dim);
  for (std::size_t k = 0; k < k_dim; ++k)
    out.se_behavioral[k] =
        std::sqrt(behav_var[k] / static_cast<double>(data.n()));

  // stage one per gamma: beta_{n,gamma}, weights, saturation when needed
  std::vector<GammaStage> stages(gamma_grid.size());
  parallel_for_index(
      gamma_grid.size(), n_threads, [&](std::size_t gi) {
        ObjectiveEvaluator objective(data, fit.b_n, options.objective);
        GammaStage st;
        st.beta_gamma =
            maximize_m(objective, gamma_grid[gi], fit.b_n, options.solver);
        st.weights =
            adaptive_weights(st.beta_gamma.solution, fit.b_n, options.delta);
        if (auto_grid)
          st.lambda_sat =
              lambda_saturation(objective, gamma_grid[gi], st.weights,
                                st.beta_gamma.solution, options.solver);
        stages[gi] = std::move(st);
      });

  if (auto_grid) {
    double sat_max = 0.0;
    for (const auto& st : stages)
      if (std::isfinite(st.lambda_sat)) sat_max = std::max(sat_max, st.lambda_sat);
    lambda_grid = auto_lambda_grid(sat_max, options.lambda_grid_size);
  }

  out.gamma_grid = gamma_grid;
  out.lambda_grid = lambda_grid;
  out.points.assign(gamma_grid.size(),
                    std::vector<SweepPoint>(lambda_grid.size()));
  out.lambda_sat.resize(gamma_grid.size());
  out.beta_gamma.assign(gamma_grid.size() * k_dim, kNaN);
  for (std::size_t gi = 0; gi < gamma_grid.size(); ++gi) {
    out.lambda_sat[gi] = stages[gi].lambda_sat;
    for (std::size_t k = 0; k < k_dim; ++k)
      out.beta_gamma[gi * k_dim + k] = stages[gi].beta_gamma.solution.values[k];
  }

  // stage two: ascending-lambda path per gamma, warm-started
  parallel_for_index(gamma_grid.size(), n_threads, [&](std::size_t gi) {
    const double gamma = gamma_grid[gi];
    ObjectiveEvaluator objective(data, fit.b_n, options.objective);
    CoefficientVector warm = stages[gi].beta_gamma.solution;
    for (std::size_t li = 0; li < lambda_grid.size(); ++li) {
      SweepPoint& pt = out.points[gi][li];
      pt.gamma = gamma;
      pt.lambda = lambda_grid[li];
      try {
        const SolveReport res =
            maximize_w(objective, gamma, lambda_grid[li], stages[gi].weights,
                       warm, options.solver);
        warm = res.solution;
        pt.beta = res.solution.values;
        pt.converged = res.converged && stages[gi].beta_gamma.converged;

        const ActiveSet act = active_set(res.solution, fit.b_n, 0.0);
        pt.active = act.indices;

        DerivativeBundle bundle = objective.derivatives(
            res.solution, gamma, ActiveSet::full(k_dim));
        if (act.empty()) {
          pt.variance.active = act;
          pt.variance.n = data.n();
          pt.variance.per_coordinate_se.assign(k_dim, kNaN);
        } else {
          const Eigen::MatrixXd r =
              assemble_r(bundle, q, bundle.z_per_traj, act);
          pt.variance =
              coef_variance_adaptive(r, bundle, act, options.inference);
        }
        merge_behavioral_variance(pt.variance, fit);
        pt.se_theoretical = pt.variance.per_coordinate_se;

        if (options.baseline_variance) {
          const Eigen::MatrixXd base = coef_variance_baseline(
              bundle, q, bundle.z_per_traj, options.inference);
          pt.se_baseline.resize(k_dim);
          for (std::size_t k = 0; k < k_dim; ++k)
            pt.se_baseline[k] = std::sqrt(std::max(base(k, k), 0.0) /
                                          static_cast<double>(data.n()));
        }

        pt.value = objective.value(res.solution, act);
        pt.value_se =
            std::sqrt(value_variance(objective, res.solution, act, q));
      } catch (const Error& e) {
        pt.failed = true;
        pt.error = e.what();
      }
    }
  });

  return out;
}

EmpiricalSd empirical_variance(const SimConfig& sim_config,
                               const std::vector<double>& gamma_grid,
                               const std::vector<double>& lambda_grid,
                               std::size_t replicates,
                               std::uint64_t master_seed,
                               const SweepOptions& options,
                               const std::vector<std::uint64_t>* explicit_seeds) {
  if (replicates < 2)
    throw ParameterError("replicates must be >= 2 (a standard deviation "
                         "needs at least two runs)");
  if (lambda_grid.empty())
    throw ParameterError("empirical variance requires an explicit lambda grid");
  if (explicit_seeds && explicit_seeds->size() != replicates)
    throw ParameterError("explicit seed list must have one seed per replicate");
  sim_config.validate();

  const std::size_t n_threads = resolve_threads(options.threads);
  SweepOptions inner = options;
  inner.threads = 1;             // replicates fan out; each sweep is serial
  inner.baseline_variance = false;

  std::vector<std::optional<SweepResult>> results(replicates);
  parallel_for_index(replicates, n_threads, [&](std::size_t r) {
    SimConfig cfg = sim_config;
    cfg.seed = explicit_seeds ? (*explicit_seeds)[r]
                              : Rng::substream(master_seed, r).next_u64();
    try {
      const TrajectoryDataset data = simulate(cfg);
      results[r] = sweep(data, gamma_grid, lambda_grid, inner);
    } catch (const Error&) {
      results[r] = std::nullopt;  // replicate recorded as failed
    }
  });

  const auto first_ok =
      std::find_if(results.begin(), results.end(),
                   [](const auto& r) { return r.has_value(); });
  if (first_ok == results.end())
    throw Error("every replicate failed; no empirical SDs available");
  const std::size_t n_g = (*first_ok)->gamma_grid.size();
  const std::size_t n_l = (*first_ok)->lambda_grid.size();
  const std::size_t k_dim = (*first_ok)->k_dim;

  EmpiricalSd out;
  out.gamma_grid = (*first_ok)->gamma_grid;
  out.lambda_grid = (*first_ok)->lambda_grid;
  out.replicates = static_cast<int>(replicates);
  out.coef_sd.assign(n_g, std::vector<std::vector<double>>(
                              n_l, std::vector<double>(k_dim, kNaN)));
  out.value_sd.assign(n_g, std::vector<double>(n_l, kNaN));
  out.n_success.assign(n_g, std::vector<int>(n_l, 0));

  auto sample_sd = [](const std::vector<double>& xs) {
    const double m =
        std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
    double s2 = 0.0;
    for (double x : xs) s2 += (x - m) * (x - m);
    return std::sqrt(s2 / (xs.size() - 1));
  };

  for (std::size_t gi = 0; gi < n_g; ++gi)
    for (std::size_t li = 0; li < n_l; ++li) {
      std::vector<std::vector<double>> coefs(k_dim);
      std::vector<double> values;
      for (std::size_t r = 0; r < replicates; ++r) {
        if (!results[r]) continue;
        const SweepPoint& pt = results[r]->points[gi][li];
        if (pt.failed || pt.beta.size() != k_dim) continue;
        for (std::size_t k = 0; k < k_dim; ++k) coefs[k].push_back(pt.beta[k]);
        values.push_back(pt.value);
      }
      out.n_success[gi][li] = static_cast<int>(values.size());
      if (values.size() >= 2) {
        for (std::size_t k = 0; k < k_dim; ++k)
          out.coef_sd[gi][li][k] = sample_sd(coefs[k]);
        out.value_sd[gi][li] = sample_sd(values);
      }
    }
  return out;
}

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_or_empty(double v) {
  return std::isfinite(v) ? fmt_double(v) : std::string();
}

std::string fmt_gamma_label(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

}  // namespace

DiagramManifest emit_diagram(const SweepResult& sw, const EmpiricalSd* emp,
                             const std::filesystem::path& out_dir,
                             const std::vector<DiagramFormat>& formats) {
  if (sw.points.empty() || sw.lambda_grid.empty())
    throw ParameterError("emit_diagram called with an empty sweep");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory " + out_dir.string());

  const bool with_baseline = [&] {
    for (const auto& row : sw.points)
      for (const auto& pt : row)
        if (!pt.se_baseline.empty()) return true;
    return false;
  }();

  DiagramManifest manifest;
  const bool want_csv =
      std::find(formats.begin(), formats.end(), DiagramFormat::csv) !=
      formats.end();
  const bool want_svg =
      std::find(formats.begin(), formats.end(), DiagramFormat::svg) !=
      formats.end();

  if (want_csv) {
    const auto csv_path = out_dir / "diagram.csv";
    std::ofstream csv(csv_path, std::ios::binary);
    if (!csv) throw IoError("cannot write " + csv_path.string());
    csv << "gamma,lambda,k,beta,b_k,selected,se_theoretical,se_empirical,"
           "value,value_se,converged";
    if (with_baseline) csv << ",se_baseline";
    csv << '\n';

    for (std::size_t gi = 0; gi < sw.gamma_grid.size(); ++gi)
      for (std::size_t li = 0; li < sw.lambda_grid.size(); ++li) {
        const SweepPoint& pt = sw.points[gi][li];
        const std::string g = fmt_double(sw.gamma_grid[gi]);
        const std::string l = fmt_double(sw.lambda_grid[li]);
        // k = 0: the value row
        csv << g << ',' << l << ",0,,,,,";
        if (emp) csv << fmt_or_empty(emp->value_sd[gi][li]);
        csv << ',';
        if (!pt.failed) csv << fmt_double(pt.value);
        csv << ',';
        if (!pt.failed) csv << fmt_double(pt.value_se);
        csv << ',' << (pt.converged ? 1 : 0);
        if (with_baseline) csv << ',';
        csv << '\n';
        for (std::size_t k = 0; k < sw.k_dim; ++k) {
          csv << g << ',' << l << ',' << (k + 1) << ',';
          if (pt.beta.size() == sw.k_dim) csv << fmt_double(pt.beta[k]);
          csv << ',' << fmt_double(sw.b_n[k]) << ',';
          if (!pt.failed)
            csv << (std::binary_search(pt.active.begin(), pt.active.end(), k)
                        ? 1
                        : 0);
          csv << ',';
          if (pt.se_theoretical.size() == sw.k_dim)
            csv << fmt_or_empty(pt.se_theoretical[k]);
          csv << ',';
          if (emp) csv << fmt_or_empty(emp->coef_sd[gi][li][k]);
          csv << ",,," << (pt.converged ? 1 : 0);
          if (with_baseline) {
            csv << ',';
            if (pt.se_baseline.size() == sw.k_dim)
              csv << fmt_or_empty(pt.se_baseline[k]);
          }
          csv << '\n';
        }
      }
    if (!csv) throw IoError("write failed: " + csv_path.string());
    manifest.files.push_back("diagram.csv");
  }

  if (want_svg) {
    for (std::size_t gi = 0; gi < sw.gamma_grid.size(); ++gi) {
      const std::string name =
          "diagram_gamma_" + fmt_gamma_label(sw.gamma_grid[gi]) + ".svg";
      std::ofstream svg(out_dir / name, std::ios::binary);
      if (!svg) throw IoError("cannot write " + (out_dir / name).string());
      svg << render_diagram_svg(sw, emp, gi);
      manifest.files.push_back(name);
    }
  }

  nlohmann::json j;
  j["generator"] = "relspar 0.1.0";
  j["outputs"] = manifest.files;
  char fp[20];
  std::snprintf(fp, sizeof(fp), "%016llx",
                static_cast<unsigned long long>(sw.dataset_fingerprint));
  j["dataset_fingerprint"] = fp;
  j["n"] = sw.n;
  j["K"] = sw.k_dim;
  j["grids"] = {{"gamma", sw.gamma_grid}, {"lambda", sw.lambda_grid}};
  j["estimator"] = {
      {"variance", "adaptive_selection_aware"},
      {"kl_direction", sw.kl_direction},
      {"centered_r", sw.centered_r},
      {"weight_cap", sw.weight_cap},
      {"delta", sw.delta},
      {"baseline_included", with_baseline},
      {"value_variance", "influence_function_reconstruction"},
      {"behavioral_influence", "mle_reconstruction"},
  };
  j["kernel_backend"] = sw.kernel_backend;
  {
    nlohmann::json sat = nlohmann::json::array();
    for (double s : sw.lambda_sat)
      if (std::isfinite(s))
        sat.push_back(s);
      else
        sat.push_back(nullptr);
    j["lambda_sat"] = sat;
  }
  j["b_n"] = sw.b_n;
  if (emp) j["empirical_replicates"] = emp->replicates;

  manifest.json_text = j.dump(2);
  manifest.json_text.push_back('\n');
  const auto man_path = out_dir / "manifest.json";
  std::ofstream man(man_path, std::ios::binary);
  if (!man) throw IoError("cannot write " + man_path.string());
  man << manifest.json_text;
  manifest.files.push_back("manifest.json");
  return manifest;
}

}  // namespace relspar
