#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "relspar/diagram.hpp"
#include "relspar/errors.hpp"
#include "support.hpp"

using namespace relspar;

namespace {

TrajectoryDataset sim_data(std::size_t n = 300, std::uint64_t seed = 91) {
  SimConfig cfg;
  cfg.n = n;
  cfg.seed = seed;
  return simulate(cfg);
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

CsvTable read_csv(const std::filesystem::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  CsvTable t;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.push_back("");
    if (first) {
      t.header = cells;
      first = false;
    } else {
      t.rows.push_back(cells);
    }
  }
  return t;
}

}  // namespace

TEST_CASE("sweep populates the whole grid with consistent endpoints") {
  const TrajectoryDataset d = sim_data();
  SweepOptions opt;
  opt.threads = 2;
  std::vector<double> lambdas{0.0, 1e-3, 1e-2, 0.1, 1.0, 1e9};
  const SweepResult sw = sweep(d, {0.5, 2.0}, lambdas, opt);

  REQUIRE(sw.points.size() == 2);
  REQUIRE(sw.points[0].size() == lambdas.size());
  for (const auto& row : sw.points)
    for (const auto& pt : row) {
      CHECK_FALSE(pt.failed);
      CHECK(pt.beta.size() == 2);
      CHECK(pt.se_theoretical.size() == 2);
      CHECK(std::isfinite(pt.value));
      CHECK(std::isfinite(pt.value_se));
    }

  for (std::size_t gi = 0; gi < 2; ++gi) {
    // lambda = 0 equals the unpenalized stage-one solution
    for (int k = 0; k < 2; ++k)
      CHECK(std::fabs(sw.points[gi][0].beta[k] -
                      sw.beta_gamma[gi * 2 + k]) <= 1e-6);
    // the huge lambda saturates: bitwise tie, empty active set, behavioral SE
    const SweepPoint& sat = sw.points[gi].back();
    CHECK(sat.beta == sw.b_n);
    CHECK(sat.active.empty());
    for (int k = 0; k < 2; ++k)
      CHECK(sat.se_theoretical[k] == sw.se_behavioral[k]);
    // at lambda = 0 everything is usually selected; SEs from Eq. (1)
    CHECK(sw.points[gi][0].active.size() == 2);
  }
}

TEST_CASE("sweep is deterministic") {
  const TrajectoryDataset d = sim_data(150, 7);
  SweepOptions opt;
  opt.threads = 2;
  const std::vector<double> lambdas{0.0, 0.05, 1e8};
  const SweepResult a = sweep(d, {1.0}, lambdas, opt);
  const SweepResult b = sweep(d, {1.0}, lambdas, opt);
  for (std::size_t li = 0; li < lambdas.size(); ++li) {
    CHECK(a.points[0][li].beta == b.points[0][li].beta);
    CHECK(a.points[0][li].se_theoretical == b.points[0][li].se_theoretical);
    CHECK(a.points[0][li].value == b.points[0][li].value);
  }
}

TEST_CASE("auto lambda grid ends at a saturating value") {
  const TrajectoryDataset d = sim_data(150, 8);
  SweepOptions opt;
  opt.lambda_grid_size = 8;
  const SweepResult sw = sweep(d, {1.0}, {}, opt);
  REQUIRE(sw.lambda_grid.size() == 8);
  CHECK(std::isfinite(sw.lambda_sat[0]));
  const SweepPoint& top = sw.points[0].back();
  CHECK(top.beta == sw.b_n);
  CHECK(top.active.empty());
  // grid spans 4 decades
  CHECK(sw.lambda_grid.front() ==
        doctest::Approx(1e-4 * sw.lambda_grid.back()).epsilon(1e-9));
}

TEST_CASE("warm starts do not distort the path") {
  const TrajectoryDataset d = sim_data(150, 10);
  const BehavioralFit fit = fit_behavioral(d);
  ObjectiveEvaluator objective(d, fit.b_n);
  const double gamma = 1.0;
  const SolveReport stage1 = maximize_m(objective, gamma, fit.b_n);
  const std::vector<double> w =
      adaptive_weights(stage1.solution, fit.b_n, 1.0);
  const double sat = lambda_saturation(objective, gamma, w, stage1.solution);

  const std::vector<double> lambdas{0.0, 0.05 * sat, 0.2 * sat, 0.5 * sat,
                                    sat};
  CoefficientVector warm = stage1.solution;
  for (double lam : lambdas) {
    const SolveReport warm_rep =
        maximize_w(objective, gamma, lam, w, warm);
    warm = warm_rep.solution;
    const SolveReport cold_rep =
        maximize_w(objective, gamma, lam, w, fit.b_n);
    CHECK(std::fabs(warm_rep.objective_value - cold_rep.objective_value) <=
          1e-6 * std::max(1.0, std::fabs(warm_rep.objective_value)));
  }
}

TEST_CASE("empirical variance: degenerate seeds give SD zero") {
  SimConfig cfg;
  cfg.n = 120;
  SweepOptions opt;
  opt.threads = 2;
  const std::vector<std::uint64_t> seeds{42, 42};
  const EmpiricalSd emp = empirical_variance(cfg, {1.0}, {0.0, 1e8}, 2, 0,
                                             opt, &seeds);
  for (std::size_t li = 0; li < 2; ++li) {
    CHECK(emp.n_success[0][li] == 2);
    for (int k = 0; k < 2; ++k) CHECK(emp.coef_sd[0][li][k] == 0.0);
    CHECK(emp.value_sd[0][li] == 0.0);
  }
}

TEST_CASE("empirical variance is deterministic in the master seed") {
  SimConfig cfg;
  cfg.n = 120;
  SweepOptions opt;
  opt.threads = 2;
  const EmpiricalSd a = empirical_variance(cfg, {1.0}, {0.0}, 3, 99, opt);
  const EmpiricalSd b = empirical_variance(cfg, {1.0}, {0.0}, 3, 99, opt);
  CHECK(a.coef_sd[0][0] == b.coef_sd[0][0]);
  CHECK(a.value_sd[0][0] == b.value_sd[0][0]);
  CHECK_THROWS_AS(empirical_variance(cfg, {1.0}, {0.0}, 1, 99, opt),
                  ParameterError);
  CHECK_THROWS_AS(empirical_variance(cfg, {1.0}, {}, 2, 99, opt),
                  ParameterError);
}

TEST_CASE("coefficient SDs shrink like 1/sqrt(n)") {
  SweepOptions opt;
  opt.threads = 2;
  SimConfig small;
  small.n = 1000;
  SimConfig big;
  big.n = 4000;
  const std::size_t reps = 40;
  const EmpiricalSd sd_small =
      empirical_variance(small, {1.0}, {0.0}, reps, 1234, opt);
  const EmpiricalSd sd_big =
      empirical_variance(big, {1.0}, {0.0}, reps, 1234, opt);
  for (int k = 0; k < 2; ++k) {
    const double ratio = sd_small.coef_sd[0][0][k] /
                         (2.0 * sd_big.coef_sd[0][0][k]);
    CHECK(ratio >= 0.7);
    CHECK(ratio <= 1.4);
  }
}

TEST_CASE("diagram emission: schema, round trip, svg, manifest") {
  const auto dir = testsup::make_temp_dir("diagram");
  const TrajectoryDataset d = sim_data(150, 11);
  SweepOptions opt;
  opt.baseline_variance = true;
  const std::vector<double> lambdas{0.0, 0.01, 1e8};
  const SweepResult sw = sweep(d, {0.5, 1.0}, lambdas, opt);
  const DiagramManifest man = emit_diagram(
      sw, nullptr, dir, {DiagramFormat::csv, DiagramFormat::svg});

  const CsvTable t = read_csv(dir / "diagram.csv");
  CHECK(t.header ==
        std::vector<std::string>{"gamma", "lambda", "k", "beta", "b_k",
                                 "selected", "se_theoretical", "se_empirical",
                                 "value", "value_se", "converged",
                                 "se_baseline"});
  // |gamma| * |lambda| * (K + 1)
  CHECK(t.rows.size() == 2 * 3 * 3);

  // round trip at 12 significant digits
  for (const auto& row : t.rows) {
    const double gamma = std::stod(row[0]);
    const double lambda = std::stod(row[1]);
    const int k = std::stoi(row[2]);
    std::size_t gi = gamma == 0.5 ? 0 : 1;
    std::size_t li = lambda == 0.0 ? 0 : (lambda == 0.01 ? 1 : 2);
    const SweepPoint& pt = sw.points[gi][li];
    if (k == 0) {
      CHECK(std::stod(row[8]) ==
            doctest::Approx(pt.value).epsilon(1e-12));
      CHECK(std::stod(row[9]) ==
            doctest::Approx(pt.value_se).epsilon(1e-12));
      CHECK(row[3].empty());
    } else {
      CHECK(std::stod(row[3]) ==
            doctest::Approx(pt.beta[k - 1]).epsilon(1e-12));
      CHECK(std::stod(row[6]) ==
            doctest::Approx(pt.se_theoretical[k - 1]).epsilon(1e-12));
      CHECK(!row[11].empty());  // baseline column populated
      CHECK(row[8].empty());
    }
  }

  // one SVG per gamma, non-empty
  for (const char* name : {"diagram_gamma_0.5.svg", "diagram_gamma_1.svg"}) {
    CAPTURE(name);
    CHECK(std::filesystem::exists(dir / name));
    CHECK(std::filesystem::file_size(dir / name) > 500);
    const std::string text = testsup::read_text(dir / name);
    CHECK(text.find("<svg") != std::string::npos);
    CHECK(text.find("polyline") != std::string::npos);
  }

  CHECK(std::filesystem::exists(dir / "manifest.json"));
  CHECK(man.files.size() == 4);  // csv + 2 svg + manifest
  const std::string mtext = testsup::read_text(dir / "manifest.json");
  CHECK(mtext.find("dataset_fingerprint") != std::string::npos);
  CHECK(mtext.find("kl_direction") != std::string::npos);

  std::filesystem::remove_all(dir);
}

TEST_CASE("emit_diagram rejects an empty sweep") {
  SweepResult empty;
  const auto dir = testsup::make_temp_dir("empty");
  CHECK_THROWS_AS(
      emit_diagram(empty, nullptr, dir, {DiagramFormat::csv}),
      ParameterError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("behavioral-region control at saturation") {
  const TrajectoryDataset d = sim_data(200, 13);
  SweepOptions opt;
  opt.baseline_variance = true;
  const SweepResult sw = sweep(d, {0.5, 1.0, 2.0}, {0.0, 1e8}, opt);
  for (std::size_t gi = 0; gi < 3; ++gi) {
    const SweepPoint& sat = sw.points[gi].back();
    const double max_reported =
        *std::max_element(sat.se_theoretical.begin(),
                          sat.se_theoretical.end());
    const double max_behavioral = *std::max_element(
        sw.se_behavioral.begin(), sw.se_behavioral.end());
    CHECK(max_reported <= max_behavioral + 1e-12);
    CHECK(sat.se_baseline.size() == 2);  // contrast available in the diagram
  }
}
