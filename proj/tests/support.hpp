#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "relspar/dataset.hpp"
#include "relspar/policy.hpp"
#include "relspar/rng.hpp"

namespace testsup {

inline std::filesystem::path make_temp_dir(const std::string& tag) {
  static std::atomic<int> counter{0};
  const auto dir = std::filesystem::temp_directory_path() /
                   ("relspar_" + tag + "_" + std::to_string(::getpid()) + "_" +
                    std::to_string(counter.fetch_add(1)));
  std::filesystem::create_directories(dir);
  return dir;
}

inline void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
}

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline relspar::CoefficientVector suggested(std::vector<double> v) {
  return {std::move(v), relspar::CoefficientRole::suggested};
}

inline relspar::CoefficientVector behavioral(std::vector<double> v) {
  return {std::move(v), relspar::CoefficientRole::behavioral};
}

// Two-point-state toy MDP with T = 1 used by the importance-sampling oracle:
// S_0 = sA always; A_t ~ behavioral; S_1 = sB if A_0 = 1 else sA;
// rewards follow R(s, a, s') = -s_2 a. All four (a0, a1) paths enumerate.
struct ToyMdp {
  std::vector<double> s_a{1.0, 0.5};
  std::vector<double> s_b{1.0, -1.0};
  std::vector<double> b_true{0.3, -0.4};

  double prob1(const std::vector<double>& s,
               const std::vector<double>& c) const {
    double logit = 0.0;
    for (std::size_t k = 0; k < s.size(); ++k) logit += c[k] * s[k];
    return 1.0 / (1.0 + std::exp(-logit));
  }

  // exact E[rho G] for suggested coefficients beta by path enumeration
  double exact_value(const std::vector<double>& beta) const {
    double total = 0.0;
    for (int a0 = 0; a0 <= 1; ++a0) {
      const double pb0 = a0 ? prob1(s_a, b_true) : 1.0 - prob1(s_a, b_true);
      const double ps0 = a0 ? prob1(s_a, beta) : 1.0 - prob1(s_a, beta);
      const std::vector<double>& s1 = a0 ? s_b : s_a;
      for (int a1 = 0; a1 <= 1; ++a1) {
        const double pb1 = a1 ? prob1(s1, b_true) : 1.0 - prob1(s1, b_true);
        const double ps1 = a1 ? prob1(s1, beta) : 1.0 - prob1(s1, beta);
        const double g = -s_a[1] * a0 + -s1[1] * a1;
        const double rho = (ps0 * ps1) / (pb0 * pb1);
        total += pb0 * pb1 * rho * g;
      }
    }
    return total;
  }

  relspar::TrajectoryDataset sample(std::size_t n, relspar::Rng& rng) const {
    std::vector<double> states(n * 2 * 2);
    std::vector<std::int8_t> actions(n * 2);
    std::vector<double> rewards(n * 2);
    for (std::size_t i = 0; i < n; ++i) {
      const int a0 = rng.bernoulli(prob1(s_a, b_true)) ? 1 : 0;
      const std::vector<double>& s1 = a0 ? s_b : s_a;
      const int a1 = rng.bernoulli(prob1(s1, b_true)) ? 1 : 0;
      states[(i * 2 + 0) * 2 + 0] = s_a[0];
      states[(i * 2 + 0) * 2 + 1] = s_a[1];
      states[(i * 2 + 1) * 2 + 0] = s1[0];
      states[(i * 2 + 1) * 2 + 1] = s1[1];
      actions[i * 2 + 0] = static_cast<std::int8_t>(a0);
      actions[i * 2 + 1] = static_cast<std::int8_t>(a1);
      rewards[i * 2 + 0] = -s_a[1] * a0;
      rewards[i * 2 + 1] = -s1[1] * a1;
    }
    return relspar::TrajectoryDataset(n, 2, 2, std::move(states),
                                      std::move(actions), std::move(rewards));
  }
};

}  // namespace testsup
