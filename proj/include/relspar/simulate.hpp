#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "relspar/dataset.hpp"

namespace relspar {

// Linear-Gaussian autoregressive environment with a logistic behavioral
// policy:
//   S_0 ~ Normal(init_mean, init_sd^2 I)
//   A_t ~ Bernoulli(expit(b_true' S_t))
//   S_{t+1,k} = trans_autoreg[k] S_{t,k} + trans_action_effect[k] A_t + eps,
//       eps ~ Normal(0, trans_noise_sd^2)
// Rewards are R(s_t, a_t, s_{t+1}) = -s_{t,2} a_t at every step.
struct SimConfig {
  std::size_t n = 1000;
  std::size_t horizon = 3;    // T: decision steps; trajectories have T+1 triples
  std::size_t state_dim = 2;  // K >= 2 (reward reads coordinate 2)
  std::vector<double> b_true = {0.0, 0.5};
  double init_mean = 0.0;
  double init_sd = 1.0;
  std::vector<double> trans_autoreg = {0.5, 0.5};
  std::vector<double> trans_action_effect = {0.0, -0.5};
  double trans_noise_sd = 1.0;
  std::uint64_t seed = 1;

  void validate() const;  // throws ConfigError

  static SimConfig load(const std::filesystem::path& path);
  static SimConfig from_json_text(const std::string& text);
  std::string to_json_text() const;
};

// -s_{t,2} * a_t; s_next is part of the signature but unused by this reward.
double reward(std::span<const double> s_t, int a_t,
              std::span<const double> s_next);

// Deterministic in config.seed; trajectory i draws from an independent
// substream keyed by (seed, i).
TrajectoryDataset simulate(const SimConfig& config);

}  // namespace relspar
