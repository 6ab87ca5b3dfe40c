#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace relspar {

// Column-name mapping for trajectory CSV files. Defaults match the canonical
// schema `traj_id,t,s_1,...,s_K,action,reward`; state columns are
// state_prefix + 1..K and must be contiguous.
struct CsvSchema {
  std::string traj_id = "traj_id";
  std::string time = "t";
  std::string state_prefix = "s_";
  std::string action = "action";
  std::string reward = "reward";
};

// n trajectories of exactly T+1 (state, action, reward) triples each.
// Immutable after construction; safe to share across threads.
class TrajectoryDataset {
 public:
  // states: n*(T+1)*K doubles, point-major (trajectory, then step, then
  // coordinate). Validates every type invariant and throws on violation.
  TrajectoryDataset(std::size_t n_traj, std::size_t t_plus_1,
                    std::size_t state_dim, std::vector<double> states,
                    std::vector<std::int8_t> actions,
                    std::vector<double> rewards,
                    std::vector<std::int64_t> traj_ids = {});

  std::size_t n() const { return n_; }
  std::size_t t_plus_1() const { return t_plus_1_; }
  std::size_t state_dim() const { return k_; }
  std::size_t n_points() const { return n_ * t_plus_1_; }

  std::span<const double> state(std::size_t i, std::size_t t) const {
    return {states_.data() + (i * t_plus_1_ + t) * k_, k_};
  }
  int action(std::size_t i, std::size_t t) const {
    return actions_[i * t_plus_1_ + t];
  }
  double reward(std::size_t i, std::size_t t) const {
    return rewards_[i * t_plus_1_ + t];
  }
  std::int64_t traj_id(std::size_t i) const { return traj_ids_[i]; }

  std::span<const double> states_flat() const { return states_; }
  std::span<const std::int8_t> actions_flat() const { return actions_; }
  std::span<const double> rewards_flat() const { return rewards_; }

  // FNV-1a over dimensions and raw IEEE bytes; stable across runs.
  std::uint64_t fingerprint() const;

 private:
  std::size_t n_, t_plus_1_, k_;
  std::vector<double> states_;
  std::vector<std::int8_t> actions_;
  std::vector<double> rewards_;
  std::vector<std::int64_t> traj_ids_;
};

// Reads a long-format CSV (one row per (trajectory, step)). Rows may arrive
// in any order and are sorted by (traj_id, t); steps must be 0..T with no
// gaps and all trajectories the same length.
TrajectoryDataset load_trajectories(const std::filesystem::path& path,
                                    const CsvSchema& schema = {});

// Canonical CSV emission: exact header `traj_id,t,s_1,...,s_K,action,reward`,
// rows sorted by (traj_id, t), %.17g floats (bit-exact round trip).
void write_trajectories(const TrajectoryDataset& data,
                        const std::filesystem::path& path);

struct Standardization {
  std::vector<double> mean;   // per state dimension
  std::vector<double> scale;  // per state dimension, > 0
};

// Rescales every state dimension to pooled mean 0 / sd 1 (population sd over
// all (i,t)). Throws DegenerateCovariateError for a zero-variance dimension.
std::pair<TrajectoryDataset, Standardization> standardize_states(
    const TrajectoryDataset& data);

// Inverse transform (state' = state * scale + mean).
TrajectoryDataset destandardize_states(const TrajectoryDataset& data,
                                       const Standardization& transform);

}  // namespace relspar
