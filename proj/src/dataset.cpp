#include "relspar/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include "relspar/errors.hpp"

namespace relspar {

TrajectoryDataset::TrajectoryDataset(std::size_t n_traj, std::size_t t_plus_1,
                                     std::size_t state_dim,
                                     std::vector<double> states,
                                     std::vector<std::int8_t> actions,
                                     std::vector<double> rewards,
                                     std::vector<std::int64_t> traj_ids)
    : n_(n_traj),
      t_plus_1_(t_plus_1),
      k_(state_dim),
      states_(std::move(states)),
      actions_(std::move(actions)),
      rewards_(std::move(rewards)),
      traj_ids_(std::move(traj_ids)) {
  if (n_ < 1 || t_plus_1_ < 1 || k_ < 1)
    throw ShapeError("dataset requires n >= 1, T >= 0, K >= 1");
  const std::size_t points = n_ * t_plus_1_;
  if (states_.size() != points * k_ || actions_.size() != points ||
      rewards_.size() != points)
    throw ShapeError("dataset buffers do not match (n, T+1, K)");
  for (double v : states_)
    if (!std::isfinite(v)) throw DataError("non-finite state entry");
  for (double v : rewards_)
    if (!std::isfinite(v)) throw DataError("non-finite reward entry");
  for (std::int8_t a : actions_)
    if (a != 0 && a != 1) throw DataError("action must be 0 or 1");
  if (traj_ids_.empty()) {
    traj_ids_.resize(n_);
    std::iota(traj_ids_.begin(), traj_ids_.end(), std::int64_t{0});
  } else if (traj_ids_.size() != n_) {
    throw ShapeError("traj_ids length must equal n");
  }
}

std::uint64_t TrajectoryDataset::fingerprint() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix_bytes = [&h](const void* p, std::size_t len) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= b[i];
      h *= 0x100000001b3ULL;
    }
  };
  const std::uint64_t dims[3] = {n_, t_plus_1_, k_};
  mix_bytes(dims, sizeof(dims));
  mix_bytes(states_.data(), states_.size() * sizeof(double));
  mix_bytes(actions_.data(), actions_.size());
  mix_bytes(rewards_.data(), rewards_.size() * sizeof(double));
  return h;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  if (!out.empty() && !out.back().empty() && out.back().back() == '\r')
    out.back().pop_back();
  return out;
}

double parse_double(const std::string& cell, const char* what,
                    std::size_t row) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last)
    throw DataError(std::string("cannot parse ") + what + " value '" + cell +
                    "' (row " + std::to_string(row) + ")");
  return v;
}

std::int64_t parse_int(const std::string& cell, const char* what,
                       std::size_t row) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc{} || ptr != cell.data() + cell.size())
    throw DataError(std::string("cannot parse ") + what + " value '" + cell +
                    "' (row " + std::to_string(row) + ")");
  return v;
}

struct CsvRow {
  std::int64_t traj_id;
  std::int64_t t;
  std::vector<double> state;
  std::int8_t action;
  double reward;
  std::size_t row;  // 1-based data row for error messages
};

}  // namespace

TrajectoryDataset load_trajectories(const std::filesystem::path& path,
                                    const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw SchemaError("empty file: " + path.string());
  const std::vector<std::string> header = split_line(line);

  auto find_col = [&header](const std::string& name) -> std::ptrdiff_t {
    const auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : it - header.begin();
  };
  auto require_col = [&](const std::string& name) {
    const std::ptrdiff_t idx = find_col(name);
    if (idx < 0) throw SchemaError("missing column '" + name + "'");
    return static_cast<std::size_t>(idx);
  };

  const std::size_t col_id = require_col(schema.traj_id);
  const std::size_t col_t = require_col(schema.time);
  const std::size_t col_action = require_col(schema.action);
  const std::size_t col_reward = require_col(schema.reward);

  std::vector<std::size_t> col_state;  // s_1..s_K, contiguous numbering
  for (std::size_t k = 1;; ++k) {
    const std::ptrdiff_t idx =
        find_col(schema.state_prefix + std::to_string(k));
    if (idx < 0) break;
    col_state.push_back(static_cast<std::size_t>(idx));
  }
  if (col_state.empty())
    throw SchemaError("missing column '" + schema.state_prefix + "1'");
  const std::size_t k_dim = col_state.size();

  std::vector<CsvRow> rows;
  std::size_t row_no = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    ++row_no;
    const std::vector<std::string> cells = split_line(line);
    if (cells.size() < header.size())
      throw DataError("row " + std::to_string(row_no) + " has " +
                      std::to_string(cells.size()) + " cells, expected " +
                      std::to_string(header.size()));
    CsvRow r;
    r.row = row_no;
    r.traj_id = parse_int(cells[col_id], schema.traj_id.c_str(), row_no);
    r.t = parse_int(cells[col_t], schema.time.c_str(), row_no);
    r.state.resize(k_dim);
    for (std::size_t k = 0; k < k_dim; ++k) {
      const double v =
          parse_double(cells[col_state[k]], schema.state_prefix.c_str(), row_no);
      if (!std::isfinite(v))
        throw DataError("non-finite state value (row " +
                        std::to_string(row_no) + ")");
      r.state[k] = v;
    }
    const double a = parse_double(cells[col_action], schema.action.c_str(),
                                  row_no);
    if (a != 0.0 && a != 1.0)
      throw DataError("action must be 0 or 1, got " + cells[col_action] +
                      " (row " + std::to_string(row_no) + ")");
    r.action = static_cast<std::int8_t>(a);
    r.reward = parse_double(cells[col_reward], schema.reward.c_str(), row_no);
    if (!std::isfinite(r.reward))
      throw DataError("non-finite reward (row " + std::to_string(row_no) + ")");
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw ShapeError("no data rows in " + path.string());

  std::stable_sort(rows.begin(), rows.end(),
                   [](const CsvRow& a, const CsvRow& b) {
                     return std::tie(a.traj_id, a.t) < std::tie(b.traj_id, b.t);
                   });

  // group by traj_id, enforce steps 0..T without gaps and a common length
  std::vector<std::int64_t> ids;
  std::vector<std::size_t> lengths;
  for (std::size_t i = 0; i < rows.size();) {
    const std::int64_t id = rows[i].traj_id;
    std::size_t len = 0;
    while (i + len < rows.size() && rows[i + len].traj_id == id) ++len;
    for (std::size_t t = 0; t < len; ++t) {
      if (rows[i + t].t != static_cast<std::int64_t>(t))
        throw ShapeError("trajectory " + std::to_string(id) +
                         " has steps that are not 0..T (row " +
                         std::to_string(rows[i + t].row) + ")");
    }
    ids.push_back(id);
    lengths.push_back(len);
    i += len;
  }
  const std::size_t t_plus_1 = lengths.front();
  for (std::size_t j = 0; j < lengths.size(); ++j)
    if (lengths[j] != t_plus_1)
      throw ShapeError("ragged trajectories: trajectory " +
                       std::to_string(ids[j]) + " has " +
                       std::to_string(lengths[j]) + " steps, expected " +
                       std::to_string(t_plus_1));

  const std::size_t n = ids.size();
  std::vector<double> states(n * t_plus_1 * k_dim);
  std::vector<std::int8_t> actions(n * t_plus_1);
  std::vector<double> rewards(n * t_plus_1);
  for (std::size_t m = 0; m < rows.size(); ++m) {
    std::copy(rows[m].state.begin(), rows[m].state.end(),
              states.begin() + m * k_dim);
    actions[m] = rows[m].action;
    rewards[m] = rows[m].reward;
  }
  return TrajectoryDataset(n, t_plus_1, k_dim, std::move(states),
                           std::move(actions), std::move(rewards),
                           std::move(ids));
}

void write_trajectories(const TrajectoryDataset& data,
                        const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());

  out << "traj_id,t";
  for (std::size_t k = 1; k <= data.state_dim(); ++k) out << ",s_" << k;
  out << ",action,reward\n";

  char buf[40];
  auto put_double = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << buf;
  };
  for (std::size_t i = 0; i < data.n(); ++i) {
    for (std::size_t t = 0; t < data.t_plus_1(); ++t) {
      out << data.traj_id(i) << ',' << t;
      for (double v : data.state(i, t)) {
        out << ',';
        put_double(v);
      }
      out << ',' << data.action(i, t) << ',';
      put_double(data.reward(i, t));
      out << '\n';
    }
  }
  if (!out) throw IoError("write failed: " + path.string());
}

std::pair<TrajectoryDataset, Standardization> standardize_states(
    const TrajectoryDataset& data) {
  const std::size_t k_dim = data.state_dim();
  const std::size_t points = data.n_points();
  Standardization tf;
  tf.mean.assign(k_dim, 0.0);
  tf.scale.assign(k_dim, 0.0);

  const std::span<const double> s = data.states_flat();
  for (std::size_t m = 0; m < points; ++m)
    for (std::size_t k = 0; k < k_dim; ++k) tf.mean[k] += s[m * k_dim + k];
  for (double& v : tf.mean) v /= static_cast<double>(points);

  for (std::size_t m = 0; m < points; ++m)
    for (std::size_t k = 0; k < k_dim; ++k) {
      const double d = s[m * k_dim + k] - tf.mean[k];
      tf.scale[k] += d * d;
    }
  for (std::size_t k = 0; k < k_dim; ++k) {
    tf.scale[k] = std::sqrt(tf.scale[k] / static_cast<double>(points));
    if (tf.scale[k] == 0.0)
      throw DegenerateCovariateError("state dimension " + std::to_string(k + 1) +
                                     " has zero variance");
  }

  std::vector<double> scaled(s.begin(), s.end());
  for (std::size_t m = 0; m < points; ++m)
    for (std::size_t k = 0; k < k_dim; ++k)
      scaled[m * k_dim + k] = (scaled[m * k_dim + k] - tf.mean[k]) / tf.scale[k];

  std::vector<std::int64_t> ids(data.n());
  for (std::size_t i = 0; i < data.n(); ++i) ids[i] = data.traj_id(i);
  TrajectoryDataset out(data.n(), data.t_plus_1(), k_dim, std::move(scaled),
                        {data.actions_flat().begin(), data.actions_flat().end()},
                        {data.rewards_flat().begin(), data.rewards_flat().end()},
                        std::move(ids));
  return {std::move(out), std::move(tf)};
}

TrajectoryDataset destandardize_states(const TrajectoryDataset& data,
                                       const Standardization& tf) {
  const std::size_t k_dim = data.state_dim();
  if (tf.mean.size() != k_dim || tf.scale.size() != k_dim)
    throw ShapeError("standardization parameters do not match state_dim");
  std::vector<double> raw(data.states_flat().begin(),
                          data.states_flat().end());
  for (std::size_t m = 0; m < data.n_points(); ++m)
    for (std::size_t k = 0; k < k_dim; ++k)
      raw[m * k_dim + k] = raw[m * k_dim + k] * tf.scale[k] + tf.mean[k];
  std::vector<std::int64_t> ids(data.n());
  for (std::size_t i = 0; i < data.n(); ++i) ids[i] = data.traj_id(i);
  return TrajectoryDataset(
      data.n(), data.t_plus_1(), k_dim, std::move(raw),
      {data.actions_flat().begin(), data.actions_flat().end()},
      {data.rewards_flat().begin(), data.rewards_flat().end()}, std::move(ids));
}

}  // namespace relspar
