#include "relspar/simulate.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "relspar/errors.hpp"
#include "relspar/rng.hpp"

namespace relspar {

void SimConfig::validate() const {
  if (state_dim < 2)
    throw ConfigError("state_dim must be >= 2 (reward reads coordinate 2)");
  if (n < 1) throw ConfigError("n must be >= 1");
  if (horizon < 1) throw ConfigError("horizon T must be >= 1");
  if (!(trans_noise_sd > 0.0)) throw ConfigError("trans_noise_sd must be > 0");
  if (!(init_sd >= 0.0)) throw ConfigError("init_sd must be >= 0");
  if (b_true.size() != state_dim || trans_autoreg.size() != state_dim ||
      trans_action_effect.size() != state_dim)
    throw ConfigError(
        "b_true, trans_autoreg, trans_action_effect must have state_dim "
        "entries");
  for (double v : b_true)
    if (!std::isfinite(v)) throw ConfigError("non-finite b_true entry");
  for (double v : trans_autoreg)
    if (!std::isfinite(v)) throw ConfigError("non-finite trans_autoreg entry");
  for (double v : trans_action_effect)
    if (!std::isfinite(v))
      throw ConfigError("non-finite trans_action_effect entry");
  if (!std::isfinite(init_mean) || !std::isfinite(init_sd))
    throw ConfigError("non-finite initial-state parameters");
}

namespace {

SimConfig from_json(const nlohmann::json& j) {
  SimConfig c;
  try {
    if (j.contains("n")) c.n = j.at("n").get<std::size_t>();
    if (j.contains("T")) c.horizon = j.at("T").get<std::size_t>();
    if (j.contains("K")) c.state_dim = j.at("K").get<std::size_t>();
    if (j.contains("b_true")) c.b_true = j.at("b_true").get<std::vector<double>>();
    if (j.contains("init_mean")) c.init_mean = j.at("init_mean").get<double>();
    if (j.contains("init_sd")) c.init_sd = j.at("init_sd").get<double>();
    if (j.contains("trans_autoreg"))
      c.trans_autoreg = j.at("trans_autoreg").get<std::vector<double>>();
    if (j.contains("trans_action_effect"))
      c.trans_action_effect =
          j.at("trans_action_effect").get<std::vector<double>>();
    if (j.contains("trans_noise_sd"))
      c.trans_noise_sd = j.at("trans_noise_sd").get<double>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad simulation config: ") + e.what());
  }
  c.validate();
  return c;
}

}  // namespace

SimConfig SimConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

SimConfig SimConfig::from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  // a manifest may be passed directly; use its embedded config
  if (j.contains("config") && j.at("config").is_object())
    j = j.at("config");
  if (j.contains("sim") && j.at("sim").is_object()) j = j.at("sim");
  return from_json(j);
}

std::string SimConfig::to_json_text() const {
  nlohmann::json j{
      {"n", n},
      {"T", horizon},
      {"K", state_dim},
      {"b_true", b_true},
      {"init_mean", init_mean},
      {"init_sd", init_sd},
      {"trans_autoreg", trans_autoreg},
      {"trans_action_effect", trans_action_effect},
      {"trans_noise_sd", trans_noise_sd},
      {"seed", seed},
  };
  return j.dump(2);
}

double reward(std::span<const double> s_t, int a_t,
              std::span<const double> /*s_next*/) {
  return -s_t[1] * static_cast<double>(a_t);
}

TrajectoryDataset simulate(const SimConfig& config) {
  config.validate();
  const std::size_t n = config.n;
  const std::size_t steps = config.horizon + 1;  // stored triples
  const std::size_t k_dim = config.state_dim;

  std::vector<double> states(n * steps * k_dim);
  std::vector<std::int8_t> actions(n * steps);
  std::vector<double> rewards(n * steps);

  std::vector<double> s(k_dim), s_next(k_dim);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = Rng::substream(config.seed, i);
    for (std::size_t k = 0; k < k_dim; ++k)
      s[k] = rng.normal(config.init_mean, config.init_sd);
    for (std::size_t t = 0; t < steps; ++t) {
      double logit = 0.0;
      for (std::size_t k = 0; k < k_dim; ++k) logit += config.b_true[k] * s[k];
      const int a = rng.bernoulli(1.0 / (1.0 + std::exp(-logit))) ? 1 : 0;
      for (std::size_t k = 0; k < k_dim; ++k)
        s_next[k] = config.trans_autoreg[k] * s[k] +
                    config.trans_action_effect[k] * a +
                    rng.normal(0.0, config.trans_noise_sd);
      const std::size_t m = i * steps + t;
      std::copy(s.begin(), s.end(), states.begin() + m * k_dim);
      actions[m] = static_cast<std::int8_t>(a);
      rewards[m] = reward(s, a, s_next);
      s.swap(s_next);
    }
  }
  return TrajectoryDataset(n, steps, k_dim, std::move(states),
                           std::move(actions), std::move(rewards));
}

}  // namespace relspar
