#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace relspar {

struct CheckOptions {
  bool perturb_gradient = false;  // test hook: corrupts J before comparing
  int fd_points = 20;
  int prox_triples = 300;
  std::uint64_t seed = 20240801;
};

struct CheckLine {
  std::string name;
  bool pass = false;
  std::string detail;
};

// Self-diagnostics on a small built-in simulated dataset: finite-difference
// agreement for J/H/X, prox vs grid search, solver endpoint identities, and
// the KL identities. Used by the `check` subcommand.
std::vector<CheckLine> run_checks(const CheckOptions& options = {});

}  // namespace relspar
