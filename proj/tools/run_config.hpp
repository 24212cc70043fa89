#pragma once

#include "flpre/datagen.hpp"
#include "flpre/lpre.hpp"
#include "flpre/subsampling.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace flpre::cli {

struct RunConfig {
  std::string command;

  // data
  std::string input;
  std::string responses;
  std::string output = "out";
  std::string model;
  std::string reference;

  // simulation
  long long n = 1000;
  long long test_n = 0;
  std::string covariate_law = "C1";
  std::string error_law = "R1";
  int grid_size = 100;
  std::optional<int> gen_basis_dim;  // default: the fitting dimension K + p + 1
  std::uint64_t seed = 1;

  // basis
  std::optional<int> knots;
  std::string knots_rule;  // "n14" selects K = ceil(n^{1/4})
  std::optional<int> degree;         // default 3
  std::optional<int> penalty_order;  // default 2

  // estimation
  std::vector<std::string> methods{"FLPRE"};
  std::optional<double> lambda;
  std::vector<double> lambda_grid;
  bool true_beta = false;

  // subsampling
  std::vector<std::string> kinds{"FLopt"};
  long long r0 = 1000;
  std::vector<long long> r{5000};
  double alpha_mix = 0.0;
  int replications = 1;
  std::string imse_reference = "full";

  int resolved_knots(long long sample_count) const;
  int resolved_degree() const { return degree.value_or(3); }
  int resolved_penalty_order() const { return penalty_order.value_or(2); }
  std::vector<double> resolved_grid() const;
  void validate() const;
  nlohmann::json to_json() const;
};

}  // namespace flpre::cli
