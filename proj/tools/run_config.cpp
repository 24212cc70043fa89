#include "run_config.hpp"

#include "flpre/error.hpp"
#include "flpre/pipeline.hpp"
#include "flpre/tuning.hpp"

namespace flpre::cli {

int RunConfig::resolved_knots(long long sample_count) const {
  if (knots && !knots_rule.empty()) throw UsageError("--knots and --knots-rule are mutually exclusive");
  if (!knots_rule.empty()) {
    if (knots_rule != "n14") throw UsageError("unknown knot rule '" + knots_rule + "' (expected n14)");
    return knots_from_rule(sample_count);
  }
  return knots.value_or(10);
}

std::vector<double> RunConfig::resolved_grid() const {
  if (lambda) return {*lambda};
  if (!lambda_grid.empty()) return lambda_grid;
  return default_lambda_grid();
}

void RunConfig::validate() const {
  if (knots && !knots_rule.empty()) throw UsageError("--knots and --knots-rule are mutually exclusive");
  if (knots && *knots < 0) throw UsageError("--knots must be >= 0");
  if (replications < 1) throw UsageError("--replications must be >= 1");
  if (lambda && !lambda_grid.empty()) throw UsageError("--lambda and --lambda-grid are mutually exclusive");
  if (lambda && *lambda < 0.0) throw UsageError("--lambda must be >= 0");
  if (!(alpha_mix >= 0.0 && alpha_mix < 1.0)) throw UsageError("--alpha-mix must lie in [0, 1)");
  if (imse_reference != "full" && imse_reference != "truth") {
    throw UsageError("--imse-reference must be 'full' or 'truth'");
  }
  for (const auto& m : methods) method_from_string(m);
  for (const auto& k : kinds) scheme_kind_from_string(k);
  covariate_law_from_string(covariate_law);
  error_law_from_string(error_law);
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j;
  j["command"] = command;
  j["input"] = input;
  j["responses"] = responses;
  j["output"] = output;
  j["model"] = model;
  j["reference"] = reference;
  j["n"] = n;
  j["test_n"] = test_n;
  j["covariate_law"] = covariate_law;
  j["error_law"] = error_law;
  j["grid_size"] = grid_size;
  j["gen_basis_dim"] = gen_basis_dim ? nlohmann::json(*gen_basis_dim) : nlohmann::json("K+p+1");
  j["seed"] = seed;
  j["knots"] = knots ? nlohmann::json(*knots) : nlohmann::json(nullptr);
  j["knots_rule"] = knots_rule;
  j["degree"] = resolved_degree();
  j["penalty_order"] = resolved_penalty_order();
  j["methods"] = methods;
  j["lambda"] = lambda ? nlohmann::json(*lambda) : nlohmann::json(nullptr);
  j["lambda_grid"] = resolved_grid();
  j["true_beta"] = true_beta;
  j["subsample_kinds"] = kinds;
  j["r0"] = r0;
  j["r"] = r;
  j["alpha_mix"] = alpha_mix;
  j["replications"] = replications;
  j["imse_reference"] = imse_reference;
  return j;
}

}  // namespace flpre::cli
