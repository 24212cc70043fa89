#include "commands.hpp"

#include "flpre/error.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace flpre;
using namespace flpre::cli;

namespace {

void add_data_options(CLI::App& sub, RunConfig& c, bool responses_required) {
  sub.add_option("--input", c.input, "curves CSV (id,t,x)")->required();
  auto* resp = sub.add_option("--responses", c.responses, "responses CSV (id,y)");
  if (responses_required) resp->required();
}

void add_basis_options(CLI::App& sub, RunConfig& c) {
  auto* k = sub.add_option("--knots", c.knots, "number of interior knots K (default 10)");
  auto* rule = sub.add_option("--knots-rule", c.knots_rule, "knot rule; n14 sets K = ceil(n^(1/4))");
  k->excludes(rule);
  sub.add_option("--degree", c.degree, "spline degree p (default 3)");
  sub.add_option("--penalty-order", c.penalty_order, "roughness penalty derivative order q (default 2)");
}

void add_lambda_options(CLI::App& sub, RunConfig& c) {
  auto* l = sub.add_option("--lambda", c.lambda, "fixed smoothing parameter");
  auto* g = sub.add_option("--lambda-grid", c.lambda_grid, "candidate lambdas for BIC selection")->delimiter(',');
  l->excludes(g);
}

void add_sim_options(CLI::App& sub, RunConfig& c) {
  sub.add_option("--n", c.n, "training sample size");
  sub.add_option("--test-n", c.test_n, "held-out sample size (0 for none)");
  sub.add_option("--covariate-law", c.covariate_law, "C1, C2 or C3");
  sub.add_option("--error-law", c.error_law, "R1, R2, R3 or R4");
  sub.add_option("--grid-size", c.grid_size, "observation points per curve");
  sub.add_option("--gen-basis-dim", c.gen_basis_dim, "generating basis size (default K + 4)");
}

void add_subsample_options(CLI::App& sub, RunConfig& c) {
  sub.add_option("--subsample-kind", c.kinds, "uniform, FAopt or FLopt (comma list)")->delimiter(',');
  sub.add_option("--r0", c.r0, "pilot subsample size");
  sub.add_option("--r", c.r, "second-step subsample size (comma list)")->delimiter(',');
  sub.add_option("--alpha-mix", c.alpha_mix, "uniform mixing weight in [0, 1)");
  sub.add_option("--replications", c.replications, "independent repetitions");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Functional log-linear regression by least product relative error, with optimal subsampling"};
  app.set_config("--config", "", "TOML or INI file with option defaults (flags take precedence)");
  app.require_subcommand(1);

  RunConfig c;
  app.add_option("--output", c.output, "output directory")->capture_default_str();
  app.add_option("--seed", c.seed, "root random seed")->capture_default_str();

  auto* simulate = app.add_subcommand("simulate", "generate a synthetic dataset");
  add_sim_options(*simulate, c);
  add_basis_options(*simulate, c);

  auto* fit = app.add_subcommand("fit", "full-data fit");
  add_data_options(*fit, c, true);
  add_basis_options(*fit, c);
  add_lambda_options(*fit, c);
  fit->add_option("--method", c.methods, "FLPRE, FLS or FLAD")->expected(1);
  fit->add_flag("--true-beta", c.true_beta, "report IMSE against the simulation slope");

  auto* subsample = app.add_subcommand("subsample", "two-step optimal subsampling fit");
  add_data_options(*subsample, c, true);
  add_basis_options(*subsample, c);
  add_lambda_options(*subsample, c);
  add_subsample_options(*subsample, c);
  subsample->add_option("--reference", c.reference, "full-data model JSON for IMSE");
  subsample->add_flag("--true-beta", c.true_beta, "report IMSE against the simulation slope");

  auto* benchmark = app.add_subcommand("benchmark", "replicated simulation study with timings");
  add_sim_options(*benchmark, c);
  add_basis_options(*benchmark, c);
  add_lambda_options(*benchmark, c);
  add_subsample_options(*benchmark, c);
  benchmark->add_option("--method", c.methods, "full-data methods (comma list)")->delimiter(',');
  benchmark->add_option("--imse-reference", c.imse_reference, "subsample IMSE against 'full' fit or 'truth'");

  auto* predict = app.add_subcommand("predict", "predict responses with a saved model");
  add_data_options(*predict, c, false);
  add_basis_options(*predict, c);
  predict->add_option("--model", c.model, "model JSON")->required();

  // Global options may also follow the subcommand.
  for (auto* sub : {simulate, fit, subsample, benchmark, predict}) {
    sub->add_option("--output", c.output, "output directory");
    sub->add_option("--seed", c.seed, "root random seed");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    c.command = app.get_subcommands().front()->get_name();
    c.validate();
    if (c.command == "simulate") return cmd_simulate(c);
    if (c.command == "fit") return cmd_fit(c);
    if (c.command == "subsample") return cmd_subsample(c);
    if (c.command == "benchmark") return cmd_benchmark(c);
    return cmd_predict(c);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
