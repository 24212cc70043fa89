#include "commands.hpp"

#include "flpre/error.hpp"
#include "flpre/io.hpp"
#include "flpre/parallel.hpp"
#include "flpre/pipeline.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>

namespace flpre::cli {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

std::string num(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

fs::path output_dir(const RunConfig& config) {
  const fs::path dir(config.output);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw UsageError("cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
  if (!out) throw UsageError("failed writing " + path.string());
}

void write_meta(const fs::path& dir, const RunConfig& config, const nlohmann::json& extra = {}) {
  nlohmann::json meta;
  meta["config"] = config.to_json();
  if (!extra.is_null()) meta["result"] = extra;
  write_text(dir / "meta.json", meta.dump(2) + "\n");
}

void write_results(const fs::path& path, const std::vector<MetricReport>& rows) {
  std::string text = metric_csv_header() + "\n";
  for (const auto& row : rows) text += metric_csv_row(row) + "\n";
  write_text(path, text);
}

FunctionalDataset load_training(const RunConfig& config) {
  if (config.input.empty()) throw UsageError("--input is required");
  if (config.responses.empty()) throw UsageError("--responses is required");
  FunctionalDataset data = read_functional_csv(config.input);
  read_responses_csv(config.responses, data);
  return data;
}

BasisConfig basis_for(const RunConfig& config, long long n) {
  return make_basis(config.resolved_knots(n), config.resolved_degree(), config.resolved_penalty_order());
}

Method single_method(const RunConfig& config) {
  if (config.methods.size() != 1) throw UsageError("this command takes exactly one --method");
  return method_from_string(config.methods.front());
}

std::string describe(const BasisConfig& b) {
  return "K=" + std::to_string(b.interior_knots) + ", p=" + std::to_string(b.degree) +
         ", q=" + std::to_string(b.penalty_order);
}

SimConfig sim_config(const RunConfig& config, long long n, std::uint64_t seed) {
  SimConfig sim;
  sim.n = n;
  sim.covariate_law = covariate_law_from_string(config.covariate_law);
  sim.error_law = error_law_from_string(config.error_law);
  sim.grid_size = config.grid_size;
  sim.gen_basis_dim = config.gen_basis_dim.value_or(config.resolved_knots(config.n) + 4);
  sim.seed = seed;
  return sim;
}

// Seed of an independent dataset derived from the root seed.
std::uint64_t derived_seed(std::uint64_t root, std::uint64_t stream) {
  Rng rng = make_stream(root, stream);
  return rng();
}

void write_lambda_path(const fs::path& path, const std::vector<LambdaPathPoint>& points) {
  std::string text = "lambda,bic\n";
  for (const auto& p : points) {
    text += num(p.lambda) + "," + (p.bic ? num(*p.bic) : std::string()) + "\n";
  }
  write_text(path, text);
}

nlohmann::json fit_summary(const FitResult& fit) {
  return {{"method", to_string(fit.method)}, {"lambda", fit.lambda},   {"iterations", fit.iterations},
          {"converged", fit.converged},       {"loss", fit.loss},       {"gradient_norm", fit.gradient_norm}};
}

}  // namespace

int cmd_simulate(const RunConfig& config) {
  const fs::path dir = output_dir(config);
  const SimConfig train = sim_config(config, config.n, config.seed);
  const SimulatedData data = simulate(train);
  const auto ids = sequential_ids(train.n);
  write_functional_csv(dir / "curves.csv", ids, data.curves);
  write_responses_csv(dir / "responses.csv", ids, data.responses);
  nlohmann::json result{{"gen_basis_dim", train.gen_basis_dim}};
  if (config.test_n > 0) {
    const SimConfig test = sim_config(config, config.test_n, derived_seed(config.seed, 1));
    const SimulatedData held_out = simulate(test);
    const auto test_ids = sequential_ids(test.n);
    write_functional_csv(dir / "test_curves.csv", test_ids, held_out.curves);
    write_responses_csv(dir / "test_responses.csv", test_ids, held_out.responses);
    result["test_seed"] = test.seed;
  }
  write_meta(dir, config, result);
  std::cout << "wrote " << train.n << " curves to " << dir.string() << "\n";
  return 0;
}

int cmd_fit(const RunConfig& config) {
  const Method method = single_method(config);
  const FunctionalDataset data = load_training(config);
  const auto n = static_cast<long long>(data.samples.size());
  const BasisConfig basis = basis_for(config, n);
  const DesignMatrix design = build_design(data.samples, basis);
  const Vector y = data.responses();
  const fs::path dir = output_dir(config);

  const auto start = Clock::now();
  LambdaChoice choice = fit_with_bic(design, y, method, config.resolved_grid());
  const double seconds = seconds_since(start);
  FitResult& fit = choice.fit;
  if (method == Method::FLPRE) {
    try {
      attach_sandwich(design, y, fit);
    } catch (const NumericalError& e) {
      std::cerr << "warning: no confidence bands: " << e.what() << "\n";
    }
  }

  save_model(dir / "model.json", {basis, fit});
  write_beta_csv(dir / "beta.csv", predict_beta(fit, basis, uniform_grid(1001)));
  write_lambda_path(dir / "lambda_path.csv", choice.path);

  MetricReport report;
  report.run_id = "0";
  report.method = to_string(method);
  report.n = n;
  report.K = basis.interior_knots;
  report.lambda = fit.lambda;
  report.seconds = seconds;
  if (config.true_beta) report.imse = imse(beta_function(fit.theta, basis), true_beta);
  write_results(dir / "results.csv", {report});
  write_meta(dir, config, fit_summary(fit));

  std::cout << to_string(method) << " fit: n=" << n << " " << describe(basis) << " lambda=" << fit.lambda
            << " iterations=" << fit.iterations << " converged=" << (fit.converged ? "yes" : "no")
            << " loss=" << fit.loss << "\n";
  if (report.imse) std::cout << "IMSE vs true beta: " << *report.imse << "\n";
  if (!fit.converged) {
    std::cerr << "error: fit did not converge (gradient norm " << fit.gradient_norm << ")\n";
    return 4;
  }
  return 0;
}

int cmd_subsample(const RunConfig& config) {
  const FunctionalDataset data = load_training(config);
  const auto n = static_cast<long long>(data.samples.size());
  const BasisConfig basis = basis_for(config, n);
  const DesignMatrix design = build_design(data.samples, basis);
  const Vector y = data.responses();
  const fs::path dir = output_dir(config);

  std::optional<Curve> reference;
  if (!config.reference.empty()) {
    const ModelRecord full = load_model(config.reference);
    if (!(full.basis == basis)) {
      throw UsageError("reference model basis (" + describe(full.basis) + ") differs from the requested basis (" +
                       describe(basis) + ")");
    }
    reference = beta_function(full.fit.theta, full.basis);
  } else if (config.true_beta) {
    reference = Curve(true_beta);
  }

  struct Job {
    int rep;
    std::size_t kind;
    std::size_t r;
  };
  std::vector<Job> jobs;
  for (int rep = 0; rep < config.replications; ++rep)
    for (std::size_t k = 0; k < config.kinds.size(); ++k)
      for (std::size_t j = 0; j < config.r.size(); ++j) jobs.push_back({rep, k, j});

  std::vector<MetricReport> rows(jobs.size());
  std::vector<std::optional<SubsampleFit>> fits(jobs.size());
  parallel_for(jobs.size(), [&](std::size_t idx) {
    const Job& job = jobs[idx];
    TwoStepOptions opt;
    opt.kind = scheme_kind_from_string(config.kinds[job.kind]);
    opt.r0 = config.r0;
    opt.r = config.r[job.r];
    opt.alpha = config.alpha_mix;
    opt.lambda_grid = config.resolved_grid();
    Rng rng = make_stream(config.seed, (static_cast<std::uint64_t>(job.rep) << 16) | (job.kind << 8) | job.r);
    const auto start = Clock::now();
    SubsampleFit fit = two_step_fit(design, y, opt, rng);
    MetricReport& row = rows[idx];
    row.seconds = seconds_since(start);
    row.run_id = std::to_string(job.rep);
    row.method = to_string(opt.kind);
    row.n = n;
    row.r0 = opt.kind == SchemeKind::Uniform ? 0 : fit.r0;
    row.r = fit.r;
    row.K = basis.interior_knots;
    row.lambda = fit.lambda;
    if (reference) row.imse = imse(beta_function(fit.theta_tilde, basis), *reference);
    if (idx == 0) fits[idx] = std::move(fit);
  });

  SubsampleFit& first = *fits.front();
  first.fit.method = Method::FLPRE;
  save_model(dir / "model.json", {basis, first.fit});
  write_scheme_csv(dir / "scheme.csv", data.ids, first.scheme);
  write_results(dir / "results.csv", rows);
  write_meta(dir, config, fit_summary(first.fit));
  for (const auto& row : rows) std::cout << metric_csv_row(row) << "\n";
  return 0;
}

int cmd_benchmark(const RunConfig& config) {
  const fs::path dir = output_dir(config);
  std::vector<Method> methods;
  for (const auto& m : config.methods) methods.push_back(method_from_string(m));
  std::vector<SchemeKind> kinds;
  for (const auto& k : config.kinds) kinds.push_back(scheme_kind_from_string(k));
  const auto grid = config.resolved_grid();
  const BasisConfig basis = basis_for(config, config.n);

  std::vector<std::vector<MetricReport>> per_rep(static_cast<std::size_t>(config.replications));
  parallel_for(per_rep.size(), [&](std::size_t rep) {
    // Data generation and projection are not timed.
    const SimulatedData train = simulate(sim_config(config, config.n, derived_seed(config.seed, 2 * rep)));
    const DesignMatrix design = build_design(train.curves, basis);
    std::optional<SimulatedData> test;
    if (config.test_n > 0) test = simulate(sim_config(config, config.test_n, derived_seed(config.seed, 2 * rep + 1)));

    auto& rows = per_rep[rep];
    auto base_row = [&](const std::string& method) {
      MetricReport row;
      row.run_id = std::to_string(rep);
      row.method = method;
      row.n = config.n;
      row.K = basis.interior_knots;
      return row;
    };
    std::optional<Curve> full_beta;
    for (Method m : methods) {
      const auto start = Clock::now();
      const LambdaChoice choice = fit_with_bic(design, train.responses, m, grid);
      MetricReport row = base_row(to_string(m));
      row.seconds = seconds_since(start);
      row.lambda = choice.lambda;
      const Curve est = beta_function(choice.fit.theta, basis);
      row.imse = imse(est, true_beta);
      if (test) row.rpse = rpse(est, true_beta, test->curves);
      if (m == Method::FLPRE) full_beta = est;
      rows.push_back(row);
    }
    const bool against_full = config.imse_reference == "full" && full_beta.has_value();
    for (std::size_t k = 0; k < kinds.size(); ++k) {
      for (std::size_t j = 0; j < config.r.size(); ++j) {
        TwoStepOptions opt;
        opt.kind = kinds[k];
        opt.r0 = config.r0;
        opt.r = config.r[j];
        opt.alpha = config.alpha_mix;
        opt.lambda_grid = grid;
        Rng rng = make_stream(derived_seed(config.seed, 2 * rep), (k << 8) | j);
        const auto start = Clock::now();
        const SubsampleFit fit = two_step_fit(design, train.responses, opt, rng);
        MetricReport row = base_row(to_string(kinds[k]));
        row.seconds = seconds_since(start);
        row.r0 = kinds[k] == SchemeKind::Uniform ? 0 : fit.r0;
        row.r = fit.r;
        row.lambda = fit.lambda;
        const Curve est = beta_function(fit.theta_tilde, basis);
        row.imse = imse(est, against_full ? *full_beta : Curve(true_beta));
        if (test) row.rpse = rpse(est, against_full ? *full_beta : Curve(true_beta), test->curves);
        rows.push_back(row);
      }
    }
  });

  std::vector<MetricReport> all;
  for (auto& rows : per_rep) all.insert(all.end(), rows.begin(), rows.end());
  write_results(dir / "results.csv", all);

  // Aggregate by (method, r) in first-appearance order.
  struct Acc {
    std::vector<double> seconds, imse, rpse;
  };
  std::vector<std::pair<std::string, long long>> order;
  std::map<std::pair<std::string, long long>, Acc> acc;
  for (const auto& row : all) {
    const auto key = std::make_pair(row.method, row.r);
    if (!acc.count(key)) order.push_back(key);
    auto& a = acc[key];
    a.seconds.push_back(row.seconds);
    if (row.imse) a.imse.push_back(*row.imse);
    if (row.rpse) a.rpse.push_back(*row.rpse);
  }
  auto mean_sd = [](const std::vector<double>& v) -> std::pair<double, double> {
    if (v.empty()) return {std::nan(""), std::nan("")};
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return {m, v.size() > 1 ? std::sqrt(s / static_cast<double>(v.size() - 1)) : 0.0};
  };
  std::string timing = "method,r,replications,mean_seconds,sd_seconds,mean_imse,sd_imse,mean_rpse\n";
  nlohmann::json summary = nlohmann::json::array();
  for (const auto& key : order) {
    const auto& a = acc[key];
    const auto [ms, ss] = mean_sd(a.seconds);
    const auto [mi, si] = mean_sd(a.imse);
    const auto [mr, sr] = mean_sd(a.rpse);
    (void)sr;
    timing += key.first + "," + std::to_string(key.second) + "," + std::to_string(a.seconds.size()) + "," +
              std::to_string(ms) + "," + std::to_string(ss) + "," + std::to_string(mi) + "," + std::to_string(si) +
              "," + (a.rpse.empty() ? std::string() : std::to_string(mr)) + "\n";
    summary.push_back({{"method", key.first}, {"r", key.second}, {"mean_imse", mi}});
  }
  write_text(dir / "timing.csv", timing);
  write_meta(dir, config, {{"K", basis.interior_knots}, {"summary", summary}});
  std::cout << timing;
  return 0;
}

int cmd_predict(const RunConfig& config) {
  if (config.model.empty()) throw UsageError("--model is required");
  if (config.input.empty()) throw UsageError("--input is required");
  const ModelRecord model = load_model(config.model);
  if (config.knots || config.degree || config.penalty_order) {
    const BasisConfig requested =
        make_basis(config.knots.value_or(model.basis.interior_knots), config.degree.value_or(model.basis.degree),
                   config.penalty_order.value_or(model.basis.penalty_order));
    if (!(requested == model.basis)) {
      throw UsageError("model basis (" + describe(model.basis) + ") does not match the requested basis (" +
                       describe(requested) + ")");
    }
  }
  FunctionalDataset data = read_functional_csv(config.input);
  const bool truth = !config.responses.empty();
  if (truth) read_responses_csv(config.responses, data);
  const fs::path dir = output_dir(config);

  std::vector<double> y_pred(data.samples.size()), y_true;
  for (std::size_t i = 0; i < data.samples.size(); ++i) {
    y_pred[i] = predict_response(model.fit, model.basis, data.samples[i]);
  }
  std::string text = truth ? "id,y_true,y_pred\n" : "id,y_pred\n";
  for (std::size_t i = 0; i < data.samples.size(); ++i) {
    text += data.ids[i] + ",";
    if (truth) {
      y_true.push_back(*data.samples[i].response);
      text += num(y_true.back()) + ",";
    }
    text += num(y_pred[i]) + "\n";
  }
  write_text(dir / "predictions.csv", text);

  nlohmann::json result{{"count", data.samples.size()}};
  if (truth) {
    const PredictionErrors err = mape_mppe(y_true, y_pred);
    MetricReport report;
    report.run_id = "0";
    report.method = to_string(model.fit.method);
    report.n = static_cast<long long>(data.samples.size());
    report.K = model.basis.interior_knots;
    report.lambda = model.fit.lambda;
    report.mape = err.mape;
    report.mppe = err.mppe;
    write_results(dir / "results.csv", {report});
    result["mape"] = err.mape;
    result["mppe"] = err.mppe;
    std::cout << "MAPE=" << err.mape << " MPPE=" << err.mppe << "\n";
  }
  write_meta(dir, config, result);
  std::cout << "wrote " << data.samples.size() << " predictions to " << (dir / "predictions.csv").string() << "\n";
  return 0;
}

}  // namespace flpre::cli
