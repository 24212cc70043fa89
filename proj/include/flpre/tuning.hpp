#pragma once

#include "flpre/lpre.hpp"

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace flpre {

using Curve = std::function<double(double)>;

/// log(rss) + log(n)/n * df. Throws NumericalError when rss <= 0.
double bic_value(double rss, double n, double df);

/// trace((H0 + lambda D)^{-1} H0).
double effective_df(const Matrix& h0, const Matrix& penalty, double lambda);

/// BIC of a full-data LPRE fit: RSS = mean(omega + 1/omega - 2),
/// df = trace(H_lambda^{-1} H_0) at theta_hat(lambda).
double bic(const FitResult& fit, const DesignMatrix& design, const Vector& responses);

/// Weighted variant for subsample objectives: RSS is the weight-normalized mean
/// of the LPRE summands and `sample_size` (the subsample size r) enters log(n)/n.
double bic(const FitResult& fit, const LpreObjective& objective, double sample_size);

struct LambdaPathPoint {
  double lambda = 0.0;
  std::optional<double> bic;  // nullopt when the fit failed or BIC is undefined
};

struct LambdaChoice {
  double lambda = 0.0;
  double bic = 0.0;
  FitResult fit;
  std::vector<LambdaPathPoint> path;
};

using FitProcedure = std::function<FitResult(double lambda)>;
using FitCriterion = std::function<double(const FitResult&)>;

/// Grid minimizer of the criterion; duplicates are ignored, ties go to the
/// larger lambda, and fits that fail or do not converge are skipped.
LambdaChoice select_lambda(std::span<const double> lambda_grid, const FitProcedure& fit_at,
                           const FitCriterion& criterion);

/// `count` points log-spaced over [lo, hi].
std::vector<double> log_grid(double lo, double hi, int count);
/// 15 points log-spaced in [1e-6, 1e2].
std::vector<double> default_lambda_grid();

/// Uniform grid of `count` points on [0, 1] (1001 for IMSE).
std::vector<double> uniform_grid(int count);

/// Root integrated squared difference, trapezoid rule on eval_grid.
double imse(const Curve& beta_est, const Curve& beta_ref, std::span<const double> eval_grid);
double imse(const Curve& beta_est, const Curve& beta_ref);

/// Root mean squared difference of the fitted indices over the test curves.
double rpse(const Curve& beta_est, const Curve& beta_ref, const CurveBatch& test_curves);
double rpse(const Curve& beta_est, const Curve& beta_ref, std::span<const FunctionalSample> test_curves);

struct PredictionErrors {
  double mape = 0.0;
  double mppe = 0.0;
};
PredictionErrors mape_mppe(std::span<const double> y_true, std::span<const double> y_pred);

/// beta(t) = B(t)^T theta as a callable.
Curve beta_function(const Vector& theta, const BasisConfig& basis);

struct MetricReport {
  std::string run_id;
  std::string method;
  long long n = 0;
  long long r0 = 0;
  long long r = 0;
  int K = 0;
  double lambda = 0.0;
  std::optional<double> imse;
  std::optional<double> rpse;
  std::optional<double> mape;
  std::optional<double> mppe;
  double seconds = 0.0;
};

/// Header line of the results CSV.
std::string metric_csv_header();
std::string metric_csv_row(const MetricReport& report);

}  // namespace flpre
