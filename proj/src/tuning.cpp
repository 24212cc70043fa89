#include "flpre/tuning.hpp"

#include "flpre/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace flpre {

double bic_value(double rss, double n, double df) {
  if (!(rss > 0.0) || !std::isfinite(rss)) {
    throw NumericalError("BIC undefined: residual sum is zero (perfect fit); inspect the lambda path instead");
  }
  return std::log(rss) + std::log(n) / n * df;
}

double effective_df(const Matrix& h0, const Matrix& penalty, double lambda) {
  if (lambda == 0.0) {
    Eigen::LDLT<Matrix> ldlt(h0);
    if (ldlt.info() != Eigen::Success) throw NumericalError("Hessian is singular in df computation");
    return ldlt.solve(h0).trace();
  }
  // With H0 = L L^T, df = sum_j 1 / (1 + lambda mu_j) over the eigenvalues of
  // L^{-1} D L^{-T}; this stays accurate when lambda D dwarfs H0.
  Eigen::LLT<Matrix> llt(h0);
  if (llt.info() == Eigen::Success) {
    const auto l = llt.matrixL();
    Matrix m = l.solve(penalty);
    m = l.solve(m.transpose()).transpose();
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
    double df = 0.0;
    for (double mu : eig.eigenvalues()) df += 1.0 / (1.0 + lambda * std::max(mu, 0.0));
    return df;
  }
  Matrix h = h0;
  h.noalias() += lambda * penalty;
  Eigen::LDLT<Matrix> ldlt(h);
  if (ldlt.info() != Eigen::Success) throw NumericalError("penalized Hessian is singular in df computation");
  return ldlt.solve(h0).trace();
}

namespace {

double bic_from_objective(const FitResult& fit, const LpreObjective& objective, double sample_size) {
  const Vector u = objective.log_residuals(fit.theta);
  double weight_sum = 0.0;
  for (Eigen::Index i = 0; i < objective.n(); ++i) weight_sum += objective.weight(i);
  const double rss = objective.data_term(u) / weight_sum;
  Vector c(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) c[i] = 2.0 * std::cosh(u[i]);
  const Matrix h0 = objective.weighted_gram(c);
  return bic_value(rss, sample_size, effective_df(h0, objective.penalty(), fit.lambda));
}

}  // namespace

double bic(const FitResult& fit, const DesignMatrix& design, const Vector& responses) {
  const LpreObjective objective(design.rows, design.penalty, responses);
  return bic_from_objective(fit, objective, static_cast<double>(design.n()));
}

double bic(const FitResult& fit, const LpreObjective& objective, double sample_size) {
  return bic_from_objective(fit, objective, sample_size);
}

LambdaChoice select_lambda(std::span<const double> lambda_grid, const FitProcedure& fit_at,
                           const FitCriterion& criterion) {
  if (lambda_grid.empty()) throw UsageError("lambda grid is empty");
  std::vector<double> grid(lambda_grid.begin(), lambda_grid.end());
  for (double l : grid) {
    if (!(l >= 0.0) || !std::isfinite(l)) throw UsageError("lambda grid values must be finite and >= 0");
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  LambdaChoice choice;
  bool found = false;
  for (double l : grid) {
    LambdaPathPoint point{l, std::nullopt};
    try {
      FitResult fit = fit_at(l);
      if (fit.converged) {
        const double value = criterion(fit);
        point.bic = value;
        // Grid ascends, so <= breaks ties toward the larger lambda.
        if (!found || value <= choice.bic) {
          choice.lambda = l;
          choice.bic = value;
          choice.fit = std::move(fit);
          found = true;
        }
      }
    } catch (const NumericalError&) {
    }
    choice.path.push_back(point);
  }
  if (!found) throw NumericalError("no lambda on the grid produced a converged fit with a defined BIC");
  return choice;
}

std::vector<double> log_grid(double lo, double hi, int count) {
  if (!(lo > 0.0 && hi >= lo) || count < 1) throw UsageError("invalid log grid specification");
  std::vector<double> out;
  out.reserve(count);
  if (count == 1) return {lo};
  const double a = std::log10(lo), b = std::log10(hi);
  for (int k = 0; k < count; ++k) out.push_back(std::pow(10.0, a + (b - a) * k / (count - 1)));
  return out;
}

std::vector<double> default_lambda_grid() { return log_grid(1e-6, 1e2, 15); }

std::vector<double> uniform_grid(int count) {
  if (count < 2) throw UsageError("grid needs at least 2 points");
  std::vector<double> out(count);
  for (int k = 0; k < count; ++k) out[k] = static_cast<double>(k) / (count - 1);
  return out;
}

double imse(const Curve& beta_est, const Curve& beta_ref, std::span<const double> eval_grid) {
  if (eval_grid.size() < 2) throw UsageError("IMSE grid needs at least 2 points");
  double integral = 0.0;
  double prev = 0.0;
  for (std::size_t g = 0; g < eval_grid.size(); ++g) {
    const double diff = beta_est(eval_grid[g]) - beta_ref(eval_grid[g]);
    const double sq = diff * diff;
    if (g > 0) integral += 0.5 * (eval_grid[g] - eval_grid[g - 1]) * (sq + prev);
    prev = sq;
  }
  return std::sqrt(integral);
}

double imse(const Curve& beta_est, const Curve& beta_ref) {
  static const std::vector<double> grid = uniform_grid(1001);
  return imse(beta_est, beta_ref, grid);
}

namespace {

// Trapezoid integral of x(t) * (est - ref)(t) over one curve's grid.
double index_difference(std::span<const double> grid, std::span<const double> diff, const double* x,
                        Eigen::Index stride) {
  double sum = 0.0;
  for (std::size_t g = 0; g + 1 < grid.size(); ++g) {
    const double h = grid[g + 1] - grid[g];
    sum += 0.5 * h * (x[g * stride] * diff[g] + x[(g + 1) * stride] * diff[g + 1]);
  }
  return sum;
}

}  // namespace

double rpse(const Curve& beta_est, const Curve& beta_ref, const CurveBatch& test_curves) {
  if (test_curves.size() == 0) throw UsageError("RPSE needs a nonempty test set");
  std::vector<double> diff(test_curves.grid.size());
  for (std::size_t g = 0; g < diff.size(); ++g) {
    diff[g] = beta_est(test_curves.grid[g]) - beta_ref(test_curves.grid[g]);
  }
  double sum = 0.0;
  const Eigen::Index stride = test_curves.values.outerStride();
  for (Eigen::Index i = 0; i < test_curves.size(); ++i) {
    const double d = index_difference(test_curves.grid, diff, &test_curves.values(i, 0), stride);
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(test_curves.size()));
}

double rpse(const Curve& beta_est, const Curve& beta_ref, std::span<const FunctionalSample> test_curves) {
  if (test_curves.empty()) throw UsageError("RPSE needs a nonempty test set");
  double sum = 0.0;
  for (const auto& curve : test_curves) {
    std::vector<double> diff(curve.grid.size());
    for (std::size_t g = 0; g < diff.size(); ++g) diff[g] = beta_est(curve.grid[g]) - beta_ref(curve.grid[g]);
    const double d = index_difference(curve.grid, diff, curve.values.data(), 1);
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(test_curves.size()));
}

PredictionErrors mape_mppe(std::span<const double> y_true, std::span<const double> y_pred) {
  if (y_true.size() != y_pred.size()) throw UsageError("truth and prediction lengths differ");
  if (y_true.empty()) throw UsageError("no predictions to score");
  PredictionErrors out;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (!(y_true[i] > 0.0)) throw DataError("observed response " + std::to_string(i) + " is not positive");
    if (!(y_pred[i] > 0.0)) throw NumericalError("prediction " + std::to_string(i) + " is not positive");
    const double e = y_true[i] - y_pred[i];
    out.mape += std::abs(e);
    out.mppe += e * e / (y_true[i] * y_pred[i]);
  }
  const auto m = static_cast<double>(y_true.size());
  out.mape /= m;
  out.mppe /= m;
  return out;
}

Curve beta_function(const Vector& theta, const BasisConfig& basis) {
  if (theta.size() != basis.dimension()) throw UsageError("coefficient vector does not match the basis");
  return [theta, basis](double t) {
    const LocalBasis local = eval_local(basis, t, 0);
    return local.derivs.row(0).dot(theta.segment(local.first, basis.degree + 1));
  };
}

std::string metric_csv_header() { return "run_id,method,n,r0,r,K,lambda,imse,rpse,mape,mppe,seconds"; }

std::string metric_csv_row(const MetricReport& m) {
  std::ostringstream out;
  out.precision(10);
  auto opt = [&](const std::optional<double>& v) {
    if (v) out << *v;
  };
  out << m.run_id << ',' << m.method << ',' << m.n << ',' << m.r0 << ',' << m.r << ',' << m.K << ','
      << m.lambda << ',';
  opt(m.imse);
  out << ',';
  opt(m.rpse);
  out << ',';
  opt(m.mape);
  out << ',';
  opt(m.mppe);
  out << ',' << m.seconds;
  return out.str();
}

}  // namespace flpre
