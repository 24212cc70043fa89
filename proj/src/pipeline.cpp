#include "flpre/pipeline.hpp"

#include "flpre/error.hpp"

#include <cmath>
#include <optional>

namespace flpre {

int knots_from_rule(long long n) {
  if (n < 1) throw UsageError("knot rule needs n >= 1");
  int k = static_cast<int>(std::ceil(std::pow(static_cast<double>(n), 0.25)));
  // Guard against pow rounding just above an exact fourth power.
  while (k > 1 && std::pow(static_cast<double>(k - 1), 4) >= static_cast<double>(n)) --k;
  return k;
}

LambdaChoice fit_with_bic(const DesignMatrix& design, const Vector& responses, Method method,
                          std::span<const double> lambda_grid, const NewtonOptions& newton) {
  check_responses(responses);
  std::optional<Vector> warm;
  FitProcedure fit_at;
  FitCriterion criterion;
  switch (method) {
    case Method::FLPRE:
      fit_at = [&](double lambda) {
        NewtonOptions opts = newton;
        if (!opts.init && warm) opts.init = warm;
        FitResult fit = fit_newton(design, responses, lambda, opts);
        if (fit.converged) warm = fit.theta;
        return fit;
      };
      criterion = [&](const FitResult& fit) { return bic(fit, design, responses); };
      break;
    case Method::FLS:
      fit_at = [&](double lambda) { return fit_fls(design, responses, lambda); };
      criterion = [&](const FitResult& fit) { return bic_fls(fit, design, responses); };
      break;
    case Method::FLAD:
      fit_at = [&](double lambda) { return fit_flad(design, responses, lambda); };
      criterion = [&](const FitResult& fit) { return bic_flad(fit, design, responses); };
      break;
  }
  if (lambda_grid.size() == 1) {
    LambdaChoice single;
    single.lambda = lambda_grid[0];
    single.fit = fit_at(single.lambda);
    try {
      single.bic = criterion(single.fit);
    } catch (const NumericalError&) {
      single.bic = std::numeric_limits<double>::quiet_NaN();
    }
    single.path.push_back({single.lambda, std::isnan(single.bic) ? std::nullopt : std::optional(single.bic)});
    return single;
  }
  return select_lambda(lambda_grid, fit_at, criterion);
}

}  // namespace flpre
