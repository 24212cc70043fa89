#pragma once

#include "flpre/baselines.hpp"
#include "flpre/lpre.hpp"
#include "flpre/tuning.hpp"

#include <span>

namespace flpre {

/// K = ceil(n^{1/4}).
int knots_from_rule(long long n);

/// Fits `method` at every lambda on the grid and keeps the BIC minimizer
/// (the method's own BIC analogue). A single-point grid just fits.
LambdaChoice fit_with_bic(const DesignMatrix& design, const Vector& responses, Method method,
                          std::span<const double> lambda_grid, const NewtonOptions& newton = {});

}  // namespace flpre
