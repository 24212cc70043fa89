#pragma once

#include "flpre/lpre.hpp"

namespace flpre {

/// Penalized least squares on log responses (closed form).
FitResult fit_fls(const DesignMatrix& design, const Vector& responses, double lambda);

struct FladOptions {
  double delta = 1e-6;     // smoothing of |u| as sqrt(u^2 + delta^2)
  double tol = 1e-6;       // gradient max-norm of the smoothed objective
  int max_sweeps = 200;
};

/// Penalized least absolute deviation on log responses via iteratively
/// reweighted least squares on the smoothed objective.
FitResult fit_flad(const DesignMatrix& design, const Vector& responses, double lambda,
                   const FladOptions& options = {});

/// sum_i |log y_i - B_i^T theta| + lambda/2 theta^T D theta (unsmoothed).
double flad_objective(const DesignMatrix& design, const Vector& responses, const Vector& theta, double lambda);

/// BIC analogues used to pick lambda for the baselines:
/// FLS uses RSS = mean squared log residual, FLAD the mean absolute log residual;
/// df is the trace of the corresponding (reweighted) smoother.
double bic_fls(const FitResult& fit, const DesignMatrix& design, const Vector& responses);
double bic_flad(const FitResult& fit, const DesignMatrix& design, const Vector& responses,
                double delta = FladOptions{}.delta);

}  // namespace flpre
