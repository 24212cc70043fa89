#pragma once

#include "flpre/bspline.hpp"

#include <optional>
#include <string>
#include <vector>

namespace flpre {

/// |B_i^T theta| (and |log y_i - B_i^T theta|) beyond this overflow exp().
inline constexpr double kExpBound = 700.0;

enum class Method { FLPRE, FLS, FLAD };

std::string to_string(Method m);
Method method_from_string(const std::string& s);

struct FitResult {
  Method method = Method::FLPRE;
  Vector theta;
  double lambda = 0.0;
  int iterations = 0;
  bool converged = false;
  double gradient_norm = 0.0;
  double loss = 0.0;
  Eigen::Index n = 0;
  std::vector<double> loss_history;
  // Plug-in sandwich pieces; empty until sandwich_variance() fills them.
  Matrix G_hat;
  Matrix H_hat;
  Matrix V_full;
};

/// Penalized LPRE objective over a set of projected covariates, optionally
/// with per-observation weights:
///   sum_i w_i (omega_i + 1/omega_i - 2) + lambda/2 theta^T D theta,
///   omega_i = y_i exp(-B_i^T theta).
/// The referenced matrices must outlive the objective.
class LpreObjective {
 public:
  LpreObjective(const Matrix& rows, const Matrix& penalty, const Vector& responses, Vector weights = {});

  Eigen::Index n() const { return rows_.rows(); }
  Eigen::Index dimension() const { return rows_.cols(); }
  const Matrix& rows() const { return rows_; }
  const Matrix& penalty() const { return penalty_; }
  /// lambda/2 theta^T D theta, evaluated through penalty_root.
  double penalty_term(const Vector& theta, double lambda) const;
  const Vector& log_responses() const { return log_y_; }
  bool weighted() const { return weights_.size() > 0; }
  double weight(Eigen::Index i) const { return weighted() ? weights_[i] : 1.0; }

  /// log(omega_i) = log y_i - B_i^T theta; throws NumericalError past kExpBound.
  Vector log_residuals(const Vector& theta) const;
  /// As log_residuals, but returns nullopt instead of throwing.
  std::optional<Vector> try_log_residuals(const Vector& theta) const;

  double value(const Vector& theta, double lambda) const;
  double data_term(const Vector& log_resid) const;
  Vector gradient(const Vector& theta, double lambda) const;
  Matrix hessian(const Vector& theta, double lambda) const;
  /// sum_i w_i c_i B_i B_i^T (lower and upper triangles filled).
  Matrix weighted_gram(const Vector& c) const;

 private:
  const Matrix& rows_;
  const Matrix& penalty_;
  Matrix root_;
  Vector log_y_;
  Vector weights_;
};

void check_responses(const Vector& responses);

double lpre_loss(const DesignMatrix& design, const Vector& responses, const Vector& theta, double lambda);
Vector lpre_gradient(const DesignMatrix& design, const Vector& responses, const Vector& theta, double lambda);
Matrix lpre_hessian(const DesignMatrix& design, const Vector& responses, const Vector& theta, double lambda);

struct NewtonOptions {
  double tol = 1e-8;            // gradient max-norm
  double step_tol = 1e-10;      // relative change in theta
  int max_iter = 100;
  int max_halvings = 30;
  double jitter = 0.0;          // added to the Hessian diagonal when > 0
  std::optional<Vector> init;   // default: log-scale ridge (FLS) start, else 0
};

/// Newton-Raphson with step halving on a (possibly weighted) objective.
FitResult fit_newton(const LpreObjective& objective, double lambda, const NewtonOptions& options = {});
FitResult fit_newton(const DesignMatrix& design, const Vector& responses, double lambda,
                     const NewtonOptions& options = {});

/// Solves (sum w_i B_i B_i^T + lambda D) theta = sum w_i B_i log y_i; nullopt if singular.
std::optional<Vector> log_ridge_solution(const LpreObjective& objective, double lambda);

struct Sandwich {
  Matrix G_hat;
  Matrix H_hat;
  Matrix V_full;
};

/// Knot count used in the K^{-1} variance scaling; K = 0 maps to 1 (the
/// factor cancels in every standard error).
double variance_knot_scale(const BasisConfig& basis);

Sandwich sandwich_variance(const DesignMatrix& design, const Vector& responses, const FitResult& fit);
/// Fills fit.G_hat / H_hat / V_full in place.
void attach_sandwich(const DesignMatrix& design, const Vector& responses, FitResult& fit);

struct BetaCurve {
  std::vector<double> t;
  std::vector<double> beta;
  std::vector<double> se;     // empty when no variance is attached
  std::vector<double> lower;  // beta -/+ z se
  std::vector<double> upper;
};

/// beta(t) = B(t)^T theta, with pointwise bands sqrt(K B^T V_full B / n) when
/// fit.V_full is present.
BetaCurve predict_beta(const FitResult& fit, const BasisConfig& basis, std::span<const double> t_grid,
                       double alpha = 0.05);

double predict_response(const FitResult& fit, const BasisConfig& basis, const FunctionalSample& sample);

}  // namespace flpre
