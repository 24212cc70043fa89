#include "flpre/baselines.hpp"

#include "flpre/error.hpp"
#include "flpre/tuning.hpp"

#include <cmath>
#include <limits>

namespace flpre {

namespace {

Vector log_responses(const Vector& responses) {
  check_responses(responses);
  return responses.array().log();
}

Matrix gram(const Matrix& rows, const Vector& w) {
  const Matrix x = rows.array().colwise() * w.array().sqrt();
  Matrix g = Matrix::Zero(rows.cols(), rows.cols());
  g.selfadjointView<Eigen::Lower>().rankUpdate(x.transpose());
  g.triangularView<Eigen::StrictlyUpper>() = g.transpose();
  return g;
}

std::optional<Vector> weighted_ridge(const DesignMatrix& design, const Vector& log_y, const Vector& w,
                                     double lambda) {
  Matrix m = gram(design.rows, w);
  if (lambda != 0.0) m.noalias() += lambda * design.penalty;
  const Vector b = design.rows.transpose() * (w.array() * log_y.array()).matrix();
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success ||
      llt.rcond() < std::numeric_limits<double>::epsilon() * static_cast<double>(m.rows())) {
    return std::nullopt;
  }
  return llt.solve(b);
}

double smoothed_abs_sum(const Vector& u, double delta) {
  return (u.array().square() + delta * delta).sqrt().sum();
}

}  // namespace

FitResult fit_fls(const DesignMatrix& design, const Vector& responses, double lambda) {
  if (lambda < 0.0) throw UsageError("smoothing parameter must be >= 0");
  if (responses.size() != design.n()) throw UsageError("design and response lengths differ");
  const Vector log_y = log_responses(responses);
  auto theta = weighted_ridge(design, log_y, Vector::Ones(design.n()), lambda);
  if (!theta) throw NumericalError("FLS normal matrix is singular; use lambda > 0");

  FitResult fit;
  fit.method = Method::FLS;
  fit.theta = *theta;
  fit.lambda = lambda;
  fit.n = design.n();
  fit.converged = true;
  const Vector resid = log_y - design.rows * fit.theta;
  const Vector penalty_theta = design.penalty * fit.theta;
  const double roughness = lambda == 0.0 ? 0.0 : penalty_value(penalty_root(design.penalty), fit.theta);
  fit.loss = 0.5 * resid.squaredNorm() + 0.5 * lambda * roughness;
  fit.gradient_norm = (lambda * penalty_theta - design.rows.transpose() * resid).cwiseAbs().maxCoeff();
  fit.loss_history.push_back(fit.loss);
  return fit;
}

double flad_objective(const DesignMatrix& design, const Vector& responses, const Vector& theta, double lambda) {
  const Vector u = log_responses(responses) - design.rows * theta;
  if (lambda == 0.0) return u.cwiseAbs().sum();
  return u.cwiseAbs().sum() + 0.5 * lambda * penalty_value(penalty_root(design.penalty), theta);
}

FitResult fit_flad(const DesignMatrix& design, const Vector& responses, double lambda,
                   const FladOptions& options) {
  if (lambda < 0.0) throw UsageError("smoothing parameter must be >= 0");
  if (!(options.delta > 0.0)) throw UsageError("FLAD smoothing delta must be positive");
  if (responses.size() != design.n()) throw UsageError("design and response lengths differ");
  const Vector log_y = log_responses(responses);
  const double delta = options.delta;

  FitResult fit;
  fit.method = Method::FLAD;
  fit.lambda = lambda;
  fit.n = design.n();

  Vector theta = weighted_ridge(design, log_y, Vector::Ones(design.n()), lambda)
                     .value_or(Vector::Zero(design.dimension()));
  const Matrix root = penalty_root(design.penalty);
  auto objective = [&](const Vector& th, const Vector& u) {
    return smoothed_abs_sum(u, delta) + (lambda == 0.0 ? 0.0 : 0.5 * lambda * penalty_value(root, th));
  };
  Vector u = log_y - design.rows * theta;
  double loss = objective(theta, u);
  fit.loss_history.push_back(loss);

  auto gradient = [&](const Vector& th, const Vector& resid) {
    const Vector scale = (resid.array().square() + delta * delta).sqrt();
    return Vector(-(design.rows.transpose() * (resid.array() / scale.array()).matrix()) +
                  lambda * (design.penalty * th));
  };

  // Each sweep takes the better of the IRLS (majorize-minimize) update and a
  // damped Newton step on the smoothed objective; IRLS alone crawls once the
  // residuals reach the delta scale. Where the objective is flat to rounding,
  // a smaller gradient decides.
  const double slack = 16.0 * std::numeric_limits<double>::epsilon() * std::abs(loss);
  auto grad_norm = [&](const Vector& th, const Vector& resid) { return gradient(th, resid).cwiseAbs().maxCoeff(); };
  auto improves = [&](double cand_loss, double cand_grad, double ref_loss, double ref_grad) {
    return cand_loss < ref_loss - slack || (cand_loss <= ref_loss + slack && cand_grad < ref_grad);
  };
  for (int sweep = 0;; ++sweep) {
    const Vector g = gradient(theta, u);
    fit.gradient_norm = g.cwiseAbs().maxCoeff();
    if (fit.gradient_norm < options.tol) {
      fit.converged = true;
      break;
    }
    if (sweep == options.max_sweeps) break;

    const Vector s2 = u.array().square() + delta * delta;
    auto irls = weighted_ridge(design, log_y, s2.array().sqrt().inverse().matrix(), lambda);
    if (!irls) throw NumericalError("FLAD reweighted system is singular; use lambda > 0", sweep);
    Vector best = std::move(*irls);
    Vector best_u = log_y - design.rows * best;
    double best_loss = objective(best, best_u);
    double best_grad = grad_norm(best, best_u);

    const Vector curv = delta * delta * (s2.array() * s2.array().sqrt()).inverse();
    Matrix h = gram(design.rows, curv);
    if (lambda != 0.0) h.noalias() += lambda * design.penalty;
    const Eigen::LDLT<Matrix> ldlt(h);
    if (ldlt.info() == Eigen::Success) {
      const Vector step = ldlt.solve(g);
      double scale = 1.0;
      for (int halving = 0; halving <= 30; ++halving, scale *= 0.5) {
        Vector trial = theta - scale * step;
        Vector trial_u = log_y - design.rows * trial;
        const double trial_loss = objective(trial, trial_u);
        const double trial_grad = grad_norm(trial, trial_u);
        if (!improves(trial_loss, trial_grad, loss, fit.gradient_norm)) continue;
        if (improves(trial_loss, trial_grad, best_loss, best_grad)) {
          best = std::move(trial);
          best_u = std::move(trial_u);
          best_loss = trial_loss;
          best_grad = trial_grad;
        }
        break;
      }
    }
    if (!improves(best_loss, best_grad, loss, fit.gradient_norm)) break;
    theta = std::move(best);
    u = std::move(best_u);
    loss = best_loss;
    fit.loss_history.push_back(loss);
    fit.iterations = sweep + 1;
  }
  fit.theta = std::move(theta);
  fit.loss = loss;
  return fit;
}

double bic_fls(const FitResult& fit, const DesignMatrix& design, const Vector& responses) {
  const Vector u = log_responses(responses) - design.rows * fit.theta;
  const auto n = static_cast<double>(design.n());
  const Matrix h0 = gram(design.rows, Vector::Ones(design.n()));
  return bic_value(u.squaredNorm() / n, n, effective_df(h0, design.penalty, fit.lambda));
}

double bic_flad(const FitResult& fit, const DesignMatrix& design, const Vector& responses, double delta) {
  const Vector u = log_responses(responses) - design.rows * fit.theta;
  const auto n = static_cast<double>(design.n());
  const Vector w = (u.array().square() + delta * delta).sqrt().inverse();
  const Matrix h0 = gram(design.rows, w);
  return bic_value(u.cwiseAbs().sum() / n, n, effective_df(h0, design.penalty, fit.lambda));
}

}  // namespace flpre
