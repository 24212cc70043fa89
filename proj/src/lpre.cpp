#include "flpre/lpre.hpp"

#include "flpre/error.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace flpre {

namespace {

constexpr Eigen::Index kGramChunk = 4096;

double min_rcond(Eigen::Index dim) { return std::numeric_limits<double>::epsilon() * static_cast<double>(dim); }
constexpr double kEps = std::numeric_limits<double>::epsilon();

}  // namespace

std::string to_string(Method m) {
  switch (m) {
    case Method::FLPRE: return "FLPRE";
    case Method::FLS: return "FLS";
    case Method::FLAD: return "FLAD";
  }
  return "?";
}

Method method_from_string(const std::string& s) {
  if (s == "FLPRE") return Method::FLPRE;
  if (s == "FLS") return Method::FLS;
  if (s == "FLAD") return Method::FLAD;
  throw UsageError("unknown method '" + s + "' (expected FLPRE, FLS or FLAD)");
}

void check_responses(const Vector& responses) {
  for (Eigen::Index i = 0; i < responses.size(); ++i) {
    if (!(responses[i] > 0.0) || !std::isfinite(responses[i])) {
      throw DataError("response " + std::to_string(i) + " is not strictly positive");
    }
  }
}

LpreObjective::LpreObjective(const Matrix& rows, const Matrix& penalty, const Vector& responses, Vector weights)
    : rows_(rows), penalty_(penalty), weights_(std::move(weights)) {
  if (responses.size() != rows.rows()) {
    throw UsageError("design has " + std::to_string(rows.rows()) + " rows but " +
                     std::to_string(responses.size()) + " responses");
  }
  if (penalty.rows() != rows.cols() || penalty.cols() != rows.cols()) {
    throw UsageError("penalty matrix does not match the design dimension");
  }
  if (weights_.size() != 0 && weights_.size() != rows.rows()) {
    throw UsageError("weight vector does not match the number of observations");
  }
  check_responses(responses);
  root_ = penalty_root(penalty);
  log_y_ = responses.array().log();
}

std::optional<Vector> LpreObjective::try_log_residuals(const Vector& theta) const {
  if (theta.size() != dimension()) {
    throw UsageError("coefficient vector has length " + std::to_string(theta.size()) + ", expected " +
                     std::to_string(dimension()));
  }
  const Vector eta = rows_ * theta;
  if (!eta.allFinite() || eta.cwiseAbs().maxCoeff() > kExpBound) return std::nullopt;
  Vector u = log_y_ - eta;
  if (u.cwiseAbs().maxCoeff() > kExpBound) return std::nullopt;
  return u;
}

Vector LpreObjective::log_residuals(const Vector& theta) const {
  auto u = try_log_residuals(theta);
  if (!u) throw NumericalError("linear index exceeds the exp-safe bound of 700");
  return *std::move(u);
}

double LpreObjective::data_term(const Vector& u) const {
  // omega + 1/omega - 2 = 4 sinh^2(u / 2), free of cancellation near omega = 1.
  // Neumaier summation keeps the rounding error near one ulp of the total, so
  // the line search can compare losses close to the optimum.
  double sum = 0.0, carry = 0.0;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    const double s = std::sinh(0.5 * u[i]);
    const double term = weight(i) * 4.0 * s * s;
    const double next = sum + term;
    carry += std::abs(sum) >= term ? (sum - next) + term : (term - next) + sum;
    sum = next;
  }
  return sum + carry;
}

double LpreObjective::penalty_term(const Vector& theta, double lambda) const {
  return lambda == 0.0 ? 0.0 : 0.5 * lambda * penalty_value(root_, theta);
}

double LpreObjective::value(const Vector& theta, double lambda) const {
  return data_term(log_residuals(theta)) + penalty_term(theta, lambda);
}

Vector LpreObjective::gradient(const Vector& theta, double lambda) const {
  const Vector u = log_residuals(theta);
  Vector c(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) c[i] = -2.0 * std::sinh(u[i]) * weight(i);
  Vector g = rows_.transpose() * c;
  if (lambda != 0.0) g.noalias() += lambda * (penalty_ * theta);
  return g;
}

Matrix LpreObjective::weighted_gram(const Vector& c) const {
  const Eigen::Index d = dimension();
  Matrix gram = Matrix::Zero(d, d);
  for (Eigen::Index start = 0; start < n(); start += kGramChunk) {
    const Eigen::Index len = std::min(kGramChunk, n() - start);
    Vector scale(len);
    for (Eigen::Index k = 0; k < len; ++k) scale[k] = weight(start + k) * c[start + k];
    const auto block = rows_.middleRows(start, len);
    const Matrix x = block.array().colwise() * scale.array();
    gram.noalias() += x.transpose() * block;
  }
  gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();
  return gram;
}

Matrix LpreObjective::hessian(const Vector& theta, double lambda) const {
  const Vector u = log_residuals(theta);
  Vector c(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) c[i] = 2.0 * std::cosh(u[i]);
  Matrix h = weighted_gram(c);
  if (lambda != 0.0) h.noalias() += lambda * penalty_;
  return h;
}

double lpre_loss(const DesignMatrix& design, const Vector& responses, const Vector& theta, double lambda) {
  return LpreObjective(design.rows, design.penalty, responses).value(theta, lambda);
}

Vector lpre_gradient(const DesignMatrix& design, const Vector& responses, const Vector& theta, double lambda) {
  return LpreObjective(design.rows, design.penalty, responses).gradient(theta, lambda);
}

Matrix lpre_hessian(const DesignMatrix& design, const Vector& responses, const Vector& theta, double lambda) {
  return LpreObjective(design.rows, design.penalty, responses).hessian(theta, lambda);
}

std::optional<Vector> log_ridge_solution(const LpreObjective& objective, double lambda) {
  const Eigen::Index n = objective.n();
  Matrix m = objective.weighted_gram(Vector::Ones(n));
  if (lambda != 0.0) m.noalias() += lambda * objective.penalty();
  Vector wlog(n);
  for (Eigen::Index i = 0; i < n; ++i) wlog[i] = objective.weight(i) * objective.log_responses()[i];
  const Vector b = objective.rows().transpose() * wlog;
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success || llt.rcond() < min_rcond(m.rows())) return std::nullopt;
  return llt.solve(b);
}

FitResult fit_newton(const LpreObjective& objective, double lambda, const NewtonOptions& options) {
  if (!(options.tol > 0.0)) throw UsageError("Newton tolerance must be positive");
  if (lambda < 0.0) throw UsageError("smoothing parameter must be >= 0");
  const Eigen::Index d = objective.dimension();

  FitResult fit;
  fit.method = Method::FLPRE;
  fit.lambda = lambda;
  fit.n = objective.n();

  Vector theta = Vector::Zero(d);
  std::optional<Vector> u;
  if (options.init) {
    theta = *options.init;
    u = objective.try_log_residuals(theta);
    if (!u) throw NumericalError("initial coefficients overflow the exp-safe bound");
  } else {
    if (auto start = log_ridge_solution(objective, lambda)) {
      theta = *start;
      u = objective.try_log_residuals(theta);
    }
    if (!u) {
      theta.setZero();
      u = objective.log_residuals(theta);
    }
  }
  auto penalized = [&](const Vector& th, const Vector& resid) {
    return objective.data_term(resid) + objective.penalty_term(th, lambda);
  };
  double loss = penalized(theta, *u);
  fit.loss_history.push_back(loss);

  double grad_norm = std::numeric_limits<double>::infinity();
  for (int iter = 0;; ++iter) {
    const Vector g = objective.gradient(theta, lambda);
    grad_norm = g.cwiseAbs().maxCoeff();
    Matrix h = objective.hessian(theta, lambda);
    if (options.jitter > 0.0) h.diagonal().array() += options.jitter;
    Eigen::LLT<Matrix> llt(h);
    if (llt.info() != Eigen::Success || llt.rcond() < min_rcond(d)) {
      throw NumericalError("singular Hessian at Newton iteration " + std::to_string(iter) +
                               "; increase lambda or add jitter",
                           iter);
    }
    const Vector step = llt.solve(g);
    const double rel_change = step.cwiseAbs().maxCoeff() / std::max(1.0, theta.cwiseAbs().maxCoeff());
    if (grad_norm < options.tol && rel_change <= options.step_tol) {
      fit.converged = true;
      break;
    }
    if (iter == options.max_iter) break;

    double scale = 1.0;
    bool accepted = false;
    Vector trial;
    double trial_loss = 0.0;
    for (int h_count = 0; h_count <= options.max_halvings; ++h_count, scale *= 0.5) {
      trial = theta - scale * step;
      if (auto tu = objective.try_log_residuals(trial)) {
        trial_loss = penalized(trial, *tu);
        // Near the minimum the loss change drops below rounding; a full step
        // within a few ulps still counts as descent.
        const double slack = h_count == 0 ? 16.0 * kEps * std::abs(loss) : 0.0;
        if (trial_loss <= loss + slack) {
          accepted = true;
          break;
        }
      }
    }
    if (!accepted) {
      // No descent left at working precision.
      fit.converged = grad_norm < options.tol;
      break;
    }
    theta = std::move(trial);
    loss = trial_loss;
    fit.loss_history.push_back(loss);
    fit.iterations = iter + 1;
  }
  fit.theta = std::move(theta);
  fit.loss = loss;
  fit.gradient_norm = grad_norm;
  return fit;
}

FitResult fit_newton(const DesignMatrix& design, const Vector& responses, double lambda,
                     const NewtonOptions& options) {
  if (design.n() < 1) throw DataError("design has no observations");
  return fit_newton(LpreObjective(design.rows, design.penalty, responses), lambda, options);
}

double variance_knot_scale(const BasisConfig& basis) { return std::max(1, basis.interior_knots); }

Sandwich sandwich_variance(const DesignMatrix& design, const Vector& responses, const FitResult& fit) {
  const LpreObjective objective(design.rows, design.penalty, responses);
  const Vector u = objective.log_residuals(fit.theta);
  const auto n = static_cast<double>(design.n());
  Vector score2(u.size()), curv(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    const double s = 2.0 * std::sinh(u[i]);
    score2[i] = s * s;
    curv[i] = 2.0 * std::cosh(u[i]);
  }
  Sandwich out;
  out.G_hat = objective.weighted_gram(score2) / n;
  out.H_hat = objective.weighted_gram(curv) / n + (fit.lambda / n) * design.penalty;
  Eigen::LLT<Matrix> llt(out.H_hat);
  if (llt.info() != Eigen::Success || llt.rcond() < min_rcond(out.H_hat.rows())) {
    throw NumericalError("plug-in Hessian is singular; use a larger lambda or more data");
  }
  const Matrix h_inv = llt.solve(Matrix::Identity(out.H_hat.rows(), out.H_hat.cols()));
  Matrix v = h_inv * out.G_hat * h_inv / variance_knot_scale(design.basis);
  out.V_full = 0.5 * (v + v.transpose());
  return out;
}

void attach_sandwich(const DesignMatrix& design, const Vector& responses, FitResult& fit) {
  Sandwich s = sandwich_variance(design, responses, fit);
  fit.G_hat = std::move(s.G_hat);
  fit.H_hat = std::move(s.H_hat);
  fit.V_full = std::move(s.V_full);
}

BetaCurve predict_beta(const FitResult& fit, const BasisConfig& basis, std::span<const double> t_grid,
                       double alpha) {
  if (fit.theta.size() != basis.dimension()) {
    throw UsageError("coefficient vector does not match the basis dimension");
  }
  const bool bands = fit.V_full.size() > 0 && fit.n > 0;
  double z = 0.0;
  if (bands) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw UsageError("band level alpha must lie in (0, 1)");
    z = boost::math::quantile(boost::math::normal(), 1.0 - alpha / 2.0);
  }
  const double k = variance_knot_scale(basis);
  BetaCurve curve;
  curve.t.assign(t_grid.begin(), t_grid.end());
  curve.beta.reserve(t_grid.size());
  for (double t : t_grid) {
    const Vector b = eval_basis(basis, t);
    const double value = b.dot(fit.theta);
    curve.beta.push_back(value);
    if (bands) {
      const double var = std::max(0.0, k * b.dot(fit.V_full * b) / static_cast<double>(fit.n));
      const double se = std::sqrt(var);
      curve.se.push_back(se);
      curve.lower.push_back(value - z * se);
      curve.upper.push_back(value + z * se);
    }
  }
  return curve;
}

double predict_response(const FitResult& fit, const BasisConfig& basis, const FunctionalSample& sample) {
  const Vector b = project_covariate(sample, basis);
  if (b.size() != fit.theta.size()) throw UsageError("coefficient vector does not match the basis dimension");
  const double eta = b.dot(fit.theta);
  if (!(std::abs(eta) <= kExpBound)) throw NumericalError("predicted index exceeds the exp-safe bound of 700");
  return std::exp(eta);
}

}  // namespace flpre
