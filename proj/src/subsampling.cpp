#include "flpre/subsampling.hpp"

#include "flpre/error.hpp"

#include <cmath>
#include <limits>
#include <numeric>

namespace flpre {

std::string to_string(SchemeKind kind) {
  switch (kind) {
    case SchemeKind::Uniform: return "uniform";
    case SchemeKind::FAopt: return "FAopt";
    case SchemeKind::FLopt: return "FLopt";
  }
  return "?";
}

SchemeKind scheme_kind_from_string(const std::string& s) {
  if (s == "uniform" || s == "Unif") return SchemeKind::Uniform;
  if (s == "FAopt") return SchemeKind::FAopt;
  if (s == "FLopt") return SchemeKind::FLopt;
  throw UsageError("unknown subsample kind '" + s + "' (expected uniform, FAopt or FLopt)");
}

SubsampleScheme probs_uniform(Eigen::Index n) {
  if (n < 1) throw UsageError("uniform scheme needs n >= 1");
  return {Vector::Constant(n, 1.0 / static_cast<double>(n)), SchemeKind::Uniform, 0.0};
}

namespace {

// |omega_i - 1/omega_i| = 2 |sinh(log y_i - B_i^T theta)|
Vector residual_factors(const DesignMatrix& design, const Vector& responses, const Vector& theta) {
  const LpreObjective objective(design.rows, design.penalty, responses);
  const Vector u = objective.log_residuals(theta);
  return u.unaryExpr([](double v) { return 2.0 * std::abs(std::sinh(v)); });
}

SubsampleScheme normalize(Vector scores, SchemeKind kind) {
  const double total = scores.sum();
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw NumericalError("all residual factors vanish (perfect fit); use uniform subsampling instead");
  }
  scores /= total;
  return {std::move(scores), kind, 0.0};
}

}  // namespace

SubsampleScheme probs_faopt(const DesignMatrix& design, const Vector& responses, const Vector& theta_ref,
                            const Matrix& H_ref) {
  if (H_ref.rows() != design.dimension() || H_ref.cols() != design.dimension()) {
    throw UsageError("reference Hessian does not match the design dimension");
  }
  Eigen::PartialPivLU<Matrix> lu(H_ref);
  if (!(std::abs(lu.determinant()) > 0.0) ||
      lu.rcond() < std::numeric_limits<double>::epsilon() * static_cast<double>(H_ref.rows())) {
    throw NumericalError("reference Hessian is singular");
  }
  const Matrix solved = lu.solve(design.rows.transpose()).transpose();
  const Vector scores = residual_factors(design, responses, theta_ref).cwiseProduct(solved.rowwise().norm());
  return normalize(scores, SchemeKind::FAopt);
}

SubsampleScheme probs_flopt(const DesignMatrix& design, const Vector& responses, const Vector& theta_ref) {
  const Vector scores = residual_factors(design, responses, theta_ref).cwiseProduct(design.rows.rowwise().norm());
  return normalize(scores, SchemeKind::FLopt);
}

SubsampleScheme mix_uniform(const SubsampleScheme& scheme, double alpha) {
  if (!(alpha >= 0.0 && alpha < 1.0)) throw UsageError("mixing weight alpha must lie in [0, 1)");
  SubsampleScheme out = scheme;
  if (alpha == 0.0) return out;
  const auto n = static_cast<double>(scheme.probabilities.size());
  out.probabilities = (1.0 - alpha) * scheme.probabilities.array() + alpha / n;
  out.probabilities /= out.probabilities.sum();
  out.alpha = alpha;
  return out;
}

AliasTable::AliasTable(const Vector& probabilities) {
  const Eigen::Index n = probabilities.size();
  if (n < 1) throw UsageError("alias table needs at least one outcome");
  const double total = probabilities.sum();
  if (!(total > 0.0)) throw UsageError("probabilities must have a positive sum");
  accept_.assign(n, 0.0);
  alias_.assign(n, 0);
  std::vector<double> scaled(n);
  std::vector<Eigen::Index> small, large;
  Eigen::Index argmax = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (probabilities[i] < 0.0) throw UsageError("probabilities must be nonnegative");
    scaled[i] = probabilities[i] / total * static_cast<double>(n);
    (scaled[i] < 1.0 ? small : large).push_back(i);
    if (probabilities[i] > probabilities[argmax]) argmax = i;
  }
  while (!small.empty() && !large.empty()) {
    const Eigen::Index s = small.back();
    small.pop_back();
    const Eigen::Index l = large.back();
    accept_[s] = scaled[s];
    alias_[s] = l;
    scaled[l] = (scaled[l] + scaled[s]) - 1.0;
    if (scaled[l] < 1.0) {
      large.pop_back();
      small.push_back(l);
    }
  }
  for (Eigen::Index l : large) {
    accept_[l] = 1.0;
    alias_[l] = l;
  }
  // Rounding leftovers; zero-probability outcomes must stay unreachable.
  for (Eigen::Index s : small) {
    accept_[s] = probabilities[s] > 0.0 ? 1.0 : 0.0;
    alias_[s] = probabilities[s] > 0.0 ? s : argmax;
  }
}

Eigen::Index AliasTable::sample(Rng& rng) const {
  std::uniform_int_distribution<Eigen::Index> column(0, size() - 1);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const Eigen::Index i = column(rng);
  return unif(rng) < accept_[i] ? i : alias_[i];
}

SubsampleDraw draw_with_replacement(const SubsampleScheme& scheme, long long r, Rng& rng) {
  if (r < 1) throw UsageError("subsample size r must be >= 1");
  const AliasTable table(scheme.probabilities);
  SubsampleDraw draw;
  draw.r = r;
  draw.multiplicities.assign(scheme.probabilities.size(), 0);
  for (long long k = 0; k < r; ++k) ++draw.multiplicities[table.sample(rng)];
  return draw;
}

namespace {

void check_draw(const SubsampleDraw& draw, const SubsampleScheme& scheme, Eigen::Index n) {
  if (static_cast<Eigen::Index>(draw.multiplicities.size()) != n || scheme.probabilities.size() != n) {
    throw UsageError("draw, scheme and design sizes disagree");
  }
  const long long total = std::accumulate(draw.multiplicities.begin(), draw.multiplicities.end(), 0LL);
  if (total != draw.r || draw.r < 1) throw UsageError("multiplicities must sum to the subsample size r");
}

}  // namespace

WeightedSubsample gather_subsample(const DesignMatrix& design, const Vector& responses, const SubsampleDraw& draw,
                                   const SubsampleScheme& scheme) {
  check_draw(draw, scheme, design.n());
  if (responses.size() != design.n()) throw UsageError("design and response lengths differ");
  WeightedSubsample sub;
  for (Eigen::Index i = 0; i < design.n(); ++i) {
    if (draw.multiplicities[i] < 0) throw UsageError("multiplicities must be nonnegative");
    if (draw.multiplicities[i] == 0) continue;
    if (!(scheme.probabilities[i] > 0.0)) {
      throw UsageError("point " + std::to_string(i) + " was drawn but has zero probability");
    }
    sub.index.push_back(i);
  }
  const auto m = static_cast<Eigen::Index>(sub.index.size());
  sub.rows.resize(m, design.dimension());
  sub.responses.resize(m);
  sub.weights.resize(m);
  const auto r = static_cast<double>(draw.r);
  for (Eigen::Index k = 0; k < m; ++k) {
    const Eigen::Index i = sub.index[k];
    sub.rows.row(k) = design.rows.row(i);
    sub.responses[k] = responses[i];
    sub.weights[k] = static_cast<double>(draw.multiplicities[i]) / (r * scheme.probabilities[i]);
  }
  return sub;
}

double weighted_sum(const SubsampleDraw& draw, const SubsampleScheme& scheme, const Vector& values) {
  check_draw(draw, scheme, values.size());
  double sum = 0.0;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (draw.multiplicities[i] == 0) continue;
    sum += static_cast<double>(draw.multiplicities[i]) / scheme.probabilities[i] * values[i];
  }
  return sum / static_cast<double>(draw.r);
}

SubsampleFit fit_weighted(const DesignMatrix& design, const Vector& responses, const SubsampleDraw& draw,
                          const SubsampleScheme& scheme, double lambda, const NewtonOptions& options) {
  const WeightedSubsample sub = gather_subsample(design, responses, draw, scheme);
  const LpreObjective objective(sub.rows, design.penalty, sub.responses, sub.weights);
  SubsampleFit out;
  try {
    out.fit = fit_newton(objective, lambda, options);
  } catch (const NumericalError& e) {
    throw NumericalError(std::string(e.what()) + " (subsample: try a larger r or alpha > 0)", e.iteration());
  }
  out.theta_tilde = out.fit.theta;
  out.lambda = lambda;
  out.r = draw.r;
  out.scheme = scheme;
  return out;
}

SubsampleVariance subsample_variance(const DesignMatrix& design, const Vector& responses, const Vector& theta,
                                     const SubsampleScheme& scheme, double lambda) {
  if (scheme.probabilities.size() != design.n()) throw UsageError("scheme and design sizes disagree");
  const LpreObjective objective(design.rows, design.penalty, responses);
  const Vector u = objective.log_residuals(theta);
  const auto n = static_cast<double>(design.n());
  Vector score(u.size()), curv(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    const double s = 2.0 * std::sinh(u[i]);
    curv[i] = 2.0 * std::cosh(u[i]);
    if (s == 0.0) {
      score[i] = 0.0;  // contributes nothing whatever pi_i is
      continue;
    }
    if (!(scheme.probabilities[i] > 0.0)) {
      throw UsageError("point " + std::to_string(i) + " has a nonzero residual but zero probability");
    }
    score[i] = s * s / scheme.probabilities[i];
  }
  SubsampleVariance out;
  out.V_pi = objective.weighted_gram(score) / (n * n);
  const Matrix h = objective.weighted_gram(curv) / n + (lambda / n) * design.penalty;
  Eigen::LLT<Matrix> llt(h);
  if (llt.info() != Eigen::Success) throw NumericalError("plug-in Hessian is singular");
  const Matrix h_inv = llt.solve(Matrix::Identity(h.rows(), h.cols()));
  const Matrix v = h_inv * out.V_pi * h_inv / variance_knot_scale(design.basis);
  out.V = 0.5 * (v + v.transpose());
  return out;
}

namespace {

SubsampleFit fit_over_grid(const DesignMatrix& design, const Vector& responses, const SubsampleDraw& draw,
                           const SubsampleScheme& scheme, const TwoStepOptions& options) {
  const WeightedSubsample sub = gather_subsample(design, responses, draw, scheme);
  const LpreObjective objective(sub.rows, design.penalty, sub.responses, sub.weights);
  std::optional<Vector> warm;
  auto fit_at = [&](double lambda) {
    NewtonOptions opts = options.newton;
    if (!opts.init && warm) opts.init = warm;
    FitResult fit = fit_newton(objective, lambda, opts);
    if (fit.converged) warm = fit.theta;
    return fit;
  };
  auto criterion = [&](const FitResult& fit) { return bic(fit, objective, static_cast<double>(draw.r)); };
  LambdaChoice choice = select_lambda(options.lambda_grid, fit_at, criterion);

  SubsampleFit out;
  out.theta_tilde = choice.fit.theta;
  out.lambda = choice.lambda;
  out.fit = std::move(choice.fit);
  out.lambda_path = std::move(choice.path);
  out.r = draw.r;
  out.scheme = scheme;
  return out;
}

}  // namespace

SubsampleFit two_step_fit(const DesignMatrix& design, const Vector& responses, const TwoStepOptions& options,
                          Rng& rng) {
  const Eigen::Index n = design.n();
  if (options.r < 1) throw UsageError("subsample size r must be >= 1");
  if (options.lambda_grid.empty()) throw UsageError("lambda grid is empty");

  if (options.kind == SchemeKind::Uniform) {
    const SubsampleScheme scheme = probs_uniform(n);
    const SubsampleDraw draw = draw_with_replacement(scheme, options.r, rng);
    return fit_over_grid(design, responses, draw, scheme, options);
  }

  if (options.r0 < design.dimension()) {
    throw UsageError("pilot size r0=" + std::to_string(options.r0) + " is below the basis dimension " +
                     std::to_string(design.dimension()));
  }
  const SubsampleScheme uniform = probs_uniform(n);
  std::optional<SubsampleFit> pilot;
  long long r0 = options.r0;
  for (int attempt = 0; attempt < 2 && !pilot; ++attempt, r0 *= 2) {
    const SubsampleDraw draw = draw_with_replacement(uniform, r0, rng);
    try {
      SubsampleFit candidate = fit_weighted(design, responses, draw, uniform, 0.0, options.newton);
      if (candidate.fit.converged) pilot = std::move(candidate);
    } catch (const NumericalError&) {
    }
  }
  if (!pilot) throw NumericalError("pilot fit failed to converge, also with doubled r0");
  const long long used_r0 = pilot->r;

  SubsampleScheme scheme;
  if (options.kind == SchemeKind::FLopt) {
    scheme = probs_flopt(design, responses, pilot->theta_tilde);
  } else {
    FitResult at_pilot;
    at_pilot.theta = pilot->theta_tilde;
    at_pilot.lambda = 0.0;
    const Sandwich plug_in = sandwich_variance(design, responses, at_pilot);
    scheme = probs_faopt(design, responses, pilot->theta_tilde, plug_in.H_hat);
  }
  scheme = mix_uniform(scheme, options.alpha);

  const SubsampleDraw draw = draw_with_replacement(scheme, options.r, rng);
  SubsampleFit out = fit_over_grid(design, responses, draw, scheme, options);
  out.pilot_theta = pilot->theta_tilde;
  out.r0 = used_r0;
  return out;
}

}  // namespace flpre
