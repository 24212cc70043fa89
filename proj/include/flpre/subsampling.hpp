#pragma once

#include "flpre/datagen.hpp"
#include "flpre/lpre.hpp"
#include "flpre/tuning.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace flpre {

enum class SchemeKind { Uniform, FAopt, FLopt };

std::string to_string(SchemeKind kind);
SchemeKind scheme_kind_from_string(const std::string& s);

/// Sampling distribution over the n full-data points.
struct SubsampleScheme {
  Vector probabilities;
  SchemeKind kind = SchemeKind::Uniform;
  double alpha = 0.0;  // weight of the uniform component after mixing
};

/// Multiplicities R_i of a with-replacement draw of size r.
struct SubsampleDraw {
  std::vector<long long> multiplicities;
  long long r = 0;
  std::uint64_t seed = 0;
};

struct SubsampleFit {
  Vector theta_tilde;
  double lambda = 0.0;
  FitResult fit;
  // Filled by subsample_variance(); empty otherwise.
  Matrix V;
  Matrix V_pi;
  std::optional<Vector> pilot_theta;
  long long r0 = 0;
  long long r = 0;
  SubsampleScheme scheme;
  std::vector<LambdaPathPoint> lambda_path;
};

SubsampleScheme probs_uniform(Eigen::Index n);

/// pi_i proportional to |omega_i - 1/omega_i| * ||H_ref^{-1} B_i||.
SubsampleScheme probs_faopt(const DesignMatrix& design, const Vector& responses, const Vector& theta_ref,
                            const Matrix& H_ref);

/// pi_i proportional to |omega_i - 1/omega_i| * ||B_i||.
SubsampleScheme probs_flopt(const DesignMatrix& design, const Vector& responses, const Vector& theta_ref);

/// (1 - alpha) pi + alpha / n, alpha in [0, 1).
SubsampleScheme mix_uniform(const SubsampleScheme& scheme, double alpha);

/// Walker/Vose alias table: O(n) build, O(1) per draw.
class AliasTable {
 public:
  explicit AliasTable(const Vector& probabilities);
  Eigen::Index sample(Rng& rng) const;
  Eigen::Index size() const { return static_cast<Eigen::Index>(accept_.size()); }

 private:
  std::vector<double> accept_;
  std::vector<Eigen::Index> alias_;
};

SubsampleDraw draw_with_replacement(const SubsampleScheme& scheme, long long r, Rng& rng);

/// The distinct drawn points with inverse-probability weights R_i / (r pi_i).
struct WeightedSubsample {
  std::vector<Eigen::Index> index;
  Matrix rows;
  Vector responses;
  Vector weights;
};
WeightedSubsample gather_subsample(const DesignMatrix& design, const Vector& responses, const SubsampleDraw& draw,
                                   const SubsampleScheme& scheme);

/// (1/r) sum_i (R_i / pi_i) g_i for arbitrary per-point values g.
double weighted_sum(const SubsampleDraw& draw, const SubsampleScheme& scheme, const Vector& values);

/// Minimizes (1/r) sum (R_i/pi_i)(omega_i + 1/omega_i - 2) + lambda/2 theta^T D theta.
SubsampleFit fit_weighted(const DesignMatrix& design, const Vector& responses, const SubsampleDraw& draw,
                          const SubsampleScheme& scheme, double lambda, const NewtonOptions& options = {});

struct SubsampleVariance {
  Matrix V;
  Matrix V_pi;
};

/// V_pi = n^{-2} sum pi_i^{-1} (omega_i - 1/omega_i)^2 B_i B_i^T and
/// V = K^{-1} H^{-1} V_pi H^{-1}, both at theta.
SubsampleVariance subsample_variance(const DesignMatrix& design, const Vector& responses, const Vector& theta,
                                     const SubsampleScheme& scheme, double lambda);

struct TwoStepOptions {
  long long r0 = 1000;
  long long r = 5000;
  SchemeKind kind = SchemeKind::FLopt;
  double alpha = 0.0;
  std::vector<double> lambda_grid = default_lambda_grid();
  NewtonOptions newton;
};

/// Uniform pilot (lambda = 0) of size r0, optimal probabilities at the pilot,
/// second draw of size r with lambda chosen by subsample BIC. With
/// kind = Uniform the pilot is skipped and a single uniform draw is fitted.
SubsampleFit two_step_fit(const DesignMatrix& design, const Vector& responses, const TwoStepOptions& options,
                          Rng& rng);

}  // namespace flpre
