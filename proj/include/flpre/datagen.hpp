#pragma once

#include "flpre/bspline.hpp"

#include <cstdint>
#include <functional>
#include <random>
#include <string>

namespace flpre {

using Rng = std::mt19937_64;

/// Independent stream `stream` derived from a root seed.
Rng make_stream(std::uint64_t root_seed, std::uint64_t stream);

enum class CovariateLaw { C1, C2, C3 };
enum class ErrorLaw { R1, R2, R3, R4 };

std::string to_string(CovariateLaw law);
std::string to_string(ErrorLaw law);
CovariateLaw covariate_law_from_string(const std::string& s);
ErrorLaw error_law_from_string(const std::string& s);

struct SimConfig {
  long long n = 1000;
  CovariateLaw covariate_law = CovariateLaw::C1;
  ErrorLaw error_law = ErrorLaw::R1;
  int grid_size = 100;
  int gen_basis_dim = 10;
  std::uint64_t seed = 1;

  void validate() const;
};

/// beta(t) = 7 t^3 + 2 sin(4 pi t + 0.2).
double true_beta(double t);

/// Cubic B-spline basis with `dim` functions used to synthesize curves.
BasisConfig generating_basis(int dim);

/// Covariance of the generating coefficients, Sigma_ij = 0.5^|i-j|.
Matrix coefficient_covariance(int dim);

/// Curves x_i(t) = a_i^T B(t) on a uniform grid of config.grid_size points.
CurveBatch gen_covariates(const SimConfig& config, Rng& rng);

/// Normalizing constant of the R3 density, c = e^{-2} / (2 K_0(2)).
double r3_normalizing_constant();
/// Unnormalized R3 density exp(-x - 1/x - log x + 2) for x > 0.
double r3_unnormalized_density(double x);
/// Upper end b of R4's U(0.5, b), the root of (b^2 - 1/4)/2 = log(2b).
double r4_upper_bound();

double draw_error(ErrorLaw law, Rng& rng);
Vector gen_errors(ErrorLaw law, long long n, Rng& rng);

/// y_i = exp(integral x_i beta dt) * eps_i with the integral by trapezoid on
/// the curves' grid.
Vector gen_response(const CurveBatch& curves, const std::function<double(double)>& beta, const Vector& errors);

struct SimulatedData {
  CurveBatch curves;
  Vector errors;
  Vector responses;
};

/// Covariates, errors and responses in one call, driven by config.seed.
SimulatedData simulate(const SimConfig& config);

}  // namespace flpre
