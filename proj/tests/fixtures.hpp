#pragma once

#include "flpre/bspline.hpp"
#include "flpre/datagen.hpp"

#include <random>

namespace fixture {

using flpre::DesignMatrix;
using flpre::Matrix;
using flpre::Vector;

// Random projected covariates on a real basis, entries of order one.
inline DesignMatrix random_design(int n, int interior, std::mt19937_64& rng, int degree = 3, int order = 2) {
  DesignMatrix d;
  d.basis = flpre::make_basis(interior, degree, order);
  const int dim = d.basis.dimension();
  std::normal_distribution<double> z(0.0, 1.0);
  d.rows = Matrix(n, dim);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < dim; ++j) d.rows(i, j) = 0.3 * z(rng);
  d.penalty = flpre::penalty_matrix(d.basis);
  return d;
}

// Bare design with explicit rows and a zero penalty, for closed-form checks.
inline DesignMatrix plain_design(const Matrix& rows) {
  DesignMatrix d;
  d.rows = rows;
  d.penalty = Matrix::Zero(rows.cols(), rows.cols());
  return d;
}

inline Vector log_normal_responses(const DesignMatrix& d, const Vector& theta, double sigma, std::mt19937_64& rng) {
  std::normal_distribution<double> z(0.0, sigma);
  Vector y(d.n());
  for (Eigen::Index i = 0; i < d.n(); ++i) y[i] = std::exp(d.rows.row(i).dot(theta) + z(rng));
  return y;
}

inline Vector random_vector(Eigen::Index size, double scale, std::mt19937_64& rng) {
  std::normal_distribution<double> z(0.0, scale);
  Vector v(size);
  for (auto& x : v) x = z(rng);
  return v;
}

// Projected C1-type curves with generator dimension equal to the fitting one.
struct SimDesign {
  DesignMatrix design;
  Vector responses;
  flpre::CurveBatch curves;
};

inline SimDesign simulated_design(long long n, int interior, flpre::CovariateLaw cov, flpre::ErrorLaw err,
                                  std::uint64_t seed) {
  flpre::SimConfig config;
  config.n = n;
  config.covariate_law = cov;
  config.error_law = err;
  config.gen_basis_dim = interior + 4;
  config.seed = seed;
  auto data = flpre::simulate(config);
  SimDesign out;
  out.design = flpre::build_design(data.curves, flpre::make_basis(interior, 3, 2));
  out.responses = data.responses;
  out.curves = std::move(data.curves);
  return out;
}

}  // namespace fixture
