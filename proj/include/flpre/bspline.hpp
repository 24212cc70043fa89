#pragma once

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <vector>

namespace flpre {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Clamped B-spline basis on [0, 1] with equispaced interior knots.
///
/// The full knot vector repeats 0 and 1 (degree + 1) times, so the basis has
/// interior_knots + degree + 1 functions.
struct BasisConfig {
  int interior_knots = 0;
  int degree = 3;
  int penalty_order = 2;
  std::vector<double> knots;

  int dimension() const { return interior_knots + degree + 1; }

  friend bool operator==(const BasisConfig&, const BasisConfig&) = default;
};

/// One observed covariate curve and, when known, its positive response.
struct FunctionalSample {
  std::vector<double> grid;
  std::vector<double> values;
  std::optional<double> response;
};

/// Many curves sharing one observation grid; row i of `values` is curve i.
struct CurveBatch {
  std::vector<double> grid;
  Matrix values;

  Eigen::Index size() const { return values.rows(); }
  FunctionalSample sample(Eigen::Index i) const;
};

/// Projected covariates B_i (one per row) plus the roughness penalty D_q.
struct DesignMatrix {
  Matrix rows;
  Matrix penalty;
  BasisConfig basis;

  Eigen::Index n() const { return rows.rows(); }
  Eigen::Index dimension() const { return rows.cols(); }
};

BasisConfig make_basis(int interior_knots, int degree = 3, int penalty_order = 2);

/// Values of all basis functions at t. Right-continuous at interior knots,
/// left limit at t = 1.
Vector eval_basis(const BasisConfig& basis, double t);

/// order-th derivatives of all basis functions at t, same knot convention as
/// eval_basis. order = 0 reduces to eval_basis.
Vector eval_basis_deriv(const BasisConfig& basis, double t, int order);

/// Index of the first basis function that can be nonzero at t, together with
/// the degree + 1 local values of the derivatives up to `order`
/// (row k holds the k-th derivative).
struct LocalBasis {
  int first = 0;
  Matrix derivs;
};
LocalBasis eval_local(const BasisConfig& basis, double t, int order = 0);

/// Gram matrix of q-th derivatives, integrated exactly with per-span
/// Gauss-Legendre quadrature.
Matrix penalty_matrix(const BasisConfig& basis);

/// R with R^T R = D, from the symmetric eigendecomposition (negative
/// eigenvalues clamped to zero).
Matrix penalty_root(const Matrix& penalty);

/// theta^T D theta as ||R theta||^2. A sum of squares, so the rounding error
/// scales with the value instead of with |theta|^T |D| |theta|.
double penalty_value(const Matrix& root, const Vector& theta);

/// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int points, std::vector<double>& nodes, std::vector<double>& weights);

/// True when the sample grid starts at 0 and ends at 1. Shorter grids are
/// extended by holding the first/last value constant.
bool grid_covers_domain(std::span<const double> grid);

/// B_i = integral of x(t) B(t) over [0, 1], composite trapezoid on the
/// observation grid.
Vector project_covariate(const FunctionalSample& sample, const BasisConfig& basis);

DesignMatrix build_design(std::span<const FunctionalSample> samples, const BasisConfig& basis);
DesignMatrix build_design(const CurveBatch& curves, const BasisConfig& basis);

/// Trapezoid weights on a grid, with constant extension to [0, 1] folded in.
/// Row g of the returned (G x dim) matrix is w_g B(t_g); B_i = W^T x_i.
Matrix projection_weights(std::span<const double> grid, const BasisConfig& basis);

}  // namespace flpre
