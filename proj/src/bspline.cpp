#include "flpre/bspline.hpp"

#include "flpre/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace flpre {

namespace {

constexpr double kDomainSlack = 1e-12;

void check_point(double t) {
  if (!(t >= 0.0 && t <= 1.0)) {
    throw UsageError("evaluation point " + std::to_string(t) + " outside [0, 1]");
  }
}

// Knot span index s with knots[s] <= t < knots[s + 1]; t = 1 maps onto the
// last nondegenerate span.
int find_span(const BasisConfig& basis, double t) {
  const auto& u = basis.knots;
  const int last = basis.dimension() - 1;
  if (t >= u[last + 1]) return last;
  const auto it = std::upper_bound(u.begin(), u.end(), t);
  const int s = static_cast<int>(it - u.begin()) - 1;
  return std::clamp(s, basis.degree, last);
}

void validate_sample(const FunctionalSample& sample) {
  const auto& grid = sample.grid;
  if (grid.size() < 2) throw DataError("curve grid needs at least 2 points");
  if (grid.size() != sample.values.size()) {
    throw DataError("curve grid has " + std::to_string(grid.size()) + " points but " +
                    std::to_string(sample.values.size()) + " values");
  }
  if (grid.front() < -kDomainSlack || grid.back() > 1.0 + kDomainSlack) {
    throw DataError("curve grid leaves [0, 1]");
  }
  for (std::size_t g = 1; g < grid.size(); ++g) {
    if (!(grid[g] > grid[g - 1])) throw DataError("curve grid is not strictly increasing");
  }
  for (double v : sample.values) {
    if (!std::isfinite(v)) throw DataError("curve has a non-finite value");
  }
  if (sample.response && !(*sample.response > 0.0)) {
    throw DataError("response must be strictly positive");
  }
}

}  // namespace

FunctionalSample CurveBatch::sample(Eigen::Index i) const {
  FunctionalSample s;
  s.grid = grid;
  s.values.resize(grid.size());
  for (Eigen::Index g = 0; g < values.cols(); ++g) s.values[g] = values(i, g);
  return s;
}

BasisConfig make_basis(int interior_knots, int degree, int penalty_order) {
  if (interior_knots < 0) throw UsageError("number of interior knots must be >= 0");
  if (degree < 0) throw UsageError("degree must be >= 0");
  if (penalty_order < 1 || penalty_order > degree) {
    throw UsageError("penalty order must lie in [1, degree]; got q=" + std::to_string(penalty_order) +
                     ", p=" + std::to_string(degree));
  }
  BasisConfig basis;
  basis.interior_knots = interior_knots;
  basis.degree = degree;
  basis.penalty_order = penalty_order;
  basis.knots.reserve(interior_knots + 2 * (degree + 1));
  for (int i = 0; i <= degree; ++i) basis.knots.push_back(0.0);
  for (int j = 1; j <= interior_knots; ++j) {
    basis.knots.push_back(static_cast<double>(j) / (interior_knots + 1));
  }
  for (int i = 0; i <= degree; ++i) basis.knots.push_back(1.0);
  return basis;
}

LocalBasis eval_local(const BasisConfig& basis, double t, int order) {
  check_point(t);
  const int p = basis.degree;
  if (order < 0 || order > p) {
    throw UsageError("derivative order " + std::to_string(order) + " exceeds degree " + std::to_string(p));
  }
  const auto& u = basis.knots;
  const int s = find_span(basis, t);

  // Cox-de Boor triangle with derivative recursion (de Boor / Piegl-Tiller).
  Matrix ndu(p + 1, p + 1);
  std::vector<double> left(p + 1), right(p + 1);
  ndu(0, 0) = 1.0;
  for (int j = 1; j <= p; ++j) {
    left[j] = t - u[s + 1 - j];
    right[j] = u[s + j] - t;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      ndu(j, r) = right[r + 1] + left[j - r];
      const double temp = ndu(r, j - 1) / ndu(j, r);
      ndu(r, j) = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    ndu(j, j) = saved;
  }

  LocalBasis out;
  out.first = s - p;
  out.derivs = Matrix::Zero(order + 1, p + 1);
  for (int j = 0; j <= p; ++j) out.derivs(0, j) = ndu(j, p);

  Matrix a(2, p + 1);
  for (int r = 0; r <= p; ++r) {
    int s1 = 0, s2 = 1;
    a.setZero();
    a(0, 0) = 1.0;
    for (int k = 1; k <= order; ++k) {
      double d = 0.0;
      const int rk = r - k;
      const int pk = p - k;
      if (r >= k) {
        a(s2, 0) = a(s1, 0) / ndu(pk + 1, rk);
        d = a(s2, 0) * ndu(rk, pk);
      }
      const int j1 = rk >= -1 ? 1 : -rk;
      const int j2 = (r - 1 <= pk) ? k - 1 : p - r;
      for (int j = j1; j <= j2; ++j) {
        a(s2, j) = (a(s1, j) - a(s1, j - 1)) / ndu(pk + 1, rk + j);
        d += a(s2, j) * ndu(rk + j, pk);
      }
      if (r <= pk) {
        a(s2, k) = -a(s1, k - 1) / ndu(pk + 1, r);
        d += a(s2, k) * ndu(r, pk);
      }
      out.derivs(k, r) = d;
      std::swap(s1, s2);
    }
  }
  double factor = p;
  for (int k = 1; k <= order; ++k) {
    out.derivs.row(k) *= factor;
    factor *= (p - k);
  }
  return out;
}

Vector eval_basis(const BasisConfig& basis, double t) { return eval_basis_deriv(basis, t, 0); }

Vector eval_basis_deriv(const BasisConfig& basis, double t, int order) {
  const LocalBasis local = eval_local(basis, t, order);
  Vector out = Vector::Zero(basis.dimension());
  out.segment(local.first, basis.degree + 1) = local.derivs.row(order).transpose();
  return out;
}

void gauss_legendre(int points, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.assign(points, 0.0);
  weights.assign(points, 0.0);
  for (int i = 0; i < (points + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (points + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = 0.0;
      for (int k = 1; k <= points; ++k) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p2) / k;
      }
      dp = points * (x * p0 - p1) / (x * x - 1.0);
      const double dx = p0 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // recompute the derivative at the converged node
    double p0 = 1.0, p1 = 0.0;
    for (int k = 1; k <= points; ++k) {
      const double p2 = p1;
      p1 = p0;
      p0 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p2) / k;
    }
    dp = points * (x * p0 - p1) / (x * x - 1.0);
    nodes[i] = -x;
    nodes[points - 1 - i] = x;
    weights[i] = weights[points - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  if (points % 2 == 1) nodes[points / 2] = 0.0;
}

Matrix penalty_matrix(const BasisConfig& basis) {
  const int p = basis.degree;
  const int q = basis.penalty_order;
  if (q < 1 || q > p) throw UsageError("penalty order must lie in [1, degree]");
  const int dim = basis.dimension();
  // q-th derivatives are degree p - q, so the integrand has degree 2(p - q).
  const int points = p - q + 1;
  std::vector<double> nodes, weights;
  gauss_legendre(points, nodes, weights);

  Matrix d = Matrix::Zero(dim, dim);
  for (int s = p; s < dim; ++s) {
    const double a = basis.knots[s];
    const double b = basis.knots[s + 1];
    if (!(b > a)) continue;
    const double half = 0.5 * (b - a);
    for (int g = 0; g < points; ++g) {
      const double t = a + half * (nodes[g] + 1.0);
      const LocalBasis local = eval_local(basis, t, q);
      const Vector v = local.derivs.row(q).transpose();
      d.block(local.first, local.first, p + 1, p + 1).noalias() += (half * weights[g]) * v * v.transpose();
    }
  }
  return 0.5 * (d + d.transpose());
}

bool grid_covers_domain(std::span<const double> grid) {
  return !grid.empty() && std::abs(grid.front()) <= kDomainSlack && std::abs(grid.back() - 1.0) <= kDomainSlack;
}

Matrix projection_weights(std::span<const double> grid, const BasisConfig& basis) {
  const int p = basis.degree;
  const auto n_grid = static_cast<Eigen::Index>(grid.size());
  Matrix w = Matrix::Zero(n_grid, basis.dimension());
  auto add = [&](Eigen::Index row, double t, double weight) {
    const double tc = std::clamp(t, 0.0, 1.0);
    const LocalBasis local = eval_local(basis, tc, 0);
    w.row(row).segment(local.first, p + 1) += weight * local.derivs.row(0);
  };
  for (Eigen::Index g = 0; g + 1 < n_grid; ++g) {
    const double h = grid[g + 1] - grid[g];
    add(g, grid[g], 0.5 * h);
    add(g + 1, grid[g + 1], 0.5 * h);
  }
  // Constant extension of the first and last observed values to the domain ends.
  if (grid.front() > kDomainSlack) {
    const double h = grid.front();
    add(0, 0.0, 0.5 * h);
    add(0, grid.front(), 0.5 * h);
  }
  if (grid.back() < 1.0 - kDomainSlack) {
    const double h = 1.0 - grid.back();
    add(n_grid - 1, grid.back(), 0.5 * h);
    add(n_grid - 1, 1.0, 0.5 * h);
  }
  return w;
}

Vector project_covariate(const FunctionalSample& sample, const BasisConfig& basis) {
  validate_sample(sample);
  const Matrix w = projection_weights(sample.grid, basis);
  const Eigen::Map<const Vector> x(sample.values.data(), static_cast<Eigen::Index>(sample.values.size()));
  return w.transpose() * x;
}

DesignMatrix build_design(std::span<const FunctionalSample> samples, const BasisConfig& basis) {
  if (samples.empty()) throw DataError("design needs at least one curve");
  DesignMatrix design;
  design.basis = basis;
  design.penalty = penalty_matrix(basis);
  design.rows.resize(static_cast<Eigen::Index>(samples.size()), basis.dimension());

  // Curves observed on the same grid share one weight matrix.
  const std::vector<double>* cached_grid = nullptr;
  Matrix weights;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& sample = samples[i];
    try {
      validate_sample(sample);
    } catch (const DataError& e) {
      throw DataError("curve " + std::to_string(i) + ": " + e.what());
    }
    if (cached_grid == nullptr || *cached_grid != sample.grid) {
      weights = projection_weights(sample.grid, basis);
      cached_grid = &sample.grid;
    }
    const Eigen::Map<const Vector> x(sample.values.data(), static_cast<Eigen::Index>(sample.values.size()));
    design.rows.row(static_cast<Eigen::Index>(i)) = (weights.transpose() * x).transpose();
  }
  return design;
}

DesignMatrix build_design(const CurveBatch& curves, const BasisConfig& basis) {
  if (curves.size() == 0) throw DataError("design needs at least one curve");
  if (static_cast<Eigen::Index>(curves.grid.size()) != curves.values.cols()) {
    throw DataError("curve batch grid and value columns disagree");
  }
  FunctionalSample probe;
  probe.grid = curves.grid;
  probe.values.assign(curves.grid.size(), 0.0);
  validate_sample(probe);
  if (!curves.values.allFinite()) throw DataError("curve batch has non-finite values");

  DesignMatrix design;
  design.basis = basis;
  design.penalty = penalty_matrix(basis);
  design.rows.noalias() = curves.values * projection_weights(curves.grid, basis);
  return design;
}

Matrix penalty_root(const Matrix& penalty) {
  if (penalty.rows() != penalty.cols()) throw UsageError("penalty matrix is not square");
  if (penalty.size() == 0) return Matrix(0, 0);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(penalty);
  if (eig.info() != Eigen::Success) throw NumericalError("penalty eigendecomposition failed");
  const Vector scale = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return scale.asDiagonal() * eig.eigenvectors().transpose();
}

double penalty_value(const Matrix& root, const Vector& theta) {
  return (root * theta).squaredNorm();
}

}  // namespace flpre
