#include "flpre/bspline.hpp"
#include "flpre/datagen.hpp"
#include "flpre/error.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace flpre;

TEST(MakeBasis, DimensionAndKnots) {
  EXPECT_EQ(make_basis(10, 3, 2).dimension(), 14);

  const auto linear = make_basis(0, 1, 1);
  EXPECT_EQ(linear.dimension(), 2);
  EXPECT_EQ(linear.knots, (std::vector<double>{0, 0, 1, 1}));

  const auto one = make_basis(1, 1, 1);
  EXPECT_EQ(one.dimension(), 3);
  EXPECT_EQ(one.knots, (std::vector<double>{0, 0, 0.5, 1, 1}));
}

TEST(MakeBasis, RejectsBadOrders) {
  EXPECT_THROW(make_basis(3, 3, 4), UsageError);
  EXPECT_THROW(make_basis(3, 3, 0), UsageError);
  EXPECT_THROW(make_basis(-1, 3, 2), UsageError);
}

TEST(EvalBasis, HatFunctions) {
  const Vector v = eval_basis(make_basis(1, 1, 1), 0.25);
  EXPECT_NEAR(v[0], 0.5, 1e-15);
  EXPECT_NEAR(v[1], 0.5, 1e-15);
  EXPECT_NEAR(v[2], 0.0, 1e-15);
}

TEST(EvalBasis, CubicAtInteriorKnot) {
  // t = 0.5 is interior knot 5 of 9, far from the clamped ends.
  const auto basis = make_basis(9, 3, 2);
  const Vector v = eval_basis(basis, 0.5);
  std::vector<double> nonzero;
  for (Eigen::Index j = 0; j < v.size(); ++j) {
    if (std::abs(v[j]) > 1e-14) nonzero.push_back(v[j]);
  }
  ASSERT_EQ(nonzero.size(), 3u);
  EXPECT_NEAR(nonzero[0], 1.0 / 6.0, 1e-14);
  EXPECT_NEAR(nonzero[1], 2.0 / 3.0, 1e-14);
  EXPECT_NEAR(nonzero[2], 1.0 / 6.0, 1e-14);
}

TEST(EvalBasis, ClampedBoundary) {
  for (int p = 1; p <= 4; ++p) {
    for (int k : {0, 1, 7}) {
      const auto basis = make_basis(k, p, 1);
      const Vector v0 = eval_basis(basis, 0.0);
      const Vector v1 = eval_basis(basis, 1.0);
      EXPECT_DOUBLE_EQ(v0[0], 1.0);
      EXPECT_DOUBLE_EQ(v1[v1.size() - 1], 1.0);
      EXPECT_NEAR(v0.sum(), 1.0, 1e-15);
      EXPECT_NEAR(v1.sum(), 1.0, 1e-15);
    }
  }
}

TEST(EvalBasis, RejectsOutsideDomain) {
  const auto basis = make_basis(3);
  EXPECT_THROW(eval_basis(basis, -0.01), UsageError);
  EXPECT_THROW(eval_basis(basis, 1.01), UsageError);
  EXPECT_THROW(eval_basis_deriv(basis, 0.5, 4), UsageError);
}

TEST(EvalBasis, MatchesRecursiveOracle) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int p = 1; p <= 4; ++p) {
    for (int k : {0, 2, 10}) {
      const auto basis = make_basis(k, p, 1);
      const auto u = oracle::clamped_knots(k, p);
      for (int trial = 0; trial < 25; ++trial) {
        const double t = trial == 0 ? 1.0 : unif(rng);
        for (int m = 0; m <= p; ++m) {
          const Vector v = eval_basis_deriv(basis, t, m);
          for (int j = 0; j < basis.dimension(); ++j) {
            const double expect = oracle::bspline_deriv(u, j, p, m, t);
            EXPECT_NEAR(v[j], expect, 1e-9 * std::max(1.0, std::abs(expect))) << "p=" << p << " m=" << m;
          }
        }
      }
    }
  }
}

TEST(EvalBasis, PartitionOfUnityAndLocalSupport) {
  const auto basis = make_basis(10, 3, 2);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int k = 0; k < 1000; ++k) {
    const double t = unif(rng);
    const Vector v = eval_basis(basis, t);
    EXPECT_LT(std::abs(v.sum() - 1.0), 1e-12);
    EXPECT_GE(v.minCoeff(), 0.0);
    EXPECT_LE((v.array() != 0.0).count(), basis.degree + 1);
  }
}

TEST(EvalBasisDeriv, LinearDerivative) {
  const Vector d = eval_basis_deriv(make_basis(0, 1, 1), 0.5, 1);
  EXPECT_DOUBLE_EQ(d[0], -1.0);
  EXPECT_DOUBLE_EQ(d[1], 1.0);
}

TEST(EvalBasisDeriv, OrderZeroIsBasisAndDerivativesSumToZero) {
  const auto basis = make_basis(6, 3, 2);
  for (double t : {0.0, 0.13, 0.5, 0.77, 1.0}) {
    EXPECT_EQ(eval_basis_deriv(basis, t, 0), eval_basis(basis, t));
    for (int m = 1; m <= 3; ++m) EXPECT_NEAR(eval_basis_deriv(basis, t, m).sum(), 0.0, 1e-10);
  }
}

TEST(EvalBasisDeriv, SecondDerivativeMatchesFiniteDifferences) {
  const auto basis = make_basis(10, 3, 2);
  const double t = 0.37, h = 1e-5;
  const Vector d1 = eval_basis_deriv(basis, t, 1);
  const Vector d2 = eval_basis_deriv(basis, t, 2);
  const Vector fd2 = (eval_basis_deriv(basis, t + h, 1) - eval_basis_deriv(basis, t - h, 1)) / (2 * h);
  const Vector fd1 = (eval_basis(basis, t + h) - eval_basis(basis, t - h)) / (2 * h);
  EXPECT_LT((d2 - fd2).norm() / d2.norm(), 1e-6);
  EXPECT_LT((d1 - fd1).norm() / d1.norm(), 1e-6);
}

TEST(EvalBasisDeriv, FirstDerivativeFiniteDifferenceAwayFromKnots) {
  const auto basis = make_basis(7, 3, 2);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unif(0.01, 0.99);
  int checked = 0;
  while (checked < 200) {
    const double t = unif(rng);
    const double nearest = std::round(t * 8) / 8;
    if (std::abs(t - nearest) < 1e-3) continue;
    const double h = 1e-6;
    const Vector fd = (eval_basis(basis, t + h) - eval_basis(basis, t - h)) / (2 * h);
    const Vector d = eval_basis_deriv(basis, t, 1);
    EXPECT_LT((d - fd).norm() / d.norm(), 1e-6);
    ++checked;
  }
}

TEST(PenaltyMatrix, LinearSingleInterval) {
  const Matrix d = penalty_matrix(make_basis(0, 1, 1));
  EXPECT_NEAR(d(0, 0), 1.0, 1e-14);
  EXPECT_NEAR(d(0, 1), -1.0, 1e-14);
  EXPECT_NEAR(d(1, 0), -1.0, 1e-14);
  EXPECT_NEAR(d(1, 1), 1.0, 1e-14);
}

TEST(PenaltyMatrix, AnnihilatesConstantsSymmetricPsd) {
  for (int p = 1; p <= 4; ++p) {
    for (int q = 1; q <= p; ++q) {
      for (int k : {0, 3, 12}) {
        const Matrix d = penalty_matrix(make_basis(k, p, q));
        EXPECT_LT((d * Vector::Ones(d.rows())).cwiseAbs().maxCoeff(), 1e-10 * std::max(1.0, d.norm()));
        EXPECT_EQ(d, d.transpose());
        Eigen::SelfAdjointEigenSolver<Matrix> eig(d);
        EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-10 * std::max(1.0, d.norm()));
      }
    }
  }
}

TEST(PenaltyMatrix, MatchesExactGaussOracle) {
  // Exactness check: a high-order Gauss rule on the recursive oracle.
  for (int p = 2; p <= 4; ++p) {
    for (int q = 1; q <= p; ++q) {
      const int k = 5;
      const auto basis = make_basis(k, p, q);
      const auto u = oracle::clamped_knots(k, p);
      std::vector<double> nodes, weights;
      gauss_legendre(8, nodes, weights);
      Matrix ref = Matrix::Zero(basis.dimension(), basis.dimension());
      Vector v(basis.dimension());
      for (int s = 0; s <= k; ++s) {
        const double a = static_cast<double>(s) / (k + 1), b = static_cast<double>(s + 1) / (k + 1);
        for (std::size_t g = 0; g < nodes.size(); ++g) {
          const double t = a + 0.5 * (b - a) * (nodes[g] + 1.0);
          for (int j = 0; j < basis.dimension(); ++j) v[j] = oracle::bspline_deriv(u, j, p, q, t);
          ref += 0.5 * (b - a) * weights[g] * v * v.transpose();
        }
      }
      const Matrix d = penalty_matrix(basis);
      EXPECT_LT((d - ref).norm() / ref.norm(), 1e-12) << "p=" << p << " q=" << q;
    }
  }
}

TEST(PenaltyMatrix, MatchesDenseQuadratureOracle) {
  const Matrix d = penalty_matrix(make_basis(5, 3, 2));
  const Matrix simpson = oracle::dense_penalty_simpson(5, 3, 2, 10000);
  EXPECT_LT((d - simpson).norm() / simpson.norm(), 1e-8);
  // Plain trapezoid on 10 000 points is only O(h^2) accurate across the knot kinks.
  const Matrix trapezoid = oracle::dense_penalty(5, 3, 2, 10000);
  EXPECT_LT((d - trapezoid).norm() / trapezoid.norm(), 1e-6);
}

namespace {

FunctionalSample curve(const std::function<double(double)>& f, int points = 101) {
  FunctionalSample s;
  for (int g = 0; g < points; ++g) {
    const double t = static_cast<double>(g) / (points - 1);
    s.grid.push_back(t);
    s.values.push_back(f(t));
  }
  return s;
}

}  // namespace

TEST(ProjectCovariate, ConstantAndZeroCurves) {
  const auto basis = make_basis(10, 3, 2);
  EXPECT_NEAR(project_covariate(curve([](double) { return 1.0; }), basis).sum(), 1.0, 1e-12);
  EXPECT_EQ(project_covariate(curve([](double) { return 0.0; }), basis), Vector::Zero(14));
}

TEST(ProjectCovariate, IdentityOnLinearBasis) {
  // x(t) = t against {1 - t, t}; trapezoid is exact up to O(h^2).
  const Vector b = project_covariate(curve([](double t) { return t; }, 2001), make_basis(0, 1, 1));
  EXPECT_NEAR(b[0], 1.0 / 6.0, 1e-7);
  EXPECT_NEAR(b[1], 1.0 / 3.0, 1e-7);
}

TEST(ProjectCovariate, Linearity) {
  const auto basis = make_basis(8, 3, 2);
  const auto x = curve([](double t) { return std::sin(5 * t); });
  const auto z = curve([](double t) { return t * t - 0.3; });
  FunctionalSample combo = x;
  for (std::size_t g = 0; g < combo.values.size(); ++g) combo.values[g] = 2.5 * x.values[g] - 1.5 * z.values[g];
  const Vector lhs = project_covariate(combo, basis);
  const Vector rhs = 2.5 * project_covariate(x, basis) - 1.5 * project_covariate(z, basis);
  EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ProjectCovariate, RejectsBadSamples) {
  const auto basis = make_basis(3);
  FunctionalSample one;
  one.grid = {0.5};
  one.values = {1.0};
  EXPECT_THROW(project_covariate(one, basis), DataError);
  auto nan = curve([](double) { return 1.0; });
  nan.values[4] = std::nan("");
  EXPECT_THROW(project_covariate(nan, basis), DataError);
  auto unsorted = curve([](double) { return 1.0; });
  std::swap(unsorted.grid[3], unsorted.grid[4]);
  EXPECT_THROW(project_covariate(unsorted, basis), DataError);
}

TEST(ProjectCovariate, ShortGridExtendsConstantly) {
  // x = 1 observed only on [0.2, 0.8] is treated as 1 on all of [0, 1].
  FunctionalSample s;
  for (int g = 0; g <= 60; ++g) {
    s.grid.push_back(0.2 + 0.01 * g);
    s.values.push_back(1.0);
  }
  EXPECT_FALSE(grid_covers_domain(s.grid));
  EXPECT_NEAR(project_covariate(s, make_basis(0, 1, 1)).sum(), 1.0, 1e-12);
}

TEST(BuildDesign, RowsMatchProjection) {
  const auto basis = make_basis(10, 3, 2);
  const std::vector<FunctionalSample> one{curve([](double) { return 1.0; })};
  const DesignMatrix d1 = build_design(one, basis);
  ASSERT_EQ(d1.n(), 1);
  EXPECT_NEAR(d1.rows.row(0).sum(), 1.0, 1e-12);
  EXPECT_EQ(d1.penalty, penalty_matrix(basis));

  const auto x = curve([](double t) { return std::cos(3 * t); });
  const std::vector<FunctionalSample> twice{x, x};
  const DesignMatrix d2 = build_design(twice, basis);
  EXPECT_EQ(d2.rows.row(0), d2.rows.row(1));
}

TEST(BuildDesign, ReportsOffendingIndex) {
  auto bad = curve([](double) { return 1.0; });
  bad.values[2] = std::numeric_limits<double>::infinity();
  const std::vector<FunctionalSample> samples{curve([](double) { return 1.0; }), bad};
  try {
    build_design(samples, make_basis(4));
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("curve 1"), std::string::npos);
  }
}

TEST(BuildDesign, BatchAgreesWithSamplesAndRankBound) {
  SimConfig cfg;
  cfg.n = 100;
  Rng rng = make_stream(5, 0);
  const CurveBatch curves = gen_covariates(cfg, rng);
  const auto basis = make_basis(10, 3, 2);
  const DesignMatrix batch = build_design(curves, basis);
  std::vector<FunctionalSample> samples;
  for (Eigen::Index i = 0; i < curves.size(); ++i) samples.push_back(curves.sample(i));
  const DesignMatrix single = build_design(samples, basis);
  EXPECT_TRUE(batch.rows.allFinite());
  EXPECT_LT((batch.rows - single.rows).cwiseAbs().maxCoeff(), 1e-13);

  Eigen::JacobiSVD<Matrix> svd(batch.rows);
  const auto& s = svd.singularValues();
  const long rank = (s.array() > 1e-10 * s[0]).count();
  EXPECT_LE(rank, std::min<long>(100, 14));
  // Curves come from a 10-function generating basis.
  EXPECT_EQ(rank, 10);
}
