#include "flpre/datagen.hpp"
#include "flpre/error.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace flpre;

namespace {

// Coefficients a_i recovered from the curves by least squares on the generating basis.
Matrix recover_coefficients(const CurveBatch& curves, int dim) {
  const auto basis = generating_basis(dim);
  Matrix b(static_cast<Eigen::Index>(curves.grid.size()), dim);
  for (std::size_t g = 0; g < curves.grid.size(); ++g) b.row(static_cast<Eigen::Index>(g)) = eval_basis(basis, curves.grid[g]);
  return b.colPivHouseholderQr().solve(curves.values.transpose()).transpose();
}

// Sample covariance entry (j, k) of zero-mean columns with its Monte Carlo SE.
std::pair<double, double> second_moment(const Matrix& a, int j, int k) {
  const Vector prod = a.col(j).cwiseProduct(a.col(k));
  const double n = static_cast<double>(a.rows());
  const double mean = prod.mean();
  const double var = (prod.array() - mean).square().sum() / (n - 1);
  return {mean, std::sqrt(var / n)};
}

std::vector<double> draws(ErrorLaw law, long long n, std::uint64_t seed) {
  Rng rng = make_stream(seed, 1);
  const Vector e = gen_errors(law, n, rng);
  return {e.data(), e.data() + e.size()};
}

}  // namespace

TEST(TrueBeta, Values) {
  EXPECT_NEAR(true_beta(0.0), 0.397339, 1e-6);
  EXPECT_NEAR(true_beta(1.0), 7.397339, 1e-6);
  EXPECT_NEAR(true_beta(0.5), 1.272339, 1e-6);
  EXPECT_DOUBLE_EQ(true_beta(0.0), 2.0 * std::sin(0.2));
}

TEST(CoefficientCovariance, PowerDecay) {
  const Matrix s = coefficient_covariance(5);
  EXPECT_EQ(s(0, 0), 1.0);
  EXPECT_EQ(s(0, 1), 0.5);
  EXPECT_EQ(s(1, 4), 0.125);
  EXPECT_EQ(s, s.transpose());
}

TEST(GenCovariates, GridAndDeterminism) {
  SimConfig c;
  c.n = 20;
  c.grid_size = 100;
  Rng a(5), b(5);
  const CurveBatch x = gen_covariates(c, a);
  EXPECT_EQ(x.grid.size(), 100u);
  EXPECT_EQ(x.grid.front(), 0.0);
  EXPECT_EQ(x.grid.back(), 1.0);
  EXPECT_EQ(x.values.rows(), 20);
  EXPECT_EQ(x.values, gen_covariates(c, b).values);
}

TEST(GenCovariates, C1MomentsMatchSigma) {
  SimConfig c;
  c.n = 20000;
  Rng rng(11);
  const Matrix a = recover_coefficients(gen_covariates(c, rng), c.gen_basis_dim);
  const auto [m01, se01] = second_moment(a, 0, 1);
  EXPECT_LT(std::abs(m01 - 0.5), 3.0 * se01);
  const auto [m44, se44] = second_moment(a, 4, 4);
  EXPECT_LT(std::abs(m44 - 1.0), 3.0 * se44);
}

TEST(GenCovariates, C2MomentsMatchScaledT) {
  SimConfig c;
  c.n = 40000;
  c.covariate_law = CovariateLaw::C2;
  Rng rng(12);
  const Matrix a = recover_coefficients(gen_covariates(c, rng), c.gen_basis_dim);
  // t_5 covariance is nu / (nu - 2) times the scale matrix Sigma / 10.
  const double factor = 0.1 * 5.0 / 3.0;
  const auto [m01, se01] = second_moment(a, 0, 1);
  EXPECT_LT(std::abs(m01 - 0.5 * factor), 3.0 * se01);
  const auto [m33, se33] = second_moment(a, 3, 3);
  EXPECT_LT(std::abs(m33 - factor), 3.0 * se33);
}

TEST(GenCovariates, C3MixtureMoments) {
  SimConfig c;
  c.n = 20000;
  c.covariate_law = CovariateLaw::C3;
  Rng rng(13);
  const Matrix a = recover_coefficients(gen_covariates(c, rng), c.gen_basis_dim);
  // Mixture of N(+1, Sigma) and N(-1, Sigma): mean 0, second moment Sigma + 11^T.
  const double n = static_cast<double>(a.rows());
  EXPECT_LT(std::abs(a.col(2).mean()), 3.0 * std::sqrt(2.0 / n));
  const auto [m01, se01] = second_moment(a, 0, 1);
  EXPECT_LT(std::abs(m01 - 1.5), 3.0 * se01);
  // Sign-split: rows whose coefficient mean is positive centre near +1.
  const Vector row_mean = a.rowwise().mean();
  double pos = 0.0, neg = 0.0;
  int np = 0, nn = 0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    if (row_mean[i] > 0) {
      pos += a(i, 5);
      ++np;
    } else {
      neg += a(i, 5);
      ++nn;
    }
  }
  EXPECT_NEAR(pos / np, 1.0, 0.1);
  EXPECT_NEAR(neg / nn, -1.0, 0.1);
  EXPECT_NEAR(static_cast<double>(np) / n, 0.5, 3.0 * std::sqrt(0.25 / n));
}

TEST(ErrorLaws, R3NormalizingConstant) {
  EXPECT_NEAR(r3_normalizing_constant(), 0.594129, 1e-6);
  // Integrate over z = log x so the density becomes exp(2 - 2 cosh z).
  const double mass = oracle::adaptive_simpson([](double z) { return std::exp(2.0 - 2.0 * std::cosh(z)); }, -12.0,
                                               12.0, 1e-13);
  EXPECT_NEAR(r3_normalizing_constant() * mass, 1.0, 1e-8);
  // Same mass through the library's density in the original variable.
  const double direct = oracle::adaptive_simpson(
      [](double z) { return std::exp(z) * r3_unnormalized_density(std::exp(z)); }, -12.0, 12.0, 1e-13);
  EXPECT_NEAR(direct, mass, 1e-10);
}

TEST(ErrorLaws, R4UpperBound) {
  const double b = r4_upper_bound();
  EXPECT_NEAR(b, 1.608311, 1e-6);
  EXPECT_LT(std::abs((b * b - 0.25) / 2.0 - std::log(2.0 * b)), 1e-10);
  const double ref = oracle::bisect([](double x) { return (x * x - 0.25) / 2.0 - std::log(2.0 * x); }, 1.0, 3.0, 1e-14);
  EXPECT_NEAR(b, ref, 1e-12);
}

TEST(ErrorLaws, PositiveAndLogSymmetricR1R2) {
  const long long n = 50000;
  const auto r1 = draws(ErrorLaw::R1, n, 1);
  std::vector<double> z1(r1.size());
  for (std::size_t i = 0; i < r1.size(); ++i) {
    ASSERT_GT(r1[i], 0.0);
    z1[i] = std::log(r1[i]);
  }
  double mean = 0.0;
  for (double z : z1) mean += z / n;
  EXPECT_LT(std::abs(mean), 3.0 / std::sqrt(static_cast<double>(n)));
  EXPECT_GT(oracle::kolmogorov_tail(std::sqrt(n) * oracle::ks_statistic(z1, oracle::normal_cdf)), 0.01);

  const auto r2 = draws(ErrorLaw::R2, n, 2);
  std::vector<double> z2(r2.size());
  for (std::size_t i = 0; i < r2.size(); ++i) z2[i] = std::log(r2[i]);
  auto unif = [](double z) { return std::clamp((z + 2.0) / 4.0, 0.0, 1.0); };
  EXPECT_GT(oracle::kolmogorov_tail(std::sqrt(n) * oracle::ks_statistic(z2, unif)), 0.01);
}

TEST(ErrorLaws, R3MatchesQuadratureCdf) {
  const long long n = 20000;
  const auto eps = draws(ErrorLaw::R3, n, 3);
  const double c = r3_normalizing_constant();
  // CDF of z = log eps by quadrature of c exp(2 - 2 cosh z).
  auto cdf = [c](double z) {
    return c * oracle::adaptive_simpson([](double s) { return std::exp(2.0 - 2.0 * std::cosh(s)); }, -12.0, z, 1e-12);
  };
  std::vector<double> z(eps.size());
  for (std::size_t i = 0; i < eps.size(); ++i) z[i] = std::log(eps[i]);
  EXPECT_GT(oracle::kolmogorov_tail(std::sqrt(n) * oracle::ks_statistic(z, cdf)), 0.01);
}

TEST(ErrorLaws, R4Uniform) {
  const long long n = 50000;
  const auto eps = draws(ErrorLaw::R4, n, 4);
  const double b = r4_upper_bound();
  for (double e : eps) {
    ASSERT_GE(e, 0.5);
    ASSERT_LE(e, b);
  }
  auto cdf = [b](double x) { return std::clamp((x - 0.5) / (b - 0.5), 0.0, 1.0); };
  EXPECT_GT(oracle::kolmogorov_tail(std::sqrt(n) * oracle::ks_statistic(eps, cdf)), 0.01);
}

TEST(ErrorLaws, ZeroMeanScore) {
  const long long n = 100000;
  for (ErrorLaw law : {ErrorLaw::R1, ErrorLaw::R2, ErrorLaw::R3, ErrorLaw::R4}) {
    const auto eps = draws(law, n, 20 + static_cast<int>(law));
    double mean = 0.0, sq = 0.0;
    for (double e : eps) {
      const double v = e - 1.0 / e;
      mean += v / n;
      sq += v * v / n;
    }
    const double se = std::sqrt((sq - mean * mean) / n);
    EXPECT_LT(std::abs(mean), 4.0 * se) << to_string(law);
  }
}

TEST(GenResponse, TrivialCases) {
  CurveBatch curves;
  for (int g = 0; g <= 20; ++g) curves.grid.push_back(g / 20.0);
  curves.values = Matrix::Ones(3, 21);
  const Vector eps = (Vector(3) << 0.5, 1.0, 2.0).finished();
  const Vector y = gen_response(curves, [](double) { return 0.7; }, eps);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(y[i], std::exp(0.7) * eps[i], 1e-12);
  EXPECT_EQ(gen_response(curves, [](double) { return 0.0; }, eps), eps);
  curves.values.setZero();
  EXPECT_EQ(gen_response(curves, true_beta, eps), eps);
}

TEST(Simulate, DeterministicAndValidated) {
  SimConfig c;
  c.n = 50;
  c.error_law = ErrorLaw::R3;
  c.seed = 99;
  const auto a = simulate(c), b = simulate(c);
  EXPECT_EQ(a.responses, b.responses);
  EXPECT_EQ(a.curves.values, b.curves.values);
  EXPECT_GT(a.responses.minCoeff(), 0.0);
  c.n = 0;
  EXPECT_THROW(simulate(c), UsageError);
}

TEST(LawNames, RoundTrip) {
  for (auto law : {CovariateLaw::C1, CovariateLaw::C2, CovariateLaw::C3}) {
    EXPECT_EQ(covariate_law_from_string(to_string(law)), law);
  }
  for (auto law : {ErrorLaw::R1, ErrorLaw::R2, ErrorLaw::R3, ErrorLaw::R4}) {
    EXPECT_EQ(error_law_from_string(to_string(law)), law);
  }
  EXPECT_THROW(error_law_from_string("R5"), UsageError);
}
