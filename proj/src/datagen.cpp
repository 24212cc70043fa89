#include "flpre/datagen.hpp"

#include "flpre/error.hpp"

#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <numbers>

namespace flpre {

Rng make_stream(std::uint64_t root_seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(root_seed), static_cast<std::uint32_t>(root_seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    0x666c7072u};
  return Rng(seq);
}

std::string to_string(CovariateLaw law) {
  switch (law) {
    case CovariateLaw::C1: return "C1";
    case CovariateLaw::C2: return "C2";
    case CovariateLaw::C3: return "C3";
  }
  return "?";
}

std::string to_string(ErrorLaw law) {
  switch (law) {
    case ErrorLaw::R1: return "R1";
    case ErrorLaw::R2: return "R2";
    case ErrorLaw::R3: return "R3";
    case ErrorLaw::R4: return "R4";
  }
  return "?";
}

CovariateLaw covariate_law_from_string(const std::string& s) {
  if (s == "C1") return CovariateLaw::C1;
  if (s == "C2") return CovariateLaw::C2;
  if (s == "C3") return CovariateLaw::C3;
  throw UsageError("unknown covariate law '" + s + "' (expected C1, C2 or C3)");
}

ErrorLaw error_law_from_string(const std::string& s) {
  if (s == "R1") return ErrorLaw::R1;
  if (s == "R2") return ErrorLaw::R2;
  if (s == "R3") return ErrorLaw::R3;
  if (s == "R4") return ErrorLaw::R4;
  throw UsageError("unknown error law '" + s + "' (expected R1, R2, R3 or R4)");
}

void SimConfig::validate() const {
  if (n < 1) throw UsageError("sample count must be >= 1");
  if (grid_size < 2) throw UsageError("grid size must be >= 2");
  if (gen_basis_dim < 4) throw UsageError("generating basis needs at least 4 cubic B-splines");
}

double true_beta(double t) { return 7.0 * t * t * t + 2.0 * std::sin(4.0 * std::numbers::pi * t + 0.2); }

BasisConfig generating_basis(int dim) {
  if (dim < 4) throw UsageError("generating basis needs at least 4 cubic B-splines");
  return make_basis(dim - 4, 3, 2);
}

Matrix coefficient_covariance(int dim) {
  Matrix sigma(dim, dim);
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) sigma(i, j) = std::pow(0.5, std::abs(i - j));
  }
  return sigma;
}

CurveBatch gen_covariates(const SimConfig& config, Rng& rng) {
  config.validate();
  const int dim = config.gen_basis_dim;
  const BasisConfig basis = generating_basis(dim);

  CurveBatch curves;
  curves.grid.resize(config.grid_size);
  for (int g = 0; g < config.grid_size; ++g) curves.grid[g] = static_cast<double>(g) / (config.grid_size - 1);
  Matrix basis_on_grid(dim, config.grid_size);
  for (int g = 0; g < config.grid_size; ++g) basis_on_grid.col(g) = eval_basis(basis, curves.grid[g]);

  const Matrix chol = coefficient_covariance(dim).llt().matrixL();
  std::normal_distribution<double> normal(0.0, 1.0);
  std::chi_squared_distribution<double> chi2(5.0);
  std::bernoulli_distribution coin(0.5);

  Matrix coef(config.n, dim);
  Vector z(dim);
  for (long long i = 0; i < config.n; ++i) {
    for (int j = 0; j < dim; ++j) z[j] = normal(rng);
    Vector a = chol * z;
    switch (config.covariate_law) {
      case CovariateLaw::C1:
        break;
      case CovariateLaw::C2:
        // t_5(0, Sigma/10): N(0, Sigma/10) scaled by sqrt(5 / chi2_5)
        a *= std::sqrt(0.1) * std::sqrt(5.0 / chi2(rng));
        break;
      case CovariateLaw::C3:
        a.array() += coin(rng) ? 1.0 : -1.0;
        break;
    }
    coef.row(i) = a.transpose();
  }
  curves.values.noalias() = coef * basis_on_grid;
  return curves;
}

double r3_normalizing_constant() { return std::exp(-2.0) / (2.0 * boost::math::cyl_bessel_k(0, 2.0)); }

double r3_unnormalized_density(double x) {
  if (!(x > 0.0)) return 0.0;
  return std::exp(-x - 1.0 / x - std::log(x) + 2.0);
}

double r4_upper_bound() {
  auto f = [](double b) { return (b * b - 0.25) / 2.0 - std::log(2.0 * b); };
  std::uintmax_t iterations = 200;
  const auto [lo, hi] = boost::math::tools::toms748_solve(f, 1.0, 3.0, boost::math::tools::eps_tolerance<double>(52),
                                                          iterations);
  return 0.5 * (lo + hi);
}

namespace {

// log(eps) for R3 has density proportional to exp(-2 cosh z). Proposal
// N(0, 0.8^2); the density ratio peaks at z = 0 with value e^{-2}.
double draw_r3(Rng& rng) {
  constexpr double sd = 0.8;
  std::normal_distribution<double> proposal(0.0, sd);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (;;) {
    const double z = proposal(rng);
    const double log_accept = -2.0 * std::cosh(z) + z * z / (2.0 * sd * sd) + 2.0;
    if (std::log(unif(rng)) <= log_accept) return std::exp(z);
  }
}

}  // namespace

double draw_error(ErrorLaw law, Rng& rng) {
  switch (law) {
    case ErrorLaw::R1: {
      std::normal_distribution<double> normal(0.0, 1.0);
      return std::exp(normal(rng));
    }
    case ErrorLaw::R2: {
      std::uniform_real_distribution<double> unif(-2.0, 2.0);
      return std::exp(unif(rng));
    }
    case ErrorLaw::R3:
      return draw_r3(rng);
    case ErrorLaw::R4: {
      static const double b = r4_upper_bound();
      std::uniform_real_distribution<double> unif(0.5, b);
      return unif(rng);
    }
  }
  throw UsageError("unknown error law");
}

Vector gen_errors(ErrorLaw law, long long n, Rng& rng) {
  if (n < 1) throw UsageError("error sample count must be >= 1");
  Vector eps(n);
  for (long long i = 0; i < n; ++i) eps[i] = draw_error(law, rng);
  return eps;
}

Vector gen_response(const CurveBatch& curves, const std::function<double(double)>& beta, const Vector& errors) {
  if (errors.size() != curves.size()) throw UsageError("curve and error counts differ");
  const auto n_grid = static_cast<Eigen::Index>(curves.grid.size());
  Vector w = Vector::Zero(n_grid);
  for (Eigen::Index g = 0; g + 1 < n_grid; ++g) {
    const double h = curves.grid[g + 1] - curves.grid[g];
    w[g] += 0.5 * h * beta(curves.grid[g]);
    w[g + 1] += 0.5 * h * beta(curves.grid[g + 1]);
  }
  const Vector index = curves.values * w;
  Vector y(errors.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (!(errors[i] > 0.0)) throw DataError("errors must be strictly positive");
    y[i] = std::exp(index[i]) * errors[i];
  }
  return y;
}

SimulatedData simulate(const SimConfig& config) {
  config.validate();
  SimulatedData data;
  Rng cov_rng = make_stream(config.seed, 0);
  Rng err_rng = make_stream(config.seed, 1);
  data.curves = gen_covariates(config, cov_rng);
  data.errors = gen_errors(config.error_law, config.n, err_rng);
  data.responses = gen_response(data.curves, true_beta, data.errors);
  return data;
}

}  // namespace flpre
