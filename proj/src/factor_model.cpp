#include "infact/factor_model.hpp"

#include <sstream>

namespace infact {
namespace {

void require(bool ok, const char* message) {
  if (!ok) throw ParameterError(message);
}

Matrix row_precision(const Matrix& ff, double sigma2, const Eigen::Ref<const Vector>& prior) {
  Matrix precision = ff / sigma2;
  precision.diagonal() += prior;
  return precision;
}

}  // namespace

Dataset::Dataset(Matrix y) : y_(std::move(y)) {
  require(y_.rows() >= 2, "dataset needs at least two observations");
  require(y_.cols() >= 2, "dataset needs at least two variables");
  require(y_.allFinite(), "dataset contains non-finite values");
}

void check_loadings(const LoadingMatrix& loadings) {
  require(loadings.cols() >= 1, "loading matrix needs at least one column");
  require(loadings.allFinite(), "loading matrix has non-finite entries");
}

double CorePriors::shape(Index i) const {
  const auto it = overrides.find(i);
  return it == overrides.end() ? c0 : it->second.first;
}

double CorePriors::rate(Index i) const {
  const auto it = overrides.find(i);
  return it == overrides.end() ? C0 : it->second.second;
}

GaussianMoments loadings_row_conditional(const Matrix& factors, const Vector& y_i, double sigma2,
                                         const Vector& prior_precisions) {
  require(factors.cols() == y_i.size(), "factor columns must match observations");
  require(factors.rows() == prior_precisions.size(), "one prior precision per factor");
  require(sigma2 > 0.0, "idiosyncratic variance must be positive");
  const Matrix ff = factors * factors.transpose();
  return cholesky_solve_posterior(row_precision(ff, sigma2, prior_precisions),
                                  factors * y_i / sigma2);
}

dist::Gamma idio_conditional(const Vector& residuals, double c0, double C0) {
  require(c0 > 0.0 && C0 > 0.0, "c0 and C0 must be positive");
  return {c0 + 0.5 * static_cast<double>(residuals.size()), C0 + 0.5 * residuals.squaredNorm()};
}

GaussianMoments factor_conditional(const LoadingMatrix& loadings, const Vector& idio_variances,
                                   const Vector& y_t) {
  require(loadings.rows() == idio_variances.size() && loadings.rows() == y_t.size(),
          "loadings, variances and observation disagree in p");
  const Matrix scaled = idio_variances.cwiseInverse().asDiagonal() * loadings;
  Matrix precision = loadings.transpose() * scaled;
  precision.diagonal().array() += 1.0;
  return cholesky_solve_posterior(precision, scaled.transpose() * y_t);
}

void update_loadings(CoreState& state, const Dataset& data, const Matrix& prior_precisions,
                     RngStream& rng) {
  const Index p = data.p();
  require(prior_precisions.rows() == p && prior_precisions.cols() == state.k(),
          "prior precisions must be p x k");
  const Matrix ff = state.factors * state.factors.transpose();
  const Matrix fy = state.factors * data.y();  // k x p, column i is F y_i
  for (Index i = 0; i < p; ++i) {
    const double s2 = state.idio_variances(i);
    const CanonicalGaussian g(row_precision(ff, s2, prior_precisions.row(i).transpose()),
                              fy.col(i) / s2);
    state.loadings.row(i) = g.draw(rng).transpose();
  }
}

void update_idio_variances(CoreState& state, const Dataset& data, const CorePriors& priors,
                           RngStream& rng) {
  const Matrix residuals = data.y() - state.factors.transpose() * state.loadings.transpose();
  for (Index i = 0; i < data.p(); ++i) {
    const dist::Gamma g = idio_conditional(residuals.col(i), priors.shape(i), priors.rate(i));
    state.idio_variances(i) = 1.0 / draw_gamma(rng, g.shape, g.rate);
  }
}

void update_factors(CoreState& state, const Dataset& data, RngStream& rng) {
  const Index k = state.k();
  const Matrix scaled = state.idio_variances.cwiseInverse().asDiagonal() * state.loadings;
  Matrix precision = state.loadings.transpose() * scaled;
  precision.diagonal().array() += 1.0;
  Eigen::LLT<Matrix> llt(precision);
  if (llt.info() != Eigen::Success)
    throw NumericError("factor precision is not positive definite",
                       min_symmetric_eigenvalue(precision));
  Matrix means = llt.solve(scaled.transpose() * data.y().transpose());  // k x T
  Matrix noise(k, data.T());
  for (Index t = 0; t < data.T(); ++t) noise.col(t) = draw_standard_normal(rng, k);
  state.factors = means + llt.matrixU().solve(noise);
}

CoreState core_sweep(CoreState state, const Dataset& data, const CorePriors& priors,
                     const Matrix& prior_precisions, RngStream& rng) {
  update_loadings(state, data, prior_precisions, rng);
  update_idio_variances(state, data, priors, rng);
  update_factors(state, data, rng);
  return state;
}

Vector log_likelihood_by_variable(const Dataset& data, const CoreState& state) {
  const Matrix residuals = data.y() - state.factors.transpose() * state.loadings.transpose();
  Vector out(data.p());
  for (Index i = 0; i < data.p(); ++i) {
    const double s2 = state.idio_variances(i);
    double acc = 0.0;
    for (Index t = 0; t < data.T(); ++t) acc += log_normal_pdf(residuals(t, i), 0.0, s2);
    out(i) = acc;
  }
  return out;
}

Matrix simulate_data(const CoreState& state, RngStream& rng) {
  const Index T = state.factors.cols();
  const Index p = state.p();
  Matrix y = state.factors.transpose() * state.loadings.transpose();
  for (Index t = 0; t < T; ++t)
    for (Index i = 0; i < p; ++i) y(t, i) += std::sqrt(state.idio_variances(i)) * draw_normal(rng);
  return y;
}

}  // namespace infact
