#pragma once

#include <map>
#include <utility>

#include "infact/rng.hpp"
#include "infact/stat_kernel.hpp"
#include "infact/types.hpp"

namespace infact {

/// T x p data matrix, one observation y_t per row.
class Dataset {
 public:
  Dataset() = default;
  /// Throws ParameterError unless T >= 2, p >= 2 and every entry is finite.
  explicit Dataset(Matrix y);

  const Matrix& y() const { return y_; }
  Index p() const { return y_.cols(); }
  Index T() const { return y_.rows(); }

 private:
  Matrix y_;
};

/// p x k loadings; the column count is the current truncation level.
using LoadingMatrix = Matrix;

/// Throws ParameterError if loadings has no columns or a non-finite entry.
void check_loadings(const LoadingMatrix& loadings);

struct CoreState {
  LoadingMatrix loadings;  // p x k
  Vector idio_variances;   // sigma_i^2, length p
  Matrix factors;          // k x T, one column per observation

  Index p() const { return loadings.rows(); }
  Index k() const { return loadings.cols(); }
};

/// Inverse-gamma hyperparameters (c0, C0) for the idiosyncratic variances,
/// homogeneous across variables unless overridden per variable.
struct CorePriors {
  double c0 = 1.0;
  double C0 = 0.3;
  std::map<Index, std::pair<double, double>> overrides;

  double shape(Index i) const;
  double rate(Index i) const;
};

/// Full conditional of loading row i:
/// N((Psi^-1 + FF'/s2)^-1 F y_i / s2, (Psi^-1 + FF'/s2)^-1).
GaussianMoments loadings_row_conditional(const Matrix& factors, const Vector& y_i, double sigma2,
                                         const Vector& prior_precisions);

/// Gamma(shape, rate) conditional of 1/sigma_i^2 given the residuals of row i.
dist::Gamma idio_conditional(const Vector& residuals, double c0, double C0);

/// Full conditional of f_t: N((I + L'S^-1 L)^-1 L'S^-1 y_t, (I + L'S^-1 L)^-1).
GaussianMoments factor_conditional(const LoadingMatrix& loadings, const Vector& idio_variances,
                                   const Vector& y_t);

/// Omega = L L' + diag(sigma^2).
template <typename LoadingsDerived, typename IdioDerived>
MatrixX<typename LoadingsDerived::Scalar> implied_covariance(
    const Eigen::MatrixBase<LoadingsDerived>& loadings,
    const Eigen::MatrixBase<IdioDerived>& idio_variances) {
  using Scalar = typename LoadingsDerived::Scalar;
  MatrixX<Scalar> omega = loadings * loadings.transpose();
  omega.diagonal() += idio_variances;
  return omega;
}

// Single Gibbs steps acting in place.  prior_precisions is p x k.
void update_loadings(CoreState& state, const Dataset& data, const Matrix& prior_precisions,
                     RngStream& rng);
void update_idio_variances(CoreState& state, const Dataset& data, const CorePriors& priors,
                           RngStream& rng);
void update_factors(CoreState& state, const Dataset& data, RngStream& rng);

/// One systematic scan: loadings, idiosyncratic variances, then factors.
CoreState core_sweep(CoreState state, const Dataset& data, const CorePriors& priors,
                     const Matrix& prior_precisions, RngStream& rng);

/// Gaussian log-likelihood of Y given loadings, variances and factors, per
/// variable (length p).
Vector log_likelihood_by_variable(const Dataset& data, const CoreState& state);

/// Draws Y (T x p) from the model given the state.
Matrix simulate_data(const CoreState& state, RngStream& rng);

}  // namespace infact
