#pragma once

#include <cmath>
#include <variant>

#include "infact/rng.hpp"
#include "infact/types.hpp"

namespace infact {

// Distribution parameterisations.  Gamma uses shape/rate, inverse-gamma
// shape/scale; the Student-t scale is in variance units, so StudentT{nu, 0, s}
// is the marginal of N(0, theta) with theta ~ IG(nu/2, nu*s/2).
namespace dist {
struct Gamma {
  double shape;
  double rate;
};
struct InverseGamma {
  double shape;
  double scale;
};
struct Beta {
  double a;
  double b;
};
struct Normal {
  double mean;
  double variance;
};
struct MultivariateNormal {
  Vector mean;
  Matrix covariance;
};
struct StudentT {
  double dof;
  double location;
  double scale;
};
struct Categorical {
  Vector log_weights;
};
struct Bernoulli {
  double p;
};
struct Poisson {
  double rate;
};
struct Uniform01 {};
}  // namespace dist

using DistSpec = std::variant<dist::Gamma, dist::InverseGamma, dist::Beta, dist::Normal,
                              dist::MultivariateNormal, dist::StudentT, dist::Categorical,
                              dist::Bernoulli, dist::Poisson, dist::Uniform01>;

/// A single draw: a real for continuous 1-D kinds, a vector for the
/// multivariate normal and an index for the discrete kinds.
using Sample = std::variant<double, Vector, Index>;

/// Throws ParameterError if the parameters leave the distribution's domain.
void validate(const DistSpec& spec);

/// Natural-log density (or mass).  Points outside the support give -inf.
/// Discrete kinds take the integer value as a real.
double log_density(const DistSpec& spec, double x);
/// Multivariate-normal overload; other kinds require a length-1 vector.
double log_density(const DistSpec& spec, const Vector& x);

Sample draw(const DistSpec& spec, RngStream& rng);

// Typed log densities used on the hot paths of the samplers.
double log_normal_pdf(double x, double mean, double variance);
double log_gamma_pdf(double x, double shape, double rate);
double log_inverse_gamma_pdf(double x, double shape, double scale);
double log_beta_pdf(double x, double a, double b);
double log_student_t_pdf(double x, double dof, double location, double scale);
double log_poisson_pmf(long k, double rate);

/// Joint density of N_p(0, variance * I) at x.
double log_isotropic_normal_pdf(const Vector& x, double variance);
/// Joint multivariate-t density with `dof` degrees of freedom, zero location
/// and scale matrix scale * I.
double log_isotropic_mvt_pdf(const Vector& x, double dof, double scale);

/// log(sum(exp(v))) with a max shift.
double log_sum_exp(const Vector& v);
/// Normalises log-weights in place to a log-simplex; throws NumericError if
/// every entry is -inf.
void normalize_log_weights(Vector& log_weights);

// Typed draws.
double draw_uniform(RngStream& rng);
double draw_normal(RngStream& rng);
double draw_normal(RngStream& rng, double mean, double variance);
double draw_gamma(RngStream& rng, double shape, double rate);
double draw_inverse_gamma(RngStream& rng, double shape, double scale);
double draw_beta(RngStream& rng, double a, double b);
long draw_poisson(RngStream& rng, double rate);
bool draw_bernoulli(RngStream& rng, double p);
/// Selection by inverse CDF on max-shifted weights.
Index draw_categorical(RngStream& rng, const Vector& log_weights);
Vector draw_standard_normal(RngStream& rng, Index n);
Vector draw_multivariate_normal(RngStream& rng, const Vector& mean, const Matrix& covariance);

/// Smallest eigenvalue of the symmetric part of m.
double min_symmetric_eigenvalue(const Matrix& m);

/// Gaussian N(P^{-1} b, P^{-1}) held through the Cholesky factor of its
/// precision P.  Construction throws NumericError when P is not SPD.
class CanonicalGaussian {
 public:
  CanonicalGaussian(const Matrix& precision, const Vector& linear);

  Index dim() const { return mean_.size(); }
  const Vector& mean() const { return mean_; }
  Matrix covariance() const;
  double log_det_precision() const;
  Vector draw(RngStream& rng) const;

 private:
  Eigen::LLT<Matrix> llt_;
  Vector mean_;
};

struct GaussianMoments {
  Vector mean;
  Matrix covariance;
};

/// Posterior moments from canonical parameters: covariance = P^{-1} via the
/// Cholesky factor, mean = covariance * b.  The covariance is symmetrised.
template <typename PrecisionDerived, typename LinearDerived>
GaussianMoments cholesky_solve_posterior(const Eigen::MatrixBase<PrecisionDerived>& precision,
                                         const Eigen::MatrixBase<LinearDerived>& linear) {
  CanonicalGaussian g(precision.eval(), linear.eval());
  return {g.mean(), g.covariance()};
}

}  // namespace infact
