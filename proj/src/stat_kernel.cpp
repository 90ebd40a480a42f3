#include "infact/stat_kernel.hpp"

#include <Eigen/Eigenvalues>

#include <random>
#include <sstream>

namespace infact {
namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    std::ostringstream os;
    os << name << " must be finite and strictly positive, got " << v;
    throw ParameterError(os.str());
  }
}

bool is_integer(double x) { return std::isfinite(x) && std::floor(x) == x; }

}  // namespace

void validate(const DistSpec& spec) {
  std::visit(Overloaded{
                 [](const dist::Gamma& d) {
                   require_positive(d.shape, "gamma shape");
                   require_positive(d.rate, "gamma rate");
                 },
                 [](const dist::InverseGamma& d) {
                   require_positive(d.shape, "inverse-gamma shape");
                   require_positive(d.scale, "inverse-gamma scale");
                 },
                 [](const dist::Beta& d) {
                   require_positive(d.a, "beta a");
                   require_positive(d.b, "beta b");
                 },
                 [](const dist::Normal& d) {
                   if (!std::isfinite(d.mean)) throw ParameterError("normal mean must be finite");
                   require_positive(d.variance, "normal variance");
                 },
                 [](const dist::MultivariateNormal& d) {
                   if (d.covariance.rows() != d.covariance.cols() ||
                       d.covariance.rows() != d.mean.size())
                     throw ParameterError("multivariate-normal dimensions disagree");
                   const double scale = std::max(1.0, d.covariance.cwiseAbs().maxCoeff());
                   if ((d.covariance - d.covariance.transpose()).cwiseAbs().maxCoeff() >
                       1e-10 * scale)
                     throw ParameterError("multivariate-normal covariance is not symmetric");
                 },
                 [](const dist::StudentT& d) {
                   require_positive(d.dof, "student-t dof");
                   require_positive(d.scale, "student-t scale");
                 },
                 [](const dist::Categorical& d) {
                   if (d.log_weights.size() == 0)
                     throw ParameterError("categorical needs at least one weight");
                   if (!(d.log_weights.maxCoeff() > kNegInf))
                     throw ParameterError("categorical weights are all zero");
                   for (double w : d.log_weights)
                     if (std::isnan(w) || w == std::numeric_limits<double>::infinity())
                       throw ParameterError("categorical log-weight is NaN or +inf");
                 },
                 [](const dist::Bernoulli& d) {
                   if (!(d.p >= 0.0 && d.p <= 1.0))
                     throw ParameterError("bernoulli p must lie in [0, 1]");
                 },
                 [](const dist::Poisson& d) { require_positive(d.rate, "poisson rate"); },
                 [](const dist::Uniform01&) {},
             },
             spec);
}

double log_normal_pdf(double x, double mean, double variance) {
  const double r = x - mean;
  return -0.5 * (kLog2Pi + std::log(variance) + r * r / variance);
}

double log_gamma_pdf(double x, double shape, double rate) {
  if (x < 0.0) return kNegInf;
  if (x == 0.0) {
    if (shape == 1.0) return std::log(rate);
    return shape < 1.0 ? std::numeric_limits<double>::infinity() : kNegInf;
  }
  return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
}

double log_inverse_gamma_pdf(double x, double shape, double scale) {
  if (x <= 0.0) return kNegInf;
  return shape * std::log(scale) - std::lgamma(shape) - (shape + 1.0) * std::log(x) - scale / x;
}

double log_beta_pdf(double x, double a, double b) {
  if (x <= 0.0 || x >= 1.0) return kNegInf;
  return std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + (a - 1.0) * std::log(x) +
         (b - 1.0) * std::log1p(-x);
}

double log_student_t_pdf(double x, double dof, double location, double scale) {
  const double r = x - location;
  return std::lgamma(0.5 * (dof + 1.0)) - std::lgamma(0.5 * dof) -
         0.5 * std::log(dof * M_PI * scale) -
         0.5 * (dof + 1.0) * std::log1p(r * r / (dof * scale));
}

double log_poisson_pmf(long k, double rate) {
  if (k < 0) return kNegInf;
  return static_cast<double>(k) * std::log(rate) - rate - std::lgamma(static_cast<double>(k) + 1.0);
}

double log_isotropic_normal_pdf(const Vector& x, double variance) {
  const double n = static_cast<double>(x.size());
  return -0.5 * (n * (kLog2Pi + std::log(variance)) + x.squaredNorm() / variance);
}

double log_isotropic_mvt_pdf(const Vector& x, double dof, double scale) {
  const double n = static_cast<double>(x.size());
  return std::lgamma(0.5 * (dof + n)) - std::lgamma(0.5 * dof) -
         0.5 * n * std::log(dof * M_PI * scale) -
         0.5 * (dof + n) * std::log1p(x.squaredNorm() / (dof * scale));
}

double log_sum_exp(const Vector& v) {
  const double m = v.maxCoeff();
  if (!(m > kNegInf)) return kNegInf;
  return m + std::log((v.array() - m).exp().sum());
}

void normalize_log_weights(Vector& log_weights) {
  const double lse = log_sum_exp(log_weights);
  if (!(lse > kNegInf) || !std::isfinite(lse))
    throw NumericError("categorical log-weights have no finite mass");
  log_weights.array() -= lse;
}

double log_density(const DistSpec& spec, double x) {
  validate(spec);
  return std::visit(
      Overloaded{
          [x](const dist::Gamma& d) { return log_gamma_pdf(x, d.shape, d.rate); },
          [x](const dist::InverseGamma& d) { return log_inverse_gamma_pdf(x, d.shape, d.scale); },
          [x](const dist::Beta& d) { return log_beta_pdf(x, d.a, d.b); },
          [x](const dist::Normal& d) { return log_normal_pdf(x, d.mean, d.variance); },
          [x](const dist::MultivariateNormal& d) -> double {
            if (d.mean.size() != 1)
              throw ParameterError("scalar point for a multivariate normal of dimension > 1");
            return log_normal_pdf(x, d.mean(0), d.covariance(0, 0));
          },
          [x](const dist::StudentT& d) {
            return log_student_t_pdf(x, d.dof, d.location, d.scale);
          },
          [x](const dist::Categorical& d) -> double {
            if (!is_integer(x) || x < 0 || x >= static_cast<double>(d.log_weights.size()))
              return kNegInf;
            return d.log_weights(static_cast<Index>(x)) - log_sum_exp(d.log_weights);
          },
          [x](const dist::Bernoulli& d) -> double {
            if (x == 1.0) return std::log(d.p);
            if (x == 0.0) return std::log1p(-d.p);
            return kNegInf;
          },
          [x](const dist::Poisson& d) -> double {
            if (!is_integer(x)) return kNegInf;
            return log_poisson_pmf(static_cast<long>(x), d.rate);
          },
          [x](const dist::Uniform01&) { return (x > 0.0 && x < 1.0) ? 0.0 : kNegInf; },
      },
      spec);
}

double log_density(const DistSpec& spec, const Vector& x) {
  if (const auto* mvn = std::get_if<dist::MultivariateNormal>(&spec)) {
    validate(spec);
    if (x.size() != mvn->mean.size()) throw ParameterError("point dimension mismatch");
    Eigen::LLT<Matrix> llt(mvn->covariance);
    if (llt.info() != Eigen::Success)
      throw NumericError("covariance is not positive definite",
                         min_symmetric_eigenvalue(mvn->covariance));
    const Vector z = llt.matrixL().solve(x - mvn->mean);
    const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    return -0.5 * (static_cast<double>(x.size()) * kLog2Pi + log_det + z.squaredNorm());
  }
  if (x.size() != 1) throw ParameterError("vector point given to a univariate distribution");
  return log_density(spec, x(0));
}

double draw_uniform(RngStream& rng) { return rng.uniform(); }

double draw_normal(RngStream& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

double draw_normal(RngStream& rng, double mean, double variance) {
  return mean + std::sqrt(variance) * draw_normal(rng);
}

double draw_gamma(RngStream& rng, double shape, double rate) {
  return std::gamma_distribution<double>(shape, 1.0)(rng) / rate;
}

double draw_inverse_gamma(RngStream& rng, double shape, double scale) {
  return scale / std::gamma_distribution<double>(shape, 1.0)(rng);
}

double draw_beta(RngStream& rng, double a, double b) {
  const double x = std::gamma_distribution<double>(a, 1.0)(rng);
  const double y = std::gamma_distribution<double>(b, 1.0)(rng);
  if (x + y == 0.0) return a / (a + b);
  return x / (x + y);
}

long draw_poisson(RngStream& rng, double rate) {
  return static_cast<long>(std::poisson_distribution<long>(rate)(rng));
}

bool draw_bernoulli(RngStream& rng, double p) { return rng.uniform() < p; }

Index draw_categorical(RngStream& rng, const Vector& log_weights) {
  const double m = log_weights.maxCoeff();
  if (!(m > kNegInf)) throw NumericError("categorical log-weights have no finite mass");
  const Vector w = (log_weights.array() - m).exp();
  const double target = rng.uniform() * w.sum();
  double acc = 0.0;
  Index last_positive = 0;
  for (Index i = 0; i < w.size(); ++i) {
    if (w(i) <= 0.0) continue;
    last_positive = i;
    acc += w(i);
    if (target < acc) return i;
  }
  return last_positive;
}

Vector draw_standard_normal(RngStream& rng, Index n) {
  Vector z(n);
  for (Index i = 0; i < n; ++i) z(i) = draw_normal(rng);
  return z;
}

double min_symmetric_eigenvalue(const Matrix& m) {
  if (m.size() == 0) return std::numeric_limits<double>::quiet_NaN();
  const Matrix sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

Vector draw_multivariate_normal(RngStream& rng, const Vector& mean, const Matrix& covariance) {
  Eigen::LLT<Matrix> llt(covariance);
  if (llt.info() != Eigen::Success)
    throw NumericError("covariance is not positive definite", min_symmetric_eigenvalue(covariance));
  return mean + llt.matrixL() * draw_standard_normal(rng, mean.size());
}

Sample draw(const DistSpec& spec, RngStream& rng) {
  validate(spec);
  return std::visit(
      Overloaded{
          [&rng](const dist::Gamma& d) -> Sample { return draw_gamma(rng, d.shape, d.rate); },
          [&rng](const dist::InverseGamma& d) -> Sample {
            return draw_inverse_gamma(rng, d.shape, d.scale);
          },
          [&rng](const dist::Beta& d) -> Sample { return draw_beta(rng, d.a, d.b); },
          [&rng](const dist::Normal& d) -> Sample {
            return draw_normal(rng, d.mean, d.variance);
          },
          [&rng](const dist::MultivariateNormal& d) -> Sample {
            return draw_multivariate_normal(rng, d.mean, d.covariance);
          },
          [&rng](const dist::StudentT& d) -> Sample {
            const double theta = draw_inverse_gamma(rng, 0.5 * d.dof, 0.5 * d.dof * d.scale);
            return d.location + std::sqrt(theta) * draw_normal(rng);
          },
          [&rng](const dist::Categorical& d) -> Sample {
            return draw_categorical(rng, d.log_weights);
          },
          [&rng](const dist::Bernoulli& d) -> Sample {
            return static_cast<Index>(draw_bernoulli(rng, d.p));
          },
          [&rng](const dist::Poisson& d) -> Sample {
            return static_cast<Index>(draw_poisson(rng, d.rate));
          },
          [&rng](const dist::Uniform01&) -> Sample { return rng.uniform(); },
      },
      spec);
}

CanonicalGaussian::CanonicalGaussian(const Matrix& precision, const Vector& linear)
    : llt_(precision) {
  if (precision.rows() != precision.cols() || precision.rows() != linear.size())
    throw ParameterError("precision and linear term dimensions disagree");
  if (llt_.info() != Eigen::Success)
    throw NumericError("posterior precision is not positive definite",
                       min_symmetric_eigenvalue(precision));
  mean_ = llt_.solve(linear);
}

Matrix CanonicalGaussian::covariance() const {
  Matrix cov = llt_.solve(Matrix::Identity(dim(), dim()));
  return 0.5 * (cov + cov.transpose());
}

double CanonicalGaussian::log_det_precision() const {
  return 2.0 * llt_.matrixLLT().diagonal().array().log().sum();
}

Vector CanonicalGaussian::draw(RngStream& rng) const {
  // x = mean + L^{-T} z has covariance (L L^T)^{-1}.
  const Vector z = draw_standard_normal(rng, dim());
  return mean_ + llt_.matrixU().solve(z);
}

}  // namespace infact
