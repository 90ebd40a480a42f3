#pragma once

// Grid-posterior checks of every closed-form conditional.  Each check draws a
// random small instance, builds the unnormalised full conditional directly
// from prior x likelihood, normalises it on a grid and returns the largest
// relative density error of the returned distribution at a set of probes.

#include <random>
#include <string>
#include <vector>

#include "infact/cusp.hpp"
#include "infact/factor_model.hpp"
#include "infact/ibp.hpp"
#include "infact/mgp.hpp"
#include "support/oracles.hpp"

namespace checks {

using infact::Index;
using infact::Matrix;
using infact::Vector;
using Gen = std::mt19937_64;

inline double unif(Gen& g, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(g);
}
inline double gauss(Gen& g, double sd = 1.0) { return std::normal_distribution<double>(0.0, sd)(g); }
inline Matrix gauss_matrix(Gen& g, Index r, Index c, double sd = 1.0) {
  Matrix m(r, c);
  for (Index j = 0; j < c; ++j)
    for (Index i = 0; i < r; ++i) m(i, j) = gauss(g, sd);
  return m;
}

/// Relative error of a bivariate normal against a grid-normalised target.
inline double check_bivariate(const std::function<double(double, double)>& log_f,
                              const infact::GaussianMoments& m) {
  const double log_z = oracle::log_normalizer_2d(log_f);
  const Eigen::LLT<Matrix> llt(m.covariance);
  double worst = 0.0;
  for (const auto& z : {std::pair{0.0, 0.0}, {1.0, -0.5}, {-1.2, 0.3}, {0.4, 1.5}, {-0.7, -1.1}}) {
    Vector x = m.mean + llt.matrixL() * Vector{{z.first, z.second}};
    const double ref = log_f(x(0), x(1)) - log_z;
    worst = std::max(worst, std::abs(std::expm1(oracle::log_mvn(x, m.mean, m.covariance) - ref)));
  }
  return worst;
}

inline double loadings_row(Gen& g) {
  const Index T = 5;
  const Matrix F = gauss_matrix(g, 2, T);
  const Vector y = gauss_matrix(g, T, 1, 1.5);
  const double s2 = unif(g, 0.3, 2.0);
  const Vector prec{{unif(g, 0.5, 3.0), unif(g, 0.5, 3.0)}};
  const auto m = infact::loadings_row_conditional(F, y, s2, prec);
  auto log_f = [&](double l1, double l2) {
    double lp = oracle::log_normal(l1, 0, 1 / prec(0)) + oracle::log_normal(l2, 0, 1 / prec(1));
    for (Index t = 0; t < T; ++t) lp += oracle::log_normal(y(t), l1 * F(0, t) + l2 * F(1, t), s2);
    return lp;
  };
  return check_bivariate(log_f, m);
}

inline double factor(Gen& g) {
  const Index p = 6;
  const Matrix L = gauss_matrix(g, p, 2);
  Vector s2(p);
  for (Index i = 0; i < p; ++i) s2(i) = unif(g, 0.2, 2.0);
  const Vector y = gauss_matrix(g, p, 1, 2.0);
  const auto m = infact::factor_conditional(L, s2, y);
  auto log_f = [&](double f1, double f2) {
    double lp = oracle::log_normal(f1, 0, 1) + oracle::log_normal(f2, 0, 1);
    for (Index i = 0; i < p; ++i) lp += oracle::log_normal(y(i), L(i, 0) * f1 + L(i, 1) * f2, s2(i));
    return lp;
  };
  return check_bivariate(log_f, m);
}

inline double idio(Gen& g) {
  const Index T = 20;
  const Vector r = gauss_matrix(g, T, 1, unif(g, 0.3, 2.0));
  const double c0 = unif(g, 0.5, 3.0), C0 = unif(g, 0.1, 2.0);
  const auto c = infact::idio_conditional(r, c0, C0);
  // density of the precision psi = 1 / sigma^2
  auto log_f = [&](double psi) {
    double lp = oracle::log_gamma(psi, c0, C0);
    for (Index t = 0; t < T; ++t) lp += oracle::log_normal(r(t), 0, 1 / psi);
    return lp;
  };
  auto log_q = [&](double psi) { return oracle::log_gamma(psi, c.shape, c.rate); };
  const double mean = c.shape / c.rate, sd = std::sqrt(c.shape) / c.rate;
  return oracle::max_relative_density_error(log_f, log_q, oracle::Support::positive,
                                            oracle::probes(mean, sd, oracle::Support::positive));
}

inline double phi(Gen& g) {
  infact::MgpHyper hyper;
  hyper.nu1 = unif(g, 1.0, 6.0);
  hyper.nu2 = unif(g, 1.0, 6.0);
  const double lambda = gauss(g, 2.0), tau = unif(g, 0.1, 5.0);
  const auto c = infact::phi_conditional(lambda, tau, hyper);
  auto log_f = [&](double x) {
    return oracle::log_gamma(x, hyper.nu1 / 2, hyper.nu2 / 2) +
           oracle::log_normal(lambda, 0, 1 / (x * tau));
  };
  auto log_q = [&](double x) { return oracle::log_gamma(x, c.shape, c.rate); };
  const double mean = c.shape / c.rate, sd = std::sqrt(c.shape) / c.rate;
  return oracle::max_relative_density_error(log_f, log_q, oracle::Support::positive,
                                            oracle::probes(mean, sd, oracle::Support::positive));
}

inline double delta(Gen& g) {
  const Index p = 4, k = 3;
  infact::MgpHyper hyper;
  hyper.b1 = unif(g, 0.5, 2.0);
  hyper.b2 = unif(g, 0.5, 2.0);
  infact::MgpState s;
  s.phi = Matrix(p, k);
  for (Index j = 0; j < k; ++j)
    for (Index i = 0; i < p; ++i) s.phi(i, j) = unif(g, 0.2, 3.0);
  s.delta = Vector(k);
  for (Index j = 0; j < k; ++j) s.delta(j) = unif(g, 0.3, 3.0);
  s.tau = infact::tau_from_delta(s.delta);
  s.a1 = unif(g, 1.0, 4.0);
  s.a2 = unif(g, 1.0, 4.0);
  const Matrix L = gauss_matrix(g, p, k, 0.8);
  const auto h = static_cast<Index>(std::uniform_int_distribution<int>(0, k - 1)(g));
  const auto c = infact::delta_conditional(h, s, L, hyper);
  auto log_f = [&](double x) {
    Vector d = s.delta;
    d(h) = x;
    double lp = h == 0 ? oracle::log_gamma(x, s.a1, hyper.b1) : oracle::log_gamma(x, s.a2, hyper.b2);
    double tau = 1.0;
    for (Index l = 0; l < k; ++l) {
      tau *= d(l);
      for (Index i = 0; i < p; ++i) lp += oracle::log_normal(L(i, l), 0, 1 / (s.phi(i, l) * tau));
    }
    return lp;
  };
  auto log_q = [&](double x) { return oracle::log_gamma(x, c.shape, c.rate); };
  const double mean = c.shape / c.rate, sd = std::sqrt(c.shape) / c.rate;
  return oracle::max_relative_density_error(log_f, log_q, oracle::Support::positive,
                                            oracle::probes(mean, sd, oracle::Support::positive));
}

inline double stick(Gen& g) {
  const Index H = 6;
  infact::CuspHyper hyper;
  hyper.alpha = unif(g, 0.5, 6.0);
  infact::IntVector z(H);
  for (Index h = 0; h < H; ++h) z(h) = std::uniform_int_distribution<int>(0, H - 1)(g);
  Vector v(H);
  for (Index l = 0; l < H - 1; ++l) v(l) = unif(g, 0.05, 0.95);
  v(H - 1) = 1.0;
  const auto l = static_cast<Index>(std::uniform_int_distribution<int>(0, H - 2)(g));
  const auto c = infact::v_conditional(l, z, hyper);
  auto log_f = [&](double x) {
    Vector vv = v;
    vv(l) = x;
    double lp = oracle::log_beta(x, 1.0, hyper.alpha);
    for (Index h = 0; h < H; ++h) {
      double w = vv(z(h));
      for (Index m = 0; m < z(h); ++m) w *= 1.0 - vv(m);
      lp += std::log(w);
    }
    return lp;
  };
  auto log_q = [&](double x) { return oracle::log_beta(x, c.a, c.b); };
  const double mean = c.a / (c.a + c.b);
  const double sd = std::sqrt(c.a * c.b / ((c.a + c.b) * (c.a + c.b) * (c.a + c.b + 1)));
  return oracle::max_relative_density_error(log_f, log_q, oracle::Support::unit,
                                            oracle::probes(mean, sd, oracle::Support::unit));
}

inline double theta(Gen& g) {
  const Index p = 5;
  infact::CuspHyper hyper;
  hyper.a_theta = unif(g, 1.0, 4.0);
  hyper.b_theta = unif(g, 0.5, 4.0);
  const Vector lam = gauss_matrix(g, p, 1, unif(g, 0.3, 3.0));
  const auto c = infact::theta_slab_conditional(lam, hyper);
  auto log_f = [&](double x) {
    double lp = oracle::log_inv_gamma(x, hyper.a_theta, hyper.b_theta);
    for (Index i = 0; i < p; ++i) lp += oracle::log_normal(lam(i), 0, x);
    return lp;
  };
  auto log_q = [&](double x) { return oracle::log_inv_gamma(x, c.shape, c.scale); };
  const double mean = c.scale / (c.shape - 1), sd = mean / std::sqrt(c.shape - 2);
  return oracle::max_relative_density_error(log_f, log_q, oracle::Support::positive,
                                            oracle::probes(mean, sd, oracle::Support::positive));
}

inline double loading_element(Gen& g) {
  const Index T = 6;
  const Vector f = gauss_matrix(g, T, 1);
  const Vector y = gauss_matrix(g, T, 1, 1.5);
  const double s2 = unif(g, 0.3, 2.0), beta = unif(g, 0.3, 3.0);
  const auto c = infact::loading_element_conditional(f, y, s2, beta);
  auto log_f = [&](double x) {
    double lp = oracle::log_normal(x, 0, 1 / beta);
    for (Index t = 0; t < T; ++t) lp += oracle::log_normal(y(t), x * f(t), s2);
    return lp;
  };
  auto log_q = [&](double x) { return oracle::log_normal(x, c.mean, c.variance); };
  return oracle::max_relative_density_error(
      log_f, log_q, oracle::Support::real,
      oracle::probes(c.mean, std::sqrt(c.variance), oracle::Support::real));
}

inline double ibp_beta(Gen& g) {
  const Index p = 6;
  infact::IbpHyper hyper;
  hyper.a_beta = unif(g, 0.5, 3.0);
  hyper.b_beta = unif(g, 0.5, 3.0);
  infact::BinaryVector z(p);
  Vector lam = Vector::Zero(p);
  for (Index i = 0; i < p; ++i) {
    z(i) = unif(g, 0, 1) < 0.6 ? 1 : 0;
    if (z(i)) lam(i) = gauss(g, 1.5);
  }
  const auto c = infact::beta_conditional(z, lam, hyper);
  auto log_f = [&](double x) {
    double lp = oracle::log_gamma(x, hyper.a_beta, hyper.b_beta);
    for (Index i = 0; i < p; ++i)
      if (z(i)) lp += oracle::log_normal(lam(i), 0, 1 / x);
    return lp;
  };
  auto log_q = [&](double x) { return oracle::log_gamma(x, c.shape, c.rate); };
  const double mean = c.shape / c.rate, sd = std::sqrt(c.shape) / c.rate;
  return oracle::max_relative_density_error(log_f, log_q, oracle::Support::positive,
                                            oracle::probes(mean, sd, oracle::Support::positive));
}

inline double ibp_alpha(Gen& g) {
  infact::IbpHyper hyper;
  hyper.a_alpha = unif(g, 0.5, 3.0);
  hyper.b_alpha = unif(g, 0.5, 3.0);
  const Index p = std::uniform_int_distribution<int>(2, 12)(g);
  const Index k_plus = std::uniform_int_distribution<int>(0, 8)(g);
  const auto c = infact::alpha_conditional(k_plus, p, hyper);
  double harmonic = 0.0;
  for (Index j = 1; j <= p; ++j) harmonic += 1.0 / static_cast<double>(j);
  // P(Z | alpha) is proportional to alpha^K+ exp(-alpha H_p)
  auto log_f = [&](double x) {
    return oracle::log_gamma(x, hyper.a_alpha, hyper.b_alpha) +
           static_cast<double>(k_plus) * std::log(x) - x * harmonic;
  };
  auto log_q = [&](double x) { return oracle::log_gamma(x, c.shape, c.rate); };
  const double mean = c.shape / c.rate, sd = std::sqrt(c.shape) / c.rate;
  return oracle::max_relative_density_error(log_f, log_q, oracle::Support::positive,
                                            oracle::probes(mean, sd, oracle::Support::positive));
}

struct Check {
  std::string name;
  double (*run)(Gen&);
};

inline std::vector<Check> all() {
  return {{"loadings_row_conditional", loadings_row},
          {"idio_conditional", idio},
          {"factor_conditional", factor},
          {"phi_conditional", phi},
          {"delta_conditional", delta},
          {"v_conditional", stick},
          {"theta_slab_conditional", theta},
          {"loading_element_conditional", loading_element},
          {"beta_conditional", ibp_beta},
          {"alpha_conditional", ibp_alpha}};
}

/// Largest error over `instances` random instances.
inline double worst_error(const Check& c, int instances, std::uint64_t seed) {
  Gen g(seed);
  double worst = 0.0;
  for (int j = 0; j < instances; ++j) worst = std::max(worst, c.run(g));
  return worst;
}

}  // namespace checks
