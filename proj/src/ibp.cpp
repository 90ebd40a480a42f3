#include "infact/ibp.hpp"

#include <cmath>
#include <vector>

namespace infact {
namespace {

constexpr double kSaturation = 1e-12;

void require(bool ok, const char* message) {
  if (!ok) throw ParameterError(message);
}

double saturated_logodds() { return std::log1p(-kSaturation) - std::log(kSaturation); }

double harmonic(Index p) {
  double h = 0.0;
  for (Index j = 1; j <= p; ++j) h += 1.0 / static_cast<double>(j);
  return h;
}

Vector row_residual(const Dataset& data, const CoreState& core, Index i) {
  return data.y().col(i) - core.factors.transpose() * core.loadings.row(i).transpose();
}

void append_columns(IbpState& ibp, CoreState& core, Index n) {
  const Index k = ibp.k();
  ibp.Z.conservativeResize(ibp.Z.rows(), k + n);
  ibp.Z.rightCols(n).setZero();
  ibp.beta.conservativeResize(k + n);
  core.loadings.conservativeResize(core.loadings.rows(), k + n);
  core.loadings.rightCols(n).setZero();
  core.factors.conservativeResize(k + n, core.factors.cols());
  core.factors.bottomRows(n).setZero();
}

}  // namespace

void validate(const IbpHyper& h) {
  require(h.a_beta > 0 && h.b_beta > 0, "ibp beta hyperparameters must be positive");
  require(h.a_alpha > 0 && h.b_alpha > 0, "ibp alpha hyperparameters must be positive");
  require(h.nu > 0, "ibp nu must be positive");
  require(h.alpha_init > 0, "ibp initial alpha must be positive");
}

Index IbpState::active_count() const {
  Index n = 0;
  for (Index h = 0; h < Z.cols(); ++h) n += Z.col(h).any() ? 1 : 0;
  return n;
}

dist::Normal loading_element_conditional(const Vector& f_h, const Vector& y_i_resid, double sigma2,
                                         double beta_h) {
  require(f_h.size() == y_i_resid.size(), "factor and residual lengths differ");
  require(sigma2 > 0 && beta_h > 0, "variance and precision must be positive");
  const double precision = beta_h + f_h.squaredNorm() / sigma2;
  const double variance = 1.0 / precision;
  return {variance * f_h.dot(y_i_resid) / sigma2, variance};
}

dist::Gamma beta_conditional(const Eigen::Ref<const BinaryVector>& z_col, const Vector& lambda_col,
                             const IbpHyper& hyper) {
  require(z_col.size() == lambda_col.size(), "indicator and loading columns differ in length");
  const double active = z_col.cast<double>().sum();
  return {hyper.a_beta + 0.5 * active, hyper.b_beta + 0.5 * lambda_col.squaredNorm()};
}

double z_likelihood_logodds(const Vector& f_h, const Vector& y_i_resid, double sigma2,
                            double beta_h) {
  const double precision = beta_h + f_h.squaredNorm() / sigma2;
  const double proj = f_h.dot(y_i_resid) / sigma2;
  return 0.5 * std::log(beta_h / precision) + 0.5 * proj * proj / precision;
}

double z_prior_logodds(Index m_minus, const PriorOddsContext& ctx) {
  const auto m = static_cast<double>(m_minus);
  switch (ctx.kind) {
    case PriorOdds::finite: {
      require(ctx.pool >= 1, "finite prior odds need the pool size");
      return std::log(m + ctx.alpha / static_cast<double>(ctx.pool)) -
             std::log(static_cast<double>(ctx.p) - m);
    }
    case PriorOdds::variables:
    case PriorOdds::observations: {
      if (m_minus == 0) return -std::numeric_limits<double>::infinity();
      const Index n = ctx.kind == PriorOdds::variables ? ctx.p : ctx.T;
      const double denom = static_cast<double>(n) - 1.0 - m;
      if (denom <= 0.0) return std::numeric_limits<double>::infinity();
      return std::log(m) - std::log(denom);
    }
  }
  return 0.0;
}

double z_posterior_logodds(const Vector& f_h, const Vector& y_i_resid, double sigma2,
                           double beta_h, Index m_minus, const PriorOddsContext& ctx) {
  const double prior = z_prior_logodds(m_minus, ctx);
  if (prior == std::numeric_limits<double>::infinity()) return saturated_logodds();
  if (prior == -std::numeric_limits<double>::infinity()) return prior;
  return z_likelihood_logodds(f_h, y_i_resid, sigma2, beta_h) + prior;
}

double birth_log_ratio(const Vector& new_loadings, const Vector& resid_i, double sigma2,
                       double alpha, double nu, Index p) {
  require(p >= 2, "birth move needs p >= 2");
  const auto kappa = static_cast<long>(new_loadings.size());
  const double base = alpha / static_cast<double>(p - 1);
  const double poisson = log_poisson_pmf(kappa, base) - log_poisson_pmf(kappa, base * nu);
  if (kappa == 0) return poisson;
  const auto T = static_cast<double>(resid_i.size());
  Matrix M = new_loadings * new_loadings.transpose() / sigma2;
  M.diagonal().array() += 1.0;
  const Eigen::LLT<Matrix> llt(M);
  const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  // sum_t m_t' M m_t with m_t = M^{-1} l r_t / s2
  const Vector Minv_l = llt.solve(new_loadings);
  const double quad = resid_i.squaredNorm() * new_loadings.dot(Minv_l) / (sigma2 * sigma2);
  return -0.5 * T * log_det + 0.5 * quad + poisson;
}

BirthOutcome birth_new_factors(Index i, IbpState& ibp, CoreState& core, const Dataset& data,
                               const IbpHyper& hyper, RngStream& rng) {
  BirthOutcome out;
  const Index p = data.p();
  const Index T = data.T();
  const double rate = ibp.alpha * hyper.nu / static_cast<double>(p - 1);
  const long kappa = draw_poisson(rng, rate);
  out.proposed = kappa;
  if (kappa == 0) {
    out.log_ratio = birth_log_ratio(Vector(), Vector(), 1.0, ibp.alpha, hyper.nu, p);
    return out;
  }
  Vector beta_new(kappa);
  Vector lambda_new(kappa);
  for (long j = 0; j < kappa; ++j) {
    beta_new(j) = draw_gamma(rng, hyper.a_beta, hyper.b_beta);
    lambda_new(j) = draw_normal(rng, 0.0, 1.0 / beta_new(j));
  }
  const double s2 = core.idio_variances(i);
  const Vector resid = row_residual(data, core, i);
  out.log_ratio = birth_log_ratio(lambda_new, resid, s2, ibp.alpha, hyper.nu, p);
  if (!(std::log(rng.uniform()) < out.log_ratio)) return out;
  out.accepted = true;

  Matrix M = lambda_new * lambda_new.transpose() / s2;
  M.diagonal().array() += 1.0;
  const CanonicalGaussian shape(M, Vector::Zero(kappa));
  const Vector gain = shape.covariance() * lambda_new / s2;  // m_t = gain * r_t
  const Index k = ibp.k();
  append_columns(ibp, core, kappa);
  for (long j = 0; j < kappa; ++j) {
    ibp.Z(i, k + j) = 1;
    ibp.beta(k + j) = beta_new(j);
    core.loadings(i, k + j) = lambda_new(j);
  }
  for (Index t = 0; t < T; ++t)
    core.factors.col(t).tail(kappa) = gain * resid(t) + (shape.draw(rng) - shape.mean());
  return out;
}

dist::Gamma alpha_conditional(Index k_plus, Index p, const IbpHyper& hyper) {
  require(k_plus >= 0 && p >= 1, "need K+ >= 0 and p >= 1");
  return {hyper.a_alpha + static_cast<double>(k_plus), hyper.b_alpha + harmonic(p)};
}

Index ibp_prune(IbpState& ibp, CoreState& core) {
  std::vector<Index> keep;
  for (Index h = 0; h < ibp.k(); ++h)
    if (ibp.Z.col(h).any()) keep.push_back(h);
  if (keep.empty()) keep.push_back(0);
  const auto n = static_cast<Index>(keep.size());
  const Index removed = ibp.k() - n;
  if (removed == 0) return 0;
  BinaryMatrix Z(ibp.Z.rows(), n);
  Vector beta(n);
  Matrix loadings(core.loadings.rows(), n);
  Matrix factors(n, core.factors.cols());
  for (Index j = 0; j < n; ++j) {
    Z.col(j) = ibp.Z.col(keep[j]);
    beta(j) = ibp.beta(keep[j]);
    loadings.col(j) = core.loadings.col(keep[j]);
    factors.row(j) = core.factors.row(keep[j]);
  }
  ibp.Z = std::move(Z);
  ibp.beta = std::move(beta);
  core.loadings = std::move(loadings);
  core.factors = std::move(factors);
  return removed;
}

BinaryMatrix ibp_prior_draw(Index p, double alpha, RngStream& rng) {
  require(p >= 1 && alpha > 0, "need p >= 1 and alpha > 0");
  std::vector<std::vector<unsigned char>> cols;
  std::vector<Index> counts;
  for (Index i = 0; i < p; ++i) {
    const auto customer = static_cast<double>(i + 1);
    for (std::size_t h = 0; h < cols.size(); ++h) {
      const bool take = rng.uniform() < static_cast<double>(counts[h]) / customer;
      cols[h][static_cast<std::size_t>(i)] = take ? 1 : 0;
      counts[h] += take ? 1 : 0;
    }
    const long fresh = draw_poisson(rng, alpha / customer);
    for (long j = 0; j < fresh; ++j) {
      cols.emplace_back(static_cast<std::size_t>(p), 0);
      cols.back()[static_cast<std::size_t>(i)] = 1;
      counts.push_back(1);
    }
  }
  BinaryMatrix Z(p, static_cast<Index>(cols.size()));
  for (Index h = 0; h < Z.cols(); ++h)
    for (Index i = 0; i < p; ++i) Z(i, h) = cols[static_cast<std::size_t>(h)][static_cast<std::size_t>(i)];
  return Z;
}

IbpState ibp_initial_state(Index p, Index k, const IbpHyper& hyper, RngStream& rng) {
  require(p >= 2 && k >= 1, "need p >= 2 and k >= 1");
  IbpState s;
  s.Z.resize(p, k);
  for (Index h = 0; h < k; ++h)
    for (Index i = 0; i < p; ++i) s.Z(i, h) = draw_bernoulli(rng, 0.5) ? 1 : 0;
  s.beta = Vector::Ones(k);
  s.alpha = hyper.alpha_init;
  return s;
}

void ibp_apply_mask(const IbpState& ibp, CoreState& core) {
  core.loadings = core.loadings.cwiseProduct(ibp.Z.cast<double>());
}

IbpSweepInfo ibp_sweep(IbpState& ibp, CoreState& core, const Dataset& data,
                       const CorePriors& priors, const IbpHyper& hyper, RngStream& rng) {
  IbpSweepInfo info;
  const Index p = data.p();

  for (Index i = 0; i < p; ++i) {
    const double s2 = core.idio_variances(i);
    Vector resid = row_residual(data, core, i);
    for (Index h = 0; h < ibp.k(); ++h) {
      if (!ibp.Z(i, h)) continue;
      const Vector f_h = core.factors.row(h).transpose();
      resid += core.loadings(i, h) * f_h;
      const dist::Normal c = loading_element_conditional(f_h, resid, s2, ibp.beta(h));
      core.loadings(i, h) = draw_normal(rng, c.mean, c.variance);
      resid -= core.loadings(i, h) * f_h;
    }
  }

  update_idio_variances(core, data, priors, rng);
  update_factors(core, data, rng);

  for (Index h = 0; h < ibp.k(); ++h) {
    const dist::Gamma c = beta_conditional(ibp.Z.col(h), core.loadings.col(h), hyper);
    ibp.beta(h) = draw_gamma(rng, c.shape, c.rate);
  }

  PriorOddsContext ctx{hyper.odds, p, data.T(), ibp.k(), ibp.alpha};
  for (Index i = 0; i < p; ++i) {
    const double s2 = core.idio_variances(i);
    Vector resid = row_residual(data, core, i);
    for (Index h = 0; h < ibp.k(); ++h) {
      const Vector f_h = core.factors.row(h).transpose();
      const Index m_minus = ibp.Z.col(h).cast<Index>().sum() - (ibp.Z(i, h) ? 1 : 0);
      resid += core.loadings(i, h) * f_h;
      ctx.pool = ibp.k();
      const double lo = z_posterior_logodds(f_h, resid, s2, ibp.beta(h), m_minus, ctx);
      bool on = false;
      if (lo > -std::numeric_limits<double>::infinity()) {
        const double prob = 1.0 / (1.0 + std::exp(-lo));
        on = rng.uniform() < prob;
      }
      ibp.Z(i, h) = on ? 1 : 0;
      if (on) {
        const dist::Normal c = loading_element_conditional(f_h, resid, s2, ibp.beta(h));
        core.loadings(i, h) = draw_normal(rng, c.mean, c.variance);
      } else {
        core.loadings(i, h) = 0.0;
      }
      resid -= core.loadings(i, h) * f_h;
    }
    if (hyper.birth) {
      const BirthOutcome b = birth_new_factors(i, ibp, core, data, hyper, rng);
      if (b.accepted) info.births += b.proposed;
    }
  }

  if (hyper.update_alpha) {
    const dist::Gamma c = alpha_conditional(ibp.active_count(), p, hyper);
    ibp.alpha = draw_gamma(rng, c.shape, c.rate);
  }
  if (hyper.prune) info.pruned = ibp_prune(ibp, core);
  return info;
}

}  // namespace infact
