#pragma once

#include "infact/factor_model.hpp"

namespace infact {

/// Prior odds used for z_ih given the other rows of column h.
///  - variables:    m / (p - 1 - m), variables are the IBP customers
///  - observations: m / (T - 1 - m)
///  - finite:       (m + alpha/k) / (p - m), the exact Beta-Bernoulli
///                  conditional for a fixed pool of k columns
enum class PriorOdds { variables, observations, finite };

struct IbpHyper {
  double a_beta = 1.0;
  double b_beta = 1.0;
  double a_alpha = 1.0;
  double b_alpha = 1.0;
  double nu = 1.0;  // birth proposal tuning
  double alpha_init = 1.0;
  PriorOdds odds = PriorOdds::variables;
  bool birth = true;
  bool update_alpha = true;
  bool prune = true;
};

void validate(const IbpHyper& hyper);

using BinaryMatrix = MatrixX<unsigned char>;
using BinaryVector = VectorX<unsigned char>;

struct IbpState {
  BinaryMatrix Z;  // p x k inclusion indicators
  Vector beta;     // column precisions
  double alpha = 1.0;

  Index k() const { return beta.size(); }
  /// Columns with at least one active entry.
  Index active_count() const;
};

/// Normal conditional of lambda_ih given z_ih = 1 and the partial residual
/// of row i without factor h.
dist::Normal loading_element_conditional(const Vector& f_h, const Vector& y_i_resid, double sigma2,
                                         double beta_h);

/// G(a_beta + sum(z)/2, b_beta + sum(lambda^2)/2) over the column.
dist::Gamma beta_conditional(const Eigen::Ref<const BinaryVector>& z_col, const Vector& lambda_col,
                             const IbpHyper& hyper);

/// Context for the prior-odds term of the z update.
struct PriorOddsContext {
  PriorOdds kind = PriorOdds::variables;
  Index p = 0;
  Index T = 0;
  Index pool = 0;  // k, used by the finite variant
  double alpha = 1.0;
};

/// Likelihood part of log p(z=1|-)/p(z=0|-) with lambda_ih integrated out.
double z_likelihood_logodds(const Vector& f_h, const Vector& y_i_resid, double sigma2,
                            double beta_h);
/// Prior part; -inf for a column nobody else uses (outside the finite
/// variant) and clamped at the saturated end.
double z_prior_logodds(Index m_minus, const PriorOddsContext& ctx);
/// Full posterior log-odds.  When the prior odds saturate the probability of
/// z = 1 is pinned at 1 - 1e-12.
double z_posterior_logodds(const Vector& f_h, const Vector& y_i_resid, double sigma2,
                           double beta_h, Index m_minus, const PriorOddsContext& ctx);

/// log of the birth acceptance ratio for kappa new factors private to one
/// variable: log N(r; 0, s2 + |l|^2) - log N(r; 0, s2) summed over t, plus
/// the Poisson prior/proposal ratio.
double birth_log_ratio(const Vector& new_loadings, const Vector& resid_i, double sigma2,
                       double alpha, double nu, Index p);

struct BirthOutcome {
  long proposed = 0;
  bool accepted = false;
  double log_ratio = 0.0;
};

/// MH birth of new factors active only for variable i.
BirthOutcome birth_new_factors(Index i, IbpState& ibp, CoreState& core, const Dataset& data,
                               const IbpHyper& hyper, RngStream& rng);

dist::Gamma alpha_conditional(Index k_plus, Index p, const IbpHyper& hyper);

/// Removes columns whose indicator column is all zero, keeping at least one
/// column.  Returns the number removed.
Index ibp_prune(IbpState& ibp, CoreState& core);

/// Draw of Z from the IBP prior with p customers (variables).
BinaryMatrix ibp_prior_draw(Index p, double alpha, RngStream& rng);

/// Initial state: k columns, Bernoulli(1/2) indicators, unit precisions.
IbpState ibp_initial_state(Index p, Index k, const IbpHyper& hyper, RngStream& rng);

/// Zeroes loadings wherever Z is zero.
void ibp_apply_mask(const IbpState& ibp, CoreState& core);

struct IbpSweepInfo {
  long births = 0;
  long pruned = 0;
};

/// One iteration: loadings elementwise, variances, factors, beta, then for
/// each variable the z flips followed by the birth move, then alpha and
/// pruning.
IbpSweepInfo ibp_sweep(IbpState& ibp, CoreState& core, const Dataset& data,
                       const CorePriors& priors, const IbpHyper& hyper, RngStream& rng);

}  // namespace infact
