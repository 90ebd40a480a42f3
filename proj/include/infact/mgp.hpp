#pragma once

#include <vector>

#include "infact/adaptation.hpp"
#include "infact/factor_model.hpp"

namespace infact {

/// Multiplicative gamma process hyperparameters.  phi ~ G(nu1/2, nu2/2),
/// delta_1 ~ G(a1, b1), delta_l ~ G(a2, b2) for l >= 2, and a1, a2 each carry a
/// G(a_prior_shape, a_prior_rate) hyperprior sampled by random-walk MH with
/// proposal standard deviations s1, s2.
struct MgpHyper {
  double nu1 = 3.0;
  double nu2 = 3.0;
  double b1 = 1.0;
  double b2 = 1.0;
  double a_prior_shape = 2.0;
  double a_prior_rate = 1.0;
  double s1 = 0.5;
  double s2 = 0.5;
  double a1_init = 2.1;
  double a2_init = 3.1;
  bool update_shapes = true;
  // A column is redundant when at least ceil(prop_required * p) of its
  // loadings are smaller than epsilon in absolute value.
  double epsilon = 0.01;
  double prop_required = 0.8;
};

void validate(const MgpHyper& hyper);

struct MgpState {
  Matrix phi;    // p x k local shrinkage
  Vector delta;  // length k
  Vector tau;    // cumulative product of delta
  double a1 = 2.1;
  double a2 = 3.1;

  Index k_star() const { return delta.size(); }
  /// phi_ih * tau_h, the prior precision of each loading.
  Matrix loading_precisions() const;
};

/// tau_h = prod_{l <= h} delta_l.
template <typename Derived>
VectorX<typename Derived::Scalar> tau_from_delta(const Eigen::MatrixBase<Derived>& delta) {
  VectorX<typename Derived::Scalar> tau(delta.size());
  typename Derived::Scalar acc(1);
  for (Index h = 0; h < delta.size(); ++h) {
    acc *= delta(h);
    tau(h) = acc;
  }
  return tau;
}

dist::Gamma phi_conditional(double lambda_ih, double tau_h, const MgpHyper& hyper);

/// Gamma conditional of delta_h (0-based column h) given everything else.
dist::Gamma delta_conditional(Index h, const MgpState& state, const LoadingMatrix& loadings,
                              const MgpHyper& hyper);

enum class ShapeParam { a1, a2 };

/// Log of the unnormalised conditional of a1 (given delta_1) or a2 (given
/// delta_2..delta_k).
double shape_log_posterior(ShapeParam which, double a, const Vector& delta, const MgpHyper& hyper);

struct MhResult {
  double value;
  bool accepted;
  double log_ratio;
};

/// Accept/reject a given proposal with the given uniform; proposals <= 0 are
/// rejected outright.
MhResult mh_shape_decision(ShapeParam which, double current, double proposal, double uniform,
                           const Vector& delta, const MgpHyper& hyper);

/// Random-walk MH update of a1 or a2.  On rejection value == current.
MhResult mh_update_shape(ShapeParam which, double current, const Vector& delta,
                         const MgpHyper& hyper, RngStream& rng);

/// Columns (0-based, ascending) whose loadings are mostly inside (-epsilon, epsilon).
template <typename Derived>
std::vector<Index> redundant_columns(const Eigen::MatrixBase<Derived>& loadings, double epsilon,
                                     double prop_required) {
  if (!(prop_required > 0.0 && prop_required <= 1.0))
    throw ParameterError("prop_required must lie in (0, 1]");
  const auto required = static_cast<Index>(
      std::ceil(prop_required * static_cast<double>(loadings.rows()) - 1e-12));
  std::vector<Index> out;
  for (Index h = 0; h < loadings.cols(); ++h) {
    const Index small = (loadings.col(h).array().abs() < epsilon).count();
    if (small >= required) out.push_back(h);
  }
  return out;
}

/// Step 7: with probability p(g) drop redundant columns (keeping at least
/// one) or, when none is redundant, append a column drawn from the prior.
AdaptOutcome mgp_adapt(MgpState& mgp, CoreState& core, long g, const AdaptationSchedule& schedule,
                       const MgpHyper& hyper, RngStream& rng);

/// Removes/appends columns without any randomness in the decision; used by
/// mgp_adapt and by the dimension audits.
AdaptOutcome mgp_truncate(MgpState& mgp, CoreState& core, const MgpHyper& hyper, RngStream& rng);

struct ShrinkageConditions {
  bool rate;   // a2 > b2 + 1
  bool order;  // a2 > a1
};

ShrinkageConditions check_increasing_shrinkage(double a1, double a2, double b2);

/// Smallest k* whose leading columns plus the noise explain at least a
/// fraction q of trace(Omega).
template <typename LoadingsDerived, typename IdioDerived>
Index variance_explained_rank(const Eigen::MatrixBase<LoadingsDerived>& loadings,
                              const Eigen::MatrixBase<IdioDerived>& idio_variances, double q) {
  if (!(q > 0.0 && q < 1.0)) throw ParameterError("variance fraction must lie in (0, 1)");
  const double noise = idio_variances.sum();
  const auto col_sq = loadings.colwise().squaredNorm().eval();
  const double total = col_sq.sum() + noise;
  double explained = noise;
  for (Index h = 0; h < loadings.cols(); ++h) {
    explained += col_sq(h);
    if (explained >= q * total) return h + 1;
  }
  return loadings.cols();
}

/// Default starting truncation: min(p, ceil(5 ln p)), or ceil(10 ln p) when
/// p > T.
Index mgp_default_truncation(Index p, Index T);

MgpState mgp_initial_state(Index p, Index k0, const MgpHyper& hyper, RngStream& rng);

/// Draws a new column's parameters from the prior and appends them.
void mgp_append_prior_column(MgpState& mgp, CoreState& core, const MgpHyper& hyper,
                             RngStream& rng);

struct MgpSweepInfo {
  bool a1_accepted = false;
  bool a2_accepted = false;
  AdaptOutcome adapt;
};

/// One full iteration: core steps 1-3, phi, delta, the a1/a2 MH moves and
/// (if enabled) adaptation at iteration g.
MgpSweepInfo mgp_sweep(MgpState& mgp, CoreState& core, const Dataset& data,
                       const CorePriors& priors, const MgpHyper& hyper,
                       const AdaptationSchedule& schedule, long g, bool adapt, RngStream& rng);

}  // namespace infact
