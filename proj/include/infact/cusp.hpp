#pragma once

#include "infact/adaptation.hpp"
#include "infact/factor_model.hpp"

namespace infact {

/// How the slab marginal of a whole loading column enters the z update.
/// `joint`: multivariate t, the exact marginal when one theta_h is shared by
/// the column.  `product`: product of univariate t marginals.
enum class SlabDensity { joint, product };

/// Cumulative shrinkage process hyperparameters: v_l ~ Beta(1, alpha), slab
/// theta_h ~ IG(a_theta, b_theta), spike theta_h = theta_inf.
struct CuspHyper {
  double alpha = 5.0;
  double a_theta = 2.0;
  double b_theta = 2.0;
  double theta_inf = 0.05;
  SlabDensity slab = SlabDensity::joint;
};

void validate(const CuspHyper& hyper);

/// Indices are 0-based throughout: z_h = l means column h is assigned to
/// mixture component l, and column h is active iff z_h > h.
struct CuspState {
  Vector theta;  // column variances
  IntVector z;   // latent assignments
  Vector v;      // stick-breaking fractions, v(H-1) == 1
  Vector w;      // stick-breaking weights

  Index H() const { return theta.size(); }
  Index active_count() const;
};

struct StickBreaking {
  Vector w;
  Vector pi;  // cumulative sums of w
};

/// w_l = v_l prod_{m<l} (1 - v_m), pi_h = sum_{l<=h} w_l.
template <typename Derived>
StickBreaking stick_breaking_weights(const Eigen::MatrixBase<Derived>& v) {
  StickBreaking out{Vector(v.size()), Vector(v.size())};
  double remaining = 1.0;
  double acc = 0.0;
  for (Index l = 0; l < v.size(); ++l) {
    out.w(l) = v(l) * remaining;
    remaining *= 1.0 - v(l);
    acc += out.w(l);
    out.pi(l) = acc;
  }
  return out;
}

/// Number of columns with z_h > h.
Index cusp_active_count(const IntVector& z);

/// Normalised log-probabilities of z_h = l, l = 0..H-1, for column h.
Vector z_conditional_logprobs(const Vector& lambda_col, const Vector& w, Index h,
                              const CuspHyper& hyper);

/// Beta conditional of v_l, 0 <= l < H-1.
dist::Beta v_conditional(Index l, const IntVector& z, const CuspHyper& hyper);

/// Slab conditional IG(a_theta + p/2, b_theta + sum(lambda^2)/2).
dist::InverseGamma theta_slab_conditional(const Vector& lambda_col, const CuspHyper& hyper);

/// theta_inf when z_h <= h, otherwise a draw from the slab conditional.
double theta_update(int z_h, Index h, const Vector& lambda_col, const CuspHyper& hyper,
                    RngStream& rng);

/// (1 - pi_h) t_{2a}(x; 0, b/a) + pi_h N(x; 0, theta_inf).
double marginal_loading_density(double x, double pi_h, const CuspHyper& hyper);

/// Initial state with H columns: v from the prior, every column but the last
/// parked in the slab with theta = b/a, the last one in the spike.
CuspState cusp_initial_state(Index H, const CuspHyper& hyper, RngStream& rng);

/// Appends one spike column (loadings from N(0, theta_inf), factor row from
/// N(0, I)) and extends the stick from its prior.
void cusp_append_spike_column(CuspState& cusp, CoreState& core, const CuspHyper& hyper,
                              RngStream& rng);

/// The branch rule of the adaptation step, applied unconditionally.
AdaptOutcome cusp_truncate(CuspState& cusp, CoreState& core, const CuspHyper& hyper,
                           RngStream& rng);

AdaptOutcome cusp_adapt(CuspState& cusp, CoreState& core, long g,
                        const AdaptationSchedule& schedule, const CuspHyper& hyper,
                        RngStream& rng);

/// One full iteration: core steps, z, v/w, theta and (if enabled) adaptation.
AdaptOutcome cusp_sweep(CuspState& cusp, CoreState& core, const Dataset& data,
                        const CorePriors& priors, const CuspHyper& hyper,
                        const AdaptationSchedule& schedule, long g, bool adapt, RngStream& rng);

}  // namespace infact
