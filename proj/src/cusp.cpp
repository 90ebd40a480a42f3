#include "infact/cusp.hpp"

#include <vector>

namespace infact {
namespace {

void require(bool ok, const char* message) {
  if (!ok) throw ParameterError(message);
}

void refresh_weights(CuspState& cusp) { cusp.w = stick_breaking_weights(cusp.v).w; }

}  // namespace

void validate(const CuspHyper& h) {
  require(h.alpha > 0, "cusp alpha must be positive");
  require(h.a_theta > 0 && h.b_theta > 0, "cusp slab parameters must be positive");
  require(h.theta_inf > 0, "cusp theta_inf must be positive");
}

Index cusp_active_count(const IntVector& z) {
  Index n = 0;
  for (Index h = 0; h < z.size(); ++h) n += z(h) > h ? 1 : 0;
  return n;
}

Index CuspState::active_count() const { return cusp_active_count(z); }

Vector z_conditional_logprobs(const Vector& lambda_col, const Vector& w, Index h,
                              const CuspHyper& hyper) {
  const Index H = w.size();
  require(h >= 0 && h < H, "column index out of range");
  const double spike = log_isotropic_normal_pdf(lambda_col, hyper.theta_inf);
  const double dof = 2.0 * hyper.a_theta;
  const double scale = hyper.b_theta / hyper.a_theta;
  double slab = 0.0;
  if (hyper.slab == SlabDensity::joint) {
    slab = log_isotropic_mvt_pdf(lambda_col, dof, scale);
  } else {
    for (Index i = 0; i < lambda_col.size(); ++i)
      slab += log_student_t_pdf(lambda_col(i), dof, 0.0, scale);
  }
  Vector lp(H);
  for (Index l = 0; l < H; ++l) lp(l) = std::log(w(l)) + (l <= h ? spike : slab);
  normalize_log_weights(lp);
  return lp;
}

dist::Beta v_conditional(Index l, const IntVector& z, const CuspHyper& hyper) {
  require(l >= 0 && l < z.size() - 1, "stick index out of range");
  double equal = 0.0;
  double above = 0.0;
  for (Index h = 0; h < z.size(); ++h) {
    if (z(h) == l) equal += 1.0;
    if (z(h) > l) above += 1.0;
  }
  return {1.0 + equal, hyper.alpha + above};
}

dist::InverseGamma theta_slab_conditional(const Vector& lambda_col, const CuspHyper& hyper) {
  return {hyper.a_theta + 0.5 * static_cast<double>(lambda_col.size()),
          hyper.b_theta + 0.5 * lambda_col.squaredNorm()};
}

double theta_update(int z_h, Index h, const Vector& lambda_col, const CuspHyper& hyper,
                    RngStream& rng) {
  if (z_h <= h) return hyper.theta_inf;
  const dist::InverseGamma c = theta_slab_conditional(lambda_col, hyper);
  return draw_inverse_gamma(rng, c.shape, c.scale);
}

double marginal_loading_density(double x, double pi_h, const CuspHyper& hyper) {
  require(pi_h >= 0.0 && pi_h <= 1.0, "pi_h must lie in [0, 1]");
  const double slab =
      std::exp(log_student_t_pdf(x, 2.0 * hyper.a_theta, 0.0, hyper.b_theta / hyper.a_theta));
  const double spike = std::exp(log_normal_pdf(x, 0.0, hyper.theta_inf));
  return (1.0 - pi_h) * slab + pi_h * spike;
}

CuspState cusp_initial_state(Index H, const CuspHyper& hyper, RngStream& rng) {
  require(H >= 1, "need at least one column");
  CuspState s;
  s.v.resize(H);
  for (Index l = 0; l + 1 < H; ++l) s.v(l) = draw_beta(rng, 1.0, hyper.alpha);
  s.v(H - 1) = 1.0;
  refresh_weights(s);
  s.z = IntVector::Constant(H, static_cast<int>(H - 1));
  s.theta = Vector::Constant(H, hyper.b_theta / hyper.a_theta);
  s.theta(H - 1) = hyper.theta_inf;
  return s;
}

void cusp_append_spike_column(CuspState& cusp, CoreState& core, const CuspHyper& hyper,
                              RngStream& rng) {
  const Index H = cusp.H();
  const Index p = core.p();
  const Index T = core.factors.cols();
  cusp.v.conservativeResize(H + 1);
  if (H > 0) cusp.v(H - 1) = draw_beta(rng, 1.0, hyper.alpha);
  cusp.v(H) = 1.0;
  refresh_weights(cusp);
  cusp.theta.conservativeResize(H + 1);
  cusp.theta(H) = hyper.theta_inf;
  cusp.z.conservativeResize(H + 1);
  cusp.z(H) = static_cast<int>(H);
  core.loadings.conservativeResize(p, H + 1);
  for (Index i = 0; i < p; ++i) core.loadings(i, H) = draw_normal(rng, 0.0, hyper.theta_inf);
  core.factors.conservativeResize(H + 1, T);
  core.factors.row(H) = draw_standard_normal(rng, T).transpose();
}

AdaptOutcome cusp_truncate(CuspState& cusp, CoreState& core, const CuspHyper& hyper,
                           RngStream& rng) {
  AdaptOutcome out;
  out.fired = true;
  const Index H = cusp.H();
  std::vector<Index> active;
  for (Index h = 0; h < H; ++h)
    if (cusp.z(h) > h) active.push_back(h);
  const auto n_active = static_cast<Index>(active.size());

  if (n_active < H - 1) {
    const Index p = core.p();
    const Index T = core.factors.cols();
    Matrix loadings(p, n_active);
    Matrix factors(n_active, T);
    Vector theta(n_active);
    Vector v(n_active);
    for (Index j = 0; j < n_active; ++j) {
      loadings.col(j) = core.loadings.col(active[j]);
      factors.row(j) = core.factors.row(active[j]);
      theta(j) = cusp.theta(active[j]);
      v(j) = cusp.v(active[j]);
    }
    core.loadings = std::move(loadings);
    core.factors = std::move(factors);
    cusp.theta = std::move(theta);
    cusp.v = std::move(v);
    // Keep the active columns in the slab under the new indexing; the fresh
    // spike column appended below gets z = H_new - 1.
    cusp.z = IntVector::Constant(n_active, static_cast<int>(n_active));
    // The appended column closes the stick with v = 1; the previous last
    // fraction keeps its value.
    const Index H_new = n_active + 1;
    cusp.v.conservativeResize(H_new);
    cusp.v(n_active) = 1.0;
    refresh_weights(cusp);
    cusp.theta.conservativeResize(H_new);
    cusp.theta(n_active) = hyper.theta_inf;
    cusp.z.conservativeResize(H_new);
    cusp.z(n_active) = static_cast<int>(n_active);
    core.loadings.conservativeResize(p, H_new);
    for (Index i = 0; i < p; ++i)
      core.loadings(i, n_active) = draw_normal(rng, 0.0, hyper.theta_inf);
    core.factors.conservativeResize(H_new, T);
    core.factors.row(n_active) = draw_standard_normal(rng, T).transpose();
    out.removed = static_cast<long>(H - n_active);
    out.added = 1;
    return out;
  }
  cusp_append_spike_column(cusp, core, hyper, rng);
  out.added = 1;
  return out;
}

AdaptOutcome cusp_adapt(CuspState& cusp, CoreState& core, long g,
                        const AdaptationSchedule& schedule, const CuspHyper& hyper,
                        RngStream& rng) {
  if (g < schedule.burn_in_gate) return {};
  if (rng.uniform() > adaptation_probability(g, schedule)) return {};
  return cusp_truncate(cusp, core, hyper, rng);
}

AdaptOutcome cusp_sweep(CuspState& cusp, CoreState& core, const Dataset& data,
                        const CorePriors& priors, const CuspHyper& hyper,
                        const AdaptationSchedule& schedule, long g, bool adapt, RngStream& rng) {
  const Index p = core.p();
  const Index H = cusp.H();
  const Matrix precisions = Matrix::Ones(p, 1) * cusp.theta.cwiseInverse().transpose();
  update_loadings(core, data, precisions, rng);
  update_idio_variances(core, data, priors, rng);
  update_factors(core, data, rng);

  for (Index h = 0; h < H; ++h) {
    const Vector lp = z_conditional_logprobs(core.loadings.col(h), cusp.w, h, hyper);
    cusp.z(h) = static_cast<int>(draw_categorical(rng, lp));
  }

  for (Index l = 0; l + 1 < H; ++l) {
    const dist::Beta b = v_conditional(l, cusp.z, hyper);
    cusp.v(l) = draw_beta(rng, b.a, b.b);
  }
  cusp.v(H - 1) = 1.0;
  refresh_weights(cusp);

  for (Index h = 0; h < H; ++h)
    cusp.theta(h) = theta_update(cusp.z(h), h, core.loadings.col(h), hyper, rng);

  if (!adapt) return {};
  return cusp_adapt(cusp, core, g, schedule, hyper, rng);
}

}  // namespace infact
