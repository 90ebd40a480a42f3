#include "infact/mgp.hpp"

#include <algorithm>
#include <cmath>

namespace infact {
namespace {

void require(bool ok, const char* message) {
  if (!ok) throw ParameterError(message);
}

std::vector<Index> complement(Index n, const std::vector<Index>& sorted_drop) {
  std::vector<Index> keep;
  for (Index c = 0, r = 0; c < n; ++c) {
    if (r < static_cast<Index>(sorted_drop.size()) && sorted_drop[r] == c) {
      ++r;
      continue;
    }
    keep.push_back(c);
  }
  return keep;
}

template <typename M>
void erase_columns(M& m, const std::vector<Index>& sorted_cols) {
  const std::vector<Index> keep = complement(m.cols(), sorted_cols);
  M out(m.rows(), static_cast<Index>(keep.size()));
  for (Index j = 0; j < out.cols(); ++j) out.col(j) = m.col(keep[j]);
  m = std::move(out);
}

template <typename M>
void erase_rows(M& m, const std::vector<Index>& sorted_rows) {
  const std::vector<Index> keep = complement(m.rows(), sorted_rows);
  M out(static_cast<Index>(keep.size()), m.cols());
  for (Index j = 0; j < out.rows(); ++j) out.row(j) = m.row(keep[j]);
  m = std::move(out);
}

}  // namespace

void validate(const MgpHyper& h) {
  require(h.nu1 > 0 && h.nu2 > 0, "mgp nu1 and nu2 must be positive");
  require(h.b1 > 0 && h.b2 > 0, "mgp b1 and b2 must be positive");
  require(h.a_prior_shape > 0 && h.a_prior_rate > 0, "mgp a-hyperprior must be positive");
  require(h.s1 > 0 && h.s2 > 0, "mgp proposal standard deviations must be positive");
  require(h.a1_init > 0 && h.a2_init > 0, "mgp initial a1, a2 must be positive");
  require(h.epsilon > 0, "mgp epsilon must be positive");
  require(h.prop_required > 0 && h.prop_required <= 1, "mgp prop_required must lie in (0, 1]");
}

Matrix MgpState::loading_precisions() const { return phi * tau.asDiagonal(); }

dist::Gamma phi_conditional(double lambda_ih, double tau_h, const MgpHyper& hyper) {
  require(tau_h > 0.0, "tau must be positive");
  return {0.5 * (hyper.nu1 + 1.0), 0.5 * (hyper.nu2 + tau_h * lambda_ih * lambda_ih)};
}

dist::Gamma delta_conditional(Index h, const MgpState& state, const LoadingMatrix& loadings,
                              const MgpHyper& hyper) {
  const Index k = state.k_star();
  const Index p = loadings.rows();
  require(h >= 0 && h < k, "delta index out of range");
  require(loadings.cols() == k && state.phi.cols() == k, "delta, phi and loadings disagree in k");
  double rate_sum = 0.0;
  double tau_excl = 1.0;  // prod_{t <= l, t != h} delta_t
  for (Index l = 0; l < k; ++l) {
    if (l != h) tau_excl *= state.delta(l);
    if (l < h) continue;
    const double weighted =
        (state.phi.col(l).array() * loadings.col(l).array().square()).sum();
    rate_sum += tau_excl * weighted;
  }
  const double a = h == 0 ? state.a1 : state.a2;
  const double b = h == 0 ? hyper.b1 : hyper.b2;
  const double shape = 0.5 * (2.0 * a + static_cast<double>(p * (k - h)));
  return {shape, b + 0.5 * rate_sum};
}

double shape_log_posterior(ShapeParam which, double a, const Vector& delta, const MgpHyper& hyper) {
  if (!(a > 0.0)) return -std::numeric_limits<double>::infinity();
  double lp = log_gamma_pdf(a, hyper.a_prior_shape, hyper.a_prior_rate);
  if (which == ShapeParam::a1) {
    if (delta.size() >= 1) lp += log_gamma_pdf(delta(0), a, hyper.b1);
  } else {
    for (Index l = 1; l < delta.size(); ++l) lp += log_gamma_pdf(delta(l), a, hyper.b2);
  }
  return lp;
}

MhResult mh_shape_decision(ShapeParam which, double current, double proposal, double uniform,
                           const Vector& delta, const MgpHyper& hyper) {
  if (!(proposal > 0.0))
    return {current, false, -std::numeric_limits<double>::infinity()};
  const double log_ratio = shape_log_posterior(which, proposal, delta, hyper) -
                           shape_log_posterior(which, current, delta, hyper);
  if (log_ratio >= 0.0 || std::log(uniform) < log_ratio) return {proposal, true, log_ratio};
  return {current, false, log_ratio};
}

MhResult mh_update_shape(ShapeParam which, double current, const Vector& delta,
                         const MgpHyper& hyper, RngStream& rng) {
  require(current > 0.0, "current shape must be positive");
  const double s = which == ShapeParam::a1 ? hyper.s1 : hyper.s2;
  const double proposal = current + s * draw_normal(rng);
  if (!(proposal > 0.0)) return {current, false, -std::numeric_limits<double>::infinity()};
  return mh_shape_decision(which, current, proposal, rng.uniform(), delta, hyper);
}

ShrinkageConditions check_increasing_shrinkage(double a1, double a2, double b2) {
  require(a1 > 0 && a2 > 0 && b2 > 0, "a1, a2 and b2 must be positive");
  return {a2 > b2 + 1.0, a2 > a1};
}

Index mgp_default_truncation(Index p, Index T) {
  const double lp = std::log(static_cast<double>(p));
  if (p > T) return static_cast<Index>(std::ceil(10.0 * lp));
  return std::min(p, static_cast<Index>(std::ceil(5.0 * lp)));
}

MgpState mgp_initial_state(Index p, Index k0, const MgpHyper& hyper, RngStream& rng) {
  require(p >= 1 && k0 >= 1, "need p >= 1 and k0 >= 1");
  MgpState s;
  s.a1 = hyper.a1_init;
  s.a2 = hyper.a2_init;
  s.delta.resize(k0);
  s.delta(0) = draw_gamma(rng, s.a1, hyper.b1);
  for (Index h = 1; h < k0; ++h) s.delta(h) = draw_gamma(rng, s.a2, hyper.b2);
  s.tau = tau_from_delta(s.delta);
  s.phi.resize(p, k0);
  for (Index h = 0; h < k0; ++h)
    for (Index i = 0; i < p; ++i) s.phi(i, h) = draw_gamma(rng, 0.5 * hyper.nu1, 0.5 * hyper.nu2);
  return s;
}

void mgp_append_prior_column(MgpState& mgp, CoreState& core, const MgpHyper& hyper,
                             RngStream& rng) {
  const Index p = core.p();
  const Index k = core.k();
  const Index T = core.factors.cols();
  const bool first = k == 0;
  const double delta = first ? draw_gamma(rng, mgp.a1, hyper.b1) : draw_gamma(rng, mgp.a2, hyper.b2);
  mgp.delta.conservativeResize(k + 1);
  mgp.delta(k) = delta;
  mgp.tau = tau_from_delta(mgp.delta);
  mgp.phi.conservativeResize(p, k + 1);
  core.loadings.conservativeResize(p, k + 1);
  for (Index i = 0; i < p; ++i) {
    mgp.phi(i, k) = draw_gamma(rng, 0.5 * hyper.nu1, 0.5 * hyper.nu2);
    core.loadings(i, k) = draw_normal(rng, 0.0, 1.0 / (mgp.phi(i, k) * mgp.tau(k)));
  }
  core.factors.conservativeResize(k + 1, T);
  core.factors.row(k) = draw_standard_normal(rng, T).transpose();
}

AdaptOutcome mgp_truncate(MgpState& mgp, CoreState& core, const MgpHyper& hyper, RngStream& rng) {
  AdaptOutcome out;
  out.fired = true;
  std::vector<Index> redundant =
      redundant_columns(core.loadings, hyper.epsilon, hyper.prop_required);
  if (redundant.empty()) {
    mgp_append_prior_column(mgp, core, hyper, rng);
    out.added = 1;
    return out;
  }
  if (static_cast<Index>(redundant.size()) == core.k()) redundant.erase(redundant.begin());
  if (redundant.empty()) return out;
  erase_columns(core.loadings, redundant);
  erase_columns(mgp.phi, redundant);
  erase_rows(mgp.delta, redundant);
  erase_rows(core.factors, redundant);
  mgp.tau = tau_from_delta(mgp.delta);
  out.removed = static_cast<long>(redundant.size());
  return out;
}

AdaptOutcome mgp_adapt(MgpState& mgp, CoreState& core, long g, const AdaptationSchedule& schedule,
                       const MgpHyper& hyper, RngStream& rng) {
  if (g < schedule.burn_in_gate) return {};
  if (rng.uniform() > adaptation_probability(g, schedule)) return {};
  return mgp_truncate(mgp, core, hyper, rng);
}

MgpSweepInfo mgp_sweep(MgpState& mgp, CoreState& core, const Dataset& data,
                       const CorePriors& priors, const MgpHyper& hyper,
                       const AdaptationSchedule& schedule, long g, bool adapt, RngStream& rng) {
  MgpSweepInfo info;
  update_loadings(core, data, mgp.loading_precisions(), rng);
  update_idio_variances(core, data, priors, rng);
  update_factors(core, data, rng);

  const Index p = core.p();
  const Index k = core.k();
  for (Index h = 0; h < k; ++h)
    for (Index i = 0; i < p; ++i) {
      const dist::Gamma c = phi_conditional(core.loadings(i, h), mgp.tau(h), hyper);
      mgp.phi(i, h) = draw_gamma(rng, c.shape, c.rate);
    }

  for (Index h = 0; h < k; ++h) {
    const dist::Gamma c = delta_conditional(h, mgp, core.loadings, hyper);
    mgp.delta(h) = draw_gamma(rng, c.shape, c.rate);
    mgp.tau = tau_from_delta(mgp.delta);
  }

  if (hyper.update_shapes) {
    const MhResult r1 = mh_update_shape(ShapeParam::a1, mgp.a1, mgp.delta, hyper, rng);
    mgp.a1 = r1.value;
    info.a1_accepted = r1.accepted;
    const MhResult r2 = mh_update_shape(ShapeParam::a2, mgp.a2, mgp.delta, hyper, rng);
    mgp.a2 = r2.value;
    info.a2_accepted = r2.accepted;
  }

  if (adapt) info.adapt = mgp_adapt(mgp, core, g, schedule, hyper, rng);
  return info;
}

}  // namespace infact
