#include "doctest.h"
#include "infact/cusp.hpp"
#include "support/conditional_checks.hpp"
#include "support/geweke.hpp"

using namespace infact;

namespace {

struct Fixture {
  CuspHyper hyper;
  CuspState cusp;
  CoreState core;
};

Fixture make_fixture(Index p, Index H, Index T, RngStream& rng) {
  Fixture f;
  f.cusp = cusp_initial_state(H, f.hyper, rng);
  f.core.loadings = Matrix(p, H);
  for (Index j = 0; j < f.core.loadings.size(); ++j) f.core.loadings(j) = draw_normal(rng);
  f.core.idio_variances = Vector::Ones(p);
  f.core.factors = Matrix(H, T);
  for (Index j = 0; j < f.core.factors.size(); ++j) f.core.factors(j) = draw_normal(rng);
  return f;
}

void check_invariants(const CuspState& c, const CoreState& core, const CuspHyper& hyper) {
  const Index H = c.H();
  REQUIRE(H >= 1);
  CHECK(c.z.size() == H);
  CHECK(c.v.size() == H);
  CHECK(c.w.size() == H);
  CHECK(core.loadings.cols() == H);
  CHECK(core.factors.rows() == H);
  CHECK(c.v(H - 1) == 1.0);
  CHECK(std::abs(c.w.sum() - 1.0) < 1e-12);
  for (Index h = 0; h < H; ++h) {
    CHECK(c.z(h) >= 0);
    CHECK(c.z(h) < H);
    CHECK((c.theta(h) == hyper.theta_inf) == (c.z(h) <= h));
  }
  CHECK(c.active_count() <= H - 1);
}

/// log of the column marginal under theta ~ IG(a, b), lambda_i ~ N(0, theta).
double hierarchy_log_marginal(const Vector& lam, const CuspHyper& hyper) {
  return oracle::log_normalizer(
      [&](double theta) {
        double lp = oracle::log_inv_gamma(theta, hyper.a_theta, hyper.b_theta);
        for (Index i = 0; i < lam.size(); ++i) lp += oracle::log_normal(lam(i), 0, theta);
        return lp;
      },
      oracle::Support::positive, 20001);
}

}  // namespace

TEST_CASE("stick-breaking weights") {
  const auto a = stick_breaking_weights(Vector{{0.5, 0.5, 1.0}});
  CHECK(a.w == Vector{{0.5, 0.25, 0.25}});
  CHECK(a.pi == Vector{{0.5, 0.75, 1.0}});
  const auto b = stick_breaking_weights(Vector{{1.0}});
  CHECK(b.w == Vector{{1.0}});
  CHECK(b.pi == Vector{{1.0}});

  RngStream rng(1);
  for (int rep = 0; rep < 100; ++rep) {
    Vector v(20);
    for (Index l = 0; l < 19; ++l) v(l) = draw_beta(rng, 1.0, 5.0);
    v(19) = 1.0;
    const auto s = stick_breaking_weights(v);
    CHECK(std::abs(s.w.sum() - 1.0) < 1e-12);
    CHECK(s.pi(19) == doctest::Approx(1.0).epsilon(1e-12));
    for (Index l = 0; l < 20; ++l) {
      double w = v(l);
      for (Index m = 0; m < l; ++m) w *= 1.0 - v(m);
      CHECK(std::abs(s.w(l) - w) < 1e-15);
      if (l > 0) CHECK(s.pi(l) >= s.pi(l - 1));
    }
  }
}

TEST_CASE("z log-probabilities") {
  CuspHyper hyper;
  const Vector zero = Vector::Zero(1);
  const double spike = log_isotropic_normal_pdf(zero, 0.05);
  CHECK(spike == doctest::Approx(-0.5 * std::log(2.0 * std::numbers::pi * 0.05)).epsilon(1e-12));
  CHECK(spike == doctest::Approx(0.578928).epsilon(1e-6));
  CHECK(log_isotropic_mvt_pdf(zero, 4.0, 1.0) == doctest::Approx(std::log(3.0 / 8.0)));
  const Vector lp = z_conditional_logprobs(zero, Vector{{0.5, 0.5}}, 0, hyper);
  CHECK(lp(0) > lp(1));

  const Vector degenerate = z_conditional_logprobs(Vector::Ones(4), Vector{{0.0, 1.0, 0.0}}, 1, hyper);
  CHECK(degenerate(1) == 0.0);
  CHECK(degenerate(0) == -INFINITY);
  CHECK_THROWS_AS(z_conditional_logprobs(Vector::Ones(4), Vector::Zero(3), 0, hyper), NumericError);
}

TEST_CASE("z log-probabilities match independent density evaluation") {
  checks::Gen g(3);
  for (int rep = 0; rep < 20; ++rep) {
    CuspHyper hyper;
    hyper.a_theta = checks::unif(g, 1.0, 3.0);
    hyper.b_theta = checks::unif(g, 0.5, 3.0);
    const Index p = 5, H = 4;
    const Vector lam = checks::gauss_matrix(g, p, 1, checks::unif(g, 0.05, 2.0));
    Vector v(H);
    for (Index l = 0; l + 1 < H; ++l) v(l) = checks::unif(g, 0.1, 0.9);
    v(H - 1) = 1.0;
    const Vector w = stick_breaking_weights(v).w;
    const auto h = static_cast<Index>(rep % H);
    const Vector lp = z_conditional_logprobs(lam, w, h, hyper);
    CHECK(std::abs(lp.array().exp().sum() - 1.0) < 1e-12);

    double spike = 0.0;
    for (Index i = 0; i < p; ++i) spike += oracle::log_normal(lam(i), 0, hyper.theta_inf);
    const double slab = hierarchy_log_marginal(lam, hyper);
    Vector ref(H);
    for (Index l = 0; l < H; ++l) ref(l) = std::log(w(l)) + (l <= h ? spike : slab);
    const double m = ref.maxCoeff();
    ref.array() -= m + std::log((ref.array() - m).exp().sum());
    CHECK((lp - ref).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("the joint slab is the exact column marginal, the product form is not") {
  CuspHyper hyper;
  const Vector lam{{0.4, -1.3, 0.8, 2.1}};
  const double exact = hierarchy_log_marginal(lam, hyper);
  CHECK(std::abs(log_isotropic_mvt_pdf(lam, 2 * hyper.a_theta, hyper.b_theta / hyper.a_theta) -
                 exact) < 1e-8);
  double product = 0.0;
  for (Index i = 0; i < lam.size(); ++i)
    product += log_student_t_pdf(lam(i), 2 * hyper.a_theta, 0, hyper.b_theta / hyper.a_theta);
  CHECK(std::abs(product - exact) > 1e-2);
  // a single coordinate is where the two agree
  const Vector one{{0.7}};
  CHECK(std::abs(log_student_t_pdf(0.7, 4.0, 0.0, 1.0) - hierarchy_log_marginal(one, hyper)) <
        1e-8);
}

TEST_CASE("v conditional counts") {
  CuspHyper hyper;
  const auto prior = v_conditional(2, IntVector{{0, 1, 0, 1, 1}}, hyper);
  CHECK(prior.a == 1.0);
  CHECK(prior.b == hyper.alpha);
  const auto c = v_conditional(0, IntVector{{0, 0, 2}}, hyper);
  CHECK(c.a == 3.0);
  CHECK(c.b == 6.0);

  RngStream rng(2);
  for (int rep = 0; rep < 50; ++rep) {
    IntVector z(8);
    for (Index h = 0; h < 8; ++h) z(h) = static_cast<int>(rng() % 8);
    const Index l = rep % 7;
    double eq = 0, above = 0;
    for (Index h = 0; h < 8; ++h) {
      eq += z(h) == l;
      above += z(h) > l;
    }
    const auto b = v_conditional(l, z, hyper);
    CHECK(b.a == 1.0 + eq);
    CHECK(b.b == hyper.alpha + above);
  }
}

TEST_CASE("theta update branches") {
  CuspHyper hyper;
  RngStream rng(3);
  CHECK(theta_update(2, 2, Vector::Ones(3), hyper, rng) == 0.05);
  CHECK(theta_update(0, 2, Vector::Ones(3), hyper, rng) == 0.05);
  const auto c = theta_slab_conditional(Vector::Zero(10), hyper);
  CHECK(c.shape == 7.0);
  CHECK(c.scale == 2.0);
  CHECK(theta_update(3, 2, Vector::Ones(3), hyper, rng) != 0.05);
}

TEST_CASE("CUSP conditionals agree with grid-normalised posteriors") {
  for (const auto& c : checks::all()) {
    if (c.name != "v_conditional" && c.name != "theta_slab_conditional") continue;
    CAPTURE(c.name);
    CHECK(checks::worst_error(c, 20, 29) < 1e-6);
  }
}

TEST_CASE("marginal loading density") {
  CuspHyper hyper;
  CHECK(marginal_loading_density(0.0, 1.0, hyper) ==
        doctest::Approx(1.0 / std::sqrt(2 * M_PI * 0.05)));
  CHECK(marginal_loading_density(0.0, 1.0, hyper) == doctest::Approx(1.7841).epsilon(1e-4));
  CHECK(marginal_loading_density(0.0, 0.0, hyper) == doctest::Approx(3.0 / 8.0));

  // kernel density estimate at x = 1 from draws of the hierarchy
  RngStream rng(4);
  const int n = 1000000;
  const double bw = 0.05, x = 1.0;
  double acc = 0.0;
  for (int j = 0; j < n; ++j) {
    const double theta = rng.uniform() < 0.5 ? hyper.theta_inf
                                             : draw_inverse_gamma(rng, hyper.a_theta, hyper.b_theta);
    const double lam = draw_normal(rng, 0.0, theta);
    const double u = (lam - x) / bw;
    acc += std::exp(-0.5 * u * u);
  }
  const double kde = acc / (n * bw * std::sqrt(2 * M_PI));
  CHECK(std::abs(kde / marginal_loading_density(x, 0.5, hyper) - 1.0) < 0.02);
}

TEST_CASE("expected number of active columns under the prior") {
  CuspHyper hyper;
  const Index H = 30;
  const double r = hyper.alpha / (1.0 + hyper.alpha);
  double analytic = 0.0;  // sum_h (1 - E[pi_h])
  for (Index h = 0; h + 1 < H; ++h) analytic += std::pow(r, static_cast<double>(h + 1));

  RngStream rng(5);
  const int n = 20000;
  std::vector<double> counts(n);
  for (int j = 0; j < n; ++j) {
    Vector v(H);
    for (Index l = 0; l + 1 < H; ++l) v(l) = draw_beta(rng, 1.0, hyper.alpha);
    v(H - 1) = 1.0;
    const Vector lw = stick_breaking_weights(v).w.array().log();
    IntVector z(H);
    for (Index h = 0; h < H; ++h) z(h) = static_cast<int>(draw_categorical(rng, lw));
    counts[j] = static_cast<double>(cusp_active_count(z));
  }
  const auto m = oracle::moments(counts);
  CHECK(std::abs(m.mean - analytic) < 3.0 * std::sqrt(m.variance / n));
}

TEST_CASE("initial state") {
  CuspHyper hyper;
  RngStream rng(6);
  auto f = make_fixture(5, 6, 10, rng);
  check_invariants(f.cusp, f.core, hyper);
  CHECK(f.cusp.active_count() == 5);
}

TEST_CASE("truncation branch rule") {
  RngStream rng(7);
  SUBCASE("all but the last active: grow by one spike column") {
    auto f = make_fixture(5, 4, 10, rng);
    const Matrix before = f.core.loadings;
    const auto out = cusp_truncate(f.cusp, f.core, f.hyper, rng);
    CHECK(out.added == 1);
    CHECK(out.removed == 0);
    CHECK(f.cusp.H() == 5);
    CHECK(f.cusp.theta(4) == f.hyper.theta_inf);
    CHECK(f.cusp.z(4) <= 4);
    CHECK(f.core.loadings.leftCols(4) == before);
    check_invariants(f.cusp, f.core, f.hyper);
  }
  SUBCASE("H = 5 with two active columns shrinks to three") {
    auto f = make_fixture(5, 5, 10, rng);
    f.cusp.z = IntVector{{3, 0, 4, 1, 2}};  // columns 0 and 2 active
    for (Index h = 0; h < 5; ++h)
      f.cusp.theta(h) = f.cusp.z(h) > h ? 1.5 : f.hyper.theta_inf;
    const Matrix before = f.core.loadings;
    const auto out = cusp_truncate(f.cusp, f.core, f.hyper, rng);
    CHECK(f.cusp.H() == 3);
    CHECK(out.removed == 3);
    CHECK(f.core.loadings.col(0) == before.col(0));
    CHECK(f.core.loadings.col(1) == before.col(2));
    CHECK(f.cusp.active_count() == 2);
    CHECK(f.cusp.theta(2) == f.hyper.theta_inf);
    check_invariants(f.cusp, f.core, f.hyper);
  }
}

TEST_CASE("a thousand adaptations keep every array consistent") {
  RngStream rng(8);
  auto f = make_fixture(6, 7, 12, rng);
  long shrinks = 0, grows = 0;
  for (int j = 0; j < 1000; ++j) {
    // random reassignment of z, respecting the spike coupling
    const Index H = f.cusp.H();
    for (Index h = 0; h < H; ++h) {
      f.cusp.z(h) = static_cast<int>(rng() % static_cast<std::uint32_t>(H));
      f.cusp.theta(h) = f.cusp.z(h) <= h ? f.hyper.theta_inf : 1.0 + rng.uniform();
    }
    const auto out = cusp_truncate(f.cusp, f.core, f.hyper, rng);
    shrinks += out.removed > 0;
    grows += out.removed == 0;
    check_invariants(f.cusp, f.core, f.hyper);
  }
  CHECK(shrinks > 50);
  CHECK(grows > 50);
}

TEST_CASE("CUSP Gibbs sweep passes a joint-distribution test") {
  const auto r = geweke::cusp(20000, RngStream(78));
  for (std::size_t j = 0; j < r.z.size(); ++j) {
    CAPTURE(r.names[j]);
    CHECK(std::abs(r.z[j]) < 4.0);
  }
}
