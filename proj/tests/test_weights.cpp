#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstddef>
#include <vector>

#include "ceitr/core.hpp"
#include "ceitr/dgp.hpp"
#include "ceitr/errors.hpp"
#include "ceitr/weights.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace ceitr;
using ceitr::test::TrueNuisance;
using ceitr::test::ZeroOutcomeNuisance;
using ceitr::test::make_subject;

namespace {

TrueNuisance make_true_nuisance(const dgp::DGPScenario& scenario,
                                const dgp::SimulatedCohort& sim) {
  TrueNuisance nu;
  nu.scenario = scenario;
  nu.grid = sim.grid;
  nu.censor_rate = sim.censor_rate_param;
  if (scenario.randomized_propensity)
    nu.fixed_propensity = *scenario.randomized_propensity;
  return nu;
}

// Fixed-value nuisance for hand-computed examples.
struct StubNuisance : nuisance::NuisanceInterface {
  double e = 0.5, k1 = 1.0, k0 = 1.0;
  double h1 = 0.0, h0 = 0.0, m1 = 0.0, m0 = 0.0;
  double mj1 = 0.0, mj0 = 0.0;
  double k_cut = -1.0;  // when >= 0: survivor is 1 up to the cut, 0 after

  double propensity(const std::vector<double>&) const override { return e; }
  double censor_survivor(int arm, double t) const override {
    if (k_cut >= 0.0) return t <= k_cut ? 1.0 : 0.0;
    return arm == 1 ? k1 : k0;
  }
  double restricted_mean(const std::vector<double>&, int arm) const override {
    return arm == 1 ? h1 : h0;
  }
  double total_cost_mean(const std::vector<double>&, int arm) const override {
    return arm == 1 ? m1 : m0;
  }
  double interval_cost_mean(std::size_t, const std::vector<double>&,
                            int arm) const override {
    return arm == 1 ? mj1 : mj0;
  }
  bool has_interval_cost() const override { return true; }
};

}  // namespace

TEST_CASE("hand-computed augmented weight on a single complete subject") {
  Cohort cohort;
  cohort.subjects.push_back(make_subject(0, {0.0}, 1, 4.0, 1, 100.0));

  StubNuisance nu;
  nu.e = 0.25;
  nu.k1 = 0.8;
  nu.k0 = 0.5;
  nu.m1 = 70.0;
  nu.m0 = 40.0;
  nu.h1 = 6.0;
  nu.h0 = 3.0;

  weights::WeightOptions opt;
  opt.estimator = weights::Estimator::kAipwUnpartitioned;
  opt.lambda = 10.0;
  const WeightVector wv = weights::compute_weights(cohort, nu, opt);

  // Cost: [100/(0.25*0.8) - 0.75*70/(0.25*0.8)] - [0 + 0.75*40/(0.75*0.5)]
  CHECK(wv.delta_m_hat[0] == doctest::Approx(157.5).epsilon(1e-12));
  // Time: [4/0.25 - 0.75*6/0.25] - [0 + 0.75*3/0.75] = -2 - 3
  CHECK(wv.delta_t_hat[0] == doctest::Approx(-5.0).epsilon(1e-12));
  CHECK(wv.w_hat[0] == doctest::Approx(-207.5).epsilon(1e-12));
  CHECK(wv.z[0] == 0);
  CHECK(wv.abs_w[0] == doctest::Approx(207.5).epsilon(1e-12));
}

TEST_CASE("hand-computed partitioned IPW weight for a censored control") {
  Cohort cohort;
  Subject s = make_subject(0, {0.0}, 0, 1.2, 0, 50.0, {30.0, 20.0});
  s.death_observed = 0;
  cohort.subjects.push_back(s);

  StubNuisance nu;
  nu.e = 0.4;
  nu.h1 = 6.0;
  nu.h0 = 3.5;

  weights::WeightOptions opt;
  opt.estimator = weights::Estimator::kIpwPartitioned;
  opt.lambda = 10.0;
  opt.grid = parse_grid("0,1,2");
  const WeightVector wv = weights::compute_weights(cohort, nu, opt);

  // Only the first interval is complete: dM = -30 / (0.6 * 1).
  CHECK(wv.delta_m_hat[0] == doctest::Approx(-50.0).epsilon(1e-12));
  // Censored: survival contrast is the model imputation -h0.
  CHECK(wv.delta_t_hat[0] == doctest::Approx(-3.5).epsilon(1e-12));
  // w = lambda * dT - dM = -35 + 50.
  CHECK(wv.w_hat[0] == doctest::Approx(15.0).epsilon(1e-12));
  CHECK(wv.z[0] == 1);
}

TEST_CASE("zero censoring collapses the partitioned IPW to plain IPW") {
  dgp::DGPScenario scenario;
  scenario.n = 250;
  scenario.seed = 1401;
  scenario.censor_target = 0.0;
  scenario.grid_intervals = 8;
  const auto sim = dgp::assemble_cohort(scenario, 50000.0);
  const TrueNuisance nu = make_true_nuisance(scenario, sim);

  weights::WeightOptions opt;
  opt.estimator = weights::Estimator::kIpwPartitioned;
  opt.lambda = 50000.0;
  opt.grid = sim.grid;
  const WeightVector wv = weights::compute_weights(sim.cohort, nu, opt);
  CHECK(wv.dropped_terms == 0);

  for (std::size_t i = 0; i < sim.cohort.size(); ++i) {
    const Subject& s = sim.cohort.subjects[i];
    REQUIRE(s.delta == 1);
    const double e = nu.propensity(s.x);
    const double a = static_cast<double>(s.a);
    const double ref_m =
        a * s.total_cost / e - (1.0 - a) * s.total_cost / (1.0 - e);
    const double ref_t = a * s.u / e - (1.0 - a) * s.u / (1.0 - e);
    CHECK(wv.delta_m_hat[i] == doctest::Approx(ref_m).epsilon(1e-9));
    CHECK(wv.delta_t_hat[i] == doctest::Approx(ref_t).epsilon(1e-12));
  }
}

TEST_CASE("one-interval grid collapses the partitioned AIPW to the whole-interval AIPW") {
  dgp::DGPScenario scenario;
  scenario.n = 400;
  scenario.seed = 1402;
  scenario.censor_target = 0.3;
  scenario.grid_intervals = 1;
  const auto sim = dgp::assemble_cohort(scenario, 50000.0);
  const TrueNuisance nu = make_true_nuisance(scenario, sim);

  weights::WeightOptions part;
  part.estimator = weights::Estimator::kAipwPartitioned;
  part.lambda = 50000.0;
  part.grid = sim.grid;
  weights::WeightOptions whole = part;
  whole.estimator = weights::Estimator::kAipwUnpartitioned;

  const WeightVector wp = weights::compute_weights(sim.cohort, nu, part);
  const WeightVector wn = weights::compute_weights(sim.cohort, nu, whole);
  for (std::size_t i = 0; i < sim.cohort.size(); ++i) {
    CHECK(wp.w_hat[i] == doctest::Approx(wn.w_hat[i]).epsilon(1e-9));
    CHECK(wp.z[i] == wn.z[i]);
  }
}

TEST_CASE("zeroed outcome models collapse the augmented estimator to IPW") {
  dgp::DGPScenario scenario;
  scenario.n = 300;
  scenario.seed = 1403;
  scenario.censor_target = 0.4;
  const auto sim = dgp::assemble_cohort(scenario, 50000.0);
  const TrueNuisance base = make_true_nuisance(scenario, sim);
  ZeroOutcomeNuisance zeroed;
  zeroed.base = &base;

  weights::WeightOptions aipw;
  aipw.estimator = weights::Estimator::kAipwPartitioned;
  aipw.lambda = 50000.0;
  aipw.grid = sim.grid;
  weights::WeightOptions ipw = aipw;
  ipw.estimator = weights::Estimator::kIpwPartitioned;

  const WeightVector wa = weights::compute_weights(sim.cohort, zeroed, aipw);
  const WeightVector wi = weights::compute_weights(sim.cohort, zeroed, ipw);
  for (std::size_t i = 0; i < sim.cohort.size(); ++i)
    CHECK(wa.w_hat[i] == doctest::Approx(wi.w_hat[i]).epsilon(1e-12));
}

TEST_CASE("censored subjects carry zero cost contrast under augmented estimators") {
  dgp::DGPScenario scenario;
  scenario.n = 400;
  scenario.seed = 1404;
  scenario.censor_target = 0.5;
  const auto sim = dgp::assemble_cohort(scenario, 50000.0);
  const TrueNuisance nu = make_true_nuisance(scenario, sim);

  weights::WeightOptions opt;
  opt.estimator = weights::Estimator::kAipwUnpartitioned;
  opt.lambda = 50000.0;
  opt.grid = sim.grid;
  const WeightVector wv = weights::compute_weights(sim.cohort, nu, opt);

  std::size_t censored = 0;
  for (std::size_t i = 0; i < sim.cohort.size(); ++i) {
    const Subject& s = sim.cohort.subjects[i];
    if (s.delta == 1) continue;
    ++censored;
    CHECK(wv.delta_m_hat[i] == 0.0);
    const double imputed = s.a == 1 ? nu.restricted_mean(s.x, 1)
                                    : -nu.restricted_mean(s.x, 0);
    CHECK(wv.delta_t_hat[i] == doctest::Approx(imputed).epsilon(1e-12));
  }
  CHECK(censored > 100);
}

TEST_CASE("regression estimator is the plug-in contrast of the outcome models") {
  dgp::DGPScenario scenario;
  scenario.n = 50;
  scenario.seed = 1405;
  const auto sim = dgp::assemble_cohort(scenario, 50000.0);
  const TrueNuisance nu = make_true_nuisance(scenario, sim);

  weights::WeightOptions opt;
  opt.estimator = weights::Estimator::kRegression;
  opt.lambda = 50000.0;
  const WeightVector wv = weights::compute_weights(sim.cohort, nu, opt);
  for (std::size_t i = 0; i < sim.cohort.size(); ++i) {
    const auto& x = sim.cohort.subjects[i].x;
    const double ref = 50000.0 * (nu.restricted_mean(x, 1) - nu.restricted_mean(x, 0)) -
                       (nu.total_cost_mean(x, 1) - nu.total_cost_mean(x, 0));
    CHECK(wv.w_hat[i] == doctest::Approx(ref).epsilon(1e-12));
    // Plug-in weights ignore observed follow-up entirely.
    CHECK(wv.z[i] == (ref > 0.0 ? 1 : 0));
  }
}

TEST_CASE("zero censoring survivor: whole-interval AIPW refuses, partitioned drops") {
  Cohort cohort;
  cohort.subjects.push_back(make_subject(0, {1.0}, 1, 12.0, 1, 900.0,
                                         {300.0, 300.0, 300.0, 0.0}));

  StubNuisance nu;
  nu.e = 0.5;
  nu.k_cut = 10.0;  // survivor collapses to zero after t = 10

  weights::WeightOptions whole;
  whole.estimator = weights::Estimator::kAipwUnpartitioned;
  whole.lambda = 1.0;
  CHECK_THROWS_AS(weights::compute_weights(cohort, nu, whole), DegenerateWeight);

  weights::WeightOptions part;
  part.estimator = weights::Estimator::kIpwPartitioned;
  part.lambda = 1.0;
  part.grid = parse_grid("0,5,10,15,20");
  const WeightVector wv = weights::compute_weights(cohort, nu, part);
  // Intervals ending at 5 and 10 contribute; the two later ones are
  // dropped because their truncated times exceed the survivor support.
  CHECK(wv.dropped_terms == 2);
  CHECK(std::isfinite(wv.w_hat[0]));
  CHECK(wv.delta_m_hat[0] == doctest::Approx((300.0 + 300.0) / 0.5).epsilon(1e-12));
}

TEST_CASE("estimator names round-trip through the parser") {
  for (auto est : {weights::Estimator::kRegression,
                   weights::Estimator::kAipwUnpartitioned,
                   weights::Estimator::kIpwPartitioned,
                   weights::Estimator::kAipwPartitioned})
    CHECK(weights::parse_estimator(weights::estimator_name(est)) == est);
  CHECK_THROWS(weights::parse_estimator("banana"));
}

TEST_CASE("augmented weights track the counterfactual contrast on average") {
  // Small-scale version of the unbiasedness gate: randomized treatment,
  // 20% censoring, closed-form nuisances.
  const double lambda = 50000.0;
  double sum_diff = 0.0, sum_sq = 0.0;
  const int reps = 40;
  const std::size_t n = 800;
  for (int rep = 0; rep < reps; ++rep) {
    dgp::DGPScenario scenario;
    scenario.n = n;
    scenario.seed = 52000 + static_cast<std::uint64_t>(rep);
    scenario.censor_target = 0.2;
    scenario.randomized_propensity = 0.5;
    const auto sim = dgp::assemble_cohort(scenario, lambda);
    const TrueNuisance nu = make_true_nuisance(scenario, sim);

    weights::WeightOptions opt;
    opt.estimator = weights::Estimator::kAipwPartitioned;
    opt.lambda = lambda;
    opt.grid = sim.grid;
    const WeightVector wv = weights::compute_weights(sim.cohort, nu, opt);

    double rep_diff = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      rep_diff += wv.w_hat[i] - (sim.potentials[i].y1 - sim.potentials[i].y0);
    rep_diff /= static_cast<double>(n);
    sum_diff += rep_diff;
    sum_sq += rep_diff * rep_diff;
  }
  const double mean_diff = sum_diff / reps;
  const double sd = std::sqrt(sum_sq / reps - mean_diff * mean_diff);
  const double se = sd / std::sqrt(static_cast<double>(reps));
  CHECK(std::abs(mean_diff) < 4.0 * se + 2000.0);
}
