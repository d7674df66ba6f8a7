#include "ceitr/nuisance.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "ceitr/dgp.hpp"
#include "ceitr/errors.hpp"
#include "linalg.hpp"

namespace ceitr::nuisance {

namespace {

constexpr double kSeparationNorm = 30.0;
constexpr std::size_t kGlmMaxIterations = 50;

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

double clamp_exp(double eta) { return std::exp(std::min(eta, 50.0)); }

// Accumulates X'WX and X'Wy for a weighted least-squares normal system.
struct NormalSystem {
  std::size_t dim;
  std::vector<double> xtwx;  // dim x dim, row-major
  std::vector<double> xtwy;  // dim

  explicit NormalSystem(std::size_t d) : dim(d), xtwx(d * d, 0.0), xtwy(d, 0.0) {}

  void add(const std::vector<double>& row, double weight, double response) {
    for (std::size_t r = 0; r < dim; ++r) {
      const double wr = weight * row[r];
      xtwy[r] += wr * response;
      for (std::size_t c = r; c < dim; ++c) xtwx[r * dim + c] += wr * row[c];
    }
  }

  std::vector<double> solve() {
    for (std::size_t r = 0; r < dim; ++r)
      for (std::size_t c = 0; c < r; ++c) xtwx[r * dim + c] = xtwx[c * dim + r];
    return linalg::solve_spd(xtwx, dim, xtwy);
  }
};

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double out = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    out = std::max(out, std::abs(a[i] - b[i]));
  return out;
}

// Damped Newton ascent over a concave log-likelihood.  `evaluate` fills
// the gradient and negative Hessian (as an SPD normal system) and
// returns the log-likelihood at the supplied coefficients.
template <typename Evaluate>
std::vector<double> newton_ascent(std::size_t dim, const Evaluate& evaluate,
                                  std::size_t max_iterations, double tolerance,
                                  std::vector<double> coef) {
  std::vector<double> gradient(dim, 0.0);
  double ll = evaluate(coef, nullptr, nullptr);
  for (std::size_t iter = 0; iter < max_iterations; ++iter) {
    NormalSystem hessian(dim);
    std::fill(gradient.begin(), gradient.end(), 0.0);
    evaluate(coef, &gradient, &hessian);
    hessian.xtwy = gradient;
    std::vector<double> step = hessian.solve();

    // Halve the step until the log-likelihood stops decreasing.
    std::vector<double> candidate(dim);
    double scale = 1.0;
    double candidate_ll = -std::numeric_limits<double>::infinity();
    for (int halving = 0; halving < 40; ++halving) {
      for (std::size_t k = 0; k < dim; ++k)
        candidate[k] = coef[k] + scale * step[k];
      candidate_ll = evaluate(candidate, nullptr, nullptr);
      if (candidate_ll >= ll - 1e-12 * (1.0 + std::abs(ll))) break;
      scale *= 0.5;
    }
    const double change = max_abs_diff(candidate, coef);
    coef = candidate;
    ll = candidate_ll;
    if (change < tolerance) break;
  }
  return coef;
}

}  // namespace

std::vector<std::size_t> ModelSpec::active_interactions() const {
  std::vector<std::size_t> active;
  for (std::size_t idx : interaction_covariates) {
    if (misspecified && idx == 0) continue;
    active.push_back(idx);
  }
  return active;
}

std::vector<double> outcome_design_row(const std::vector<double>& x, int a,
                                       const ModelSpec& spec) {
  std::vector<double> row;
  row.reserve(x.size() + 2 + spec.interaction_covariates.size());
  row.push_back(1.0);
  row.insert(row.end(), x.begin(), x.end());
  row.push_back(static_cast<double>(a));
  for (std::size_t idx : spec.active_interactions()) {
    if (idx >= x.size()) throw InvalidState("interaction index out of range");
    row.push_back(static_cast<double>(a) * x[idx]);
  }
  return row;
}

double PropensityFit::predict(const std::vector<double>& x) const {
  if (x.size() + 1 != coef.size())
    throw InvalidState("propensity covariate dimension mismatch");
  double eta = coef[0];
  for (std::size_t k = 0; k < x.size(); ++k) eta += coef[k + 1] * x[k];
  const double p = 1.0 / (1.0 + std::exp(-eta));
  return std::clamp(p, clip, 1.0 - clip);
}

PropensityFit fit_propensity(const std::vector<std::vector<double>>& X,
                             const std::vector<int>& A, const ModelSpec& spec) {
  if (X.empty() || X.size() != A.size())
    throw InvalidState("propensity fit needs aligned covariates and arms");
  const std::size_t n = X.size();
  const std::size_t dim = X[0].size() + 1;

  std::vector<std::vector<double>> rows(n);
  for (std::size_t i = 0; i < n; ++i) {
    rows[i].reserve(dim);
    rows[i].push_back(1.0);
    rows[i].insert(rows[i].end(), X[i].begin(), X[i].end());
  }

  auto evaluate = [&](const std::vector<double>& coef,
                      std::vector<double>* gradient,
                      NormalSystem* hessian) -> double {
    double ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double eta = dot(rows[i], coef);
      // log(1 + e^eta) computed stably for both signs of eta.
      const double log1pe =
          eta > 0.0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta));
      ll += A[i] * eta - log1pe;
      if (gradient != nullptr) {
        const double p = 1.0 / (1.0 + std::exp(-eta));
        const double resid = A[i] - p;
        for (std::size_t k = 0; k < dim; ++k)
          (*gradient)[k] += resid * rows[i][k];
        hessian->add(rows[i], std::max(p * (1.0 - p), 1e-10), 0.0);
      }
    }
    return ll;
  };

  PropensityFit fit;
  fit.clip = spec.propensity_clip;
  fit.coef = newton_ascent(dim, evaluate, spec.max_iterations, spec.tolerance,
                           std::vector<double>(dim, 0.0));
  const double norm = std::sqrt(dot(fit.coef, fit.coef));
  fit.separation_flag = norm > kSeparationNorm;
  return fit;
}

double StepFunction::left_limit(double t) const {
  // Product of drop factors at jump times strictly before t.
  const auto it = std::lower_bound(jump_times.begin(), jump_times.end(), t);
  const std::size_t idx = static_cast<std::size_t>(it - jump_times.begin());
  return idx == 0 ? 1.0 : after_value[idx - 1];
}

CensorFit fit_censor_survivor(const std::vector<double>& U,
                              const std::vector<int>& delta,
                              const std::vector<int>& A) {
  if (U.size() != delta.size() || U.size() != A.size())
    throw InvalidState("censor fit needs aligned columns");
  CensorFit fit;
  for (int arm = 0; arm < 2; ++arm) {
    // Product-limit over the censoring distribution: a censoring is the
    // event, a death or administrative end is treated as censored.
    std::vector<std::pair<double, int>> obs;  // (time, is_censoring_event)
    for (std::size_t i = 0; i < U.size(); ++i)
      if (A[i] == arm) obs.emplace_back(U[i], delta[i] == 0 ? 1 : 0);
    std::sort(obs.begin(), obs.end());

    StepFunction& surv = fit.survivor[static_cast<std::size_t>(arm)];
    double value = 1.0;
    std::size_t at_risk = obs.size();
    std::size_t i = 0;
    while (i < obs.size()) {
      const double t = obs[i].first;
      std::size_t events = 0;
      std::size_t total = 0;
      while (i < obs.size() && obs[i].first == t) {
        events += static_cast<std::size_t>(obs[i].second);
        ++total;
        ++i;
      }
      if (events > 0) {
        value *= 1.0 - static_cast<double>(events) / static_cast<double>(at_risk);
        surv.jump_times.push_back(t);
        surv.after_value.push_back(value);
      }
      at_risk -= total;
    }
  }
  return fit;
}

double SurvivalFit::rate(const std::vector<double>& x, int a) const {
  return clamp_exp(dot(outcome_design_row(x, a, spec), coef));
}

double SurvivalFit::restricted_mean(const std::vector<double>& x, int a) const {
  return dgp::restricted_mean_exponential(rate(x, a), tau);
}

double SurvivalFit::survivor(double t, const std::vector<double>& x,
                             int a) const {
  return std::exp(-rate(x, a) * t);
}

SurvivalFit fit_survival_outcome(const std::vector<std::vector<double>>& X,
                                 const std::vector<int>& A,
                                 const std::vector<double>& U,
                                 const std::vector<int>& delta,
                                 const ModelSpec& spec, double tau) {
  if (X.empty() || X.size() != A.size() || X.size() != U.size() ||
      X.size() != delta.size())
    throw InvalidState("survival fit needs aligned columns");
  const std::size_t n = X.size();

  std::vector<std::vector<double>> rows(n);
  for (std::size_t i = 0; i < n; ++i) rows[i] = outcome_design_row(X[i], A[i], spec);
  const std::size_t dim = rows[0].size();

  // Exponential likelihood: sum of delta*eta - U*exp(eta).
  auto evaluate = [&](const std::vector<double>& coef,
                      std::vector<double>* gradient,
                      NormalSystem* hessian) -> double {
    double ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double eta = dot(rows[i], coef);
      const double mean_events = U[i] * clamp_exp(eta);
      ll += delta[i] * eta - mean_events;
      if (gradient != nullptr) {
        const double resid = delta[i] - mean_events;
        for (std::size_t k = 0; k < dim; ++k)
          (*gradient)[k] += resid * rows[i][k];
        hessian->add(rows[i], std::max(mean_events, 1e-10), 0.0);
      }
    }
    return ll;
  };

  SurvivalFit fit;
  fit.spec = spec;
  fit.tau = tau;
  fit.coef = newton_ascent(dim, evaluate, spec.max_iterations, spec.tolerance,
                           std::vector<double>(dim, 0.0));
  return fit;
}

namespace {

// Gamma-family deviance with the zero-response-safe convention.
double gamma_deviance(const std::vector<double>& y,
                      const std::vector<double>& mu) {
  double dev = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double ratio = y[i] == 0.0 ? 1.0 : y[i] / mu[i];
    dev += 2.0 * (-std::log(ratio) + (y[i] - mu[i]) / mu[i]);
  }
  return dev;
}

// IRLS for a log-link gamma GLM.  Returns the coefficient vector;
// throws FitFailure when the normal equations cannot be solved.
std::vector<double> gamma_glm(const std::vector<std::vector<double>>& rows,
                              const std::vector<double>& y, double tolerance) {
  const std::size_t n = rows.size();
  const std::size_t dim = rows[0].size();

  double mean_y = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  std::vector<double> coef(dim, 0.0);
  coef[0] = mean_y > 0.0 ? std::log(mean_y) : 0.0;

  std::vector<double> mu(n);
  auto refresh_mu = [&]() {
    for (std::size_t i = 0; i < n; ++i)
      mu[i] = std::max(clamp_exp(dot(rows[i], coef)), 1e-300);
  };
  refresh_mu();
  double deviance = gamma_deviance(y, mu);

  for (std::size_t iter = 0; iter < kGlmMaxIterations; ++iter) {
    // Log link with gamma variance gives unit IRLS weights and working
    // response eta + (y - mu) / mu.
    NormalSystem system(dim);
    for (std::size_t i = 0; i < n; ++i) {
      const double eta = std::log(mu[i]);
      system.add(rows[i], 1.0, eta + (y[i] - mu[i]) / mu[i]);
    }
    const std::vector<double> previous = coef;
    coef = system.solve();
    refresh_mu();
    double updated = gamma_deviance(y, mu);
    // Halve the step while the deviance got worse; IRLS overshoots on
    // ill-conditioned designs and zero-heavy responses.
    for (int half = 0; half < 12 && !(updated <= deviance); ++half) {
      for (std::size_t k = 0; k < dim; ++k)
        coef[k] = 0.5 * (coef[k] + previous[k]);
      refresh_mu();
      updated = gamma_deviance(y, mu);
    }
    // Both the fit quality and the coefficients must have settled;
    // deviance alone can stall while the score is still visibly nonzero.
    if (std::abs(updated - deviance) < tolerance * (std::abs(deviance) + 0.1) &&
        max_abs_diff(coef, previous) < tolerance)
      break;
    deviance = updated;
  }
  if (!std::isfinite(deviance) ||
      std::any_of(coef.begin(), coef.end(),
                  [](double c) { return !std::isfinite(c); }))
    throw FitFailure("gamma regression diverged");
  return coef;
}

}  // namespace

double CostFit::predict(const std::vector<double>& x, int a) const {
  return std::min(clamp_exp(dot(outcome_design_row(x, a, spec), coef)),
                  response_cap);
}

CostFit fit_cost_outcome(const std::vector<std::vector<double>>& X,
                         const std::vector<int>& A,
                         const std::vector<double>& M,
                         const std::vector<int>& delta, const ModelSpec& spec) {
  std::vector<std::vector<double>> rows;
  std::vector<double> y;
  for (std::size_t i = 0; i < X.size(); ++i) {
    if (delta[i] != 1) continue;  // total cost is observed only at delta = 1
    rows.push_back(outcome_design_row(X[i], A[i], spec));
    y.push_back(M[i]);
  }
  if (rows.empty() || rows.size() < rows[0].size())
    throw FitFailure("too few complete observations for the cost model");

  CostFit fit;
  fit.spec = spec;
  fit.coef = gamma_glm(rows, y, spec.tolerance);
  fit.response_cap = *std::max_element(y.begin(), y.end());
  return fit;
}

std::size_t IntervalCostFit::fallback_count() const {
  std::size_t count = 0;
  for (const auto& interval : intervals)
    if (interval.fallback) ++count;
  return count;
}

double IntervalCostFit::predict(std::size_t interval,
                                const std::vector<double>& x, int a) const {
  if (interval >= intervals.size())
    throw InvalidState("interval index out of range");
  const Interval& fit = intervals[interval];
  if (fit.fallback) return fit.arm_mean[static_cast<std::size_t>(a)];
  return std::min(clamp_exp(dot(outcome_design_row(x, a, spec), fit.coef)),
                  fit.response_cap);
}

IntervalCostFit fit_interval_cost(const Cohort& cohort,
                                  const PartitionGrid& grid,
                                  const ModelSpec& spec) {
  const std::size_t J = grid.intervals();
  IntervalCostFit fit;
  fit.spec = spec;
  fit.intervals.resize(J);

  for (std::size_t j = 0; j < J; ++j) {
    // Usable subjects: cost over (t_j, t_{j+1}] fully observed.
    std::vector<std::vector<double>> rows;
    std::vector<double> y;
    std::vector<int> arms;
    for (const Subject& s : cohort.subjects) {
      if (s.cost_history.size() != J)
        throw InvalidState("cost history does not match the grid");
      if (s.delta != 1 && s.u < grid.knots[j + 1]) continue;
      rows.push_back(outcome_design_row(s.x, s.a, spec));
      y.push_back(s.cost_history[j]);
      arms.push_back(s.a);
    }

    IntervalCostFit::Interval& interval = fit.intervals[j];
    const bool all_zero =
        std::all_of(y.begin(), y.end(), [](double v) { return v == 0.0; });
    bool use_fallback = rows.size() < spec.min_interval_count || all_zero;
    if (!use_fallback) {
      try {
        interval.coef = gamma_glm(rows, y, spec.tolerance);
        interval.response_cap = *std::max_element(y.begin(), y.end());
      } catch (const FitFailure&) {
        use_fallback = true;  // degenerate design; fall back to arm means
      }
    }
    if (use_fallback) {
      interval.fallback = true;
      std::array<double, 2> sums{0.0, 0.0};
      std::array<std::size_t, 2> counts{0, 0};
      for (std::size_t i = 0; i < y.size(); ++i) {
        sums[static_cast<std::size_t>(arms[i])] += y[i];
        ++counts[static_cast<std::size_t>(arms[i])];
      }
      for (int arm = 0; arm < 2; ++arm) {
        const auto a = static_cast<std::size_t>(arm);
        interval.arm_mean[a] =
            counts[a] == 0 ? 0.0 : sums[a] / static_cast<double>(counts[a]);
      }
    }
  }
  return fit;
}

NuisanceFit fit_nuisance(const Cohort& cohort, const PartitionGrid& grid,
                         const ModelSpec& spec, double tau) {
  const std::size_t n = cohort.subjects.size();
  if (n == 0) throw InvalidState("cannot fit nuisances on an empty cohort");

  std::vector<std::vector<double>> X(n);
  std::vector<int> A(n), delta(n), death(n);
  std::vector<double> U(n), M(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Subject& s = cohort.subjects[i];
    X[i] = s.x;
    A[i] = s.a;
    U[i] = s.u;
    delta[i] = s.delta;
    death[i] = s.death_observed;
    M[i] = s.total_cost;
  }

  NuisanceFit fit;
  fit.propensity_fit = fit_propensity(X, A, spec);
  fit.censor_fit = fit_censor_survivor(U, delta, A);
  // The hazard model's events are observed deaths; subjects reaching the
  // horizon alive are right-censored at tau, like those censored earlier.
  fit.survival_fit = fit_survival_outcome(X, A, U, death, spec, tau);
  fit.cost_fit = fit_cost_outcome(X, A, M, delta, spec);

  const bool have_history =
      grid.intervals() > 0 &&
      std::all_of(cohort.subjects.begin(), cohort.subjects.end(),
                  [&](const Subject& s) {
                    return s.cost_history.size() == grid.intervals();
                  });
  if (have_history) fit.interval_cost_fit = fit_interval_cost(cohort, grid, spec);
  return fit;
}

}  // namespace ceitr::nuisance
