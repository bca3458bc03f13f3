#include "aespg/spg.hpp"

#include "aespg/data.hpp"
#include "aespg/rng.hpp"

#include <chrono>
#include <cmath>

namespace aespg {

namespace {

double smoothed_mu_derivative(const Variables& z, double mu, const ProblemData& data,
                              const ModelParams& params) {
  const double h = 1e-6 * mu;
  return (eval_smoothed_H(z, mu + h, data, params) * (mu + h) -
          eval_smoothed_H(z, mu - h, data, params) * (mu - h)) /
         (2.0 * h);
}

Variables random_box_point(Rng& rng, const Dimensions& d, double radius) {
  Vector z(d.packed_size());
  for (Index i = 0; i < z.size(); ++i) z[i] = radius * (2.0 * rng.uniform() - 1.0);
  return Variables::unpack(z, d);
}

}  // namespace

void validate(const SpgConfig& c) {
  if (!(c.mu0 > 0.0 && c.mu0 < 1.0)) throw ParameterError("mu0 must lie in (0, 1)");
  if (!(c.tau1 > 0.0 && c.tau1 < 1.0)) throw ParameterError("tau1 must lie in (0, 1)");
  if (!(c.tau2 > 0.0)) throw ParameterError("tau2 must be positive");
  if (!(c.tau3 >= 1.0)) throw ParameterError("tau3 must be at least 1");
  if (c.L0 && !(*c.L0 >= 1.0)) throw ParameterError("L0 must be at least 1");
  if (!(c.epsilon > 0.0)) throw ParameterError("epsilon must be positive");
  if (c.max_outer_iters < 0) throw ParameterError("max_outer_iters must be nonnegative");
  if (!(c.divergence_factor > 1.0)) throw ParameterError("divergence factor must exceed 1");
}

std::optional<std::string> schedule_warning(const SpgConfig& c) {
  if (c.tau1 * c.tau3 < 1.0) {
    return "tau1 * tau3 = " + format_number(c.tau1 * c.tau3) +
           " < 1; the monotonicity guarantee does not apply";
  }
  return std::nullopt;
}

double default_L0(const ProblemData& data, const ModelParams& params) {
  const double N = static_cast<double>(data.N());
  const double n0 = static_cast<double>(data.n0());
  const double n1 = static_cast<double>(data.n1());
  return std::max({1.0, std::sqrt(n0 * n1 / N), params.beta, n0 / 30.0});
}

Variables init_variables(const ProblemData& data, std::uint64_t seed) {
  Rng rng(seed, RngStream::Init);
  Variables z = Variables::zeros(data.dims());
  z.W = rng.randn(data.n1(), data.n0()) / static_cast<double>(data.N());
  z.V = (z.W * data.X()).cwiseMax(0.0);
  return z;
}

SpgStep spg_step(const Variables& z, double mu, double L, const ProblemData& data,
                 const ModelParams& params, const SpgConfig& config) {
  return spg_step(z, eval_smoothed_with_gradient(z, mu, data, params), mu, L, data, params, config);
}

SpgStep spg_step(const Variables& z, const SmoothedEvaluation& at_z, double mu, double L,
                 const ProblemData& data, const ModelParams& params, const SpgConfig& config) {
  if (!(mu > 0.0 && mu < 1.0)) throw ParameterError("mu must lie in (0, 1)");
  if (!(L >= 1.0)) throw ParameterError("L must be at least 1");

  SubproblemSpec spec{data, params, z, at_z.grad, L, mu};
  SamqpOptions sub = config.sub;
  if (config.penalty_tracks_L) sub.penalty = L;
  SamqpResult solved = solve_subproblem(spec, sub);

  SpgStep step;
  step.smoothed_before = at_z.objective();
  step.smoothed_after = eval_smoothed_objective(solved.z, mu, data, params);
  step.sub_iters = solved.iterations;
  step.sub_converged = solved.converged;
  step.b1_clamped = solved.b1_clamped;
  step.z = std::move(solved.z);
  step.accepted = step.smoothed_after - step.smoothed_before < -config.tau2 * mu / L;
  step.mu = step.accepted ? mu : config.tau1 * mu;
  step.L = step.accepted ? L : config.tau3 * L;
  return step;
}

double stationarity_diagnostic(const Variables& z_prev, const Variables& z_next, double lambda2,
                               double L) {
  return (2.0 * lambda2 + L) * (z_next.pack() - z_prev.pack()).norm();
}

SpgResult run_spg(const ProblemData& data, const ModelParams& params, const SpgConfig& config,
                  const std::optional<Variables>& z0, const Matrix* test, const TraceSink& sink) {
  validate(config);
  using Clock = std::chrono::steady_clock;
  const Clock::time_point start = Clock::now();

  SpgResult result;
  result.z = z0 ? *z0 : init_variables(data, config.seed);
  if (!feasibility(result.z, data, params).in_Z) throw ParameterError("initial point is not in Z");

  double mu = config.mu0;
  double L = config.L0 ? *config.L0 : default_L0(data, params);
  SmoothedEvaluation eval = eval_smoothed_with_gradient(result.z, mu, data, params);
  const double initial = eval.objective();

  const auto record = [&](long k, std::optional<long> sub_iters) {
    const Metrics m = compute_metrics(result.z, data, params, test);
    TraceRow row;
    row.k = k;
    row.mu = mu;
    row.L = L;
    row.fval = m.fval;
    row.smoothed = eval.objective();
    row.feasvi = m.feasvi;
    row.trainerr = m.trainerr;
    row.testerr = m.testerr;
    row.sub_iters = sub_iters;
    row.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
    result.trace.rows.push_back(row);
    if (sink) sink(row);
  };

  record(0, 0);
  for (long k = 0;; ++k) {
    if (mu <= config.epsilon) {
      result.trace.termination = kTerminatedMu;
      break;
    }
    if (k >= config.max_outer_iters) {
      result.trace.termination = kTerminatedMaxIter;
      break;
    }
    SpgStep step = spg_step(result.z, eval, mu, L, data, params, config);
    result.diagnostics.push_back({k, step.accepted,
                                  stationarity_diagnostic(result.z, step.z, params.lambda2, L),
                                  step.sub_converged, step.b1_clamped});
    result.z = std::move(step.z);
    mu = step.mu;
    L = step.L;
    eval = eval_smoothed_with_gradient(result.z, mu, data, params);
    if (!std::isfinite(eval.objective()) || !eval.grad.all_finite()) {
      throw NumericError("non-finite smoothed objective at outer iteration " + std::to_string(k + 1),
                         result.z.pack());
    }
    record(k + 1, step.sub_iters);
    if (initial > 0.0 && eval.objective() > config.divergence_factor * initial) {
      result.trace.termination = kTerminatedDiverged;
      result.message = "smoothed objective " + format_number(eval.objective()) + " exceeds " +
                       format_number(config.divergence_factor) + "x its initial value " +
                       format_number(initial) + "; try a larger L0";
      break;
    }
  }
  return result;
}

LipschitzEstimate estimate_lipschitz(const ProblemData& data, const ModelParams& params,
                                     std::uint64_t seed, int samples, double safety_factor) {
  if (samples < 1) throw ParameterError("need at least one sample");
  const Dimensions d = data.dims();
  const double n1n0 = static_cast<double>(d.n1 * d.n0);
  LipschitzEstimate est;
  est.eta = std::max(std::sqrt(n1n0 * params.theta / params.lambda2), params.theta / params.lambda1);
  est.radius = std::max(params.alpha, 2.0 * est.eta);

  Rng rng(seed, RngStream::Sampling);
  for (int s = 0; s < samples; ++s) {
    const Variables z = random_box_point(rng, d, est.radius);
    const double mu = std::max(1e-6, rng.uniform());
    const SmoothedEvaluation e = eval_smoothed_with_gradient(z, mu, data, params);
    const Vector g = e.grad.pack();
    const double dmu = smoothed_mu_derivative(z, mu, data, params);
    est.L_H = std::max(est.L_H, std::sqrt(mu * mu * g.squaredNorm() + dmu * dmu));

    // Nearby and distant partners for the gradient modulus.
    for (const double scale : {1e-3, 1.0}) {
      Vector dz(d.packed_size());
      for (Index i = 0; i < dz.size(); ++i) dz[i] = scale * est.radius * (2.0 * rng.uniform() - 1.0);
      const Variables z2 = Variables::unpack((z.pack() + dz).cwiseMax(-est.radius).cwiseMin(est.radius), d);
      const Vector step = z2.pack() - z.pack();
      if (step.norm() == 0.0) continue;
      const Vector g2 = grad_smoothed_H(z2, mu, data, params).pack();
      est.L_gradH = std::max(est.L_gradH, mu * (g2 - g).norm() / step.norm());
    }
  }
  est.L_H *= safety_factor;
  est.L_gradH *= safety_factor;
  const double N2 = static_cast<double>(d.packed_size());
  const double first = 6.0 * params.lambda2 * n1n0 +
                       (2.0 / est.eta) * (N2 * est.L_H + params.lambda1 * static_cast<double>(d.n1 * d.N));
  const double second = 8.0 * params.lambda2 + est.L_gradH;
  est.bound = std::max(first, second);
  return est;
}

double theoretical_L0(const ProblemData& data, const ModelParams& params, double mu0,
                      std::uint64_t seed, int samples) {
  if (!(mu0 > 0.0 && mu0 < 1.0)) throw ParameterError("mu0 must lie in (0, 1)");
  return std::max(1.0, estimate_lipschitz(data, params, seed, samples).bound / mu0);
}

}  // namespace aespg
