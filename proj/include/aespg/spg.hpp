#pragma once

// Outer smoothing proximal gradient loop. Each iteration linearizes H~ at the
// current point, solves the proximal subproblem over Z with SAMQP, and then
// either keeps (mu, L) after sufficient decrease of O~ or moves to
// (tau1 mu, tau3 L).

#include "aespg/samqp.hpp"
#include "aespg/trace.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace aespg {

struct SpgConfig {
  double mu0 = 1e-3;
  double tau1 = 0.5;
  double tau2 = 1e-3;
  double tau3 = 1.1;
  std::optional<double> L0;  // default_L0() when unset
  double epsilon = 1e-7;
  int max_outer_iters = 4000;
  SamqpOptions sub;
  /// Use penalty = L in every subproblem instead of sub.penalty.
  bool penalty_tracks_L = false;
  /// Abort once O~ exceeds this multiple of its initial value.
  double divergence_factor = 10.0;
  std::uint64_t seed = 1;
};

/// Throws ParameterError on out-of-range fields.
void validate(const SpgConfig& config);
/// Non-empty when tau1 * tau3 < 1.
std::optional<std::string> schedule_warning(const SpgConfig& config);

/// max{1, sqrt(N0 N1 / N), beta, N0 / 30}.
double default_L0(const ProblemData& data, const ModelParams& params);

/// W = randn(N1, N0) / N, b = 0, v_n = (W x_n)_+.
Variables init_variables(const ProblemData& data, std::uint64_t seed);

struct SpgStep {
  Variables z;
  double mu = 0.0;
  double L = 0.0;
  bool accepted = false;  // true when (mu, L) were kept
  double smoothed_before = 0.0;  // O~(z, mu)
  double smoothed_after = 0.0;   // O~(z_next, mu)
  int sub_iters = 0;
  bool sub_converged = false;
  Index b1_clamped = 0;
};

SpgStep spg_step(const Variables& z, double mu, double L, const ProblemData& data,
                 const ModelParams& params, const SpgConfig& config);

/// Same, reusing an evaluation of H~ and its gradient at (z, mu).
SpgStep spg_step(const Variables& z, const SmoothedEvaluation& at_z, double mu, double L,
                 const ProblemData& data, const ModelParams& params, const SpgConfig& config);

/// (2 lambda2 + L) ||z_next - z_prev||_2.
double stationarity_diagnostic(const Variables& z_prev, const Variables& z_next, double lambda2,
                               double L);

struct SpgDiagnostic {
  long k = 0;
  bool accepted = false;
  double stationarity = 0.0;
  bool sub_converged = false;
  Index b1_clamped = 0;
};

struct SpgResult {
  Variables z;
  RunTrace trace;
  std::vector<SpgDiagnostic> diagnostics;  // one per step, k is the step's source row
  std::string message;
};

inline constexpr const char* kTerminatedMu = "mu<=eps";
inline constexpr const char* kTerminatedMaxIter = "max_iter";
inline constexpr const char* kTerminatedDiverged = "diverged";

/// Iterates spg_step from z0 (or init_variables) until mu <= epsilon or
/// max_outer_iters steps. Row k of the trace describes z^(k) at mu^(k).
/// Throws ParameterError when z0 is not in Z.
SpgResult run_spg(const ProblemData& data, const ModelParams& params, const SpgConfig& config,
                  const std::optional<Variables>& z0 = std::nullopt, const Matrix* test = nullptr,
                  const TraceSink& sink = {});

struct LipschitzEstimate {
  double L_H = 0.0;       // modulus of mu H~ on the level-set box
  double L_gradH = 0.0;   // modulus of mu grad H~ on {||z||_inf <= max(alpha, 2 eta)}
  double eta = 0.0;
  double radius = 0.0;
  /// The right-hand side of mu0 L0 >= max{...}.
  double bound = 0.0;
};

/// Sampled lower estimates of both moduli, inflated by safety_factor.
LipschitzEstimate estimate_lipschitz(const ProblemData& data, const ModelParams& params,
                                     std::uint64_t seed, int samples = 2000,
                                     double safety_factor = 2.0);

/// L0 that satisfies the sufficient bound for the given mu0 with the
/// estimated moduli.
double theoretical_L0(const ProblemData& data, const ModelParams& params, double mu0,
                      std::uint64_t seed, int samples = 2000);

}  // namespace aespg
