#pragma once

// Splitting/alternating (two-block ADMM) solver for the proximal subproblem
//
//   min_{z in Z}  <g, z - zbar> + R(z) + L/2 ||z - zbar||^2
//
// The coupling v_n >= W x_n + b1 is split through auxiliary U with the
// constraint U = W X + b1 e^T. Each sweep solves the (V, U) block entrywise in
// closed form, the (W, b) block through one cached (N0+1)x(N0+1) Cholesky
// factorization, then takes a multiplier step on U - (W X + b1).

#include "aespg/model.hpp"
#include "aespg/smoothing.hpp"

#include <algorithm>

namespace aespg {

struct SubproblemSpec {
  const ProblemData& data;
  ModelParams params;
  Variables anchor;
  GradientBlocks grads;
  double L = 1.0;
  double mu = 0.0;  // provenance only
};

/// Throws ParameterError on inconsistent shapes or L < 1.
void validate(const SubproblemSpec& spec);

/// <g, z - zbar> + R(z) + L/2 ||z - zbar||^2.
double subproblem_objective(const SubproblemSpec& spec, const Variables& z);

struct SamqpOptions {
  double tol = 1e-6;
  int max_iter = 10000;
  /// Weight of the augmented-Lagrangian quadratic term. 1 is the textbook
  /// scheme; larger values speed up the multiplier phase when L is large.
  double penalty = 1.0;
  /// Final v_n <- max(v_n, W x_n + b1, 0) so the result lies in Z exactly.
  bool snap = true;
};

enum class VuCase : int { Free = 1, VAtZero = 2, BothAtZero = 3, Tied = 4 };

struct VuSolution {
  double v = 0.0;
  double u = 0.0;
  VuCase which = VuCase::Free;
};

/// Minimizer of L/2 (v + xi1)^2 + r/2 (u + xi2)^2 subject to v >= u, v >= 0.
VuSolution vu_closed_form(double xi1, double xi2, double L, double penalty = 1.0);

/// Cholesky factor of M = L I + 2 lambda2 diag(1..1, 0) + r Xh Xh^T, where
/// Xh = [X; e^T] is the bias-augmented data.
class FactorizationCache {
 public:
  FactorizationCache(const Matrix& X, double L, double lambda2, double penalty = 1.0);

  const Matrix& M() const { return M_; }
  /// rhs * M^{-1}.
  Matrix solve_right(const Matrix& rhs) const;

 private:
  Matrix M_;
  Eigen::LLT<Matrix> llt_;
};

struct AdmmState {
  Matrix W;
  Vector b1;
  Vector b2;
  Matrix V;
  Matrix U;
  Matrix rho;
  Matrix S;  // W X + b1 e^T for the current (W, b1)
  int iter = 0;
  double delta_rho_sq = 0.0;
  double delta_u_sq = 0.0;
  Index b1_clamped = 0;  // entries of b1 clamped in the last (W, b) update
};

/// Per-subproblem constants shared by every sweep.
struct AdmmWorkspace {
  Matrix xi1;        // g_V / L - Vbar + lambda1 / L
  Matrix rhs_const;  // -[g_W, g_b1] + L [Wbar, b1bar]
  Vector b2;         // clamp(b2bar - g_b2 / L)
  FactorizationCache cache;
  double penalty;
};

AdmmWorkspace make_workspace(const SubproblemSpec& spec, double penalty = 1.0);

/// (W, b, V) = anchor, rho = 0, U = Wbar X + b1bar.
AdmmState init_admm_state(const SubproblemSpec& spec);

void update_vu(AdmmState& state, const SubproblemSpec& spec, const AdmmWorkspace& ws);
void update_wb(AdmmState& state, const SubproblemSpec& spec, const AdmmWorkspace& ws);
/// rho += r (U - S); records ||drho||^2.
void update_multipliers(AdmmState& state, double penalty = 1.0);

struct SamqpResult {
  Variables z;
  int iterations = 0;
  bool converged = false;  // false when max_iter was hit
  double delta_rho_sq = 0.0;
  double delta_u_sq = 0.0;
  Index b1_clamped = 0;
  Matrix coupling_multiplier;  // estimate of the multiplier of v_n >= W x_n + b1
};

/// Throws NumericError (carrying the packed iterate) on non-finite values.
SamqpResult solve_subproblem(const SubproblemSpec& spec, const SamqpOptions& options = {});

struct KktResidual {
  double stationarity = 0.0;
  double primal = 0.0;
  double complementarity = 0.0;
  double max() const { return std::max({stationarity, primal, complementarity}); }
};

/// Max-norm KKT residual of the subproblem at z given an estimate of the
/// multiplier for v_n >= W x_n + b1. The remaining multipliers (v >= 0 and the
/// b box) are eliminated through natural residuals, which are exact for
/// bound constraints.
KktResidual subproblem_kkt_residual(const SubproblemSpec& spec, const Variables& z,
                                    const Matrix& coupling_multiplier);

}  // namespace aespg
