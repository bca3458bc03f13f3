#include "aespg/samqp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace aespg {

void validate(const SubproblemSpec& spec) {
  const Dimensions d = spec.data.dims();
  if (spec.anchor.dims() != d || spec.anchor.b1.size() != d.n1 || spec.anchor.b2.size() != d.n0) {
    throw ParameterError("subproblem anchor shape mismatch");
  }
  const GradientBlocks& g = spec.grads;
  if (g.gW.rows() != d.n1 || g.gW.cols() != d.n0 || g.gb1.size() != d.n1 || g.gb2.size() != d.n0 ||
      g.gV.rows() != d.n1 || g.gV.cols() != d.N) {
    throw ParameterError("subproblem gradient shape mismatch");
  }
  if (!(spec.L >= 1.0)) throw ParameterError("proximal weight L must be at least 1");
}

double subproblem_objective(const SubproblemSpec& spec, const Variables& z) {
  const Variables& a = spec.anchor;
  const GradientBlocks& g = spec.grads;
  const double linear = g.gW.cwiseProduct(z.W - a.W).sum() + g.gb1.dot(z.b1 - a.b1) +
                        g.gb2.dot(z.b2 - a.b2) + g.gV.cwiseProduct(z.V - a.V).sum();
  const double prox = (z.W - a.W).squaredNorm() + (z.b1 - a.b1).squaredNorm() +
                      (z.b2 - a.b2).squaredNorm() + (z.V - a.V).squaredNorm();
  return linear + eval_regularizer(z, spec.params) + 0.5 * spec.L * prox;
}

VuSolution vu_closed_form(double xi1, double xi2, double L, double penalty) {
  if (xi2 >= xi1 && xi1 <= 0.0) return {-xi1, -xi2, VuCase::Free};
  if (xi2 >= 0.0 && xi1 > 0.0) return {0.0, -xi2, VuCase::VAtZero};
  const double tied = L * xi1 + penalty * xi2;
  if (xi2 < 0.0 && tied > 0.0) return {0.0, 0.0, VuCase::BothAtZero};
  const double t = -tied / (L + penalty);
  return {t, t, VuCase::Tied};
}

FactorizationCache::FactorizationCache(const Matrix& X, double L, double lambda2, double penalty) {
  const Index n0 = X.rows();
  M_.resize(n0 + 1, n0 + 1);
  M_.topLeftCorner(n0, n0) = penalty * (X * X.transpose());
  const Vector rowsum = X.rowwise().sum();
  M_.topRightCorner(n0, 1) = penalty * rowsum;
  M_.bottomLeftCorner(1, n0) = penalty * rowsum.transpose();
  M_(n0, n0) = penalty * static_cast<double>(X.cols());
  M_.diagonal().array() += L;
  M_.diagonal().head(n0).array() += 2.0 * lambda2;
  llt_.compute(M_);
  if (llt_.info() != Eigen::Success) {
    throw NumericError("Cholesky factorization of the (W, b1) system failed");
  }
}

Matrix FactorizationCache::solve_right(const Matrix& rhs) const {
  return llt_.solve(rhs.transpose()).transpose();
}

AdmmWorkspace make_workspace(const SubproblemSpec& spec, double penalty) {
  validate(spec);
  const Index n0 = spec.data.n0();
  const double L = spec.L;
  const double alpha = spec.params.alpha;
  Matrix xi1 = (spec.grads.gV.array() / L - spec.anchor.V.array() + spec.params.lambda1 / L).matrix();
  Matrix rhs(spec.data.n1(), n0 + 1);
  rhs.leftCols(n0) = -spec.grads.gW + L * spec.anchor.W;
  rhs.col(n0) = -spec.grads.gb1 + L * spec.anchor.b1;
  Vector b2 = (spec.anchor.b2 - spec.grads.gb2 / L).cwiseMax(-alpha).cwiseMin(alpha);
  return {std::move(xi1), std::move(rhs), std::move(b2),
          FactorizationCache(spec.data.X(), L, spec.params.lambda2, penalty), penalty};
}

AdmmState init_admm_state(const SubproblemSpec& spec) {
  AdmmState s;
  s.W = spec.anchor.W;
  s.b1 = spec.anchor.b1;
  s.b2 = spec.anchor.b2;
  s.V = spec.anchor.V;
  s.S = hidden_preactivation(spec.anchor, spec.data.X());
  s.U = s.S;
  s.rho = Matrix::Zero(s.S.rows(), s.S.cols());
  return s;
}

void update_vu(AdmmState& state, const SubproblemSpec& spec, const AdmmWorkspace& ws) {
  const double L = spec.L;
  const double r = ws.penalty;
  double du = 0.0;
  for (Index n = 0; n < state.V.cols(); ++n) {
    for (Index j = 0; j < state.V.rows(); ++j) {
      const double xi2 = state.rho(j, n) / r - state.S(j, n);
      const VuSolution sol = vu_closed_form(ws.xi1(j, n), xi2, L, r);
      const double diff = sol.u - state.U(j, n);
      du += diff * diff;
      state.V(j, n) = sol.v;
      state.U(j, n) = sol.u;
    }
  }
  state.delta_u_sq = du;
}

void update_wb(AdmmState& state, const SubproblemSpec& spec, const AdmmWorkspace& ws) {
  const Matrix& X = spec.data.X();
  const Index n0 = X.rows();
  const double alpha = spec.params.alpha;
  const Matrix T = state.rho + ws.penalty * state.U;
  Matrix rhs = ws.rhs_const;
  rhs.leftCols(n0).noalias() += T * X.transpose();
  rhs.col(n0) += T.rowwise().sum();
  const Matrix what = ws.cache.solve_right(rhs);
  state.W = what.leftCols(n0);
  const Vector b1 = what.col(n0);
  state.b1 = b1.cwiseMax(-alpha).cwiseMin(alpha);
  state.b1_clamped = (b1.array().abs() > alpha).count();
  state.b2 = ws.b2;
  state.S.noalias() = state.W * X;
  state.S.colwise() += state.b1;
}

void update_multipliers(AdmmState& state, double penalty) {
  const Matrix step = penalty * (state.U - state.S);
  state.rho += step;
  state.delta_rho_sq = step.squaredNorm();
  ++state.iter;
}

SamqpResult solve_subproblem(const SubproblemSpec& spec, const SamqpOptions& options) {
  if (!(options.tol > 0.0)) throw ParameterError("subproblem tolerance must be positive");
  if (!(options.penalty > 0.0)) throw ParameterError("penalty weight must be positive");
  const AdmmWorkspace ws = make_workspace(spec, options.penalty);
  AdmmState state = init_admm_state(spec);

  SamqpResult result;
  while (state.iter < options.max_iter) {
    update_vu(state, spec, ws);
    update_wb(state, spec, ws);
    update_multipliers(state, ws.penalty);
    if (!std::isfinite(state.delta_rho_sq) || !std::isfinite(state.delta_u_sq) ||
        !state.W.allFinite() || !state.V.allFinite()) {
      throw NumericError("SAMQP produced non-finite values at inner iteration " +
                             std::to_string(state.iter),
                         Variables{state.W, state.b1, state.b2, state.V}.pack());
    }
    if (std::max(state.delta_rho_sq, state.delta_u_sq) <= options.tol) {
      result.converged = true;
      break;
    }
  }

  result.iterations = state.iter;
  result.delta_rho_sq = state.delta_rho_sq;
  result.delta_u_sq = state.delta_u_sq;
  result.b1_clamped = state.b1_clamped;
  result.coupling_multiplier = (-state.rho).cwiseMax(0.0);
  if (options.snap) state.V = state.V.cwiseMax(state.S).cwiseMax(0.0);
  result.z = Variables{std::move(state.W), std::move(state.b1), std::move(state.b2), std::move(state.V)};
  return result;
}

KktResidual subproblem_kkt_residual(const SubproblemSpec& spec, const Variables& z,
                                    const Matrix& gamma) {
  const Variables& a = spec.anchor;
  const GradientBlocks& g = spec.grads;
  const Matrix& X = spec.data.X();
  const double L = spec.L;
  const double alpha = spec.params.alpha;
  const Matrix S = hidden_preactivation(z, X);

  KktResidual r;
  const Matrix rW = g.gW + 2.0 * spec.params.lambda2 * z.W + L * (z.W - a.W) + gamma * X.transpose();
  double stat = rW.cwiseAbs().maxCoeff();

  const auto box_residual = [alpha](const Vector& b, const Vector& t) {
    return (b - (b - t).cwiseMax(-alpha).cwiseMin(alpha)).cwiseAbs().maxCoeff();
  };
  const Vector tb1 = g.gb1 + L * (z.b1 - a.b1) + gamma.rowwise().sum();
  const Vector tb2 = g.gb2 + L * (z.b2 - a.b2);
  stat = std::max({stat, box_residual(z.b1, tb1), box_residual(z.b2, tb2)});

  const Matrix tV = (g.gV.array() + spec.params.lambda1).matrix() + L * (z.V - a.V) - gamma;
  stat = std::max(stat, (z.V - (z.V - tV).cwiseMax(0.0)).cwiseAbs().maxCoeff());
  r.stationarity = stat;

  const Matrix slack = z.V - S;
  const double binf = std::max(z.b1.cwiseAbs().maxCoeff(), z.b2.cwiseAbs().maxCoeff());
  r.primal = std::max({0.0, (-slack).maxCoeff(), (-z.V).maxCoeff(), binf - alpha});
  r.complementarity = std::max((-gamma).cwiseMax(0.0).maxCoeff(),
                               gamma.cwiseProduct(slack).cwiseAbs().maxCoeff());
  return r;
}

}  // namespace aespg
