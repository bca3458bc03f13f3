#include "aespg/smoothing.hpp"

#include <algorithm>

namespace aespg {

namespace {

void require_positive_mu(double mu) {
  if (!(mu > 0.0)) throw ParameterError("smoothing parameter mu must be positive");
}

struct PreActivations {
  Matrix S;  // W X + b1
  Matrix Y;  // W^T V + b2
};

PreActivations pre_activations(const Variables& z, const ProblemData& data) {
  return {hidden_preactivation(z, data.X()), output_preactivation(z)};
}

double smoothed_H_from(const PreActivations& pre, const Variables& z, double mu,
                       const ProblemData& data, const ModelParams& params) {
  const double inv_n = 1.0 / static_cast<double>(data.N());
  const double fid = inv_n * pre.Y.cwiseMax(0.0).squaredNorm() + inv_n * data.fro_sq() -
                     2.0 * inv_n * data.X().cwiseProduct(smooth_relu(pre.Y, mu)).sum();
  const double pen = params.beta * (z.V.sum() - smooth_relu(pre.S, mu).sum());
  return fid + pen;
}

}  // namespace

SmoothingParam::SmoothingParam(double mu) : mu_(mu) {
  if (!(mu > 0.0 && mu < 1.0)) throw ParameterError("smoothing parameter must lie in (0, 1)");
}

double smooth_relu(double y, double mu) {
  if (y < 0.0) return 0.0;
  if (y <= mu) return y * y / (2.0 * mu);
  return y - 0.5 * mu;
}

double smooth_relu_deriv(double y, double mu) { return std::clamp(y / mu, 0.0, 1.0); }

Matrix smooth_relu(const Matrix& Y, double mu) {
  return Y.unaryExpr([mu](double y) { return smooth_relu(y, mu); });
}

Matrix smooth_relu_deriv(const Matrix& Y, double mu) {
  return Y.unaryExpr([mu](double y) { return smooth_relu_deriv(y, mu); });
}

GradientBlocks GradientBlocks::zeros(const Dimensions& d) {
  const Variables z = Variables::zeros(d);
  return {z.W, z.b1, z.b2, z.V};
}

Vector GradientBlocks::pack() const { return Variables{gW, gb1, gb2, gV}.pack(); }

GradientBlocks GradientBlocks::unpack(const Vector& g, const Dimensions& d) {
  Variables z = Variables::unpack(g, d);
  return {std::move(z.W), std::move(z.b1), std::move(z.b2), std::move(z.V)};
}

bool GradientBlocks::all_finite() const {
  return gW.allFinite() && gb1.allFinite() && gb2.allFinite() && gV.allFinite();
}

double eval_smoothed_H(const Variables& z, double mu, const ProblemData& data,
                       const ModelParams& params) {
  require_positive_mu(mu);
  return smoothed_H_from(pre_activations(z, data), z, mu, data, params);
}

double eval_smoothed_objective(const Variables& z, double mu, const ProblemData& data,
                               const ModelParams& params) {
  return eval_smoothed_H(z, mu, data, params) + eval_regularizer(z, params);
}

SmoothedEvaluation eval_smoothed_with_gradient(const Variables& z, double mu,
                                               const ProblemData& data,
                                               const ModelParams& params) {
  require_positive_mu(mu);
  const PreActivations pre = pre_activations(z, data);
  const double inv_n = 1.0 / static_cast<double>(data.N());

  // dF~/dY = 2/N ((Y)_+ - X .* s~'(Y))
  const Matrix D = 2.0 * inv_n * (pre.Y.cwiseMax(0.0) - data.X().cwiseProduct(smooth_relu_deriv(pre.Y, mu)));
  // dP~/dS = -beta s~'(S)
  const Matrix E = -params.beta * smooth_relu_deriv(pre.S, mu);

  SmoothedEvaluation out;
  out.H = smoothed_H_from(pre, z, mu, data, params);
  out.R = eval_regularizer(z, params);
  out.grad.gW = z.V * D.transpose() + E * data.X().transpose();
  out.grad.gb1 = E.rowwise().sum();
  out.grad.gb2 = D.rowwise().sum();
  out.grad.gV = (z.W * D).array() + params.beta;
  return out;
}

GradientBlocks grad_smoothed_H(const Variables& z, double mu, const ProblemData& data,
                               const ModelParams& params) {
  return eval_smoothed_with_gradient(z, mu, data, params).grad;
}

}  // namespace aespg
