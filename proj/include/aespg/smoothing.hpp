#pragma once

// C^1 smoothing of the ReLU and of the penalized objective.
//
// The smoothed ReLU is piecewise: 0 below zero, y^2 / (2 mu) on [0, mu], and
// y - mu/2 above mu. The smoothed objective is
//
//   O~(z, mu) = F~(z, mu) + P~(z, mu) + R(z),    H~ = F~ + P~,
//   F~ = 1/N sum ||(W^T v_n + b2)_+||^2 + ||X||_F^2 / N
//        - 2/N sum x_n^T s~(W^T v_n + b2, mu),
//   P~ = beta sum e^T (v_n - s~(W x_n + b1, mu)).
//
// The squared-hinge term is already C^1 and is kept exact.

#include "aespg/model.hpp"

namespace aespg {

/// mu in (0, 1).
class SmoothingParam {
 public:
  explicit SmoothingParam(double mu);
  double value() const { return mu_; }

 private:
  double mu_;
};

double smooth_relu(double y, double mu);
/// clamp(y / mu, 0, 1).
double smooth_relu_deriv(double y, double mu);

Matrix smooth_relu(const Matrix& Y, double mu);
Matrix smooth_relu_deriv(const Matrix& Y, double mu);

/// Gradient of H~ with respect to each block of z.
struct GradientBlocks {
  Matrix gW;   // N1 x N0
  Vector gb1;  // N1
  Vector gb2;  // N0
  Matrix gV;   // N1 x N

  static GradientBlocks zeros(const Dimensions& d);

  /// Same ordering as Variables::pack().
  Vector pack() const;
  static GradientBlocks unpack(const Vector& g, const Dimensions& d);
  bool all_finite() const;
};

double eval_smoothed_H(const Variables& z, double mu, const ProblemData& data,
                       const ModelParams& params);
double eval_smoothed_objective(const Variables& z, double mu, const ProblemData& data,
                               const ModelParams& params);

/// Throws ParameterError for mu <= 0.
GradientBlocks grad_smoothed_H(const Variables& z, double mu, const ProblemData& data,
                               const ModelParams& params);

struct SmoothedEvaluation {
  double H = 0.0;
  double R = 0.0;
  double objective() const { return H + R; }
  GradientBlocks grad;
};

/// Value of H~ and R plus the gradient of H~, sharing one pass over the
/// pre-activations.
SmoothedEvaluation eval_smoothed_with_gradient(const Variables& z, double mu,
                                               const ProblemData& data,
                                               const ModelParams& params);

}  // namespace aespg
