#pragma once

// Two-layer ReLU autoencoder model with auxiliary hidden activations V.
//
// The single optimization variable is z = (vec(W), b1, b2, vec(V)), where
// W is N1 x N0, b1 has N1 entries, b2 has N0 entries and V is N1 x N with
// one column per training sample. The objective is O = F + R + P:
//
//   F(z) = 1/N sum_n ||(W^T v_n + b2)_+ - x_n||^2     (fidelity)
//   R(z) = lambda1 sum_n e^T v_n + lambda2 ||W||_F^2   (regularizer)
//   P(z) = beta sum_n e^T (v_n - (W x_n + b1)_+)       (penalty)
//
// over Z = {v_n >= (W x_n + b1)_+} intersected with {||b||_inf <= alpha}.

#include "aespg/types.hpp"

#include <iosfwd>
#include <optional>
#include <string>

namespace aespg {

/// Problem dimensions: N samples, N0 inputs, N1 hidden units.
struct Dimensions {
  Index N = 0;
  Index n0 = 0;
  Index n1 = 0;

  /// N2 = N0*N1 + N1 + N0 + N1*N.
  Index packed_size() const { return n0 * n1 + n1 + n0 + n1 * N; }
  /// nu = 2(N*N1 + N0 + N1), the number of rows of the constraint system.
  Index constraint_count() const { return 2 * (N * n1 + n0 + n1); }

  friend bool operator==(const Dimensions&, const Dimensions&) = default;
};

/// Nonnegative training matrix (columns are samples) plus the hidden width.
class ProblemData {
 public:
  ProblemData(Matrix X, Index hidden_units);

  const Matrix& X() const { return X_; }
  Index N() const { return X_.cols(); }
  Index n0() const { return X_.rows(); }
  Index n1() const { return n1_; }
  Dimensions dims() const { return {N(), n0(), n1_}; }

  /// ||X||_F^2.
  double fro_sq() const { return fro_sq_; }
  /// Induced 1-norm: the largest absolute column sum.
  double one_norm() const { return one_norm_; }

 private:
  Matrix X_;
  Index n1_;
  double fro_sq_;
  double one_norm_;
};

struct ModelParams {
  double lambda1 = 1e-4;
  double lambda2 = 0.1;
  double beta = 0.0;
  double theta = 0.0;
  double alpha = 0.0;
};

/// Box radius for b implied by the level-set constant theta.
/// Throws ParameterError unless theta > ||X||_F^2 / N and lambdas are positive.
double compute_alpha(const ProblemData& data, double lambda1, double lambda2, double theta);

/// theta = 1.1 ||X||_F^2 / N.
double default_theta(const ProblemData& data);

/// Builds validated ModelParams. beta defaults to 1/N and theta to default_theta().
ModelParams make_params(const ProblemData& data, double lambda1, double lambda2,
                        std::optional<double> beta = std::nullopt,
                        std::optional<double> theta = std::nullopt);

struct Variables {
  Matrix W;   // N1 x N0
  Vector b1;  // N1
  Vector b2;  // N0
  Matrix V;   // N1 x N

  static Variables zeros(const Dimensions& d);

  Dimensions dims() const { return {V.cols(), W.cols(), W.rows()}; }

  /// Column-major vec(W), then b1, b2, then column-major vec(V).
  Vector pack() const;
  static Variables unpack(const Vector& z, const Dimensions& d);

  /// Stacked bias b = (b1; b2).
  Vector b() const;
};

/// Hidden pre-activations S = W X + b1 e^T (N1 x N).
Matrix hidden_preactivation(const Variables& z, const Matrix& X);
/// Output pre-activations Y = W^T V + b2 e^T (N0 x N).
Matrix output_preactivation(const Variables& z);

double eval_fidelity(const Variables& z, const ProblemData& data);
double eval_regularizer(const Variables& z, const ModelParams& params);
double eval_penalty(const Variables& z, const ProblemData& data, const ModelParams& params);
double eval_objective(const Variables& z, const ProblemData& data, const ModelParams& params);

struct ObjectiveBreakdown {
  double fidelity = 0.0;
  double regularizer = 0.0;
  double penalty = 0.0;
  double total() const { return fidelity + regularizer + penalty; }
};

ObjectiveBreakdown eval_objective_parts(const Variables& z, const ProblemData& data,
                                        const ModelParams& params);

/// Euclidean projection onto {||b||_inf <= alpha}; W and V are untouched.
Variables project_b_box(Variables z, double alpha);

struct FeasibilityReport {
  double omega1_violation = 0.0;  // max |v - (Wx + b1)_+|
  double omega2_violation = 0.0;  // max ((Wx + b1)_+ - v)_+
  double omega3_violation = 0.0;  // max(0, ||b||_inf - alpha)
  bool in_Z = false;
};

inline constexpr double kFeasibilityTol = 1e-10;

FeasibilityReport feasibility(const Variables& z, const ProblemData& data,
                              const ModelParams& params, double tol = kFeasibilityTol);

/// A z - c for the implicit constraint operator. Blocks, in order:
/// W x_n + b1 - v_n (n = 1..N), -v_n (n = 1..N), b - alpha, -b - alpha.
Vector constraint_residuals(const Variables& z, const ProblemData& data,
                            const ModelParams& params);

// Serialization. Binary layout: 8-byte magic "AESPGZ01", three little-endian
// uint64 (N, N0, N1), then N2 little-endian float64 in pack order. Text layout:
// a first line "N N0 N1" followed by one value per line.
void write_variables_binary(std::ostream& out, const Variables& z);
Variables read_variables_binary(std::istream& in);
void write_variables_text(std::ostream& out, const Variables& z);
Variables read_variables_text(std::istream& in);

/// "key=value" lines.
std::string to_key_value(const ObjectiveBreakdown& parts);
std::string to_key_value(const FeasibilityReport& report);

}  // namespace aespg
