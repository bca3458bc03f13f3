#pragma once

// Minibatch first-order baselines on the plain autoencoder loss
//
//   1/N sum_n ||(W^T (W x_n + b1)_+ + b2)_+ - x_n||^2 + lambda2 ||W||_F^2
//
// and the Adadelta warm start for SPG.

#include "aespg/data.hpp"
#include "aespg/spg.hpp"
#include "aespg/trace.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>

namespace aespg {

struct NetParams {
  Matrix W;   // N1 x N0
  Vector b1;  // N1
  Vector b2;  // N0

  /// Same ordering as Variables::pack() without the V block.
  Vector pack() const;
  static NetParams unpack(const Vector& p, Index n1, Index n0);
};

/// Default initialization shared with SPG: W = randn(N1, N0) / N, b = 0.
NetParams init_net(const ProblemData& data, std::uint64_t seed);

/// Gradient of the loss averaged over the batch columns, plus 2 lambda2 W.
/// The ReLU derivative is taken as 0 at exactly 0.
NetParams minibatch_grad(const NetParams& p, std::span<const Index> batch, const Matrix& X,
                         double lambda2);

/// Batch loss matching minibatch_grad().
double minibatch_loss(const NetParams& p, std::span<const Index> batch, const Matrix& X,
                      double lambda2);

/// Packs p with v_n = (W x_n + b1)_+ and b clamped into [-alpha, alpha].
Variables to_variables(const NetParams& p, const ProblemData& data, double alpha);

enum class SgdMethod { Vanilla, Adam, Adamax, Adadelta, Adagrad, AdagradDecay };

SgdMethod parse_sgd_method(const std::string& name);
std::string to_string(SgdMethod m);

/// Hyperparameters; unused fields are ignored by each method.
struct OptimizerSettings {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double rho = 0.95;
};

/// vanilla lr 0.01; adam lr 1e-3, eps 1e-8; adamax lr 2e-3, eps 1e-8;
/// adadelta lr 1, rho 0.95, eps 1e-6; adagrad and adagrad-decay lr 0.01,
/// eps 1e-10. Betas are 0.9 and 0.999 throughout.
OptimizerSettings default_settings(SgdMethod m);

class Optimizer {
 public:
  virtual ~Optimizer() = default;
  /// theta <- update(theta, g).
  virtual void step(Vector& theta, const Vector& g) = 0;
  long steps() const { return t_; }

 protected:
  long t_ = 0;
};

std::unique_ptr<Optimizer> make_optimizer(SgdMethod m, const OptimizerSettings& s, Index size);

struct SgdConfig {
  SgdMethod method = SgdMethod::Adadelta;
  std::optional<OptimizerSettings> settings;  // default_settings(method) when unset
  std::optional<Index> batch_size;            // max{N/100, 10} capped at N when unset
  long epochs = 1000;
  std::uint64_t seed = 1;
};

Index default_batch_size(Index N);

struct SgdResult {
  NetParams p;
  RunTrace trace;
};

/// One trace row per epoch (k = 1..epochs), mu, L, smoothed and sub_iters
/// blank. fval is O at to_variables(p).
SgdResult sgd_run(const ProblemData& data, const ModelParams& params, const SgdConfig& config,
                  const std::optional<NetParams>& p0 = std::nullopt, const Matrix* test = nullptr,
                  const TraceSink& sink = {});

struct SpgAdaResult {
  Variables z;
  RunTrace trace;      // Adadelta rows followed by SPG rows with k continuing
  std::size_t handoff_row = 0;  // index of the first SPG row
  SpgResult spg;
};

/// ada_config.epochs Adadelta epochs from the default initialization, then
/// SPG from the feasible conversion of the result.
SpgAdaResult spg_ada(const ProblemData& data, const ModelParams& params, const SpgConfig& spg_config,
                     SgdConfig ada_config, const Matrix* test = nullptr, const TraceSink& sink = {});

}  // namespace aespg
