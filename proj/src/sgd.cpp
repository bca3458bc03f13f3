#include "aespg/sgd.hpp"

#include "aespg/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace aespg {

namespace {

Matrix gather(const Matrix& X, std::span<const Index> batch) {
  Matrix out(X.rows(), static_cast<Index>(batch.size()));
  for (std::size_t i = 0; i < batch.size(); ++i) out.col(static_cast<Index>(i)) = X.col(batch[i]);
  return out;
}

// Weights and accumulators of inactive units decay geometrically and would
// otherwise drift into the subnormal range, where arithmetic is far slower.
void flush_tiny(Vector& v) { v = (v.array().abs() < 1e-200).select(0.0, v); }

class VanillaSgd final : public Optimizer {
 public:
  explicit VanillaSgd(const OptimizerSettings& s) : s_(s) {}
  void step(Vector& theta, const Vector& g) override {
    ++t_;
    theta -= s_.lr * g;
  }

 private:
  OptimizerSettings s_;
};

class Adam final : public Optimizer {
 public:
  Adam(const OptimizerSettings& s, Index n) : s_(s), m_(Vector::Zero(n)), v_(Vector::Zero(n)) {}
  void step(Vector& theta, const Vector& g) override {
    ++t_;
    m_ = s_.beta1 * m_ + (1.0 - s_.beta1) * g;
    v_ = s_.beta2 * v_ + (1.0 - s_.beta2) * g.cwiseAbs2();
    flush_tiny(m_);
    flush_tiny(v_);
    const double c1 = 1.0 - std::pow(s_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(s_.beta2, static_cast<double>(t_));
    theta.array() -= s_.lr * (m_.array() / c1) / ((v_.array() / c2).sqrt() + s_.eps);
  }

 private:
  OptimizerSettings s_;
  Vector m_, v_;
};

class Adamax final : public Optimizer {
 public:
  Adamax(const OptimizerSettings& s, Index n) : s_(s), m_(Vector::Zero(n)), u_(Vector::Zero(n)) {}
  void step(Vector& theta, const Vector& g) override {
    ++t_;
    m_ = s_.beta1 * m_ + (1.0 - s_.beta1) * g;
    u_ = (s_.beta2 * u_).cwiseMax((g.array().abs() + s_.eps).matrix());
    flush_tiny(m_);
    const double c1 = 1.0 - std::pow(s_.beta1, static_cast<double>(t_));
    theta.array() -= (s_.lr / c1) * m_.array() / u_.array();
  }

 private:
  OptimizerSettings s_;
  Vector m_, u_;
};

class Adadelta final : public Optimizer {
 public:
  Adadelta(const OptimizerSettings& s, Index n) : s_(s), eg_(Vector::Zero(n)), edx_(Vector::Zero(n)) {}
  void step(Vector& theta, const Vector& g) override {
    ++t_;
    eg_ = s_.rho * eg_ + (1.0 - s_.rho) * g.cwiseAbs2();
    const Vector dx = ((edx_.array() + s_.eps).sqrt() / (eg_.array() + s_.eps).sqrt() * g.array()).matrix();
    edx_ = s_.rho * edx_ + (1.0 - s_.rho) * dx.cwiseAbs2();
    flush_tiny(eg_);
    flush_tiny(edx_);
    theta -= s_.lr * dx;
  }

 private:
  OptimizerSettings s_;
  Vector eg_, edx_;
};

class Adagrad final : public Optimizer {
 public:
  Adagrad(const OptimizerSettings& s, Index n, bool decay) : s_(s), G_(Vector::Zero(n)), decay_(decay) {}
  void step(Vector& theta, const Vector& g) override {
    ++t_;
    G_ += g.cwiseAbs2();
    const double lr = decay_ ? s_.lr / std::sqrt(static_cast<double>(t_)) : s_.lr;
    theta.array() -= lr * g.array() / (G_.array().sqrt() + s_.eps);
  }

 private:
  OptimizerSettings s_;
  Vector G_;
  bool decay_;
};

}  // namespace

Vector NetParams::pack() const {
  Vector p(W.size() + b1.size() + b2.size());
  p << W.reshaped(), b1, b2;
  return p;
}

NetParams NetParams::unpack(const Vector& p, Index n1, Index n0) {
  if (p.size() != n1 * n0 + n1 + n0) throw ParameterError("packed network has the wrong length");
  NetParams out;
  out.W = p.head(n1 * n0).reshaped(n1, n0);
  out.b1 = p.segment(n1 * n0, n1);
  out.b2 = p.tail(n0);
  return out;
}

NetParams init_net(const ProblemData& data, std::uint64_t seed) {
  const Variables z = init_variables(data, seed);
  return {z.W, z.b1, z.b2};
}

NetParams minibatch_grad(const NetParams& p, std::span<const Index> batch, const Matrix& X,
                         double lambda2) {
  if (batch.empty()) throw ParameterError("batch must not be empty");
  const Matrix Xb = gather(X, batch);
  const double scale = 2.0 / static_cast<double>(batch.size());

  Matrix S = p.W * Xb;
  S.colwise() += p.b1;
  const Matrix H = S.cwiseMax(0.0);
  Matrix Y = p.W.transpose() * H;
  Y.colwise() += p.b2;
  const Matrix dY = scale * ((Y.cwiseMax(0.0) - Xb).array() * (Y.array() > 0.0).cast<double>()).matrix();
  const Matrix dS = ((p.W * dY).array() * (S.array() > 0.0).cast<double>()).matrix();

  NetParams g;
  g.W = H * dY.transpose() + dS * Xb.transpose() + 2.0 * lambda2 * p.W;
  g.b1 = dS.rowwise().sum();
  g.b2 = dY.rowwise().sum();
  return g;
}

double minibatch_loss(const NetParams& p, std::span<const Index> batch, const Matrix& X,
                      double lambda2) {
  if (batch.empty()) throw ParameterError("batch must not be empty");
  return reconstruction_error(p.W, p.b1, p.b2, gather(X, batch)) + lambda2 * p.W.squaredNorm();
}

Variables to_variables(const NetParams& p, const ProblemData& data, double alpha) {
  Variables z{p.W, p.b1, p.b2, Matrix()};
  z = project_b_box(std::move(z), alpha);
  z.V = hidden_preactivation(z, data.X()).cwiseMax(0.0);
  return z;
}

SgdMethod parse_sgd_method(const std::string& name) {
  if (name == "vanilla") return SgdMethod::Vanilla;
  if (name == "adam") return SgdMethod::Adam;
  if (name == "adamax") return SgdMethod::Adamax;
  if (name == "adadelta") return SgdMethod::Adadelta;
  if (name == "adagrad") return SgdMethod::Adagrad;
  if (name == "adagrad-decay") return SgdMethod::AdagradDecay;
  throw ParameterError("unknown SGD method '" + name + "'");
}

std::string to_string(SgdMethod m) {
  switch (m) {
    case SgdMethod::Vanilla: return "vanilla";
    case SgdMethod::Adam: return "adam";
    case SgdMethod::Adamax: return "adamax";
    case SgdMethod::Adadelta: return "adadelta";
    case SgdMethod::Adagrad: return "adagrad";
    case SgdMethod::AdagradDecay: return "adagrad-decay";
  }
  return "unknown";
}

OptimizerSettings default_settings(SgdMethod m) {
  OptimizerSettings s;
  switch (m) {
    case SgdMethod::Vanilla: s.lr = 0.01; break;
    case SgdMethod::Adam: s.lr = 1e-3; s.eps = 1e-8; break;
    case SgdMethod::Adamax: s.lr = 2e-3; s.eps = 1e-8; break;
    case SgdMethod::Adadelta: s.lr = 1.0; s.eps = 1e-6; s.rho = 0.95; break;
    case SgdMethod::Adagrad:
    case SgdMethod::AdagradDecay: s.lr = 0.01; s.eps = 1e-10; break;
  }
  return s;
}

std::unique_ptr<Optimizer> make_optimizer(SgdMethod m, const OptimizerSettings& s, Index size) {
  if (!(s.lr > 0.0)) throw ParameterError("learning rate must be positive");
  switch (m) {
    case SgdMethod::Vanilla: return std::make_unique<VanillaSgd>(s);
    case SgdMethod::Adam: return std::make_unique<Adam>(s, size);
    case SgdMethod::Adamax: return std::make_unique<Adamax>(s, size);
    case SgdMethod::Adadelta: return std::make_unique<Adadelta>(s, size);
    case SgdMethod::Adagrad: return std::make_unique<Adagrad>(s, size, false);
    case SgdMethod::AdagradDecay: return std::make_unique<Adagrad>(s, size, true);
  }
  throw ParameterError("unknown SGD method");
}

Index default_batch_size(Index N) { return std::min(N, std::max<Index>(N / 100, 10)); }

SgdResult sgd_run(const ProblemData& data, const ModelParams& params, const SgdConfig& config,
                  const std::optional<NetParams>& p0, const Matrix* test, const TraceSink& sink) {
  using Clock = std::chrono::steady_clock;
  const Clock::time_point start = Clock::now();
  const Index N = data.N();
  const Index batch = config.batch_size ? *config.batch_size : default_batch_size(N);
  if (batch < 1 || batch > N) throw ParameterError("batch size must lie in [1, N]");
  if (config.epochs < 0) throw ParameterError("epochs must be nonnegative");

  SgdResult result;
  result.p = p0 ? *p0 : init_net(data, config.seed);
  const Index n1 = data.n1();
  const Index n0 = data.n0();
  Vector theta = result.p.pack();
  auto opt = make_optimizer(config.method, config.settings.value_or(default_settings(config.method)),
                            theta.size());
  Rng rng(config.seed, RngStream::Batching);

  for (long epoch = 1; epoch <= config.epochs; ++epoch) {
    const std::vector<Index> order = rng.permutation(N);
    for (Index first = 0; first < N; first += batch) {
      const Index len = std::min(batch, N - first);
      const std::span<const Index> idx(order.data() + first, static_cast<std::size_t>(len));
      const NetParams g = minibatch_grad(NetParams::unpack(theta, n1, n0), idx, data.X(), params.lambda2);
      opt->step(theta, g.pack());
      flush_tiny(theta);
    }
    if (!theta.allFinite()) throw NumericError("SGD produced non-finite parameters at epoch " + std::to_string(epoch), theta);

    result.p = NetParams::unpack(theta, n1, n0);
    const Variables z = to_variables(result.p, data, params.alpha);
    const Metrics m = compute_metrics(z, data, params, test);
    TraceRow row;
    row.k = epoch;
    row.fval = m.fval;
    row.feasvi = m.feasvi;
    row.trainerr = reconstruction_error(result.p.W, result.p.b1, result.p.b2, data.X());
    row.testerr = m.testerr;
    row.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
    result.trace.rows.push_back(row);
    if (sink) sink(row);
  }
  result.p = NetParams::unpack(theta, n1, n0);
  result.trace.termination = "epochs";
  return result;
}

SpgAdaResult spg_ada(const ProblemData& data, const ModelParams& params, const SpgConfig& spg_config,
                     SgdConfig ada_config, const Matrix* test, const TraceSink& sink) {
  ada_config.method = SgdMethod::Adadelta;
  SpgAdaResult out;
  SgdResult ada = sgd_run(data, params, ada_config, std::nullopt, test, sink);
  out.trace.rows = std::move(ada.trace.rows);
  out.handoff_row = out.trace.rows.size();

  const long offset = ada_config.epochs + 1;
  const TraceSink shifted = [&](const TraceRow& r) {
    if (!sink) return;
    TraceRow s = r;
    s.k += offset;
    sink(s);
  };
  out.spg = run_spg(data, params, spg_config, to_variables(ada.p, data, params.alpha), test, shifted);
  for (TraceRow r : out.spg.trace.rows) {
    r.k += offset;
    out.trace.rows.push_back(r);
  }
  out.trace.termination = out.spg.trace.termination;
  out.z = out.spg.z;
  return out;
}

}  // namespace aespg
