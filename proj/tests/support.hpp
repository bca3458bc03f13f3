#pragma once

// Shared fixtures and independent oracles for the test suites.

#include "aespg/data.hpp"
#include "aespg/model.hpp"
#include "aespg/rng.hpp"
#include "aespg/samqp.hpp"
#include "aespg/smoothing.hpp"

#include <cmath>
#include <functional>
#include <limits>

namespace testing {

using aespg::Index;
using aespg::Matrix;
using aespg::Vector;

inline aespg::ProblemData random_problem(Index N, Index n1, Index n0, std::uint64_t seed) {
  aespg::Rng rng(seed, aespg::RngStream::Data);
  return aespg::ProblemData(rng.rand(n0, N), n1);
}

/// A point of Z: W random, b in the box, V = (W X + b1)_+ plus slack.
inline aespg::Variables random_feasible(const aespg::ProblemData& data, const aespg::ModelParams& p,
                                        aespg::Rng& rng, double scale = 1.0, double slack = 0.1) {
  aespg::Variables z = aespg::Variables::zeros(data.dims());
  z.W = scale * rng.randn(data.n1(), data.n0());
  z.b1 = scale * rng.randn(data.n1(), 1).col(0);
  z.b2 = scale * rng.randn(data.n0(), 1).col(0);
  z = aespg::project_b_box(std::move(z), p.alpha);
  z.V = aespg::hidden_preactivation(z, data.X()).cwiseMax(0.0) + slack * rng.rand(data.n1(), data.N());
  return z;
}

/// Loop-based evaluation of F, R and P straight from their definitions.
inline aespg::ObjectiveBreakdown loop_objective(const aespg::Variables& z, const Matrix& X,
                                                const aespg::ModelParams& p) {
  const Index N = X.cols(), n0 = X.rows(), n1 = z.W.rows();
  aespg::ObjectiveBreakdown out;
  for (Index n = 0; n < N; ++n) {
    for (Index i = 0; i < n0; ++i) {
      double y = z.b2[i];
      for (Index j = 0; j < n1; ++j) y += z.W(j, i) * z.V(j, n);
      const double r = std::max(0.0, y) - X(i, n);
      out.fidelity += r * r / static_cast<double>(N);
    }
    for (Index j = 0; j < n1; ++j) {
      double s = z.b1[j];
      for (Index i = 0; i < n0; ++i) s += z.W(j, i) * X(i, n);
      out.penalty += p.beta * (z.V(j, n) - std::max(0.0, s));
      out.regularizer += p.lambda1 * z.V(j, n);
    }
  }
  for (Index j = 0; j < n1; ++j)
    for (Index i = 0; i < n0; ++i) out.regularizer += p.lambda2 * z.W(j, i) * z.W(j, i);
  return out;
}

/// Central differences of f along every coordinate of x.
inline Vector central_differences(const std::function<double(const Vector&)>& f, const Vector& x,
                                  double h) {
  Vector g(x.size());
  Vector xp = x;
  for (Index i = 0; i < x.size(); ++i) {
    const double orig = xp[i];
    xp[i] = orig + h;
    const double fp = f(xp);
    xp[i] = orig - h;
    const double fm = f(xp);
    xp[i] = orig;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

struct VuOracle {
  double v = 0.0;
  double u = 0.0;
  int active_set = 0;  // 1 none, 2 v >= 0 active, 3 both, 4 v >= u active
};

/// min L/2 (v + xi1)^2 + r/2 (u + xi2)^2 s.t. v >= u, v >= 0, by enumerating
/// every active set and keeping the feasible candidate with least value.
inline VuOracle vu_brute_force(double xi1, double xi2, double L, double r) {
  const auto value = [&](double v, double u) {
    return 0.5 * L * (v + xi1) * (v + xi1) + 0.5 * r * (u + xi2) * (u + xi2);
  };
  const auto feasible = [](double v, double u) { return v >= u && v >= 0.0; };
  VuOracle best;
  double best_val = std::numeric_limits<double>::infinity();
  const auto consider = [&](double v, double u, int set) {
    if (!feasible(v, u)) return;
    const double val = value(v, u);
    if (val < best_val) {
      best_val = val;
      best = {v, u, set};
    }
  };
  consider(-xi1, -xi2, 1);
  consider(0.0, std::min(0.0, -xi2), 2);
  consider(0.0, 0.0, 3);
  const double t = -(L * xi1 + r * xi2) / (L + r);
  consider(std::max(t, 0.0), std::max(t, 0.0), 4);
  return best;
}

/// Standard normal cdf and pdf.
inline double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }
inline double norm_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI); }

/// E[(m + s G)_+] for G standard normal.
inline double rectified_normal_mean(double m, double s) {
  if (s == 0.0) return std::max(m, 0.0);
  return m * norm_cdf(m / s) + s * norm_pdf(m / s);
}

/// A random subproblem with a gradient drawn at a random feasible anchor.
struct RandomSubproblem {
  aespg::ProblemData data;
  aespg::ModelParams params;
  aespg::Variables anchor;
  aespg::GradientBlocks grads;
  double L;

  aespg::SubproblemSpec spec() const { return {data, params, anchor, grads, L, 1e-3}; }
};

inline RandomSubproblem random_subproblem(Index N, Index n1, Index n0, std::uint64_t seed,
                                          double L = 1.0) {
  aespg::ProblemData data = random_problem(N, n1, n0, seed);
  aespg::ModelParams params = aespg::make_params(data, 1e-4, 0.1);
  aespg::Rng rng(seed, aespg::RngStream::Sampling);
  aespg::Variables anchor = random_feasible(data, params, rng, 0.5);
  aespg::GradientBlocks grads = aespg::GradientBlocks::unpack(
      rng.randn(data.dims().packed_size(), 1).col(0), data.dims());
  return {std::move(data), params, std::move(anchor), std::move(grads), L};
}

}  // namespace testing
