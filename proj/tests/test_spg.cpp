#include "doctest.h"

#include "aespg/reference.hpp"
#include "aespg/spg.hpp"
#include "support.hpp"

using namespace aespg;

TEST_CASE("default initialization") {
  const ProblemData data = testing::random_problem(12, 4, 3, 2);
  const ModelParams p = make_params(data, 1e-4, 0.1);
  const Variables a = init_variables(data, 7);
  const Variables b = init_variables(data, 7);
  CHECK(a.pack() == b.pack());
  CHECK(init_variables(data, 8).pack() != a.pack());
  CHECK(feasibility(a, data, p).in_Z);
  CHECK(a.b1.isZero());
  CHECK(a.b2.isZero());
  CHECK(eval_penalty(a, data, p) == 0.0);
  CHECK(std::isfinite(eval_objective(a, data, p)));
  Rng rng(7, RngStream::Init);
  CHECK(a.W == rng.randn(4, 3) / 12.0);
}

TEST_CASE("default L0") {
  const ProblemData data = testing::random_problem(100, 10, 5, 1);
  const ModelParams p = make_params(data, 1e-4, 0.1);
  CHECK(default_L0(data, p) == 1.0);
  const ProblemData wide = testing::random_problem(10, 40, 60, 1);
  const ModelParams pw = make_params(wide, 1e-4, 0.1);
  CHECK(default_L0(wide, pw) == doctest::Approx(std::sqrt(60.0 * 40.0 / 10.0)));
  const ModelParams big_beta = make_params(wide, 1e-4, 0.1, 50.0);
  CHECK(default_L0(wide, big_beta) == 50.0);
}

TEST_CASE("config validation and schedule warning") {
  SpgConfig c;
  CHECK_NOTHROW(validate(c));
  CHECK(schedule_warning(c).has_value());
  c.tau3 = 2.0;
  CHECK_FALSE(schedule_warning(c).has_value());
  c.mu0 = 1.0;
  CHECK_THROWS_AS(validate(c), ParameterError);
  c = SpgConfig{};
  c.L0 = 0.5;
  CHECK_THROWS_AS(validate(c), ParameterError);
  c = SpgConfig{};
  c.tau1 = 1.0;
  CHECK_THROWS_AS(validate(c), ParameterError);
}

TEST_CASE("exact minimizer forces the shrink branch") {
  const ProblemData data(Matrix::Zero(2, 4), 3);
  const ModelParams p = make_params(data, 1e-3, 0.1, std::nullopt, 1.0);
  const Variables z = Variables::zeros(data.dims());
  SpgConfig c;
  const SpgStep s = spg_step(z, 0.01, 2.0, data, p, c);
  CHECK(s.z.pack().cwiseAbs().maxCoeff() <= 1e-12);
  CHECK_FALSE(s.accepted);
  CHECK(s.mu == c.tau1 * 0.01);
  CHECK(s.L == c.tau3 * 2.0);
}

TEST_CASE("one step on a 1-sample instance matches the reference subproblem solution") {
  Matrix X(2, 1);
  X << 0.8, 0.2;
  const ProblemData data(X, 2);
  const ModelParams p = make_params(data, 0.01, 0.1);
  const Variables z = init_variables(data, 3);
  const double mu = 0.01, L = 1.5;
  SpgConfig c;
  c.sub.tol = 1e-24;
  c.sub.max_iter = 1000000;
  const SpgStep s = spg_step(z, mu, L, data, p, c);

  const GradientBlocks g = grad_smoothed_H(z, mu, data, p);
  const SubproblemSpec spec{data, p, z, g, L, mu};
  const ReferenceResult ref = reference_solve(spec, 1e-14);
  CHECK((s.z.pack() - ref.z.pack()).cwiseAbs().maxCoeff() <= 1e-6);
  CHECK(s.smoothed_before == doctest::Approx(eval_smoothed_objective(z, mu, data, p)));
  CHECK((s.mu == mu || s.mu == c.tau1 * mu));
  CHECK((s.L == L || s.L == c.tau3 * L));
  CHECK(s.accepted == (s.smoothed_after - s.smoothed_before < -c.tau2 * mu / L));
}

TEST_CASE("stationarity surrogate") {
  const Dimensions d{3, 2, 2};
  const Variables a = Variables::zeros(d);
  CHECK(stationarity_diagnostic(a, a, 0.1, 2.0) == 0.0);
  Variables b = a;
  b.V(0, 0) = 1.0;
  Variables c = a;
  c.V(0, 0) = 2.0;
  CHECK(stationarity_diagnostic(a, b, 0.1, 2.0) == doctest::Approx(2.2));
  CHECK(stationarity_diagnostic(a, c, 0.1, 2.0) == doctest::Approx(2.0 * stationarity_diagnostic(a, b, 0.1, 2.0)));
}

TEST_CASE("SPG on a tiny instance terminates with a well-formed trace") {
  const ProblemData data = testing::random_problem(10, 3, 2, 4);
  const ModelParams p = make_params(data, 1e-4, 0.1);
  SpgConfig c;
  std::vector<TraceRow> streamed;
  const SpgResult r = run_spg(data, p, c, std::nullopt, nullptr,
                              [&](const TraceRow& row) { streamed.push_back(row); });
  CHECK(r.trace.termination == std::string(kTerminatedMu));
  REQUIRE(r.trace.rows.size() >= 2);
  CHECK(r.trace.rows.size() <= 4001);
  CHECK(streamed.size() == r.trace.rows.size());
  CHECK(feasibility(r.z, data, p).in_Z);
  CHECK(r.diagnostics.size() + 1 == r.trace.rows.size());

  const double slack = data.one_norm() + static_cast<double>(data.n1() * data.N()) * p.beta;
  for (std::size_t i = 0; i < r.trace.rows.size(); ++i) {
    const TraceRow& row = r.trace.rows[i];
    CHECK(row.k == static_cast<long>(i));
    CHECK(std::abs(*row.smoothed - row.fval) <= slack * *row.mu + 1e-12);
    CHECK(*row.smoothed >= row.fval - 1e-12);
    if (i > 0) {
      const double prev = *r.trace.rows[i - 1].mu;
      CHECK((*row.mu == prev || *row.mu == c.tau1 * prev));
      CHECK(*row.L >= *r.trace.rows[i - 1].L);
    }
  }
  CHECK(*r.trace.rows.back().mu <= c.epsilon);
}

TEST_CASE("run rejects an infeasible start and honors max_outer_iters") {
  const ProblemData data = testing::random_problem(6, 2, 2, 5);
  const ModelParams p = make_params(data, 1e-4, 0.1);
  Variables z0 = init_variables(data, 1);
  z0.V(0, 0) = -1.0;
  CHECK_THROWS_AS(run_spg(data, p, SpgConfig{}, z0), ParameterError);
  SpgConfig c;
  c.max_outer_iters = 3;
  const SpgResult r = run_spg(data, p, c);
  CHECK(r.trace.termination == std::string(kTerminatedMaxIter));
  CHECK(r.trace.rows.size() == 4);
}

TEST_CASE("Lipschitz estimate dominates sampled difference quotients") {
  const ProblemData data = testing::random_problem(4, 2, 2, 6);
  const ModelParams p = make_params(data, 1.0, 1.0);
  const LipschitzEstimate est = estimate_lipschitz(data, p, 1, 200);
  CHECK(est.eta > 0.0);
  CHECK(est.radius >= p.alpha);
  Rng rng(99, RngStream::Sampling);
  for (int i = 0; i < 50; ++i) {
    Vector a(data.dims().packed_size()), b(data.dims().packed_size());
    for (Index k = 0; k < a.size(); ++k) {
      a[k] = est.radius * (2.0 * rng.uniform() - 1.0);
      b[k] = est.radius * (2.0 * rng.uniform() - 1.0);
    }
    const double mu = 0.3;
    const Vector ga = grad_smoothed_H(Variables::unpack(a, data.dims()), mu, data, p).pack();
    const Vector gb = grad_smoothed_H(Variables::unpack(b, data.dims()), mu, data, p).pack();
    CHECK(mu * (ga - gb).norm() <= est.L_gradH * (a - b).norm());
  }
  CHECK(theoretical_L0(data, p, 0.5, 1, 200) == doctest::Approx(std::max(1.0, est.bound / 0.5)));
}
