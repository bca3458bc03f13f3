#include "doctest.h"

#include "aespg/reference.hpp"
#include "support.hpp"

#include <array>

using namespace aespg;

TEST_CASE("vu closed form agrees with active-set enumeration") {
  Rng rng(21, RngStream::Sampling);
  std::array<int, 5> seen{};
  for (int i = 0; i < 2000; ++i) {
    const double xi1 = 4.0 * rng.uniform() - 2.0;
    const double xi2 = 4.0 * rng.uniform() - 2.0;
    const double L = 1.0 + 9.0 * rng.uniform();
    const double r = i % 2 == 0 ? 1.0 : 0.1 + 5.0 * rng.uniform();
    const VuSolution s = vu_closed_form(xi1, xi2, L, r);
    const testing::VuOracle o = testing::vu_brute_force(xi1, xi2, L, r);
    CHECK(std::abs(s.v - o.v) <= 1e-12);
    CHECK(std::abs(s.u - o.u) <= 1e-12);
    ++seen[static_cast<std::size_t>(s.which)];
  }
  for (int c = 1; c <= 4; ++c) CHECK(seen[static_cast<std::size_t>(c)] > 0);
}

TEST_CASE("vu closed form on hand-picked cases") {
  CHECK(vu_closed_form(-1.0, 0.5, 2.0).which == VuCase::Free);
  CHECK(vu_closed_form(1.0, 0.5, 2.0).which == VuCase::VAtZero);
  CHECK(vu_closed_form(1.0, -0.5, 2.0).which == VuCase::BothAtZero);
  const VuSolution tied = vu_closed_form(0.5, -2.0, 2.0);
  CHECK(tied.which == VuCase::Tied);
  CHECK(tied.v == doctest::Approx(1.0 / 3.0));
  CHECK(tied.u == tied.v);
}

TEST_CASE("factorization cache builds and inverts the (W, b1) system") {
  const ProblemData data = testing::random_problem(6, 2, 3, 8);
  const FactorizationCache cache(data.X(), 1.5, 0.1, 2.0);
  Matrix Xh(4, 6);
  Xh << data.X(), Matrix::Ones(1, 6);
  Matrix M = 2.0 * Xh * Xh.transpose();
  M.diagonal().array() += 1.5;
  M.diagonal().head(3).array() += 0.2;
  CHECK((cache.M() - M).cwiseAbs().maxCoeff() <= 1e-13);
  const Matrix rhs = Matrix::Random(2, 4);
  CHECK((cache.solve_right(rhs) * M - rhs).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("reference solver certifies its answer and rejects large instances") {
  auto sp = testing::random_subproblem(5, 2, 2, 3, 2.0);
  const ReferenceResult ref = reference_solve(sp.spec());
  CHECK(ref.converged);
  CHECK(ref.duality_gap <= 1e-10);
  CHECK(feasibility(ref.z, sp.data, sp.params).in_Z);
  const KktResidual kkt = subproblem_kkt_residual(sp.spec(), ref.z, ref.coupling_multiplier);
  CHECK(kkt.max() <= 1e-4);

  auto big = testing::random_subproblem(100, 5, 5, 3);
  CHECK_THROWS_AS(reference_solve(big.spec()), ParameterError);
}

TEST_CASE("SAMQP matches the reference solver on tiny instances") {
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    const Index N = 2 + static_cast<Index>(seed % 8);
    const Index n1 = 1 + static_cast<Index>(seed % 4);
    const Index n0 = 1 + static_cast<Index>(seed % 3);
    auto sp = testing::random_subproblem(N, n1, n0, seed, 1.0 + static_cast<double>(seed % 3));
    SamqpOptions opt;
    opt.tol = 1e-20;
    opt.max_iter = 200000;
    const SamqpResult res = solve_subproblem(sp.spec(), opt);
    const ReferenceResult ref = reference_solve(sp.spec());
    CHECK(ref.converged);
    CHECK(feasibility(res.z, sp.data, sp.params).in_Z);
    CHECK(subproblem_objective(sp.spec(), res.z) ==
          doctest::Approx(subproblem_objective(sp.spec(), ref.z)).epsilon(1e-8));
    CHECK(subproblem_kkt_residual(sp.spec(), res.z, res.coupling_multiplier).max() <= 1e-6);
  }
}

TEST_CASE("penalty weight does not change the minimizer") {
  auto sp = testing::random_subproblem(6, 3, 2, 17, 3.0);
  SamqpOptions a;
  a.tol = 1e-22;
  a.max_iter = 200000;
  SamqpOptions b = a;
  b.penalty = 3.0;
  const SamqpResult ra = solve_subproblem(sp.spec(), a);
  const SamqpResult rb = solve_subproblem(sp.spec(), b);
  CHECK((ra.z.pack() - rb.z.pack()).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("anchor with zero total gradient is a fixed point") {
  // g_W = -2 lambda2 Wbar and g_V = -lambda1 cancel the regularizer gradient,
  // and V strictly above (W X + b1)_+ keeps every coupling constraint slack.
  const ProblemData data = testing::random_problem(5, 3, 2, 12);
  const ModelParams p = make_params(data, 1e-3, 0.1);
  Rng rng(12, RngStream::Sampling);
  Variables anchor = testing::random_feasible(data, p, rng, 0.3, 0.0);
  anchor.V.array() += 0.5;
  GradientBlocks g = GradientBlocks::zeros(data.dims());
  g.gW = -2.0 * p.lambda2 * anchor.W;
  g.gV.setConstant(-p.lambda1);
  const SubproblemSpec spec{data, p, anchor, g, 2.0, 1e-3};

  const AdmmWorkspace ws = make_workspace(spec);
  AdmmState state = init_admm_state(spec);
  update_vu(state, spec, ws);
  CHECK((state.V - anchor.V).cwiseAbs().maxCoeff() <= 1e-14);
  update_wb(state, spec, ws);
  CHECK((state.W - anchor.W).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((state.b1 - anchor.b1).cwiseAbs().maxCoeff() <= 1e-12);
  update_multipliers(state);
  CHECK(state.delta_rho_sq <= 1e-24);

  const SamqpResult res = solve_subproblem(spec);
  CHECK(res.converged);
  CHECK((res.z.pack() - anchor.pack()).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("zero data and zero gradient give the zero solution") {
  const ProblemData data(Matrix::Zero(2, 3), 2);
  const ModelParams p = make_params(data, 1e-3, 0.1, std::nullopt, 1.0);
  const Variables anchor = Variables::zeros(data.dims());
  const SubproblemSpec spec{data, p, anchor, GradientBlocks::zeros(data.dims()), 1.0, 1e-3};
  const SamqpResult res = solve_subproblem(spec);
  CHECK(res.converged);
  CHECK(res.z.pack().cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("non-finite gradients raise NumericError with the iterate") {
  auto sp = testing::random_subproblem(4, 2, 2, 5);
  sp.grads.gV(0, 0) = std::numeric_limits<double>::quiet_NaN();
  try {
    solve_subproblem(sp.spec());
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(e.iterate().size() == sp.data.dims().packed_size());
  }
}

TEST_CASE("subproblem validation") {
  auto sp = testing::random_subproblem(4, 2, 2, 6);
  sp.L = 0.5;
  CHECK_THROWS_AS(solve_subproblem(sp.spec()), ParameterError);
  sp.L = 1.0;
  sp.grads.gb1.resize(5);
  CHECK_THROWS_AS(solve_subproblem(sp.spec()), ParameterError);
}
