#pragma once

// Slow, independent solver for small proximal subproblems, used as an oracle
// for SAMQP. It materializes the constraint system A z <= c densely and runs
// dual coordinate ascent (Hildreth's method), which is exact for a diagonal
// Hessian. Termination is certified by the duality gap against a feasible
// rounding of the primal iterate.

#include "aespg/samqp.hpp"

namespace aespg {

inline constexpr Index kReferenceMaxPackedSize = 500;

struct DenseConstraints {
  Matrix A;  // nu x N2
  Vector c;  // nu
};

/// A and c with the same row order as constraint_residuals().
DenseConstraints dense_constraints(const ProblemData& data, double alpha);

struct ReferenceResult {
  Variables z;
  Matrix coupling_multiplier;  // dual variables of v_n >= W x_n + b1, as N1 x N
  double duality_gap = 0.0;
  long sweeps = 0;
  bool converged = false;
};

/// Solves the subproblem to duality gap <= tol. Throws ParameterError when
/// N2 exceeds kReferenceMaxPackedSize.
ReferenceResult reference_solve(const SubproblemSpec& spec, double tol = 1e-10,
                                long max_sweeps = 2'000'000);

}  // namespace aespg
