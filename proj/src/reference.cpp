#include "aespg/reference.hpp"

#include <string>
#include <vector>

namespace aespg {

namespace {

struct Layout {
  Index n0, n1, N;
  Index w(Index j, Index s) const { return s * n1 + j; }
  Index b1(Index j) const { return n0 * n1 + j; }
  Index b(Index i) const { return n0 * n1 + i; }
  Index v(Index j, Index n) const { return n0 * n1 + n1 + n0 + n * n1 + j; }
};

struct SparseRow {
  std::vector<std::pair<Index, double>> entries;
  double c = 0.0;
  double curvature = 0.0;  // a^T H^{-1} a
};

}  // namespace

DenseConstraints dense_constraints(const ProblemData& data, double alpha) {
  const Dimensions d = data.dims();
  const Layout lay{d.n0, d.n1, d.N};
  DenseConstraints out{Matrix::Zero(d.constraint_count(), d.packed_size()),
                       Vector::Zero(d.constraint_count())};
  const Index block = d.n1 * d.N;
  for (Index n = 0; n < d.N; ++n) {
    for (Index j = 0; j < d.n1; ++j) {
      const Index row = n * d.n1 + j;
      for (Index s = 0; s < d.n0; ++s) out.A(row, lay.w(j, s)) = data.X()(s, n);
      out.A(row, lay.b1(j)) = 1.0;
      out.A(row, lay.v(j, n)) = -1.0;
      out.A(block + row, lay.v(j, n)) = -1.0;
    }
  }
  const Index nb = d.n1 + d.n0;
  for (Index i = 0; i < nb; ++i) {
    out.A(2 * block + i, lay.b(i)) = 1.0;
    out.c(2 * block + i) = alpha;
    out.A(2 * block + nb + i, lay.b(i)) = -1.0;
    out.c(2 * block + nb + i) = alpha;
  }
  return out;
}

ReferenceResult reference_solve(const SubproblemSpec& spec, double tol, long max_sweeps) {
  validate(spec);
  const Dimensions d = spec.data.dims();
  if (d.packed_size() > kReferenceMaxPackedSize) {
    throw ParameterError("reference_solve is limited to N2 <= " +
                         std::to_string(kReferenceMaxPackedSize));
  }
  const Index n2 = d.packed_size();
  const Index nw = d.n0 * d.n1;
  const double L = spec.L;

  // q(z) = 1/2 z^T H z + f^T z + const with diagonal H.
  Vector h = Vector::Constant(n2, L);
  h.head(nw).array() += 2.0 * spec.params.lambda2;
  const Vector hinv = h.cwiseInverse();
  const Vector anchor = spec.anchor.pack();
  Vector f = spec.grads.pack() - L * anchor;
  f.tail(d.n1 * d.N).array() += spec.params.lambda1;
  const double const0 = -spec.grads.pack().dot(anchor) + 0.5 * L * anchor.squaredNorm();

  const DenseConstraints dense = dense_constraints(spec.data, spec.params.alpha);
  std::vector<SparseRow> rows(static_cast<std::size_t>(dense.A.rows()));
  for (Index i = 0; i < dense.A.rows(); ++i) {
    SparseRow& r = rows[static_cast<std::size_t>(i)];
    for (Index k = 0; k < n2; ++k) {
      const double a = dense.A(i, k);
      if (a != 0.0) {
        r.entries.emplace_back(k, a);
        r.curvature += a * a * hinv[k];
      }
    }
    r.c = dense.c[i];
  }

  Vector gamma = Vector::Zero(dense.A.rows());
  Vector z = -hinv.cwiseProduct(f);

  const auto rounded = [&](const Vector& packed) {
    Variables v = project_b_box(Variables::unpack(packed, d), spec.params.alpha);
    v.V = v.V.cwiseMax(hidden_preactivation(v, spec.data.X())).cwiseMax(0.0);
    return v;
  };

  ReferenceResult result;
  constexpr long kCheckEvery = 25;
  for (long sweep = 1; sweep <= max_sweeps; ++sweep) {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const SparseRow& r = rows[i];
      double ax = 0.0;
      for (const auto& [k, a] : r.entries) ax += a * z[k];
      const double updated = std::max(0.0, gamma[static_cast<Index>(i)] + (ax - r.c) / r.curvature);
      const double step = updated - gamma[static_cast<Index>(i)];
      if (step != 0.0) {
        for (const auto& [k, a] : r.entries) z[k] -= hinv[k] * a * step;
        gamma[static_cast<Index>(i)] = updated;
      }
    }
    result.sweeps = sweep;
    if (sweep % kCheckEvery != 0 && sweep != max_sweeps) continue;

    z = -hinv.cwiseProduct(f + dense.A.transpose() * gamma);
    const double dual = -0.5 * h.cwiseProduct(z.cwiseAbs2()).sum() - dense.c.dot(gamma) + const0;
    Variables candidate = rounded(z);
    const double primal = subproblem_objective(spec, candidate);
    result.duality_gap = primal - dual;
    result.z = std::move(candidate);
    if (result.duality_gap <= tol) {
      result.converged = true;
      break;
    }
  }
  result.coupling_multiplier = gamma.head(d.n1 * d.N).reshaped(d.n1, d.N);
  return result;
}

}  // namespace aespg
