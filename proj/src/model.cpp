#include "aespg/model.hpp"

#include "binary_io.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace aespg {

namespace {

constexpr std::string_view kVariablesMagic = "AESPGZ01";

void require_dims(const Variables& z, const ProblemData& data) {
  const Dimensions d = data.dims();
  if (z.W.rows() != d.n1 || z.W.cols() != d.n0 || z.b1.size() != d.n1 || z.b2.size() != d.n0 ||
      z.V.rows() != d.n1 || z.V.cols() != d.N) {
    throw ParameterError("variable shapes do not match problem dimensions");
  }
}

}  // namespace

ProblemData::ProblemData(Matrix X, Index hidden_units) : X_(std::move(X)), n1_(hidden_units) {
  if (X_.rows() < 1 || X_.cols() < 1 || n1_ < 1) {
    throw ParameterError("N, N0 and N1 must all be at least 1");
  }
  if (!X_.allFinite() || (X_.array() < 0.0).any()) {
    throw ParameterError("data matrix must be finite and entrywise nonnegative");
  }
  fro_sq_ = X_.squaredNorm();
  one_norm_ = X_.cwiseAbs().colwise().sum().maxCoeff();
}

double compute_alpha(const ProblemData& data, double lambda1, double lambda2, double theta) {
  if (!(lambda1 > 0.0) || !(lambda2 > 0.0)) {
    throw ParameterError("lambda1 and lambda2 must be positive");
  }
  const double floor = data.fro_sq() / static_cast<double>(data.N());
  if (!(theta > floor) || !(theta > 0.0)) {
    throw ParameterError("theta must exceed ||X||_F^2 / N");
  }
  const double n1n0 = static_cast<double>(data.n1() * data.n0());
  const double xnorm = data.one_norm();
  const double first = theta / lambda1 + std::sqrt(n1n0 * theta / lambda2) * xnorm;
  const double second = theta * std::sqrt(n1n0 * theta) / (lambda1 * std::sqrt(lambda2)) +
                        std::sqrt(static_cast<double>(data.N()) * theta) + xnorm;
  return std::max(first, second);
}

double default_theta(const ProblemData& data) {
  return 1.1 * data.fro_sq() / static_cast<double>(data.N());
}

ModelParams make_params(const ProblemData& data, double lambda1, double lambda2,
                        std::optional<double> beta, std::optional<double> theta) {
  ModelParams p;
  p.lambda1 = lambda1;
  p.lambda2 = lambda2;
  p.beta = beta.value_or(1.0 / static_cast<double>(data.N()));
  if (!(p.beta > 0.0)) throw ParameterError("beta must be positive");
  p.theta = theta.value_or(default_theta(data));
  p.alpha = compute_alpha(data, p.lambda1, p.lambda2, p.theta);
  return p;
}

Variables Variables::zeros(const Dimensions& d) {
  return {Matrix::Zero(d.n1, d.n0), Vector::Zero(d.n1), Vector::Zero(d.n0), Matrix::Zero(d.n1, d.N)};
}

Vector Variables::pack() const {
  const Dimensions d = dims();
  Vector z(d.packed_size());
  Index off = 0;
  z.segment(off, W.size()) = W.reshaped();
  off += W.size();
  z.segment(off, b1.size()) = b1;
  off += b1.size();
  z.segment(off, b2.size()) = b2;
  off += b2.size();
  z.segment(off, V.size()) = V.reshaped();
  return z;
}

Variables Variables::unpack(const Vector& z, const Dimensions& d) {
  if (z.size() != d.packed_size()) {
    throw ParameterError("packed vector length does not match N2");
  }
  Variables v;
  Index off = 0;
  v.W = z.segment(off, d.n1 * d.n0).reshaped(d.n1, d.n0);
  off += d.n1 * d.n0;
  v.b1 = z.segment(off, d.n1);
  off += d.n1;
  v.b2 = z.segment(off, d.n0);
  off += d.n0;
  v.V = z.segment(off, d.n1 * d.N).reshaped(d.n1, d.N);
  return v;
}

Vector Variables::b() const {
  Vector out(b1.size() + b2.size());
  out << b1, b2;
  return out;
}

Matrix hidden_preactivation(const Variables& z, const Matrix& X) {
  Matrix S = z.W * X;
  S.colwise() += z.b1;
  return S;
}

Matrix output_preactivation(const Variables& z) {
  Matrix Y = z.W.transpose() * z.V;
  Y.colwise() += z.b2;
  return Y;
}

double eval_fidelity(const Variables& z, const ProblemData& data) {
  require_dims(z, data);
  const Matrix Y = output_preactivation(z);
  return (Y.cwiseMax(0.0) - data.X()).squaredNorm() / static_cast<double>(data.N());
}

double eval_regularizer(const Variables& z, const ModelParams& params) {
  return params.lambda1 * z.V.sum() + params.lambda2 * z.W.squaredNorm();
}

double eval_penalty(const Variables& z, const ProblemData& data, const ModelParams& params) {
  require_dims(z, data);
  const Matrix S = hidden_preactivation(z, data.X());
  return params.beta * (z.V - S.cwiseMax(0.0)).sum();
}

ObjectiveBreakdown eval_objective_parts(const Variables& z, const ProblemData& data,
                                        const ModelParams& params) {
  return {eval_fidelity(z, data), eval_regularizer(z, params), eval_penalty(z, data, params)};
}

double eval_objective(const Variables& z, const ProblemData& data, const ModelParams& params) {
  return eval_objective_parts(z, data, params).total();
}

Variables project_b_box(Variables z, double alpha) {
  z.b1 = z.b1.cwiseMax(-alpha).cwiseMin(alpha);
  z.b2 = z.b2.cwiseMax(-alpha).cwiseMin(alpha);
  return z;
}

FeasibilityReport feasibility(const Variables& z, const ProblemData& data,
                              const ModelParams& params, double tol) {
  require_dims(z, data);
  const Matrix relu = hidden_preactivation(z, data.X()).cwiseMax(0.0);
  const Matrix gap = z.V - relu;
  FeasibilityReport r;
  r.omega1_violation = gap.cwiseAbs().maxCoeff();
  r.omega2_violation = std::max(0.0, (-gap).maxCoeff());
  const double binf = std::max(z.b1.cwiseAbs().maxCoeff(), z.b2.cwiseAbs().maxCoeff());
  r.omega3_violation = std::max(0.0, binf - params.alpha);
  r.in_Z = r.omega2_violation <= tol && r.omega3_violation <= tol;
  return r;
}

Vector constraint_residuals(const Variables& z, const ProblemData& data,
                            const ModelParams& params) {
  require_dims(z, data);
  const Dimensions d = data.dims();
  Vector r(d.constraint_count());
  const Index block = d.n1 * d.N;
  const Index nb = d.n1 + d.n0;
  const Matrix S = hidden_preactivation(z, data.X());
  r.segment(0, block) = (S - z.V).reshaped();
  r.segment(block, block) = -z.V.reshaped();
  const Vector b = z.b();
  r.segment(2 * block, nb) = b.array() - params.alpha;
  r.segment(2 * block + nb, nb) = -b.array() - params.alpha;
  return r;
}

void write_variables_binary(std::ostream& out, const Variables& z) {
  const Dimensions d = z.dims();
  out.write(kVariablesMagic.data(), static_cast<std::streamsize>(kVariablesMagic.size()));
  detail::put_u64(out, static_cast<std::uint64_t>(d.N));
  detail::put_u64(out, static_cast<std::uint64_t>(d.n0));
  detail::put_u64(out, static_cast<std::uint64_t>(d.n1));
  const Vector packed = z.pack();
  for (Index i = 0; i < packed.size(); ++i) detail::put_f64(out, packed[i]);
}

Variables read_variables_binary(std::istream& in) {
  detail::ByteReader reader(in);
  reader.expect_magic(kVariablesMagic);
  Dimensions d;
  d.N = static_cast<Index>(reader.u64("N"));
  d.n0 = static_cast<Index>(reader.u64("N0"));
  d.n1 = static_cast<Index>(reader.u64("N1"));
  if (d.N < 1 || d.n0 < 1 || d.n1 < 1 || d.N > (Index{1} << 32) || d.n0 > (Index{1} << 24) ||
      d.n1 > (Index{1} << 24)) {
    throw FormatError("invalid dimensions", reader.offset());
  }
  Vector packed(d.packed_size());
  for (Index i = 0; i < packed.size(); ++i) packed[i] = reader.f64("value");
  return Variables::unpack(packed, d);
}

void write_variables_text(std::ostream& out, const Variables& z) {
  const Dimensions d = z.dims();
  out << d.N << ' ' << d.n0 << ' ' << d.n1 << '\n';
  const Vector packed = z.pack();
  out << std::setprecision(17);
  for (Index i = 0; i < packed.size(); ++i) out << packed[i] << '\n';
}

Variables read_variables_text(std::istream& in) {
  Dimensions d;
  if (!(in >> d.N >> d.n0 >> d.n1) || d.N < 1 || d.n0 < 1 || d.n1 < 1) {
    throw FormatError("bad variables header", 0);
  }
  Vector packed(d.packed_size());
  for (Index i = 0; i < packed.size(); ++i) {
    if (!(in >> packed[i])) {
      in.clear();
      const auto pos = in.tellg();
      throw FormatError("truncated variables text at value " + std::to_string(i),
                        pos < 0 ? 0 : static_cast<std::size_t>(pos));
    }
  }
  return Variables::unpack(packed, d);
}

std::string to_key_value(const ObjectiveBreakdown& parts) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "fidelity=" << parts.fidelity << '\n'
     << "regularizer=" << parts.regularizer << '\n'
     << "penalty=" << parts.penalty << '\n'
     << "objective=" << parts.total() << '\n';
  return os.str();
}

std::string to_key_value(const FeasibilityReport& report) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "omega1_violation=" << report.omega1_violation << '\n'
     << "omega2_violation=" << report.omega2_violation << '\n'
     << "omega3_violation=" << report.omega3_violation << '\n'
     << "in_Z=" << (report.in_Z ? "true" : "false") << '\n';
  return os.str();
}

}  // namespace aespg
