#include "aespg/data.hpp"

#include "aespg/rng.hpp"
#include "binary_io.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

namespace aespg {

namespace {

constexpr std::string_view kMatrixMagic = "AESPGM01";
constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

SynthData split(Matrix all, Index N) {
  SynthData out;
  out.train = all.leftCols(N);
  out.test = all.rightCols(all.cols() - N);
  return out;
}

bool ends_with(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

void validate(const SynthSpec& spec) {
  if (spec.N < 1) throw ParameterError("N must be at least 1");
  if (spec.N_test < 0) throw ParameterError("N_test must be nonnegative");
  if (spec.n0 < 1) throw ParameterError("N0 must be at least 1");
  if (!(spec.eps0 >= 0.0)) throw ParameterError("eps0 must be nonnegative");
}

SynthData gen_type1(const SynthSpec& spec) {
  validate(spec);
  Rng rng(spec.seed, RngStream::Data);
  const Index total = spec.N + spec.N_test;
  const Vector center = (rng.randn(spec.n0, 1).array() + 0.5).matrix();
  Vector dir = rng.randn(spec.n0, 1);
  if (spec.zero_covariance) dir.setZero();
  Matrix all(spec.n0, total);
  for (Index n = 0; n < total; ++n) {
    const double g = rng.normal();
    for (Index i = 0; i < spec.n0; ++i) {
      all(i, n) = std::max(0.0, center[i] + dir[i] * g + spec.eps0 * rng.normal());
    }
  }
  return split(std::move(all), spec.N);
}

SynthData gen_type2(const SynthSpec& spec) {
  validate(spec);
  Rng rng(spec.seed, RngStream::Data);
  const Index total = spec.N + spec.N_test;
  const Matrix u = rng.rand(total, spec.n0);
  const Matrix g = rng.randn(total, spec.n0);
  Matrix all = (u + spec.eps0 * g).cwiseMax(0.0).transpose();
  return split(std::move(all), spec.N);
}

SynthData generate(const SynthSpec& spec) {
  return spec.kind == SynthKind::Type1 ? gen_type1(spec) : gen_type2(spec);
}

Preset preset(int example_id) {
  static constexpr std::array<Preset, 9> kPresets{{
      {50, 50, 25},
      {50, 100, 25},
      {50, 100, 40},
      {50, 10, 5},
      {75, 10, 5},
      {100, 10, 5},
      {100, 100, 25},
      {150, 10, 5},
      {150, 20, 10},
  }};
  if (example_id < 1 || example_id > 9) throw ParameterError("preset id must be in 1..9");
  return kPresets[static_cast<std::size_t>(example_id - 1)];
}

IdxImages read_idx_images(std::istream& in) {
  detail::ByteReader reader(in);
  const std::uint32_t magic = reader.u32_be("IDX magic");
  if (magic != kIdxImagesMagic) throw FormatError("bad IDX image magic", 0);
  IdxImages img;
  img.count = reader.u32_be("image count");
  img.rows = reader.u32_be("row count");
  img.cols = reader.u32_be("column count");
  const std::size_t n = std::size_t{img.count} * img.rows * img.cols;
  img.pixels.resize(n);
  reader.read_exact(reinterpret_cast<char*>(img.pixels.data()), n, "pixels");
  return img;
}

std::vector<std::uint8_t> read_idx_labels(std::istream& in) {
  detail::ByteReader reader(in);
  const std::uint32_t magic = reader.u32_be("IDX magic");
  if (magic != kIdxLabelsMagic) throw FormatError("bad IDX label magic", 0);
  const std::uint32_t count = reader.u32_be("label count");
  std::vector<std::uint8_t> labels(count);
  reader.read_exact(reinterpret_cast<char*>(labels.data()), count, "labels");
  return labels;
}

MnistSample sample_mnist(const IdxImages& images, const std::vector<std::uint8_t>& labels,
                         Index per_class, std::uint64_t seed) {
  if (images.rows * images.cols != 784) throw ParameterError("MNIST images must be 28 x 28");
  if (labels.size() != images.count) throw ParameterError("image and label counts differ");
  if (per_class < 1) throw ParameterError("per-class count must be at least 1");

  std::array<std::vector<Index>, 10> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] > 9) throw ParameterError("label outside 0..9");
    by_class[labels[i]].push_back(static_cast<Index>(i));
  }

  Rng rng(seed, RngStream::Sampling);
  MnistSample out;
  for (std::uint8_t c = 0; c < 10; ++c) {
    std::vector<Index>& pool = by_class[c];
    if (static_cast<Index>(pool.size()) < per_class) {
      throw ParameterError("class " + std::to_string(c) + " has fewer than the requested samples");
    }
    // Partial Fisher-Yates: the first per_class entries become the sample.
    for (Index k = 0; k < per_class; ++k) {
      const Index remaining = static_cast<Index>(pool.size()) - k;
      std::swap(pool[static_cast<std::size_t>(k)], pool[static_cast<std::size_t>(k + rng.below(remaining))]);
    }
    std::sort(pool.begin(), pool.begin() + per_class);
    for (Index k = 0; k < per_class; ++k) {
      out.indices.push_back(pool[static_cast<std::size_t>(k)]);
      out.labels.push_back(c);
    }
  }

  const Index dim = 784;
  out.X.resize(dim, static_cast<Index>(out.indices.size()));
  for (Index col = 0; col < out.X.cols(); ++col) {
    const std::size_t base = static_cast<std::size_t>(out.indices[static_cast<std::size_t>(col)]) * 784;
    for (Index p = 0; p < dim; ++p) {
      out.X(p, col) = images.pixels[base + static_cast<std::size_t>(p)] / 255.0;
    }
  }
  return out;
}

MnistSample load_mnist(const MnistSpec& spec) {
  std::ifstream img_in(spec.images_path, std::ios::binary);
  if (!img_in) throw ParameterError("cannot open " + spec.images_path);
  std::ifstream lab_in(spec.labels_path, std::ios::binary);
  if (!lab_in) throw ParameterError("cannot open " + spec.labels_path);
  const IdxImages images = read_idx_images(img_in);
  const std::vector<std::uint8_t> labels = read_idx_labels(lab_in);
  return sample_mnist(images, labels, spec.per_class, spec.seed);
}

double reconstruction_error(const Matrix& W, const Vector& b1, const Vector& b2, const Matrix& X) {
  if (X.cols() == 0) return 0.0;
  Matrix H = W * X;
  H.colwise() += b1;
  H = H.cwiseMax(0.0);
  Matrix Y = W.transpose() * H;
  Y.colwise() += b2;
  return (Y.cwiseMax(0.0) - X).squaredNorm() / static_cast<double>(X.cols());
}

double feasibility_violation(const Variables& z, const ProblemData& data) {
  const Matrix S = hidden_preactivation(z, data.X()).cwiseMax(0.0);
  return (z.V - S).cwiseAbs().sum() / static_cast<double>(data.N() * data.n1());
}

Metrics compute_metrics(const Variables& z, const ProblemData& data, const ModelParams& params,
                        const Matrix* test) {
  Metrics m;
  m.fval = eval_objective(z, data, params);
  m.feasvi = feasibility_violation(z, data);
  m.trainerr = eval_fidelity(z, data);
  if (test != nullptr && test->cols() > 0) m.testerr = reconstruction_error(z.W, z.b1, z.b2, *test);
  return m;
}

void write_matrix_binary(std::ostream& out, const Matrix& m) {
  out.write(kMatrixMagic.data(), static_cast<std::streamsize>(kMatrixMagic.size()));
  detail::put_u64(out, static_cast<std::uint64_t>(m.rows()));
  detail::put_u64(out, static_cast<std::uint64_t>(m.cols()));
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c) detail::put_f64(out, m(r, c));
}

Matrix read_matrix_binary(std::istream& in) {
  detail::ByteReader reader(in);
  reader.expect_magic(kMatrixMagic);
  const auto rows = static_cast<Index>(reader.u64("rows"));
  const auto cols = static_cast<Index>(reader.u64("cols"));
  if (rows < 0 || cols < 0 || (rows > 0 && cols > (Index{1} << 40) / rows)) {
    throw FormatError("implausible matrix dimensions", reader.offset());
  }
  Matrix m(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) m(r, c) = reader.f64("matrix entry");
  return m;
}

void write_matrix_csv(std::ostream& out, const Matrix& m) {
  out << std::setprecision(17);
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) {
      if (c > 0) out << ',';
      out << m(r, c);
    }
    out << '\n';
  }
}

Matrix read_matrix_csv(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t offset = 0;
  while (std::getline(in, line)) {
    const std::size_t line_start = offset;
    offset += line.size() + 1;
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        throw FormatError("non-numeric CSV cell '" + cell + "'", line_start);
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw FormatError("ragged CSV row", line_start);
    }
    rows.push_back(std::move(row));
  }
  const Index nr = static_cast<Index>(rows.size());
  const Index nc = nr > 0 ? static_cast<Index>(rows.front().size()) : 0;
  Matrix m(nr, nc);
  for (Index r = 0; r < nr; ++r)
    for (Index c = 0; c < nc; ++c) m(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
  return m;
}

void save_matrix(const std::string& path, const Matrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParameterError("cannot write " + path);
  if (ends_with(path, ".csv")) {
    write_matrix_csv(out, m);
  } else {
    write_matrix_binary(out, m);
  }
  if (!out) throw ParameterError("write failed for " + path);
}

Matrix load_matrix(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParameterError("cannot open " + path);
  return ends_with(path, ".csv") ? read_matrix_csv(in) : read_matrix_binary(in);
}

}  // namespace aespg
