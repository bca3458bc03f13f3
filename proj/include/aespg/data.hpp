#pragma once

// Synthetic generators, the numbered size presets, MNIST ingestion, the
// reported metrics and matrix serialization.

#include "aespg/model.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace aespg {

enum class SynthKind { Type1, Type2 };

struct SynthSpec {
  SynthKind kind = SynthKind::Type1;
  Index N = 100;
  Index N_test = 0;
  Index n0 = 5;
  double eps0 = 0.05;
  std::uint64_t seed = 1;
  /// Type 1 only: force the covariance factor to zero.
  bool zero_covariance = false;
};

struct SynthData {
  Matrix train;  // N0 x N
  Matrix test;   // N0 x N_test
};

void validate(const SynthSpec& spec);

/// x = (center + dir * g + eps0 * noise)_+ with center = 0.5 + randn(N0),
/// dir = randn(N0) and g, noise standard normal. Draw order: center, dir, then
/// per column g followed by the N0 noise entries.
SynthData gen_type1(const SynthSpec& spec);
/// (rand + eps0 * randn)_+ drawn as an (N + N_test) x N0 array, then
/// transposed. All uniforms are drawn before the normals.
SynthData gen_type2(const SynthSpec& spec);
SynthData generate(const SynthSpec& spec);

struct Preset {
  Index N;
  Index n1;
  Index n0;
};

/// Size triple for example id 1..9.
Preset preset(int example_id);

struct IdxImages {
  std::uint32_t count = 0;
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::vector<std::uint8_t> pixels;  // count * rows * cols, row-major per image
};

/// Throws FormatError (with byte offset) on bad magic or truncation.
IdxImages read_idx_images(std::istream& in);
std::vector<std::uint8_t> read_idx_labels(std::istream& in);

struct MnistSpec {
  std::string images_path;
  std::string labels_path;
  Index per_class = 10;
  std::uint64_t seed = 1;
};

struct MnistSample {
  Matrix X;                         // 784 x (10 * per_class), pixels / 255
  std::vector<Index> indices;       // source image indices, grouped by class
  std::vector<std::uint8_t> labels;
};

/// Uniform sampling without replacement inside each digit class 0..9.
MnistSample load_mnist(const MnistSpec& spec);
MnistSample sample_mnist(const IdxImages& images, const std::vector<std::uint8_t>& labels,
                         Index per_class, std::uint64_t seed);

/// 1/M sum ||(W^T (W x + b1)_+ + b2)_+ - x||^2 over the columns of X.
double reconstruction_error(const Matrix& W, const Vector& b1, const Vector& b2, const Matrix& X);

/// 1/(N N1) sum_n ||v_n - (W x_n + b1)_+||_1.
double feasibility_violation(const Variables& z, const ProblemData& data);

struct Metrics {
  double fval = 0.0;
  double feasvi = 0.0;
  double trainerr = 0.0;
  std::optional<double> testerr;
};

Metrics compute_metrics(const Variables& z, const ProblemData& data, const ModelParams& params,
                        const Matrix* test = nullptr);

// Matrix files. Binary: magic "AESPGM01", little-endian uint64 rows and cols,
// then rows * cols float64 in row-major order. CSV: one matrix row per line.
void write_matrix_binary(std::ostream& out, const Matrix& m);
Matrix read_matrix_binary(std::istream& in);
void write_matrix_csv(std::ostream& out, const Matrix& m);
Matrix read_matrix_csv(std::istream& in);

void save_matrix(const std::string& path, const Matrix& m);
/// Format chosen by extension: ".csv" is CSV, anything else binary.
Matrix load_matrix(const std::string& path);

}  // namespace aespg
