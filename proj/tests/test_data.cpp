#include "doctest.h"

#include "aespg/data.hpp"
#include "support.hpp"

#include <fstream>
#include <set>
#include <sstream>

using namespace aespg;

namespace {

void put_be32(std::string& s, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) s.push_back(static_cast<char>((v >> shift) & 0xFF));
}

/// IDX pair with count images whose pixels encode (index + p) % 256 and
/// labels index % 10.
std::pair<std::string, std::string> synthetic_idx(std::uint32_t count) {
  std::string img, lab;
  put_be32(img, 0x803);
  put_be32(img, count);
  put_be32(img, 28);
  put_be32(img, 28);
  for (std::uint32_t i = 0; i < count; ++i)
    for (std::uint32_t p = 0; p < 784; ++p) img.push_back(static_cast<char>((i + p) % 256));
  put_be32(lab, 0x801);
  put_be32(lab, count);
  for (std::uint32_t i = 0; i < count; ++i) lab.push_back(static_cast<char>(i % 10));
  return {img, lab};
}

}  // namespace

TEST_CASE("presets") {
  const Preset p6 = preset(6);
  CHECK(p6.N == 100);
  CHECK(p6.n1 == 10);
  CHECK(p6.n0 == 5);
  const Preset p1 = preset(1);
  CHECK((p1.N == 50 && p1.n1 == 50 && p1.n0 == 25));
  const Preset p9 = preset(9);
  CHECK((p9.N == 150 && p9.n1 == 20 && p9.n0 == 10));
  CHECK_THROWS_AS(preset(0), ParameterError);
  CHECK_THROWS_AS(preset(10), ParameterError);
}

TEST_CASE("type 1 generator") {
  SynthSpec spec;
  spec.N = 30;
  spec.N_test = 10;
  spec.n0 = 4;
  const SynthData a = gen_type1(spec);
  const SynthData b = gen_type1(spec);
  CHECK(a.train.cols() == 30);
  CHECK(a.test.cols() == 10);
  CHECK(a.train.rows() == 4);
  CHECK(a.train == b.train);
  CHECK(a.test == b.test);
  CHECK((a.train.array() >= 0.0).all());
  spec.seed = 2;
  CHECK(gen_type1(spec).train != a.train);

  spec.eps0 = 0.0;
  spec.zero_covariance = true;
  const SynthData flat = gen_type1(spec);
  for (Index n = 1; n < flat.train.cols(); ++n) CHECK(flat.train.col(n) == flat.train.col(0));
  Rng rng(spec.seed, RngStream::Data);
  const Vector center = (rng.randn(4, 1).array() + 0.5).matrix();
  CHECK(flat.train.col(0) == center.cwiseMax(0.0));
}

TEST_CASE("type 1 column mean matches the rectified normal mean") {
  SynthSpec spec;
  spec.N = 100000;
  spec.n0 = 3;
  spec.eps0 = 0.3;
  spec.seed = 5;
  const SynthData d = gen_type1(spec);
  Rng rng(spec.seed, RngStream::Data);
  const Vector center = (rng.randn(3, 1).array() + 0.5).matrix();
  const Vector dir = rng.randn(3, 1);
  for (Index i = 0; i < 3; ++i) {
    const double sd = std::sqrt(dir[i] * dir[i] + spec.eps0 * spec.eps0);
    const double expected = testing::rectified_normal_mean(center[i], sd);
    const double mean = d.train.row(i).mean();
    // Standard error is below sd / sqrt(N); allow five of them.
    CHECK(std::abs(mean - expected) <= 5.0 * sd / std::sqrt(1e5));
  }
}

TEST_CASE("type 2 generator") {
  SynthSpec spec;
  spec.kind = SynthKind::Type2;
  spec.N = 20;
  spec.N_test = 5;
  spec.n0 = 3;
  spec.eps0 = 0.0;
  const SynthData d = gen_type2(spec);
  CHECK(d.train.rows() == 3);
  CHECK(d.train.cols() == 20);
  CHECK(d.test.cols() == 5);
  CHECK((d.train.array() >= 0.0).all());
  CHECK((d.train.array() <= 1.0).all());
  Rng rng(spec.seed, RngStream::Data);
  const Matrix u = rng.rand(25, 3);
  CHECK(d.train == u.topRows(20).transpose());

  spec.N = 100000;
  spec.N_test = 0;
  spec.eps0 = 0.2;
  const SynthData big = gen_type2(spec);
  // E[(U + s G)_+] = int_0^1 E[(u + s G)_+] du, by Simpson's rule.
  const int m = 2000;
  double integral = 0.0;
  for (int k = 0; k <= m; ++k) {
    const double w = (k == 0 || k == m) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
    integral += w * testing::rectified_normal_mean(static_cast<double>(k) / m, 0.2);
  }
  integral /= 3.0 * m;
  for (Index i = 0; i < 3; ++i) CHECK(std::abs(big.train.row(i).mean() - integral) <= 5.0 * 0.35 / std::sqrt(1e5));
}

TEST_CASE("generator validation") {
  SynthSpec spec;
  spec.N = 0;
  CHECK_THROWS_AS(generate(spec), ParameterError);
  spec.N = 3;
  spec.eps0 = -1.0;
  CHECK_THROWS_AS(generate(spec), ParameterError);
}

TEST_CASE("IDX parsing and per-class sampling") {
  const auto [img, lab] = synthetic_idx(100);
  std::istringstream img_in(img), lab_in(lab);
  const IdxImages images = read_idx_images(img_in);
  CHECK(images.count == 100);
  CHECK(images.rows == 28);
  CHECK(images.cols == 28);
  const auto labels = read_idx_labels(lab_in);
  CHECK(labels.size() == 100);

  const MnistSample a = sample_mnist(images, labels, 3, 7);
  const MnistSample b = sample_mnist(images, labels, 3, 7);
  CHECK(a.indices == b.indices);
  CHECK(a.X.rows() == 784);
  CHECK(a.X.cols() == 30);
  CHECK(a.X.minCoeff() >= 0.0);
  CHECK(a.X.maxCoeff() <= 1.0);
  std::set<Index> unique(a.indices.begin(), a.indices.end());
  CHECK(unique.size() == 30);
  for (std::size_t i = 0; i < a.indices.size(); ++i) {
    CHECK(labels[static_cast<std::size_t>(a.indices[i])] == a.labels[i]);
    CHECK(a.X(5, static_cast<Index>(i)) == doctest::Approx(((a.indices[i] + 5) % 256) / 255.0));
  }
  CHECK(sample_mnist(images, labels, 3, 8).indices != a.indices);
  CHECK_THROWS_AS(sample_mnist(images, labels, 11, 7), ParameterError);
}

TEST_CASE("IDX errors carry byte offsets") {
  auto [img, lab] = synthetic_idx(2);
  std::string bad = img;
  bad[3] = 0x01;
  std::istringstream bad_in(bad);
  CHECK_THROWS_AS(read_idx_images(bad_in), FormatError);
  std::istringstream truncated(img.substr(0, 16 + 700));
  try {
    read_idx_images(truncated);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(e.offset() == 716);
  }
  std::istringstream wrong_kind(lab);
  CHECK_THROWS_AS(read_idx_images(wrong_kind), FormatError);
}

TEST_CASE("load_mnist reads files from disk") {
  const auto [img, lab] = synthetic_idx(50);
  const std::string ip = "mnist_test_images.idx", lp = "mnist_test_labels.idx";
  std::ofstream(ip, std::ios::binary) << img;
  std::ofstream(lp, std::ios::binary) << lab;
  const MnistSample s = load_mnist({ip, lp, 2, 1});
  CHECK(s.X.cols() == 20);
  CHECK_THROWS_AS(load_mnist({"missing.idx", lp, 2, 1}), ParameterError);
}

TEST_CASE("metrics against elementwise oracles") {
  const ProblemData data = testing::random_problem(6, 3, 2, 14);
  const ModelParams p = make_params(data, 1e-3, 0.1);
  Rng rng(14, RngStream::Sampling);
  Variables z = testing::random_feasible(data, p, rng);
  const Matrix test = rng.rand(2, 4);
  const Metrics m = compute_metrics(z, data, p, &test);
  CHECK(m.fval == eval_objective(z, data, p));
  CHECK(m.trainerr == doctest::Approx(testing::loop_objective(z, data.X(), p).fidelity));

  double feas = 0.0;
  for (Index n = 0; n < 6; ++n)
    for (Index j = 0; j < 3; ++j) {
      double s = z.b1[j];
      for (Index i = 0; i < 2; ++i) s += z.W(j, i) * data.X()(i, n);
      feas += std::abs(z.V(j, n) - std::max(0.0, s));
    }
  CHECK(m.feasvi == doctest::Approx(feas / 18.0));

  double te = 0.0;
  for (Index n = 0; n < 4; ++n) {
    Vector h(3);
    for (Index j = 0; j < 3; ++j) {
      double s = z.b1[j];
      for (Index i = 0; i < 2; ++i) s += z.W(j, i) * test(i, n);
      h[j] = std::max(0.0, s);
    }
    for (Index i = 0; i < 2; ++i) {
      double y = z.b2[i];
      for (Index j = 0; j < 3; ++j) y += z.W(j, i) * h[j];
      te += std::pow(std::max(0.0, y) - test(i, n), 2);
    }
  }
  REQUIRE(m.testerr.has_value());
  CHECK(*m.testerr == doctest::Approx(te / 4.0));

  const Metrics zero = compute_metrics(Variables::zeros(data.dims()), data, p);
  CHECK(zero.fval == doctest::Approx(data.fro_sq() / 6.0));
  CHECK(zero.trainerr == doctest::Approx(data.fro_sq() / 6.0));
  CHECK_FALSE(zero.testerr.has_value());
}

TEST_CASE("matrix files round trip and formats agree") {
  Rng rng(3, RngStream::Sampling);
  const Matrix m = rng.randn(4, 7);
  std::stringstream bin;
  write_matrix_binary(bin, m);
  CHECK(read_matrix_binary(bin) == m);
  std::stringstream csv;
  write_matrix_csv(csv, m);
  CHECK(read_matrix_csv(csv) == m);

  save_matrix("roundtrip.bin", m);
  save_matrix("roundtrip.csv", m);
  CHECK(load_matrix("roundtrip.bin") == load_matrix("roundtrip.csv"));

  std::stringstream ragged("1,2\n3\n");
  CHECK_THROWS_AS(read_matrix_csv(ragged), FormatError);
  std::stringstream junk("1,x\n");
  CHECK_THROWS_AS(read_matrix_csv(junk), FormatError);
}

TEST_CASE("rng streams are reproducible and distinct") {
  Rng a(1, RngStream::Data), b(1, RngStream::Data), c(1, RngStream::Init);
  const std::uint64_t x = a.next_u64();
  CHECK(x == b.next_u64());
  CHECK(x != c.next_u64());
  Rng u(9, RngStream::Sampling);
  double mean = 0.0, sq = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double g = u.normal();
    mean += g;
    sq += g * g;
  }
  CHECK(std::abs(mean / 1e5) < 0.02);
  CHECK(std::abs(sq / 1e5 - 1.0) < 0.02);
  const auto perm = u.permutation(50);
  std::set<Index> s(perm.begin(), perm.end());
  CHECK(s.size() == 50);
  CHECK(*s.begin() == 0);
  CHECK(*s.rbegin() == 49);
}
