#pragma once

// Configuration resolution and the command implementations behind the CLI.
//
// Settings are flat string maps. A run resolves its settings as
// defaults < config file < command-line flags, then converts them into a
// typed ExperimentConfig.

#include "aespg/data.hpp"
#include "aespg/samqp.hpp"
#include "aespg/sgd.hpp"
#include "aespg/spg.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace aespg {

using Settings = std::map<std::string, std::string>;

/// "key = value" lines; '#' and ';' start comments. Throws FormatError on
/// malformed lines (offset is the line start).
Settings parse_settings(std::istream& in);
Settings read_settings_file(const std::string& path);
void write_settings(std::ostream& out, const Settings& s);

/// Later maps override earlier ones.
Settings merge_settings(const std::vector<Settings>& layers);

/// Every recognized key with its default value. Keys left empty resolve
/// from the data (beta, theta, L0, n1, batch-size).
Settings default_settings();

enum class DataSource { Synthetic, File, Mnist };

enum class TrainMethod { Spg, SpgAda, Sgd };

struct ExperimentConfig {
  DataSource source = DataSource::Synthetic;
  SynthSpec synth;
  std::optional<int> preset;
  std::string train_path;
  std::string test_path;
  MnistSpec mnist;
  std::string mnist_test_images;
  std::string mnist_test_labels;
  Index mnist_test_per_class = 0;
  Index n1 = 10;

  double lambda1 = 1e-4;
  double lambda2 = 0.1;
  std::optional<double> beta;
  std::optional<double> theta;

  TrainMethod method = TrainMethod::Spg;
  SgdMethod sgd_method = SgdMethod::Adadelta;
  SpgConfig spg;
  bool theoretical_L = false;
  SgdConfig sgd;
  long ada_epochs = 1000;

  std::vector<std::uint64_t> seeds{1};
  std::optional<std::uint64_t> data_seed;
  int workers = 1;
  std::string out_dir = "run";
  std::string format = "bin";
};

/// Throws ParameterError on unknown keys or out-of-range values.
ExperimentConfig resolve_config(const Settings& s);

struct LoadedData {
  Matrix train;
  Matrix test;
};

LoadedData load_data(const ExperimentConfig& config, std::uint64_t seed);

// generate-data: writes train.<format> and test.<format> into out_dir.
void cmd_generate_data(const ExperimentConfig& config, const Settings& resolved, std::ostream& log);

struct TrainOutcome {
  std::uint64_t seed = 0;
  std::string out_dir;
  std::string termination;
  std::string message;
  Metrics final_metrics;
  double wall_s = 0.0;
  std::size_t handoff_row = 0;
};

/// One output directory per seed (out_dir itself for a single seed,
/// out_dir/seed-<s> otherwise), each holding config.ini, trace.csv,
/// model.bin and summary.txt.
std::vector<TrainOutcome> cmd_train(const ExperimentConfig& config, const Settings& resolved,
                                    std::ostream& log);

/// A stand-alone subproblem instance: the data, the parameters, the anchor,
/// the gradient blocks and L.
struct QpInstance {
  Matrix X;
  ModelParams params;
  Variables anchor;
  GradientBlocks grads;
  double L = 1.0;
  double mu = 1e-3;
};

/// X = rand, g = rand, Wbar = randn / N, Vbar = (Wbar X)_+, bbar = 0,
/// mu = 0.001, L = 1, lambdas at their defaults.
QpInstance make_bench_instance(Index N, Index n1, Index n0, std::uint64_t seed);

// Binary layout: magic "AESPGQ01", uint64 N, N0, N1, float64 L, mu,
// lambda1, lambda2, beta, theta, alpha, then X column-major, the packed
// anchor and the packed gradient.
void write_qp_instance(std::ostream& out, const QpInstance& inst);
QpInstance read_qp_instance(std::istream& in);

struct BenchRow {
  Index N = 0, n1 = 0, n0 = 0, N2 = 0;
  double seconds = 0.0;
  int iterations = 0;
  bool converged = false;
  double kkt = 0.0;
  double objective = 0.0;
  std::optional<double> reference_objective;
  std::optional<double> reference_seconds;
};

/// Default (N, N1, N0) sizes for qp-bench; the large one only on request.
std::vector<Preset> bench_sizes(bool include_large);

BenchRow bench_instance(const QpInstance& inst, const SamqpOptions& options);
void print_bench_header(std::ostream& out);
void print_bench_row(std::ostream& out, const BenchRow& row);

struct ReportOptions {
  std::vector<std::string> traces;
  std::string out_path;
  double q_lo = 0.25;
  double q_hi = 0.75;
};

AggregateTable cmd_report(const ReportOptions& options, std::ostream& log);

}  // namespace aespg
