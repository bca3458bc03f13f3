#include "aespg/experiment.hpp"

#include "aespg/reference.hpp"
#include "aespg/rng.hpp"
#include "binary_io.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <filesystem>
#include <fstream>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;

namespace aespg {

namespace {

constexpr std::string_view kInstanceMagic = "AESPGQ01";

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

class Reader {
 public:
  explicit Reader(const Settings& s) : s_(s) {}

  const std::string& raw(const std::string& key) const {
    const auto it = s_.find(key);
    if (it == s_.end()) throw ParameterError("missing setting '" + key + "'");
    return it->second;
  }
  bool empty(const std::string& key) const { return raw(key).empty(); }

  double real(const std::string& key) const {
    const std::string& v = raw(key);
    try {
      std::size_t used = 0;
      const double d = std::stod(v, &used);
      if (used == v.size()) return d;
    } catch (const std::exception&) {
    }
    throw ParameterError("setting '" + key + "' expects a number, got '" + v + "'");
  }
  std::optional<double> opt_real(const std::string& key) const {
    if (empty(key)) return std::nullopt;
    return real(key);
  }
  long integer(const std::string& key) const {
    const std::string& v = raw(key);
    try {
      std::size_t used = 0;
      const long i = std::stol(v, &used);
      if (used == v.size()) return i;
    } catch (const std::exception&) {
    }
    throw ParameterError("setting '" + key + "' expects an integer, got '" + v + "'");
  }
  bool boolean(const std::string& key) const {
    const std::string& v = raw(key);
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off" || v.empty()) return false;
    throw ParameterError("setting '" + key + "' expects a boolean, got '" + v + "'");
  }

 private:
  const Settings& s_;
};

std::vector<std::uint64_t> parse_seeds(const std::string& spec) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(spec);
  std::string part;
  while (std::getline(ss, part, ',')) {
    part = trim(part);
    if (part.empty()) continue;
    try {
      const auto dash = part.find('-');
      if (dash != std::string::npos && dash > 0) {
        const std::uint64_t lo = std::stoull(part.substr(0, dash));
        const std::uint64_t hi = std::stoull(part.substr(dash + 1));
        if (hi < lo || hi - lo > 100000) throw std::invalid_argument(part);
        for (std::uint64_t s = lo; s <= hi; ++s) out.push_back(s);
      } else {
        out.push_back(std::stoull(part));
      }
    } catch (const std::exception&) {
      throw ParameterError("bad seed list entry '" + part + "'");
    }
  }
  if (out.empty()) throw ParameterError("seed list is empty");
  return out;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ParameterError("cannot create directory " + dir + ": " + ec.message());
}

std::ofstream open_out(const std::string& path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw ParameterError("cannot write " + path);
  return out;
}

const char* method_name(const ExperimentConfig& c) {
  switch (c.method) {
    case TrainMethod::Spg: return "spg";
    case TrainMethod::SpgAda: return "spg-ada";
    case TrainMethod::Sgd: return "sgd";
  }
  return "unknown";
}

TrainOutcome train_one(const ExperimentConfig& config, const Settings& resolved, std::uint64_t seed,
                       const std::string& dir, std::ostream& log, std::mutex& log_mutex) {
  using Clock = std::chrono::steady_clock;
  const Clock::time_point start = Clock::now();
  ensure_dir(dir);
  {
    std::ofstream snap = open_out(dir + "/config.ini");
    Settings s = resolved;
    s["seed"] = std::to_string(seed);
    s["seeds"] = "";
    s["out"] = dir;
    write_settings(snap, s);
  }

  const LoadedData loaded = load_data(config, config.data_seed.value_or(seed));
  const ProblemData data(loaded.train, config.n1);
  const ModelParams params = make_params(data, config.lambda1, config.lambda2, config.beta, config.theta);
  const Matrix* test = loaded.test.cols() > 0 ? &loaded.test : nullptr;

  std::ofstream trace_file = open_out(dir + "/trace.csv");
  TraceWriter writer(trace_file);
  const TraceSink sink = writer.sink();

  SpgConfig spg = config.spg;
  spg.seed = seed;
  std::optional<std::string> warning = schedule_warning(spg);
  if (config.theoretical_L) spg.L0 = theoretical_L0(data, params, spg.mu0, seed);
  SgdConfig sgd = config.sgd;
  sgd.seed = seed;

  TrainOutcome outcome;
  outcome.seed = seed;
  outcome.out_dir = dir;
  Variables z;
  std::vector<SpgDiagnostic> diagnostics;
  std::size_t rows = 0;
  switch (config.method) {
    case TrainMethod::Spg: {
      SpgResult r = run_spg(data, params, spg, std::nullopt, test, sink);
      outcome.termination = r.trace.termination;
      outcome.message = r.message;
      rows = r.trace.rows.size();
      diagnostics = std::move(r.diagnostics);
      z = std::move(r.z);
      break;
    }
    case TrainMethod::SpgAda: {
      sgd.epochs = config.ada_epochs;
      SpgAdaResult r = spg_ada(data, params, spg, sgd, test, sink);
      outcome.termination = r.trace.termination;
      outcome.message = r.spg.message;
      outcome.handoff_row = r.handoff_row;
      rows = r.trace.rows.size();
      diagnostics = std::move(r.spg.diagnostics);
      z = std::move(r.z);
      break;
    }
    case TrainMethod::Sgd: {
      SgdResult r = sgd_run(data, params, sgd, std::nullopt, test, sink);
      outcome.termination = r.trace.termination;
      rows = r.trace.rows.size();
      z = to_variables(r.p, data, params.alpha);
      break;
    }
  }

  {
    std::ofstream model = open_out(dir + "/model.bin", true);
    write_variables_binary(model, z);
  }
  if (!diagnostics.empty()) {
    std::ofstream diag = open_out(dir + "/diagnostics.csv");
    diag << "k,accepted,stationarity,sub_converged,b1_clamped\n";
    for (const SpgDiagnostic& d : diagnostics) {
      diag << d.k << ',' << (d.accepted ? 1 : 0) << ',' << format_number(d.stationarity) << ','
           << (d.sub_converged ? 1 : 0) << ',' << d.b1_clamped << '\n';
    }
  }

  outcome.final_metrics = compute_metrics(z, data, params, test);
  outcome.wall_s = std::chrono::duration<double>(Clock::now() - start).count();
  {
    std::ofstream summary = open_out(dir + "/summary.txt");
    const Metrics& m = outcome.final_metrics;
    summary << "method=" << method_name(config);
    if (config.method == TrainMethod::Sgd) summary << ' ' << to_string(config.sgd.method);
    summary << "\nseed=" << seed << "\nN=" << data.N() << "\nN0=" << data.n0() << "\nN1=" << data.n1()
            << "\ntermination=" << outcome.termination << "\nrows=" << rows
            << "\nfval=" << format_number(m.fval) << "\nfeasvi=" << format_number(m.feasvi)
            << "\ntrainerr=" << format_number(m.trainerr)
            << "\ntesterr=" << (m.testerr ? format_number(*m.testerr) : std::string())
            << "\nalpha=" << format_number(params.alpha) << "\nbeta=" << format_number(params.beta)
            << "\ntheta=" << format_number(params.theta) << '\n';
    if (config.method != TrainMethod::Sgd) {
      summary << "L0=" << format_number(spg.L0.value_or(default_L0(data, params))) << '\n';
    }
    if (config.method == TrainMethod::SpgAda) summary << "handoff_row=" << outcome.handoff_row << '\n';
    if (!outcome.message.empty()) summary << "message=" << outcome.message << '\n';
    if (warning && config.method != TrainMethod::Sgd) summary << "warning=" << *warning << '\n';
    summary << "wall_s=" << format_number(outcome.wall_s) << '\n';
  }

  std::lock_guard<std::mutex> lock(log_mutex);
  log << "seed " << seed << ": " << outcome.termination << " trainerr="
      << format_number(outcome.final_metrics.trainerr) << " feasvi="
      << format_number(outcome.final_metrics.feasvi) << " -> " << dir << '\n';
  return outcome;
}

}  // namespace

Settings parse_settings(std::istream& in) {
  Settings s;
  std::string line;
  std::size_t offset = 0;
  while (std::getline(in, line)) {
    const std::size_t start = offset;
    offset += line.size() + 1;
    const auto comment = line.find_first_of("#;");
    const std::string body = trim(comment == std::string::npos ? line : line.substr(0, comment));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw FormatError("expected key = value", start);
    const std::string key = trim(body.substr(0, eq));
    if (key.empty()) throw FormatError("empty key", start);
    s[key] = trim(body.substr(eq + 1));
  }
  return s;
}

Settings read_settings_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParameterError("cannot open config file " + path);
  return parse_settings(in);
}

void write_settings(std::ostream& out, const Settings& s) {
  for (const auto& [k, v] : s) out << k << " = " << v << '\n';
}

Settings merge_settings(const std::vector<Settings>& layers) {
  Settings out;
  for (const Settings& layer : layers)
    for (const auto& [k, v] : layer) out[k] = v;
  return out;
}

Settings default_settings() {
  return {
      {"data", "synthetic"},
      {"preset", ""},
      {"datatype", "1"},
      {"N", "100"},
      {"N-test", "0"},
      {"n0", "5"},
      {"n1", ""},
      {"eps0", "0.05"},
      {"train-file", ""},
      {"test-file", ""},
      {"mnist-images", ""},
      {"mnist-labels", ""},
      {"mnist-per-class", "10"},
      {"mnist-test-images", ""},
      {"mnist-test-labels", ""},
      {"mnist-test-per-class", "0"},
      {"lambda1", "0.0001"},
      {"lambda2", "0.1"},
      {"beta", ""},
      {"theta", ""},
      {"method", "spg"},
      {"mu0", "0.001"},
      {"tau1", "0.5"},
      {"tau2", "0.001"},
      {"tau3", "1.1"},
      {"L0", ""},
      {"theoretical-L", "false"},
      {"epsilon", "1e-7"},
      {"max-iter", "4000"},
      {"sub-tol", "1e-6"},
      {"sub-max-iter", "10000"},
      {"sub-penalty", "1"},
      {"penalty-tracks-L", "false"},
      {"divergence-factor", "10"},
      {"epochs", "1000"},
      {"ada-epochs", "1000"},
      {"lr", ""},
      {"beta1", ""},
      {"beta2", ""},
      {"eps", ""},
      {"rho", ""},
      {"batch-size", ""},
      {"seed", "1"},
      {"seeds", ""},
      {"data-seed", ""},
      {"workers", "1"},
      {"out", "run"},
      {"format", "bin"},
  };
}

ExperimentConfig resolve_config(const Settings& s) {
  const Settings defaults = default_settings();
  for (const auto& [k, v] : s) {
    if (!defaults.contains(k)) throw ParameterError("unknown setting '" + k + "'");
  }
  const Settings full = merge_settings({defaults, s});
  const Reader r(full);
  ExperimentConfig c;

  const std::string& source = r.raw("data");
  if (source == "synthetic") {
    c.source = DataSource::Synthetic;
  } else if (source == "file") {
    c.source = DataSource::File;
  } else if (source == "mnist") {
    c.source = DataSource::Mnist;
  } else {
    throw ParameterError("data must be synthetic, file or mnist");
  }

  const long datatype = r.integer("datatype");
  if (datatype != 1 && datatype != 2) throw ParameterError("datatype must be 1 or 2");
  c.synth.kind = datatype == 1 ? SynthKind::Type1 : SynthKind::Type2;
  c.synth.N = r.integer("N");
  c.synth.N_test = r.integer("N-test");
  c.synth.n0 = r.integer("n0");
  c.synth.eps0 = r.real("eps0");
  if (!r.empty("n1")) c.n1 = r.integer("n1");
  if (!r.empty("preset")) {
    c.preset = static_cast<int>(r.integer("preset"));
    const Preset p = preset(*c.preset);
    c.synth.N = p.N;
    c.synth.n0 = p.n0;
    c.n1 = p.n1;
  }
  if (c.n1 < 1) throw ParameterError("n1 must be at least 1");
  c.train_path = r.raw("train-file");
  c.test_path = r.raw("test-file");
  if (c.source == DataSource::File && c.train_path.empty()) {
    throw ParameterError("data = file requires train-file");
  }
  c.mnist.images_path = r.raw("mnist-images");
  c.mnist.labels_path = r.raw("mnist-labels");
  c.mnist.per_class = r.integer("mnist-per-class");
  c.mnist_test_images = r.raw("mnist-test-images");
  c.mnist_test_labels = r.raw("mnist-test-labels");
  c.mnist_test_per_class = r.integer("mnist-test-per-class");
  if (c.source == DataSource::Mnist && (c.mnist.images_path.empty() || c.mnist.labels_path.empty())) {
    throw ParameterError("data = mnist requires mnist-images and mnist-labels");
  }

  c.lambda1 = r.real("lambda1");
  c.lambda2 = r.real("lambda2");
  c.beta = r.opt_real("beta");
  c.theta = r.opt_real("theta");

  const std::string& method = r.raw("method");
  if (method == "spg") {
    c.method = TrainMethod::Spg;
  } else if (method == "spg-ada") {
    c.method = TrainMethod::SpgAda;
  } else {
    c.method = TrainMethod::Sgd;
    c.sgd_method = parse_sgd_method(method);
  }

  c.spg.mu0 = r.real("mu0");
  c.spg.tau1 = r.real("tau1");
  c.spg.tau2 = r.real("tau2");
  c.spg.tau3 = r.real("tau3");
  c.spg.L0 = r.opt_real("L0");
  c.theoretical_L = r.boolean("theoretical-L");
  if (c.theoretical_L && c.spg.L0) throw ParameterError("L0 and theoretical-L are mutually exclusive");
  c.spg.epsilon = r.real("epsilon");
  c.spg.max_outer_iters = static_cast<int>(r.integer("max-iter"));
  c.spg.sub.tol = r.real("sub-tol");
  c.spg.sub.max_iter = static_cast<int>(r.integer("sub-max-iter"));
  c.spg.sub.penalty = r.real("sub-penalty");
  c.spg.penalty_tracks_L = r.boolean("penalty-tracks-L");
  c.spg.divergence_factor = r.real("divergence-factor");
  validate(c.spg);
  if (!(c.spg.sub.tol > 0.0) || c.spg.sub.max_iter < 1 || !(c.spg.sub.penalty > 0.0)) {
    throw ParameterError("sub-tol, sub-max-iter and sub-penalty must be positive");
  }

  c.sgd.method = c.method == TrainMethod::Sgd ? c.sgd_method : SgdMethod::Adadelta;
  OptimizerSettings os = default_settings(c.sgd.method);
  if (const auto v = r.opt_real("lr")) os.lr = *v;
  if (const auto v = r.opt_real("beta1")) os.beta1 = *v;
  if (const auto v = r.opt_real("beta2")) os.beta2 = *v;
  if (const auto v = r.opt_real("eps")) os.eps = *v;
  if (const auto v = r.opt_real("rho")) os.rho = *v;
  c.sgd.settings = os;
  if (!r.empty("batch-size")) c.sgd.batch_size = r.integer("batch-size");
  c.sgd.epochs = r.integer("epochs");
  c.ada_epochs = r.integer("ada-epochs");
  if (c.sgd.epochs < 0 || c.ada_epochs < 0) throw ParameterError("epochs must be nonnegative");

  c.seeds = r.empty("seeds") ? std::vector<std::uint64_t>{static_cast<std::uint64_t>(r.integer("seed"))}
                             : parse_seeds(r.raw("seeds"));
  if (!r.empty("data-seed")) c.data_seed = static_cast<std::uint64_t>(r.integer("data-seed"));
  c.workers = static_cast<int>(r.integer("workers"));
  if (c.workers < 1) throw ParameterError("workers must be at least 1");
  c.out_dir = r.raw("out");
  c.format = r.raw("format");
  if (c.format != "bin" && c.format != "csv") throw ParameterError("format must be bin or csv");
  return c;
}

LoadedData load_data(const ExperimentConfig& config, std::uint64_t seed) {
  LoadedData out;
  switch (config.source) {
    case DataSource::Synthetic: {
      SynthSpec spec = config.synth;
      spec.seed = seed;
      SynthData d = generate(spec);
      out.train = std::move(d.train);
      out.test = std::move(d.test);
      break;
    }
    case DataSource::File:
      out.train = load_matrix(config.train_path);
      if (!config.test_path.empty()) out.test = load_matrix(config.test_path);
      break;
    case DataSource::Mnist: {
      MnistSpec spec = config.mnist;
      spec.seed = seed;
      out.train = load_mnist(spec).X;
      if (config.mnist_test_per_class > 0) {
        MnistSpec test_spec{config.mnist_test_images.empty() ? spec.images_path : config.mnist_test_images,
                            config.mnist_test_labels.empty() ? spec.labels_path : config.mnist_test_labels,
                            config.mnist_test_per_class, splitmix64(seed)};
        out.test = load_mnist(test_spec).X;
      }
      break;
    }
  }
  if (out.test.cols() > 0 && out.test.rows() != out.train.rows()) {
    throw ParameterError("train and test data have different row counts");
  }
  return out;
}

void cmd_generate_data(const ExperimentConfig& config, const Settings& resolved, std::ostream& log) {
  if (config.source == DataSource::File) throw ParameterError("generate-data needs a synthetic or mnist source");
  ensure_dir(config.out_dir);
  const std::uint64_t seed = config.data_seed.value_or(config.seeds.front());
  const LoadedData d = load_data(config, seed);
  const std::string train = config.out_dir + "/train." + config.format;
  const std::string test = config.out_dir + "/test." + config.format;
  save_matrix(train, d.train);
  save_matrix(test, d.test);
  std::ofstream snap = open_out(config.out_dir + "/config.ini");
  write_settings(snap, resolved);
  log << "wrote " << train << " (" << d.train.rows() << " x " << d.train.cols() << ") and " << test
      << " (" << d.test.rows() << " x " << d.test.cols() << ")\n";
}

std::vector<TrainOutcome> cmd_train(const ExperimentConfig& config, const Settings& resolved,
                                    std::ostream& log) {
  const std::size_t count = config.seeds.size();
  std::vector<TrainOutcome> outcomes(count);
  std::vector<std::exception_ptr> errors(count);
  std::mutex log_mutex;
  std::atomic<std::size_t> next{0};

  const auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      const std::uint64_t seed = config.seeds[i];
      const std::string dir = count == 1 ? config.out_dir : config.out_dir + "/seed-" + std::to_string(seed);
      try {
        outcomes[i] = train_one(config, resolved, seed, dir, log, log_mutex);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int threads = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(config.workers), count));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  for (const std::exception_ptr& e : errors)
    if (e) std::rethrow_exception(e);
  return outcomes;
}

QpInstance make_bench_instance(Index N, Index n1, Index n0, std::uint64_t seed) {
  if (N < 1 || n1 < 1 || n0 < 1) throw ParameterError("instance sizes must be positive");
  Rng rng(seed, RngStream::Bench);
  QpInstance inst;
  inst.X = rng.rand(n0, N);
  const Dimensions d{N, n0, n1};
  inst.grads = GradientBlocks::unpack(rng.rand(d.packed_size(), 1).col(0), d);
  inst.anchor = Variables::zeros(d);
  inst.anchor.W = rng.randn(n1, n0) / static_cast<double>(N);
  inst.anchor.V = (inst.anchor.W * inst.X).cwiseMax(0.0);
  const ProblemData data(inst.X, n1);
  inst.params = make_params(data, 1e-4, 0.1);
  inst.L = 1.0;
  inst.mu = 1e-3;
  return inst;
}

void write_qp_instance(std::ostream& out, const QpInstance& inst) {
  const Dimensions d = inst.anchor.dims();
  out.write(kInstanceMagic.data(), static_cast<std::streamsize>(kInstanceMagic.size()));
  detail::put_u64(out, static_cast<std::uint64_t>(d.N));
  detail::put_u64(out, static_cast<std::uint64_t>(d.n0));
  detail::put_u64(out, static_cast<std::uint64_t>(d.n1));
  for (const double v : {inst.L, inst.mu, inst.params.lambda1, inst.params.lambda2, inst.params.beta,
                         inst.params.theta, inst.params.alpha}) {
    detail::put_f64(out, v);
  }
  for (Index i = 0; i < inst.X.size(); ++i) detail::put_f64(out, inst.X.data()[i]);
  const Vector a = inst.anchor.pack();
  for (Index i = 0; i < a.size(); ++i) detail::put_f64(out, a[i]);
  const Vector g = inst.grads.pack();
  for (Index i = 0; i < g.size(); ++i) detail::put_f64(out, g[i]);
}

QpInstance read_qp_instance(std::istream& in) {
  detail::ByteReader r(in);
  r.expect_magic(kInstanceMagic);
  Dimensions d;
  d.N = static_cast<Index>(r.u64("N"));
  d.n0 = static_cast<Index>(r.u64("N0"));
  d.n1 = static_cast<Index>(r.u64("N1"));
  if (d.N < 1 || d.n0 < 1 || d.n1 < 1 || d.N > (Index{1} << 32) || d.n0 > (Index{1} << 20) ||
      d.n1 > (Index{1} << 20)) {
    throw FormatError("implausible instance dimensions", r.offset());
  }
  QpInstance inst;
  inst.L = r.f64("L");
  inst.mu = r.f64("mu");
  inst.params.lambda1 = r.f64("lambda1");
  inst.params.lambda2 = r.f64("lambda2");
  inst.params.beta = r.f64("beta");
  inst.params.theta = r.f64("theta");
  inst.params.alpha = r.f64("alpha");
  inst.X.resize(d.n0, d.N);
  for (Index i = 0; i < inst.X.size(); ++i) inst.X.data()[i] = r.f64("X");
  Vector a(d.packed_size());
  for (Index i = 0; i < a.size(); ++i) a[i] = r.f64("anchor");
  Vector g(d.packed_size());
  for (Index i = 0; i < g.size(); ++i) g[i] = r.f64("gradient");
  inst.anchor = Variables::unpack(a, d);
  inst.grads = GradientBlocks::unpack(g, d);
  return inst;
}

std::vector<Preset> bench_sizes(bool include_large) {
  std::vector<Preset> rows{{100, 5, 5}, {100, 10, 10}, {100, 20, 20}, {100, 40, 40},
                           {100, 100, 10}, {1000, 100, 10}};
  if (include_large) rows.push_back({10000, 784, 1000});
  return rows;
}

BenchRow bench_instance(const QpInstance& inst, const SamqpOptions& options) {
  const ProblemData data(inst.X, inst.anchor.W.rows());
  const SubproblemSpec spec{data, inst.params, inst.anchor, inst.grads, inst.L, inst.mu};
  const Dimensions d = data.dims();
  BenchRow row;
  row.N = d.N;
  row.n1 = d.n1;
  row.n0 = d.n0;
  row.N2 = d.packed_size();

  using Clock = std::chrono::steady_clock;
  const Clock::time_point t0 = Clock::now();
  const SamqpResult res = solve_subproblem(spec, options);
  row.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  row.iterations = res.iterations;
  row.converged = res.converged;
  row.kkt = subproblem_kkt_residual(spec, res.z, res.coupling_multiplier).max();
  row.objective = subproblem_objective(spec, res.z);
  if (d.packed_size() <= kReferenceMaxPackedSize) {
    const Clock::time_point t1 = Clock::now();
    const ReferenceResult ref = reference_solve(spec);
    row.reference_seconds = std::chrono::duration<double>(Clock::now() - t1).count();
    row.reference_objective = subproblem_objective(spec, ref.z);
  }
  return row;
}

void print_bench_header(std::ostream& out) {
  out << "N,N1,N0,N2,time_s,iters,converged,kkt,objective,ref_objective,ref_time_s\n";
}

void print_bench_row(std::ostream& out, const BenchRow& r) {
  out << r.N << ',' << r.n1 << ',' << r.n0 << ',' << r.N2 << ',' << format_number(r.seconds) << ','
      << r.iterations << ',' << (r.converged ? 1 : 0) << ',' << format_number(r.kkt) << ','
      << format_number(r.objective) << ','
      << (r.reference_objective ? format_number(*r.reference_objective) : std::string()) << ','
      << (r.reference_seconds ? format_number(*r.reference_seconds) : std::string()) << '\n'
      << std::flush;
}

AggregateTable cmd_report(const ReportOptions& options, std::ostream& log) {
  if (options.traces.empty()) throw ParameterError("report needs at least one trace");
  std::vector<std::vector<TraceRow>> traces;
  for (const std::string& path : options.traces) {
    std::ifstream in(path);
    if (!in) throw ParameterError("cannot open trace " + path);
    traces.push_back(read_trace(in));
  }
  AggregateTable table = aggregate_traces(traces, options.q_lo, options.q_hi);
  if (options.out_path.empty()) {
    write_aggregate_csv(log, table);
  } else {
    std::ofstream out = open_out(options.out_path);
    write_aggregate_csv(out, table);
    log << "aggregated " << traces.size() << " traces over " << table.k.size() << " rows -> "
        << options.out_path << '\n';
  }
  return table;
}

}  // namespace aespg
