// Command-line front end: generate-data, train, qp-bench, report.

#include "aespg/experiment.hpp"

#include "CLI11.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>

namespace {

bool is_flag_key(const std::string& key) { return key == "theoretical-L" || key == "penalty-tracks-L"; }

/// Registers one --<key> option per setting and records only the ones given.
struct SettingOptions {
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
  std::map<std::string, bool> flags;
  std::string config_path;

  void attach(CLI::App& app) {
    app.add_option("--config", config_path, "key = value configuration file");
    for (const auto& [key, def] : aespg::default_settings()) {
      if (is_flag_key(key)) {
        options[key] = app.add_flag("--" + key, flags[key]);
      } else {
        options[key] = app.add_option("--" + key, values[key], "default: " + (def.empty() ? "derived" : def));
      }
    }
  }

  aespg::Settings resolve() const {
    aespg::Settings cli;
    for (const auto& [key, opt] : options) {
      if (opt->count() == 0) continue;
      cli[key] = is_flag_key(key) ? (flags.at(key) ? "true" : "false") : values.at(key);
    }
    aespg::Settings file;
    if (!config_path.empty()) file = aespg::read_settings_file(config_path);
    return aespg::merge_settings({aespg::default_settings(), file, cli});
  }
};

std::vector<aespg::Preset> parse_sizes(const std::vector<std::string>& specs) {
  std::vector<aespg::Preset> out;
  for (const std::string& s : specs) {
    aespg::Preset p{};
    char c1 = 0, c2 = 0;
    std::istringstream in(s);
    if (!(in >> p.N >> c1 >> p.n1 >> c2 >> p.n0) || c1 != ',' || c2 != ',') {
      throw aespg::ParameterError("--size expects N,N1,N0, got '" + s + "'");
    }
    out.push_back(p);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Autoencoder training by smoothing proximal gradient"};
  app.require_subcommand(1);

  SettingOptions gen_opts;
  CLI::App* gen = app.add_subcommand("generate-data", "Write synthetic or sampled MNIST matrices");
  gen_opts.attach(*gen);

  SettingOptions train_opts;
  CLI::App* train = app.add_subcommand("train", "Train with spg, spg-ada or an SGD baseline");
  train_opts.attach(*train);

  CLI::App* bench = app.add_subcommand("qp-bench", "Time SAMQP on subproblem instances");
  std::vector<std::string> sizes;
  std::string instance_path;
  std::string save_instance;
  std::string bench_out;
  bool include_large = false;
  std::uint64_t bench_seed = 1;
  aespg::SamqpOptions bench_options;
  bench->add_option("--size", sizes, "N,N1,N0 (repeatable); default is the built-in size list");
  bench->add_option("--instance", instance_path, "instance file to solve instead of generated rows");
  bench->add_option("--save-instance", save_instance, "write the first generated instance here");
  bench->add_flag("--include-large", include_large, "also run the 10000 x 784 x 1000 row");
  bench->add_option("--seed", bench_seed);
  bench->add_option("--tol", bench_options.tol);
  bench->add_option("--max-iter", bench_options.max_iter);
  bench->add_option("--penalty", bench_options.penalty);
  bench->add_option("--out", bench_out, "also write the table to this CSV file");

  CLI::App* report = app.add_subcommand("report", "Aggregate traces into median and quantile series");
  aespg::ReportOptions report_options;
  std::string report_dir;
  report->add_option("traces", report_options.traces, "trace.csv files");
  report->add_option("--dir", report_dir, "collect every */trace.csv below this directory");
  report->add_option("--out", report_options.out_path, "output CSV (stdout when omitted)");
  report->add_option("--q-lo", report_options.q_lo);
  report->add_option("--q-hi", report_options.q_hi);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (gen->parsed()) {
      const aespg::Settings s = gen_opts.resolve();
      aespg::cmd_generate_data(aespg::resolve_config(s), s, std::cout);
    } else if (train->parsed()) {
      const aespg::Settings s = train_opts.resolve();
      const auto outcomes = aespg::cmd_train(aespg::resolve_config(s), s, std::cout);
      for (const auto& o : outcomes) {
        if (o.termination == aespg::kTerminatedDiverged) {
          std::cerr << "error: seed " << o.seed << " diverged: " << o.message << '\n';
          return 2;
        }
      }
    } else if (bench->parsed()) {
      std::ofstream csv;
      if (!bench_out.empty()) {
        csv.open(bench_out);
        if (!csv) throw aespg::ParameterError("cannot write " + bench_out);
        aespg::print_bench_header(csv);
      }
      aespg::print_bench_header(std::cout);
      const auto emit = [&](const aespg::QpInstance& inst) {
        const aespg::BenchRow row = aespg::bench_instance(inst, bench_options);
        aespg::print_bench_row(std::cout, row);
        if (csv.is_open()) aespg::print_bench_row(csv, row);
      };
      if (!instance_path.empty()) {
        std::ifstream in(instance_path, std::ios::binary);
        if (!in) throw aespg::ParameterError("cannot open " + instance_path);
        emit(aespg::read_qp_instance(in));
      } else {
        const auto rows = sizes.empty() ? aespg::bench_sizes(include_large) : parse_sizes(sizes);
        bool saved = save_instance.empty();
        for (const aespg::Preset& p : rows) {
          const aespg::QpInstance inst = aespg::make_bench_instance(p.N, p.n1, p.n0, bench_seed);
          if (!saved) {
            std::ofstream out(save_instance, std::ios::binary);
            aespg::write_qp_instance(out, inst);
            saved = true;
          }
          emit(inst);
        }
      }
    } else if (report->parsed()) {
      if (!report_dir.empty()) {
        for (const auto& entry : std::filesystem::recursive_directory_iterator(report_dir)) {
          if (entry.is_regular_file() && entry.path().filename() == "trace.csv") {
            report_options.traces.push_back(entry.path().string());
          }
        }
        std::sort(report_options.traces.begin(), report_options.traces.end());
      }
      aespg::cmd_report(report_options, std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
