// gnmf: command-line front end for the experiment runner.
//
//   gnmf run <config.json>
//   gnmf gen-synthetic <spec.json> <out-dir>
//   gnmf trace-plot-data <trace.csv> <out.csv>
//
// Exit codes: 0 success, 1 config/parse error, 2 runtime failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "gnmf/datagen.hpp"
#include "gnmf/experiment.hpp"
#include "gnmf/io.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kRuntimeError = 2;

int cmd_run(const std::string& config_path, bool quiet) {
  gnmf::ExperimentConfig cfg;
  try {
    if (!std::filesystem::exists(config_path)) {
      std::cerr << "error: config file not found: " << config_path << '\n';
      return kConfigError;
    }
    cfg = gnmf::load_experiment_config(config_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  }
  try {
    const auto result = gnmf::run_experiment(cfg);
    if (!quiet) {
      std::cout << gnmf::format_table(result);
      std::cout << "wrote " << (cfg.output_dir / "aggregate.json").string() << '\n';
    }
  } catch (const gnmf::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const gnmf::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "runtime failure: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kOk;
}

// The spec file holds SyntheticSpec fields and optionally a "block_adjacency"
// object; writes x.csv, labels.txt and (if requested) adjacency.csv.
int cmd_gen_synthetic(const std::string& spec_path, const std::string& out_dir) {
  gnmf::SyntheticSpec spec;
  std::optional<gnmf::BlockAdjacencySpec> block;
  try {
    std::ifstream in(spec_path);
    if (!in) {
      std::cerr << "error: spec file not found: " << spec_path << '\n';
      return kConfigError;
    }
    const auto j = nlohmann::json::parse(in);
    spec = gnmf::synthetic_spec_from_json(j);
    if (j.contains("block_adjacency")) {
      block = gnmf::block_spec_from_json(
          j["block_adjacency"],
          std::vector<std::size_t>(spec.clusters(), spec.samples_per_cluster));
      if (block->nodes() != spec.samples()) {
        std::cerr << "error: block sizes do not cover the generated samples\n";
        return kConfigError;
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  }
  try {
    const std::filesystem::path out(out_dir);
    const auto data = gnmf::generate_synthetic(spec);
    gnmf::write_csv_matrix(out / "x.csv", data.x);
    gnmf::write_labels(out / "labels.txt", data.labels);
    if (block) gnmf::write_csv_matrix(out / "adjacency.csv", gnmf::generate_block_adjacency(*block));
  } catch (const std::exception& e) {
    std::cerr << "runtime failure: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kOk;
}

int cmd_trace_plot_data(const std::string& trace_path, const std::string& out_path) {
  gnmf::ConvergenceTrace trace;
  try {
    trace = gnmf::read_trace_csv(trace_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) {
    std::cerr << "runtime failure: cannot write " << out_path << '\n';
    return kRuntimeError;
  }
  gnmf::write_plot_data(out, trace);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Row-sparse graph-regularized NMF: experiments, synthetic data, traces"};
  app.require_subcommand(1);

  std::string config_path;
  bool quiet = false;
  auto* run = app.add_subcommand("run", "Run an experiment config");
  run->add_option("config", config_path, "Experiment config (JSON)")->required();
  run->add_flag("-q,--quiet", quiet, "Suppress the summary table");

  std::string spec_path, out_dir;
  auto* gen = app.add_subcommand("gen-synthetic", "Write a synthetic dataset to a directory");
  gen->add_option("spec", spec_path, "Synthetic spec (JSON)")->required();
  gen->add_option("out", out_dir, "Output directory")->required();

  std::string trace_path, plot_out;
  auto* plot = app.add_subcommand("trace-plot-data", "Extract (iteration, objective) pairs");
  plot->add_option("trace", trace_path, "Trace CSV written by 'run'")->required();
  plot->add_option("out", plot_out, "Output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return kConfigError;
  }

  if (*run) return cmd_run(config_path, quiet);
  if (*gen) return cmd_gen_synthetic(spec_path, out_dir);
  return cmd_trace_plot_data(trace_path, plot_out);
}
