#pragma once

// Experiment runner: a JSON config names a dataset, a graph, one or more
// model settings and a solver; each model is solved `repetitions` times from
// seeds base_seed + i, H is clustered with k-means and the scores are
// aggregated.
//
// Config schema "gnmf-experiment/1":
//   {
//     "schema": "gnmf-experiment/1",
//     "dataset": {"synthetic": {<SyntheticSpec fields>}}
//              | {"csv": "x.csv", "labels": "y.txt", "adjacency": "a.csv"},
//     "graph":   {"knn": {"neighbors": 5, "scheme": "gaussian", "sigma": 0.4}}
//              | {"supplied": {}}
//              | {"block": {<BlockAdjacencySpec fields>}},
//     "models":  [{"name": "...", "rank": 3, "sparsity_k": 17, "lambda": 1.0}, ...],
//     "solver":  {"algorithm": "acc_palm", "max_iter": 1000, "epsilon": 1e-3, ...},
//     "repetitions": 10,
//     "kmeans_restarts": 10,
//     "output_dir": "out"
//   }
// A single "model" object may replace "models". Relative paths resolve
// against the config file's directory.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "gnmf/clustering.hpp"
#include "gnmf/datagen.hpp"
#include "gnmf/graph.hpp"
#include "gnmf/io.hpp"
#include "gnmf/objective.hpp"
#include "gnmf/solvers.hpp"

namespace gnmf {

inline constexpr const char* kExperimentSchema = "gnmf-experiment/1";

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct CsvDataset {
  std::filesystem::path data;
  std::optional<std::filesystem::path> labels;
  std::optional<std::filesystem::path> adjacency;
};

struct KnnGraph {
  std::size_t neighbors = kDefaultNeighbors;
  WeightScheme scheme = GaussianKernel{};
};
struct SuppliedGraph {};

struct ModelSetting {
  std::string name;  // empty: derived from lambda and sparsity_k
  std::optional<std::size_t> rank;  // empty: number of classes
  std::optional<std::size_t> sparsity_k;  // empty: p (no row budget)
  double lambda = 0.0;
};

struct ExperimentConfig {
  std::variant<SyntheticSpec, CsvDataset> dataset;
  std::variant<KnnGraph, SuppliedGraph, BlockAdjacencySpec> graph;
  std::vector<ModelSetting> models;
  SolverConfig solver;
  std::size_t repetitions = 10;
  std::size_t kmeans_restarts = 10;
  std::filesystem::path output_dir = "out";
  std::string fingerprint;  // FNV-1a of the canonical config JSON
};

struct RunRecord {
  std::string model;
  std::size_t repetition = 0;
  std::uint64_t seed = 0;
  MetricReport metrics;
  double final_objective = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  double wall_time_s = 0.0;
};

struct MetricSummary {
  std::optional<double> nmi, acc;
  double relative_error = 0.0;
  double iterations = 0.0;
  double final_objective = 0.0;
};

struct ModelResult {
  std::string name;
  std::size_t rank = 0, sparsity_k = 0;
  double lambda = 0.0;
  std::vector<RunRecord> runs;
  MetricSummary mean, std;
};

struct ExperimentResult {
  std::string fingerprint;
  std::vector<ModelResult> models;
  std::vector<std::filesystem::path> trace_files;
};

/// NMF, NMF_l20, GNMF or GNMF_l20 by which terms are active.
inline std::string baseline_name(double lambda, std::size_t k, std::size_t p) {
  const bool graph = lambda > 0.0;
  const bool sparse = k < p;
  if (graph) return sparse ? "GNMF_l20" : "GNMF";
  return sparse ? "NMF_l20" : "NMF";
}

inline std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

/// Sample mean and (n−1)-denominator standard deviation; std is 0 for n < 2.
inline std::pair<double, double> mean_std(const std::vector<double>& v) {
  if (v.empty()) return {0.0, 0.0};
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  if (v.size() < 2) return {m, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return {m, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}

namespace detail {

using nlohmann::json;

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j[key].is_null()) return fallback;
  try {
    return j[key].get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: bad value for '") + key + "': " + e.what());
  }
}

inline const json& require_object(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_object()) {
    throw ConfigError(std::string("config: missing object '") + key + "'");
  }
  return j[key];
}

inline std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

}  // namespace detail

inline SyntheticSpec synthetic_spec_from_json(const nlohmann::json& j) {
  SyntheticSpec s;
  s.samples_per_cluster = detail::get_or(j, "samples_per_cluster", s.samples_per_cluster);
  s.signal_features = detail::get_or(j, "signal_features", s.signal_features);
  s.noise_rows = detail::get_or(j, "noise_rows", s.noise_rows);
  s.means = detail::get_or(j, "means", s.means);
  s.seed = detail::get_or(j, "seed", s.seed);
  if (s.means.empty() || s.samples_per_cluster == 0 || s.features() == 0) {
    throw ConfigError("config: synthetic dataset must have clusters, samples and features");
  }
  return s;
}

inline nlohmann::json to_json(const SyntheticSpec& s) {
  return {{"samples_per_cluster", s.samples_per_cluster},
          {"signal_features", s.signal_features},
          {"noise_rows", s.noise_rows},
          {"means", s.means},
          {"seed", s.seed}};
}

/// Block sizes default to one block per synthetic cluster when omitted.
inline BlockAdjacencySpec block_spec_from_json(const nlohmann::json& j,
                                               std::vector<std::size_t> default_blocks) {
  BlockAdjacencySpec b;
  b.block_sizes = detail::get_or(j, "block_sizes", default_blocks);
  b.within_block_density = detail::get_or(j, "within_block_density", b.within_block_density);
  b.weight_low = detail::get_or(j, "weight_low", b.weight_low);
  b.weight_high = detail::get_or(j, "weight_high", b.weight_high);
  b.seed = detail::get_or(j, "seed", b.seed);
  try {
    b.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return b;
}

inline SolverConfig solver_config_from_json(const nlohmann::json& j) {
  SolverConfig c;
  try {
    c.algorithm = parse_algorithm(detail::get_or<std::string>(j, "algorithm", "acc_palm"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.max_iter = detail::get_or(j, "max_iter", c.max_iter);
  c.epsilon = detail::get_or(j, "epsilon", c.epsilon);
  c.beta0 = detail::get_or(j, "beta0", c.beta0);
  c.beta_max = detail::get_or(j, "beta_max", c.beta_max);
  c.t_factor = detail::get_or(j, "t_factor", c.t_factor);
  c.gamma_step = detail::get_or(j, "gamma_step", c.gamma_step);
  c.adaptive_beta = detail::get_or(j, "adaptive_beta", c.adaptive_beta);
  if (j.contains("rho0") && !j["rho0"].is_null()) {
    if (j["rho0"].is_string()) {
      if (j["rho0"].get<std::string>() != "derived")
        throw ConfigError("config: rho0 must be \"derived\" or a number");
    } else {
      c.rho0 = detail::get_or(j, "rho0", 0.0);
    }
  }
  c.seed = detail::get_or(j, "seed", c.seed);
  c.check_decrease = detail::get_or(j, "check_decrease", c.check_decrease);
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

/// Parses and validates a config. File references are resolved against
/// `base_dir` and must exist.
inline ExperimentConfig parse_experiment_config(const nlohmann::json& j,
                                                const std::filesystem::path& base_dir) {
  using detail::get_or;
  using detail::json;
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  const auto schema = get_or<std::string>(j, "schema", "");
  if (schema != kExperimentSchema) {
    throw ConfigError("config: unsupported schema '" + schema + "' (expected " +
                      kExperimentSchema + ")");
  }
  ExperimentConfig cfg;
  cfg.fingerprint = fnv1a_hex(j.dump());

  const json& ds = detail::require_object(j, "dataset");
  std::vector<std::size_t> default_blocks;
  if (ds.contains("synthetic") == ds.contains("csv")) {
    throw ConfigError("config: dataset needs exactly one of 'synthetic' or 'csv'");
  }
  if (ds.contains("synthetic")) {
    const auto s = synthetic_spec_from_json(ds["synthetic"]);
    default_blocks.assign(s.clusters(), s.samples_per_cluster);
    cfg.dataset = s;
  } else {
    CsvDataset c;
    c.data = detail::resolve(base_dir, get_or<std::string>(ds, "csv", ""));
    if (ds.contains("labels")) c.labels = detail::resolve(base_dir, ds["labels"].get<std::string>());
    if (ds.contains("adjacency"))
      c.adjacency = detail::resolve(base_dir, ds["adjacency"].get<std::string>());
    for (const auto* p : {&c.data, c.labels ? &*c.labels : nullptr,
                          c.adjacency ? &*c.adjacency : nullptr}) {
      if (p && !std::filesystem::exists(*p)) {
        throw ConfigError("config: file not found: " + p->string());
      }
    }
    cfg.dataset = c;
  }

  const json& gr = detail::require_object(j, "graph");
  const int sources = int(gr.contains("knn")) + int(gr.contains("supplied")) +
                      int(gr.contains("block"));
  if (sources != 1) throw ConfigError("config: graph needs exactly one of knn, supplied, block");
  if (gr.contains("knn")) {
    const json& k = gr["knn"];
    KnnGraph g;
    g.neighbors = get_or(k, "neighbors", g.neighbors);
    const auto scheme = get_or<std::string>(k, "scheme", "gaussian");
    if (scheme == "gaussian") {
      GaussianKernel gk;
      if (k.contains("sigma") && !k["sigma"].is_null()) {
        gk.sigma = get_or(k, "sigma", 1.0);
        if (!(*gk.sigma > 0.0)) throw ConfigError("config: gaussian sigma must be positive");
      }
      g.scheme = gk;
    } else if (scheme == "zero_one") {
      g.scheme = ZeroOne{};
    } else if (scheme == "dot_product") {
      g.scheme = DotProduct{};
    } else {
      throw ConfigError("config: unknown weight scheme '" + scheme + "'");
    }
    cfg.graph = g;
  } else if (gr.contains("supplied")) {
    const auto* c = std::get_if<CsvDataset>(&cfg.dataset);
    if (!c || !c->adjacency) {
      throw ConfigError("config: graph 'supplied' requires dataset.adjacency");
    }
    cfg.graph = SuppliedGraph{};
  } else {
    cfg.graph = block_spec_from_json(gr["block"], default_blocks);
  }

  std::vector<json> models;
  if (j.contains("models")) {
    if (!j["models"].is_array() || j["models"].empty())
      throw ConfigError("config: 'models' must be a nonempty array");
    for (const auto& m : j["models"]) models.push_back(m);
  } else {
    models.push_back(detail::require_object(j, "model"));
  }
  for (const auto& m : models) {
    ModelSetting s;
    s.name = get_or<std::string>(m, "name", "");
    if (m.contains("rank") && !m["rank"].is_null()) s.rank = get_or<std::size_t>(m, "rank", 1);
    if (m.contains("sparsity_k") && !m["sparsity_k"].is_null())
      s.sparsity_k = get_or<std::size_t>(m, "sparsity_k", 1);
    s.lambda = get_or(m, "lambda", 0.0);
    if (!(s.lambda >= 0.0)) throw ConfigError("config: lambda must be nonnegative");
    cfg.models.push_back(s);
  }

  cfg.solver = j.contains("solver") ? solver_config_from_json(j["solver"]) : SolverConfig{};
  cfg.repetitions = get_or(j, "repetitions", cfg.repetitions);
  if (cfg.repetitions == 0) throw ConfigError("config: repetitions must be positive");
  cfg.kmeans_restarts = get_or(j, "kmeans_restarts", cfg.kmeans_restarts);
  if (cfg.kmeans_restarts == 0) throw ConfigError("config: kmeans_restarts must be positive");
  cfg.output_dir = detail::resolve(base_dir, get_or<std::string>(j, "output_dir", "out"));
  return cfg;
}

inline ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config: " + path.string() + ": " + e.what());
  }
  return parse_experiment_config(j, path.parent_path());
}

struct LoadedData {
  Matrix x;
  std::optional<Labels> labels;
  std::shared_ptr<const GraphModel> graph;
};

inline LoadedData load_experiment_data(const ExperimentConfig& cfg) {
  LoadedData d;
  std::optional<Matrix> supplied;
  if (const auto* s = std::get_if<SyntheticSpec>(&cfg.dataset)) {
    auto gen = generate_synthetic(*s);
    d.x = std::move(gen.x);
    d.labels = std::move(gen.labels);
  } else {
    const auto& c = std::get<CsvDataset>(cfg.dataset);
    d.x = load_csv_matrix(c.data, true);
    if (c.labels) {
      d.labels = load_labels(*c.labels);
      if (d.labels->size() != d.x.cols()) {
        throw ConfigError("config: " + c.labels->string() + " has " +
                          std::to_string(d.labels->size()) + " labels for " +
                          std::to_string(d.x.cols()) + " samples");
      }
    }
    if (c.adjacency) supplied = load_csv_matrix(*c.adjacency, false);
  }

  if (const auto* k = std::get_if<KnnGraph>(&cfg.graph)) {
    d.graph = std::make_shared<const GraphModel>(build_knn_graph(d.x, k->neighbors, k->scheme));
  } else if (std::holds_alternative<SuppliedGraph>(cfg.graph)) {
    d.graph = std::make_shared<const GraphModel>(from_adjacency(*supplied));
  } else {
    const auto& b = std::get<BlockAdjacencySpec>(cfg.graph);
    if (b.nodes() != d.x.cols()) {
      throw ConfigError("config: block sizes cover " + std::to_string(b.nodes()) +
                        " nodes but data has " + std::to_string(d.x.cols()) + " samples");
    }
    d.graph = std::make_shared<const GraphModel>(from_adjacency(generate_block_adjacency(b)));
  }
  if (d.graph->nodes() != d.x.cols()) {
    throw ConfigError("config: graph has " + std::to_string(d.graph->nodes()) +
                      " nodes but data has " + std::to_string(d.x.cols()) + " samples");
  }
  return d;
}

/// Clusters the columns of H.
inline ClusteringResult cluster_embedding(const Matrix& h, std::size_t clusters,
                                          std::uint64_t seed, std::size_t restarts) {
  return kmeans(transpose(h), clusters, seed, restarts);
}

inline nlohmann::json summary_json(const MetricSummary& s) {
  nlohmann::json j = {{"relative_error", s.relative_error},
                      {"iterations", s.iterations},
                      {"final_objective", s.final_objective}};
  if (s.nmi) j["nmi"] = *s.nmi;
  if (s.acc) j["acc"] = *s.acc;
  return j;
}

/// Deterministic part of the aggregate report; wall-clock data lives under
/// the separate "timing" key.
inline nlohmann::json aggregate_json(const ExperimentResult& r, bool with_timing = true) {
  nlohmann::json per_run = nlohmann::json::array();
  nlohmann::json mean = nlohmann::json::object(), stdev = nlohmann::json::object();
  nlohmann::json models = nlohmann::json::array();
  nlohmann::json wall = nlohmann::json::array();
  for (const auto& m : r.models) {
    models.push_back(
        {{"name", m.name}, {"rank", m.rank}, {"sparsity_k", m.sparsity_k}, {"lambda", m.lambda}});
    for (const auto& run : m.runs) {
      nlohmann::json j = to_json(run.metrics);
      j["model"] = run.model;
      j["repetition"] = run.repetition;
      j["seed"] = run.seed;
      j["iterations"] = run.iterations;
      j["converged"] = run.converged;
      j["final_objective"] = run.final_objective;
      per_run.push_back(std::move(j));
      wall.push_back({{"model", run.model}, {"repetition", run.repetition},
                      {"wall_time_s", run.wall_time_s}});
    }
    mean[m.name] = summary_json(m.mean);
    stdev[m.name] = summary_json(m.std);
  }
  nlohmann::json out = {{"schema", "gnmf-aggregate/1"},
                        {"config_fingerprint", r.fingerprint},
                        {"models", std::move(models)},
                        {"per_run", std::move(per_run)},
                        {"mean", std::move(mean)},
                        {"std", std::move(stdev)}};
  if (with_timing) {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::ostringstream ts;
    ts << std::put_time(std::gmtime(&now), "%Y-%m-%dT%H:%M:%SZ");
    out["timing"] = {{"generated_at", ts.str()}, {"per_run", std::move(wall)}};
  }
  return out;
}

inline std::string format_table(const ExperimentResult& r) {
  std::ostringstream os;
  auto cell = [](const std::optional<double>& m, const std::optional<double>& s) {
    if (!m) return std::string("-");
    std::ostringstream c;
    c << std::fixed << std::setprecision(4) << *m << " ± " << *s;
    return c.str();
  };
  os << std::left << std::setw(12) << "model" << std::setw(20) << "NMI" << std::setw(20) << "ACC"
     << std::setw(20) << "relative error" << "iterations\n";
  for (const auto& m : r.models) {
    os << std::left << std::setw(12) << m.name << std::setw(21) << cell(m.mean.nmi, m.std.nmi)
       << std::setw(21) << cell(m.mean.acc, m.std.acc) << std::setw(21)
       << cell(m.mean.relative_error, m.std.relative_error) << std::fixed << std::setprecision(1)
       << m.mean.iterations << '\n';
  }
  return os.str();
}

inline void summarize(ModelResult& m) {
  std::vector<double> nmis, accs, errs, iters, objs;
  for (const auto& run : m.runs) {
    if (run.metrics.nmi) nmis.push_back(*run.metrics.nmi);
    if (run.metrics.acc) accs.push_back(*run.metrics.acc);
    errs.push_back(run.metrics.relative_error);
    iters.push_back(static_cast<double>(run.iterations));
    objs.push_back(run.final_objective);
  }
  if (!nmis.empty()) {
    const auto [mu, sd] = mean_std(nmis);
    m.mean.nmi = mu;
    m.std.nmi = sd;
  }
  if (!accs.empty()) {
    const auto [mu, sd] = mean_std(accs);
    m.mean.acc = mu;
    m.std.acc = sd;
  }
  std::tie(m.mean.relative_error, m.std.relative_error) = mean_std(errs);
  std::tie(m.mean.iterations, m.std.iterations) = mean_std(iters);
  std::tie(m.mean.final_objective, m.std.final_objective) = mean_std(objs);
}

/// Runs every model setting `repetitions` times. With `write_outputs`, writes
/// traces/<model>_rep<i>.csv, aggregate.json and summary.txt under the
/// output directory.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg, bool write_outputs = true) {
  const LoadedData data = load_experiment_data(cfg);
  const std::size_t p = data.x.rows();
  std::size_t classes = 0;
  if (data.labels) classes = std::set<int>(data.labels->begin(), data.labels->end()).size();

  ExperimentResult result;
  result.fingerprint = cfg.fingerprint;
  std::set<std::string> used_names;
  for (const auto& setting : cfg.models) {
    ModelResult m;
    m.rank = setting.rank.value_or(classes > 0 ? classes : 1);
    m.sparsity_k = setting.sparsity_k.value_or(p);
    m.lambda = setting.lambda;
    m.name = setting.name.empty() ? baseline_name(m.lambda, m.sparsity_k, p) : setting.name;
    if (!used_names.insert(m.name).second) {
      throw ConfigError("config: duplicate model name '" + m.name + "'");
    }
    ProblemSpec spec{data.x, m.rank, m.sparsity_k, m.lambda, data.graph};
    try {
      spec.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("config: model ") + m.name + ": " + e.what());
    }
    const std::size_t clusters = classes > 0 ? classes : m.rank;

    for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) {
      SolverConfig sc = cfg.solver;
      sc.seed = cfg.solver.seed + rep;
      const auto t0 = std::chrono::steady_clock::now();
      auto sol = solve(spec, sc);
      RunRecord run;
      run.model = m.name;
      run.repetition = rep;
      run.seed = sc.seed;
      run.iterations = sol.trace.iterations();
      run.converged = sol.trace.converged;
      run.final_objective = sol.trace.final_objective();
      run.metrics.relative_error = relative_error(data.x, sol.w, sol.h);
      if (data.labels) {
        const auto clus = cluster_embedding(sol.h, clusters, sc.seed, cfg.kmeans_restarts);
        run.metrics.nmi = nmi(clus.labels, *data.labels);
        run.metrics.acc = acc(clus.labels, *data.labels);
      }
      run.wall_time_s =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      if (write_outputs) {
        const auto path =
            cfg.output_dir / "traces" / (m.name + "_rep" + std::to_string(rep) + ".csv");
        write_trace_csv(path, sol.trace);
        result.trace_files.push_back(path);
      }
      m.runs.push_back(std::move(run));
    }
    summarize(m);
    result.models.push_back(std::move(m));
  }

  if (write_outputs) {
    std::filesystem::create_directories(cfg.output_dir);
    std::ofstream(cfg.output_dir / "aggregate.json", std::ios::binary)
        << aggregate_json(result).dump(2) << '\n';
    std::ofstream(cfg.output_dir / "summary.txt", std::ios::binary) << format_table(result);
  }
  return result;
}

}  // namespace gnmf
