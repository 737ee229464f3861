#include "dppml/datasets.hpp"
#include "dppml/error.hpp"
#include "dppml/experiments.hpp"
#include "dppml/graph_embedding.hpp"
#include "dppml/metric_kernel.hpp"
#include "dppml/random.hpp"

#include "CLI11.hpp"

#include <fstream>
#include <iostream>
#include <optional>

namespace {

using namespace dppml;
using namespace dppml::bench;

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<Index> threads;
};

void add_common(CLI::App* cmd, CommonOptions& opt, bool need_config = true) {
  auto* c = cmd->add_option("-c,--config", opt.config, "JSON experiment config");
  if (need_config) c->required()->check(CLI::ExistingFile);
  cmd->add_option("-s,--seed", opt.seed, "override the config seed");
  cmd->add_option("-o,--out", opt.out, "output path (overrides the config)");
  cmd->add_option("-j,--threads", opt.threads, "worker threads (0: all cores)");
}

ExperimentConfig resolve(const CommonOptions& opt) {
  ExperimentConfig config = opt.config.empty() ? ExperimentConfig{} : load_config(opt.config);
  if (opt.seed) config.seed = *opt.seed;
  if (!opt.out.empty()) config.output = opt.out;
  if (opt.threads) config.threads = *opt.threads;
  return config;
}

void check(const ExperimentConfig& config, bool need_labels = false) {
  const auto errors = config.validation_errors(need_labels);
  if (config.output.empty())
    throw Error(ErrorCode::InvalidConfig, "no output path (set \"output\" or pass --out)", "config");
  if (errors.empty()) return;
  std::string msg = "invalid config:";
  for (const auto& e : errors) msg += "\n  - " + e;
  throw Error(ErrorCode::InvalidConfig, msg, "config");
}

std::vector<std::string> metadata(const ExperimentConfig& config, const char* what) {
  return {std::string("tool: ") + kToolVersion, std::string("command: ") + what,
          "seed: " + std::to_string(config.seed), "config: " + config_to_json(config).dump()};
}

void print_table(const ResultTable& table) {
  std::cout << table.method_column << '\t' << table.key_column << "\tmean\tstd\truntime_ms\n";
  for (const auto& r : table.rows)
    std::cout << r.method << '\t' << r.key << '\t' << r.mean << '\t' << r.stddev << '\t'
              << r.runtime_ms << (r.flags.empty() ? "" : "\t" + r.flags) << '\n';
}

int cmd_generate(const CommonOptions& opt) {
  ExperimentConfig config = resolve(opt);
  check(config);
  const Dataset data = load_dataset(config.dataset, config.seed);
  write_csv(data.train, config.output);
  std::filesystem::path out(config.output);
  if (data.train.truth) {
    const std::filesystem::path truth_path = out.parent_path() / (out.stem().string() + ".truth.csv");
    PointSet truth;
    truth.coords = *data.train.truth;
    write_csv(truth, truth_path);
    std::cout << "wrote " << truth_path.string() << '\n';
  }
  if (data.test) {
    const std::filesystem::path test_path = out.parent_path() / (out.stem().string() + ".test.csv");
    write_csv(*data.test, test_path);
    std::cout << "wrote " << test_path.string() << '\n';
  }
  std::cout << "wrote " << config.output << " (" << data.train.size() << " points)\n";
  return 0;
}

int cmd_sample(const CommonOptions& opt) {
  ExperimentConfig config = resolve(opt);
  check(config);
  const PointSet points = load_dataset(config.dataset, config.seed).train;
  const Method method = config.methods.front();
  const Index k = config.k_values.front();
  const LandmarkSelection sel = select_landmarks(
      points, method.sampler, k, config, CovarianceKind::None, derive_seed(config.seed, 2));
  std::ofstream out(config.output);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + config.output, "output");
  for (const auto& line : metadata(config, "sample")) out << "# " << line << '\n';
  out << "index\n";
  for (Index i : sel.indices) out << i << '\n';
  std::cout << "wrote " << config.output << " (" << sel.size() << " landmarks, "
            << to_string(method.sampler) << ")\n";
  return 0;
}

int cmd_embed(const CommonOptions& opt) {
  ExperimentConfig config = resolve(opt);
  check(config);
  const PointSet points = load_dataset(config.dataset, config.seed).train;
  const Method method = config.methods.front();
  const Index k = config.k_values.front();
  const CovarianceKind cov =
      method.metric == GraphMetric::Bhattacharyya
          ? (config.covariance == CovarianceKind::None ? CovarianceKind::Full : config.covariance)
          : CovarianceKind::None;
  auto staged = [](const char* stage, auto&& fn) {
    try {
      return fn();
    } catch (const Error& e) {
      throw e.with_stage(stage);
    }
  };
  const LandmarkSelection sel = staged("sample", [&] {
    return select_landmarks(points, method.sampler, k, config, cov, derive_seed(config.seed, 2));
  });
  const NeighborhoodGraph graph = staged("graph", [&] {
    return build_graph(points, sel, method.metric,
                       KnnRule{std::min(config.graph_knn.front(), k - 1)}, config.sigma);
  });
  if (graph.components > 1)
    throw Error(ErrorCode::DisconnectedGraph,
                "landmark graph has " + std::to_string(graph.components) +
                    " components; increase graph_knn",
                "graph");
  const SpectralEmbedding emb = staged("embed", [&] { return laplacian_eigenmaps(graph, config.dims); });
  const Eigen::MatrixXd all = staged("extend", [&] {
    Eigen::MatrixXd coords(points.size(), config.dims);
    const NormalizedEmbedding basis = normalized_embedding(graph, emb);
    for (Index a = 0; a < sel.size(); ++a) coords.row(sel.indices[a]) = basis.coords.row(a);
    const std::vector<Index> rest = complement(sel.indices, points.size());
    if (!rest.empty()) {
      const Eigen::MatrixXd ext = extend_embedding(points, sel, graph, emb, rest, config.sigma);
      for (std::size_t i = 0; i < rest.size(); ++i) coords.row(rest[i]) = ext.row(static_cast<Index>(i));
    }
    return coords;
  });
  write_embedding_scatter(all, points.truth, config.output, metadata(config, "embed"));
  std::cout << "wrote " << config.output << " (" << points.size() << " points, " << config.dims
            << " dims, eigenvalues";
  for (Index i = 0; i < emb.eigenvalues.size() && i < 5; ++i) std::cout << ' ' << emb.eigenvalues(i);
  std::cout << ")\n";
  return 0;
}

template <class Bench>
int cmd_bench(const CommonOptions& opt, Bench&& bench) {
  ExperimentConfig config = resolve(opt);
  check(config);
  const ResultTable table = bench(config);
  write_table(table, config.output);
  print_table(table);
  std::cout << "wrote " << config.output << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Landmark selection with efficient DPP sampling: data, embeddings, benchmarks"};
  app.require_subcommand(1);
  app.set_version_flag("--version", dppml::bench::kToolVersion);

  CommonOptions gen, smp, emb, rec, rob, cls;
  add_common(app.add_subcommand("generate", "write a dataset as CSV"), gen);
  add_common(app.add_subcommand("sample", "select landmarks and write their indices"), smp);
  add_common(app.add_subcommand("embed", "landmark embedding plus out-of-sample extension"), emb);
  add_common(app.add_subcommand("bench-recon", "Nystrom reconstruction error per sampler and k"),
             rec);
  add_common(app.add_subcommand("bench-robust", "embedding quality across graph kNN and metrics"),
             rob);
  add_common(app.add_subcommand("bench-classify", "1-NN accuracy in the extended embedding"), cls);

  std::string table_path, kind, prefix;
  auto* plot = app.add_subcommand("plotdata", "turn a result table into plot series");
  plot->add_option("-t,--table", table_path, "result table CSV")->required()->check(CLI::ExistingFile);
  plot->add_option("-k,--kind", kind, "error-vs-k | bars")->required();
  plot->add_option("-o,--out", prefix, "output prefix")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand("generate")) return cmd_generate(gen);
    if (app.got_subcommand("sample")) return cmd_sample(smp);
    if (app.got_subcommand("embed")) return cmd_embed(emb);
    if (app.got_subcommand("bench-recon")) return cmd_bench(rec, bench_reconstruction);
    if (app.got_subcommand("bench-robust")) return cmd_bench(rob, bench_robustness);
    if (app.got_subcommand("bench-classify")) return cmd_bench(cls, bench_classification);
    if (app.got_subcommand("plotdata")) {
      for (const auto& p : emit_plotdata(read_table(table_path), kind, prefix))
        std::cout << "wrote " << p.string() << '\n';
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "dppml: error";
    if (!e.stage().empty()) std::cerr << " [" << e.stage() << "]";
    std::cerr << " (" << to_string(e.code()) << "): " << e.detail() << '\n';
    return e.code() == ErrorCode::InvalidConfig ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "dppml: error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
