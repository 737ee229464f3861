#pragma once

#include "dppml/graph_embedding.hpp"
#include "dppml/point_set.hpp"
#include "dppml/sampling.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace dppml::bench {

enum class Sampler { Uniform, KMeansUniform, KMeansPlusPlusSeed, KMeansPlusPlus, EfficientDpp };

std::string to_string(Sampler s);
Sampler parse_sampler(const std::string& name);

// A sampler plus the metric used for the landmark graph ("efficient-dpp+bhattacharyya").
struct Method {
  Sampler sampler = Sampler::EfficientDpp;
  GraphMetric metric = GraphMetric::Euclidean;
};
std::string to_string(const Method& m);
Method parse_method(const std::string& name);

struct DatasetSpec {
  std::string kind = "swiss-roll";  // swiss-roll | fish-bowl | two-blobs | csv | idx
  Index n = 1000;
  double noise = 0.0;
  double scale = 1.0;  // coordinates are multiplied by this factor after generation
  double separation = 10.0;  // two-blobs only
  Index dim = 2;             // two-blobs only
  std::string path;          // csv file, or idx training images
  std::string labels;        // idx training labels
  std::string test_path;     // idx test images
  std::string test_labels;   // idx test labels
  Index test_n = 0;          // held-out points (idx test limit, or two-blobs test size)
};

struct ExperimentConfig {
  DatasetSpec dataset;
  std::vector<Method> methods;
  std::vector<Index> k_values;
  Index repetitions = 50;
  double sigma = 1.0;  // kernel and graph-weight bandwidth
  Index m = 30;        // efficient sampler neighborhood (also used for covariance estimation)
  std::string update = "welsch";  // welsch | sine
  std::optional<double> welsch_sigma;  // defaults to sigma
  std::optional<double> tau;           // sine only; auto when absent
  Index kmeans_max_iter = 100;
  std::vector<GraphMetric> metrics{GraphMetric::Euclidean, GraphMetric::Bhattacharyya};
  std::vector<Index> graph_knn{10};
  Index dims = 2;
  CovarianceKind covariance = CovarianceKind::Full;
  std::uint64_t seed = 0;
  std::string output;
  Index threads = 0;  // 0: hardware concurrency
  bool timing = true;  // false writes 0 in runtime_ms so outputs are byte-reproducible
  std::vector<std::string> notes;  // copied into the output metadata

  // Every problem found, empty when valid. Checked before any run starts.
  std::vector<std::string> validation_errors(bool need_labels = false) const;
};

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& config);
ExperimentConfig load_config(const std::filesystem::path& path);

struct ResultRow {
  std::string dataset;
  std::string method;
  Index key = 0;
  double mean = 0.0;
  double stddev = 0.0;
  double runtime_ms = 0.0;  // mean per trial
  std::uint64_t seed = 0;
  Index runs = 0;
  std::string flags;
  std::vector<double> values;  // per-repetition values, not written to csv
};

struct ResultTable {
  std::string method_column = "sampler";
  std::string key_column = "k";
  std::string value_column = "error";
  std::vector<std::string> metadata;
  std::vector<ResultRow> rows;

  const ResultRow* find(const std::string& method, Index key) const;
};

void write_table(const ResultTable& table, const std::filesystem::path& path);
ResultTable read_table(const std::filesystem::path& path);

// Nystrom trace-norm error per sampler and k, averaged over repetitions.
ResultTable bench_reconstruction(const ExperimentConfig& config);

// Landmark-embedding quality (dominant |Spearman rho| against the generating parameters)
// for each graph metric and graph kNN.
ResultTable bench_robustness(const ExperimentConfig& config);

// 1-nearest-neighbor accuracy of held-out points in the extended embedding.
ResultTable bench_classification(const ExperimentConfig& config);

// Writes plot-ready series: kind "error-vs-k" gives one file per method (key,mean,std);
// kind "bars" gives one file with mean and std whiskers (<method column>,<key column>,mean,low,high).
// Returns the files written.
std::vector<std::filesystem::path> emit_plotdata(const ResultTable& table, const std::string& kind,
                                                 const std::filesystem::path& prefix);

// Embedding scatter: columns phi1..phil followed by the truth rows (t,h for the Swiss roll).
void write_embedding_scatter(const Eigen::MatrixXd& embedding,
                             const std::optional<Eigen::MatrixXd>& truth,
                             const std::filesystem::path& path,
                             const std::vector<std::string>& metadata = {});

// Dataset materialization (training split and, when configured, the held-out split).
struct Dataset {
  PointSet train;
  std::optional<PointSet> test;
};
Dataset load_dataset(const DatasetSpec& spec, std::uint64_t seed);

// Landmark selection for any sampler; covariances are estimated over each landmark's m
// nearest neighbors when the sampler does not produce them itself.
LandmarkSelection select_landmarks(const PointSet& points, Sampler sampler, Index k,
                                   const ExperimentConfig& config, CovarianceKind covariances,
                                   std::uint64_t seed);

// Index of the nearest training row for each query row (ties to the lower index).
std::vector<Index> nearest_rows(const Eigen::MatrixXd& train, const Eigen::MatrixXd& query);

inline constexpr const char* kToolVersion = "dppml 0.1.0";

}  // namespace dppml::bench
