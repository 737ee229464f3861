#include "dppml/experiments.hpp"

#include "dppml/datasets.hpp"
#include "dppml/error.hpp"
#include "dppml/metric_kernel.hpp"
#include "dppml/nystrom.hpp"
#include "dppml/random.hpp"
#include "dppml/stats.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace dppml::bench {

using nlohmann::json;

namespace {

const std::vector<std::pair<Sampler, std::string>>& sampler_names() {
  static const std::vector<std::pair<Sampler, std::string>> names{
      {Sampler::Uniform, "uniform"},
      {Sampler::KMeansUniform, "kmeans-uniform"},
      {Sampler::KMeansPlusPlusSeed, "kmeans++-seed"},
      {Sampler::KMeansPlusPlus, "kmeans++"},
      {Sampler::EfficientDpp, "efficient-dpp"}};
  return names;
}

constexpr const char* kBhattacharyyaSuffix = "+bhattacharyya";

std::string metric_name(GraphMetric m) {
  return m == GraphMetric::Euclidean ? "euclidean" : "bhattacharyya";
}

GraphMetric parse_metric(const std::string& s) {
  if (s == "euclidean") return GraphMetric::Euclidean;
  if (s == "bhattacharyya") return GraphMetric::Bhattacharyya;
  throw Error(ErrorCode::InvalidConfig, "unknown graph metric '" + s + "'");
}

std::string covariance_name(CovarianceKind c) {
  switch (c) {
    case CovarianceKind::None: return "none";
    case CovarianceKind::Full: return "full";
    case CovarianceKind::Diagonal: return "diagonal";
  }
  return "none";
}

CovarianceKind parse_covariance(const std::string& s) {
  if (s == "none") return CovarianceKind::None;
  if (s == "full") return CovarianceKind::Full;
  if (s == "diagonal") return CovarianceKind::Diagonal;
  throw Error(ErrorCode::InvalidConfig, "unknown covariance kind '" + s + "'");
}

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s, const std::string& what) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw Error(ErrorCode::MalformedCsv, "bad number '" + s + "' in column " + what);
  return v;
}

Index sampler_id(Sampler s) { return static_cast<Index>(s); }

// Runs fn(task) for task in [0, count) on a pool of workers; the first exception is rethrown.
template <class Fn>
void run_pool(Index count, Index threads, Fn&& fn) {
  Index workers = threads > 0 ? threads : static_cast<Index>(std::thread::hardware_concurrency());
  workers = std::clamp<Index>(workers, 1, std::max<Index>(count, 1));
  std::atomic<Index> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (;;) {
      const Index task = next.fetch_add(1);
      if (task >= count) return;
      try {
        fn(task);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(count);
        return;
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (Index w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
      .count();
}

template <class Fn>
auto staged(const char* stage, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    if (!e.stage().empty()) throw;
    throw e.with_stage(stage);
  }
}

std::vector<std::string> base_metadata(const ExperimentConfig& config, const char* experiment) {
  std::vector<std::string> meta;
  meta.push_back(std::string("tool: ") + kToolVersion);
  meta.push_back(std::string("experiment: ") + experiment);
  meta.push_back("seed: " + std::to_string(config.seed));
  meta.push_back("config: " + config_to_json(config).dump());
  for (const auto& note : config.notes) meta.push_back("note: " + note);
  return meta;
}

UpdateFunction update_function(const ExperimentConfig& config) {
  if (config.update == "sine") return SineSquared{config.tau};
  return Welsch{config.welsch_sigma.value_or(config.sigma)};
}

void finish_row(ResultRow& row, const std::vector<double>& values,
                const std::vector<double>& times, bool timing) {
  row.values = values;
  const MeanStd ms = mean_std(values);
  row.mean = ms.mean;
  row.stddev = ms.stddev;
  row.runs = static_cast<Index>(values.size());
  if (timing && !times.empty()) {
    double total = 0.0;
    for (double t : times) total += t;
    row.runtime_ms = total / static_cast<double>(times.size());
  }
}

PointSet two_blobs(Index n, Index dim, double separation, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  PointSet out;
  out.coords.resize(dim, n);
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % 2);
    labels[static_cast<std::size_t>(i)] = label;
    for (Index r = 0; r < dim; ++r) out.coords(r, i) = normal(rng);
    out.coords(0, i) += label == 0 ? -0.5 * separation : 0.5 * separation;
  }
  out.labels = std::move(labels);
  return out;
}

}  // namespace

std::string to_string(Sampler s) {
  for (const auto& [value, name] : sampler_names())
    if (value == s) return name;
  return "unknown";
}

Sampler parse_sampler(const std::string& name) {
  for (const auto& [value, text] : sampler_names())
    if (text == name) return value;
  throw Error(ErrorCode::InvalidConfig, "unknown sampler '" + name + "'");
}

std::string to_string(const Method& m) {
  std::string out = to_string(m.sampler);
  if (m.metric == GraphMetric::Bhattacharyya) out += kBhattacharyyaSuffix;
  return out;
}

Method parse_method(const std::string& name) {
  const std::string suffix = kBhattacharyyaSuffix;
  if (name.size() > suffix.size() && name.ends_with(suffix))
    return {parse_sampler(name.substr(0, name.size() - suffix.size())),
            GraphMetric::Bhattacharyya};
  return {parse_sampler(name), GraphMetric::Euclidean};
}

std::vector<std::string> ExperimentConfig::validation_errors(bool need_labels) const {
  std::vector<std::string> errors;
  const auto& ds = dataset;
  static const std::set<std::string> kinds{"swiss-roll", "fish-bowl", "two-blobs", "csv", "idx"};
  if (!kinds.contains(ds.kind)) errors.push_back("dataset.kind '" + ds.kind + "' is unknown");
  const bool generated = ds.kind == "swiss-roll" || ds.kind == "fish-bowl" || ds.kind == "two-blobs";
  if (generated && ds.n < 1) errors.push_back("dataset.n must be >= 1");
  if (ds.noise < 0.0) errors.push_back("dataset.noise must be >= 0");
  if (!(ds.scale > 0.0)) errors.push_back("dataset.scale must be > 0");
  if (ds.kind == "two-blobs" && ds.dim < 1) errors.push_back("dataset.dim must be >= 1");
  if (ds.test_n < 0) errors.push_back("dataset.test_n must be >= 0");
  auto require_file = [&](const std::string& path, const char* field) {
    if (path.empty())
      errors.push_back(std::string("dataset.") + field + " is required");
    else if (!std::filesystem::exists(path))
      errors.push_back(std::string("dataset.") + field + " '" + path + "' does not exist");
  };
  if (ds.kind == "csv") require_file(ds.path, "path");
  if (ds.kind == "idx") {
    require_file(ds.path, "path");
    require_file(ds.labels, "labels");
    if (!ds.test_path.empty() || !ds.test_labels.empty()) {
      require_file(ds.test_path, "test_path");
      require_file(ds.test_labels, "test_labels");
    }
  }
  if (need_labels && ds.kind != "idx" && ds.kind != "two-blobs" && ds.kind != "csv")
    errors.push_back("dataset.kind '" + ds.kind + "' has no labels");

  if (methods.empty()) errors.push_back("samplers must list at least one sampler");
  if (k_values.empty()) errors.push_back("k must list at least one value");
  for (Index k : k_values) {
    if (k < 1) errors.push_back("k value " + std::to_string(k) + " must be >= 1");
    if (generated && k > ds.n)
      errors.push_back("k value " + std::to_string(k) + " exceeds dataset.n " +
                       std::to_string(ds.n));
    if (ds.kind == "idx" && ds.n > 0 && k > ds.n)
      errors.push_back("k value " + std::to_string(k) + " exceeds dataset.n " +
                       std::to_string(ds.n));
  }
  if (repetitions < 1) errors.push_back("repetitions must be >= 1");
  if (!(sigma > 0.0)) errors.push_back("sigma must be > 0");
  if (welsch_sigma && !(*welsch_sigma > 0.0)) errors.push_back("welsch_sigma must be > 0");
  if (tau && !(*tau > 0.0)) errors.push_back("tau must be > 0");
  if (update != "welsch" && update != "sine")
    errors.push_back("update '" + update + "' must be welsch or sine");
  if (m < 1) errors.push_back("m must be >= 1");
  if (generated && m > ds.n) errors.push_back("m exceeds dataset.n");
  if (kmeans_max_iter < 0) errors.push_back("kmeans_max_iter must be >= 0");
  if (metrics.empty()) errors.push_back("metrics must list at least one graph metric");
  if (graph_knn.empty()) errors.push_back("graph_knn must list at least one value");
  for (Index g : graph_knn)
    if (g < 1) errors.push_back("graph_knn value " + std::to_string(g) + " must be >= 1");
  if (dims < 1) errors.push_back("dims must be >= 1");
  if (threads < 0) errors.push_back("threads must be >= 0");
  return errors;
}

ExperimentConfig config_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "config must be a JSON object");
  static const std::set<std::string> top_keys{
      "dataset", "samplers", "k", "repetitions", "sigma", "m", "update", "welsch_sigma",
      "tau", "kmeans_max_iter", "metrics", "graph_knn", "dims", "covariance", "seed",
      "output", "threads", "timing", "notes"};
  static const std::set<std::string> dataset_keys{
      "kind", "n", "noise", "scale", "separation", "dim", "path", "labels", "test_path",
      "test_labels", "test_n"};
  for (const auto& [key, value] : j.items())
    if (!top_keys.contains(key))
      throw Error(ErrorCode::InvalidConfig, "unknown config key '" + key + "'");

  ExperimentConfig c;
  try {
    if (j.contains("dataset")) {
      const json& d = j.at("dataset");
      if (!d.is_object()) throw Error(ErrorCode::InvalidConfig, "dataset must be an object");
      for (const auto& [key, value] : d.items())
        if (!dataset_keys.contains(key))
          throw Error(ErrorCode::InvalidConfig, "unknown dataset key '" + key + "'");
      auto& ds = c.dataset;
      ds.kind = d.value("kind", ds.kind);
      ds.n = d.value("n", ds.n);
      ds.noise = d.value("noise", ds.noise);
      ds.scale = d.value("scale", ds.scale);
      ds.separation = d.value("separation", ds.separation);
      ds.dim = d.value("dim", ds.dim);
      ds.path = d.value("path", ds.path);
      ds.labels = d.value("labels", ds.labels);
      ds.test_path = d.value("test_path", ds.test_path);
      ds.test_labels = d.value("test_labels", ds.test_labels);
      ds.test_n = d.value("test_n", ds.test_n);
    }
    if (j.contains("samplers")) {
      const json& s = j.at("samplers");
      if (s.is_string()) {
        c.methods.push_back(parse_method(s.get<std::string>()));
      } else {
        for (const auto& item : s) c.methods.push_back(parse_method(item.get<std::string>()));
      }
    } else {
      c.methods.push_back({Sampler::EfficientDpp, GraphMetric::Euclidean});
    }
    if (j.contains("k")) {
      const json& k = j.at("k");
      if (k.is_number_integer())
        c.k_values.push_back(k.get<Index>());
      else
        c.k_values = k.get<std::vector<Index>>();
    }
    c.repetitions = j.value("repetitions", c.repetitions);
    c.sigma = j.value("sigma", c.sigma);
    c.m = j.value("m", c.m);
    c.update = j.value("update", c.update);
    if (j.contains("welsch_sigma")) c.welsch_sigma = j.at("welsch_sigma").get<double>();
    if (j.contains("tau")) c.tau = j.at("tau").get<double>();
    c.kmeans_max_iter = j.value("kmeans_max_iter", c.kmeans_max_iter);
    if (j.contains("metrics")) {
      c.metrics.clear();
      for (const auto& item : j.at("metrics")) c.metrics.push_back(parse_metric(item.get<std::string>()));
    }
    if (j.contains("graph_knn")) {
      const json& g = j.at("graph_knn");
      if (g.is_number_integer())
        c.graph_knn = {g.get<Index>()};
      else
        c.graph_knn = g.get<std::vector<Index>>();
    }
    c.dims = j.value("dims", c.dims);
    if (j.contains("covariance")) c.covariance = parse_covariance(j.at("covariance").get<std::string>());
    c.seed = j.value("seed", c.seed);
    c.output = j.value("output", c.output);
    c.threads = j.value("threads", c.threads);
    c.timing = j.value("timing", c.timing);
    if (j.contains("notes")) c.notes = j.at("notes").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, e.what());
  }
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  json d = {{"kind", c.dataset.kind}, {"n", c.dataset.n}, {"noise", c.dataset.noise},
            {"scale", c.dataset.scale}};
  if (c.dataset.kind == "two-blobs") {
    d["separation"] = c.dataset.separation;
    d["dim"] = c.dataset.dim;
  }
  if (!c.dataset.path.empty()) d["path"] = c.dataset.path;
  if (!c.dataset.labels.empty()) d["labels"] = c.dataset.labels;
  if (!c.dataset.test_path.empty()) d["test_path"] = c.dataset.test_path;
  if (!c.dataset.test_labels.empty()) d["test_labels"] = c.dataset.test_labels;
  if (c.dataset.test_n > 0) d["test_n"] = c.dataset.test_n;

  json methods = json::array();
  for (const auto& m : c.methods) methods.push_back(to_string(m));
  json metrics = json::array();
  for (auto m : c.metrics) metrics.push_back(metric_name(m));
  json j = {{"dataset", d},
            {"samplers", methods},
            {"k", c.k_values},
            {"repetitions", c.repetitions},
            {"sigma", c.sigma},
            {"m", c.m},
            {"update", c.update},
            {"kmeans_max_iter", c.kmeans_max_iter},
            {"metrics", metrics},
            {"graph_knn", c.graph_knn},
            {"dims", c.dims},
            {"covariance", covariance_name(c.covariance)},
            {"seed", c.seed}};
  if (c.welsch_sigma) j["welsch_sigma"] = *c.welsch_sigma;
  if (c.tau) j["tau"] = *c.tau;
  return j;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in, nullptr, true, true);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

const ResultRow* ResultTable::find(const std::string& method, Index key) const {
  for (const auto& row : rows)
    if (row.method == method && row.key == key) return &row;
  return nullptr;
}

void write_table(const ResultTable& table, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  for (const auto& line : table.metadata) out << "# " << line << '\n';
  out << "dataset," << table.method_column << ',' << table.key_column << ',' << table.value_column
      << "_mean," << table.value_column << "_std,runtime_ms,seed,runs,flags\n";
  for (const auto& r : table.rows) {
    if (!std::isfinite(r.mean) || !(r.stddev >= 0.0))
      throw Error(ErrorCode::NumericalFailure,
                  "non-finite result for " + r.method + " at " + std::to_string(r.key));
    out << r.dataset << ',' << r.method << ',' << r.key << ',' << format_double(r.mean) << ','
        << format_double(r.stddev) << ',' << format_double(r.runtime_ms) << ',' << r.seed << ','
        << r.runs << ',' << r.flags << '\n';
  }
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

ResultTable read_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  ResultTable table;
  std::string line;
  bool header = false;
  Index line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      table.metadata.push_back(line.size() > 2 ? line.substr(2) : "");
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (line.back() == ',') cells.emplace_back();
    if (cells.size() != 9)
      throw Error(ErrorCode::MalformedCsv,
                  path.string() + ":" + std::to_string(line_no) + ": expected 9 columns");
    if (!header) {
      table.method_column = cells[1];
      table.key_column = cells[2];
      const std::string& value = cells[3];
      table.value_column = value.ends_with("_mean") ? value.substr(0, value.size() - 5) : value;
      header = true;
      continue;
    }
    ResultRow r;
    r.dataset = cells[0];
    r.method = cells[1];
    r.key = static_cast<Index>(parse_double(cells[2], table.key_column));
    r.mean = parse_double(cells[3], "mean");
    r.stddev = parse_double(cells[4], "std");
    r.runtime_ms = parse_double(cells[5], "runtime_ms");
    r.seed = static_cast<std::uint64_t>(std::stoull(cells[6]));
    r.runs = static_cast<Index>(parse_double(cells[7], "runs"));
    r.flags = cells[8];
    table.rows.push_back(std::move(r));
  }
  if (!header) throw Error(ErrorCode::MalformedCsv, path.string() + " has no header row");
  return table;
}

Dataset load_dataset(const DatasetSpec& spec, std::uint64_t seed) {
  Dataset out;
  if (spec.kind == "swiss-roll") {
    out.train = generate_swiss_roll(spec.n, spec.noise, seed);
  } else if (spec.kind == "fish-bowl") {
    out.train = generate_fish_bowl(spec.n, seed);
  } else if (spec.kind == "two-blobs") {
    PointSet all = two_blobs(spec.n + spec.test_n, spec.dim, spec.separation, seed);
    std::vector<Index> train(static_cast<std::size_t>(spec.n));
    std::iota(train.begin(), train.end(), Index{0});
    out.train = all.subset(train);
    if (spec.test_n > 0) {
      std::vector<Index> test(static_cast<std::size_t>(spec.test_n));
      std::iota(test.begin(), test.end(), spec.n);
      out.test = all.subset(test);
    }
  } else if (spec.kind == "csv") {
    out.train = read_csv(spec.path);
  } else if (spec.kind == "idx") {
    out.train = read_idx(spec.path, spec.labels,
                         spec.n > 0 ? std::optional<Index>(spec.n) : std::nullopt);
    if (!spec.test_path.empty())
      out.test = read_idx(spec.test_path, spec.test_labels,
                          spec.test_n > 0 ? std::optional<Index>(spec.test_n) : std::nullopt);
  } else {
    throw Error(ErrorCode::InvalidConfig, "unknown dataset kind '" + spec.kind + "'");
  }
  if (spec.scale != 1.0) {
    out.train.coords *= spec.scale;
    if (out.test) out.test->coords *= spec.scale;
  }
  return out;
}

LandmarkSelection select_landmarks(const PointSet& points, Sampler sampler, Index k,
                                   const ExperimentConfig& config, CovarianceKind covariances,
                                   std::uint64_t seed) {
  LandmarkSelection sel;
  switch (sampler) {
    case Sampler::Uniform:
      sel = uniform_sample(points.size(), k, seed);
      break;
    case Sampler::KMeansUniform:
      sel = kmeans(points, k, KMeansInit::Uniform, seed, config.kmeans_max_iter).landmarks;
      break;
    case Sampler::KMeansPlusPlusSeed:
      sel = kmeanspp_seed(points, k, seed);
      break;
    case Sampler::KMeansPlusPlus:
      sel = kmeans(points, k, KMeansInit::PlusPlus, seed, config.kmeans_max_iter).landmarks;
      break;
    case Sampler::EfficientDpp: {
      EfficientDppOptions opt;
      opt.k = k;
      opt.m = std::min(config.m, points.size());
      opt.update = update_function(config);
      opt.covariances = covariances;
      return efficient_dpp_sample(points, opt, seed);
    }
  }
  if (covariances != CovarianceKind::None) {
    const Index m = std::min(config.m, points.size());
    sel.covariance_kind = covariances;
    sel.covariances.clear();
    for (Index i : sel.indices) {
      const Eigen::VectorXd delta =
          (points.coords.colwise() - points.coords.col(i)).colwise().norm().transpose();
      const std::vector<Index> hood = nearest_neighborhood(delta, i, m);
      if (covariances == CovarianceKind::Full)
        sel.covariances.push_back(local_covariance(points, hood));
      else
        sel.covariances.push_back(local_covariance_diagonal(points, hood));
    }
  }
  return sel;
}

std::vector<Index> nearest_rows(const Eigen::MatrixXd& train, const Eigen::MatrixXd& query) {
  if (train.rows() == 0) throw Error(ErrorCode::InvalidArgument, "no training rows");
  if (train.cols() != query.cols())
    throw Error(ErrorCode::InvalidArgument, "train and query dimensions differ");
  const Eigen::VectorXd train_sq = train.rowwise().squaredNorm();
  std::vector<Index> out(static_cast<std::size_t>(query.rows()));
  const Index block = 512;
  for (Index start = 0; start < query.rows(); start += block) {
    const Index len = std::min(block, query.rows() - start);
    const Eigen::MatrixXd dots = train * query.middleRows(start, len).transpose();
    for (Index q = 0; q < len; ++q) {
      Index best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (Index t = 0; t < train.rows(); ++t) {
        const double d = train_sq(t) - 2.0 * dots(t, q);
        if (d < best_d) {
          best_d = d;
          best = t;
        }
      }
      out[static_cast<std::size_t>(start + q)] = best;
    }
  }
  return out;
}

ResultTable bench_reconstruction(const ExperimentConfig& config) {
  const auto errors = config.validation_errors();
  if (!errors.empty()) {
    std::string msg = "invalid config:";
    for (const auto& e : errors) msg += "\n  - " + e;
    throw Error(ErrorCode::InvalidConfig, msg, "config");
  }

  const Index reps = config.repetitions;
  const Index n_methods = static_cast<Index>(config.methods.size());
  const Index n_k = static_cast<Index>(config.k_values.size());
  // values[rep][method][k], times likewise
  std::vector<double> values(static_cast<std::size_t>(reps * n_methods * n_k));
  std::vector<double> times(values.size());
  auto slot = [&](Index r, Index m, Index k) {
    return static_cast<std::size_t>((r * n_methods + m) * n_k + k);
  };

  run_pool(reps, config.threads, [&](Index r) {
    const PointSet points = staged("dataset", [&] {
      return load_dataset(config.dataset, derive_seed(config.seed, 1, static_cast<std::uint64_t>(r)))
          .train;
    });
    if (config.m > points.size())
      throw Error(ErrorCode::InvalidConfig, "m exceeds the dataset size", "config");
    const KernelSpec spec{config.sigma, DistanceMode::Euclidean, 1};
    const Eigen::MatrixXd kernel = staged("kernel", [&] { return kernel_matrix(points, spec); });
    for (Index mi = 0; mi < n_methods; ++mi) {
      const Sampler sampler = config.methods[static_cast<std::size_t>(mi)].sampler;
      for (Index ki = 0; ki < n_k; ++ki) {
        const Index k = config.k_values[static_cast<std::size_t>(ki)];
        const std::uint64_t seed = derive_seed(config.seed, 2 + static_cast<std::uint64_t>(sampler_id(sampler)),
                                               static_cast<std::uint64_t>(r), static_cast<std::uint64_t>(k));
        const auto start = std::chrono::steady_clock::now();
        const LandmarkSelection sel = staged("sample", [&] {
          return select_landmarks(points, sampler, k, config, CovarianceKind::None, seed);
        });
        times[slot(r, mi, ki)] = elapsed_ms(start);
        values[slot(r, mi, ki)] =
            staged("reconstruct", [&] { return reconstruction_error(kernel, sel.indices).error; });
      }
    }
  });

  ResultTable table;
  table.metadata = base_metadata(config, "reconstruction");
  for (Index mi = 0; mi < n_methods; ++mi) {
    for (Index ki = 0; ki < n_k; ++ki) {
      std::vector<double> v, t;
      for (Index r = 0; r < reps; ++r) {
        v.push_back(values[slot(r, mi, ki)]);
        t.push_back(times[slot(r, mi, ki)]);
      }
      ResultRow row;
      row.dataset = config.dataset.kind;
      row.method = to_string(config.methods[static_cast<std::size_t>(mi)]);
      row.key = config.k_values[static_cast<std::size_t>(ki)];
      row.seed = config.seed;
      finish_row(row, v, t, config.timing);
      table.rows.push_back(std::move(row));
    }
  }
  return table;
}

ResultTable bench_robustness(const ExperimentConfig& config) {
  auto errors = config.validation_errors();
  if (config.dataset.kind == "csv" || config.dataset.kind == "two-blobs" ||
      config.dataset.kind == "idx")
    errors.push_back("robustness needs a dataset with generating parameters (swiss-roll or fish-bowl)");
  if (!errors.empty()) {
    std::string msg = "invalid config:";
    for (const auto& e : errors) msg += "\n  - " + e;
    throw Error(ErrorCode::InvalidConfig, msg, "config");
  }

  const Index reps = config.repetitions;
  const Index k = config.k_values.front();
  const Sampler sampler = config.methods.front().sampler;
  const Index n_metrics = static_cast<Index>(config.metrics.size());
  const Index n_knn = static_cast<Index>(config.graph_knn.size());
  const bool want_bhatt = std::find(config.metrics.begin(), config.metrics.end(),
                                    GraphMetric::Bhattacharyya) != config.metrics.end();
  const CovarianceKind cov = want_bhatt ? (config.covariance == CovarianceKind::None
                                               ? CovarianceKind::Full
                                               : config.covariance)
                                        : CovarianceKind::None;

  std::vector<double> scores(static_cast<std::size_t>(reps * n_metrics * n_knn));
  std::vector<double> times(scores.size());
  std::vector<char> disconnected(scores.size(), 0);
  auto slot = [&](Index r, Index m, Index g) {
    return static_cast<std::size_t>((r * n_metrics + m) * n_knn + g);
  };

  run_pool(reps, config.threads, [&](Index r) {
    const PointSet points = staged("dataset", [&] {
      return load_dataset(config.dataset, derive_seed(config.seed, 1, static_cast<std::uint64_t>(r)))
          .train;
    });
    const std::uint64_t seed = derive_seed(config.seed, 2 + static_cast<std::uint64_t>(sampler_id(sampler)),
                                           static_cast<std::uint64_t>(r), static_cast<std::uint64_t>(k));
    const LandmarkSelection sel =
        staged("sample", [&] { return select_landmarks(points, sampler, k, config, cov, seed); });
    const PointSet landmark_points = points.subset(sel.indices);
    for (Index mi = 0; mi < n_metrics; ++mi) {
      const GraphMetric metric = config.metrics[static_cast<std::size_t>(mi)];
      const Eigen::MatrixXd dist =
          staged("graph", [&] { return landmark_distances(points, sel, metric); });
      for (Index gi = 0; gi < n_knn; ++gi) {
        const Index knn = std::min(config.graph_knn[static_cast<std::size_t>(gi)], k - 1);
        const auto start = std::chrono::steady_clock::now();
        const NeighborhoodGraph graph = staged("graph", [&] {
          return build_graph_from_distances(points, sel, dist, KnnRule{knn}, config.sigma);
        });
        double score = 0.0;
        if (graph.components > 1) {
          disconnected[slot(r, mi, gi)] = 1;
        } else {
          const SpectralEmbedding emb =
              staged("embed", [&] { return laplacian_eigenmaps(graph, config.dims); });
          score = dominant_spearman(emb.coords, *landmark_points.truth);
        }
        times[slot(r, mi, gi)] = elapsed_ms(start);
        scores[slot(r, mi, gi)] = score;
      }
    }
  });

  ResultTable table;
  table.method_column = "metric";
  table.key_column = "knn";
  table.value_column = "score";
  table.metadata = base_metadata(config, "robustness");
  for (Index mi = 0; mi < n_metrics; ++mi) {
    for (Index gi = 0; gi < n_knn; ++gi) {
      std::vector<double> v, t;
      Index broken = 0;
      for (Index r = 0; r < reps; ++r) {
        v.push_back(scores[slot(r, mi, gi)]);
        t.push_back(times[slot(r, mi, gi)]);
        broken += disconnected[slot(r, mi, gi)];
      }
      ResultRow row;
      row.dataset = config.dataset.kind;
      row.method = metric_name(config.metrics[static_cast<std::size_t>(mi)]);
      row.key = config.graph_knn[static_cast<std::size_t>(gi)];
      row.seed = config.seed;
      if (broken > 0) row.flags = "disconnected=" + std::to_string(broken);
      finish_row(row, v, t, config.timing);
      table.rows.push_back(std::move(row));
    }
  }
  return table;
}

ResultTable bench_classification(const ExperimentConfig& config) {
  auto errors = config.validation_errors(true);
  if (config.dataset.kind == "idx" && config.dataset.test_path.empty())
    errors.push_back("dataset.test_path is required for classification");
  if (config.dataset.kind == "two-blobs" && config.dataset.test_n < 1)
    errors.push_back("dataset.test_n must be >= 1 for classification");
  if (config.dataset.kind != "idx" && config.dataset.kind != "two-blobs")
    errors.push_back("classification needs an idx or two-blobs dataset with a test split");
  if (!errors.empty()) {
    std::string msg = "invalid config:";
    for (const auto& e : errors) msg += "\n  - " + e;
    throw Error(ErrorCode::InvalidConfig, msg, "config");
  }

  // idx data is fixed across repetitions, so load it once.
  std::optional<Dataset> fixed;
  if (config.dataset.kind == "idx") fixed = staged("dataset", [&] { return load_dataset(config.dataset, config.seed); });
  if (fixed) {
    if (!fixed->train.labels || !fixed->test || !fixed->test->labels)
      throw Error(ErrorCode::MissingLabels, "dataset has no labels", "dataset");
    for (Index k : config.k_values)
      if (k > fixed->train.size())
        throw Error(ErrorCode::InvalidConfig,
                    "k value " + std::to_string(k) + " exceeds the training set", "config");
  }

  const Index reps = config.repetitions;
  const Index n_methods = static_cast<Index>(config.methods.size());
  const Index n_k = static_cast<Index>(config.k_values.size());
  std::vector<double> acc(static_cast<std::size_t>(reps * n_methods * n_k));
  std::vector<double> times(acc.size());
  auto slot = [&](Index r, Index m, Index k) {
    return static_cast<std::size_t>((r * n_methods + m) * n_k + k);
  };
  const CovarianceKind bhatt_cov =
      config.covariance == CovarianceKind::None ? CovarianceKind::Diagonal : config.covariance;
  const Index graph_knn = config.graph_knn.front();

  run_pool(reps, config.threads, [&](Index r) {
    const Dataset data = fixed ? *fixed : staged("dataset", [&] {
      return load_dataset(config.dataset, derive_seed(config.seed, 1, static_cast<std::uint64_t>(r)));
    });
    const PointSet& train = data.train;
    const PointSet& test = *data.test;
    for (Index ki = 0; ki < n_k; ++ki) {
      const Index k = config.k_values[static_cast<std::size_t>(ki)];
      // Landmarks are shared by every method that uses the same sampler.
      std::map<Sampler, LandmarkSelection> selections;
      std::map<Sampler, double> sample_ms;
      for (const auto& method : config.methods) {
        if (selections.contains(method.sampler)) continue;
        bool covariances = false;
        for (const auto& other : config.methods)
          covariances |= other.sampler == method.sampler &&
                         other.metric == GraphMetric::Bhattacharyya;
        const std::uint64_t seed =
            derive_seed(config.seed, 2 + static_cast<std::uint64_t>(sampler_id(method.sampler)),
                        static_cast<std::uint64_t>(r), static_cast<std::uint64_t>(k));
        const auto start = std::chrono::steady_clock::now();
        selections[method.sampler] = staged("sample", [&] {
          return select_landmarks(train, method.sampler, k, config,
                                  covariances ? bhatt_cov : CovarianceKind::None, seed);
        });
        sample_ms[method.sampler] = elapsed_ms(start);
      }

      for (Index mi = 0; mi < n_methods; ++mi) {
        const Method method = config.methods[static_cast<std::size_t>(mi)];
        const LandmarkSelection& sel = selections.at(method.sampler);
        const auto start = std::chrono::steady_clock::now();
        const NeighborhoodGraph graph = staged("graph", [&] {
          return build_graph(train, sel, method.metric, KnnRule{std::min(graph_knn, k - 1)},
                             config.sigma);
        });
        if (graph.components > 1)
          throw Error(ErrorCode::DisconnectedGraph,
                      to_string(method) + " landmark graph has " +
                          std::to_string(graph.components) + " components",
                      "graph");
        const SpectralEmbedding emb =
            staged("embed", [&] { return laplacian_eigenmaps(graph, config.dims); });
        const Eigen::MatrixXd train_emb = staged("extend", [&] {
          Eigen::MatrixXd all(train.size(), config.dims);
          const NormalizedEmbedding basis = normalized_embedding(graph, emb);
          for (Index a = 0; a < sel.size(); ++a) all.row(sel.indices[a]) = basis.coords.row(a);
          const std::vector<Index> rest = complement(sel.indices, train.size());
          if (!rest.empty()) {
            const Eigen::MatrixXd ext =
                extend_embedding(train, sel, graph, emb, rest, config.sigma);
            for (std::size_t i = 0; i < rest.size(); ++i)
              all.row(rest[i]) = ext.row(static_cast<Index>(i));
          }
          return all;
        });
        const Eigen::MatrixXd test_emb = staged("extend", [&] {
          return extend_embedding(train, sel, graph, emb, test, config.sigma);
        });
        const std::vector<Index> nearest = nearest_rows(train_emb, test_emb);
        Index correct = 0;
        for (Index q = 0; q < test.size(); ++q)
          correct += (*train.labels)[static_cast<std::size_t>(nearest[static_cast<std::size_t>(q)])] ==
                     (*test.labels)[static_cast<std::size_t>(q)];
        acc[slot(r, mi, ki)] = static_cast<double>(correct) / static_cast<double>(test.size());
        times[slot(r, mi, ki)] = sample_ms.at(method.sampler) + elapsed_ms(start);
      }
    }
  });

  ResultTable table;
  table.value_column = "accuracy";
  table.metadata = base_metadata(config, "classification");
  for (Index mi = 0; mi < n_methods; ++mi) {
    for (Index ki = 0; ki < n_k; ++ki) {
      std::vector<double> v, t;
      for (Index r = 0; r < reps; ++r) {
        v.push_back(acc[slot(r, mi, ki)]);
        t.push_back(times[slot(r, mi, ki)]);
      }
      ResultRow row;
      row.dataset = config.dataset.kind;
      row.method = to_string(config.methods[static_cast<std::size_t>(mi)]);
      row.key = config.k_values[static_cast<std::size_t>(ki)];
      row.seed = config.seed;
      finish_row(row, v, t, config.timing);
      table.rows.push_back(std::move(row));
    }
  }
  return table;
}

std::vector<std::filesystem::path> emit_plotdata(const ResultTable& table, const std::string& kind,
                                                 const std::filesystem::path& prefix) {
  if (kind != "error-vs-k" && kind != "bars")
    throw Error(ErrorCode::InvalidArgument,
                "unknown plot kind '" + kind + "' (expected error-vs-k or bars)");
  if (table.rows.empty()) throw Error(ErrorCode::InvalidArgument, "result table is empty");
  if (prefix.has_parent_path()) std::filesystem::create_directories(prefix.parent_path());

  std::vector<std::filesystem::path> written;
  auto open = [&](const std::filesystem::path& p) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + p.string());
    for (const auto& line : table.metadata) out << "# " << line << '\n';
    written.push_back(p);
    return out;
  };

  if (kind == "error-vs-k") {
    std::vector<std::string> order;
    for (const auto& row : table.rows)
      if (std::find(order.begin(), order.end(), row.method) == order.end())
        order.push_back(row.method);
    for (const auto& method : order) {
      std::string safe = method;
      std::replace(safe.begin(), safe.end(), '+', 'p');
      const std::filesystem::path p = prefix.string() + "_" + safe + ".csv";
      auto out = open(p);
      out << table.key_column << ",mean,std\n";
      std::vector<const ResultRow*> rows;
      for (const auto& row : table.rows)
        if (row.method == method) rows.push_back(&row);
      std::stable_sort(rows.begin(), rows.end(),
                       [](const ResultRow* a, const ResultRow* b) { return a->key < b->key; });
      for (const auto* row : rows)
        out << row->key << ',' << format_double(row->mean) << ',' << format_double(row->stddev)
            << '\n';
    }
  } else {
    const std::filesystem::path p = prefix.string() + ".csv";
    auto out = open(p);
    out << table.method_column << ',' << table.key_column << ",mean,low,high\n";
    for (const auto& row : table.rows)
      out << row.method << ',' << row.key << ',' << format_double(row.mean) << ','
          << format_double(row.mean - row.stddev) << ',' << format_double(row.mean + row.stddev)
          << '\n';
  }
  return written;
}

void write_embedding_scatter(const Eigen::MatrixXd& embedding,
                             const std::optional<Eigen::MatrixXd>& truth,
                             const std::filesystem::path& path,
                             const std::vector<std::string>& metadata) {
  if (embedding.rows() == 0) throw Error(ErrorCode::InvalidArgument, "embedding is empty");
  if (truth && truth->cols() != embedding.rows())
    throw Error(ErrorCode::CountMismatch, "truth columns differ from embedding rows");
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  for (const auto& line : metadata) out << "# " << line << '\n';
  for (Index c = 0; c < embedding.cols(); ++c) out << (c ? "," : "") << "phi" << c + 1;
  if (truth) {
    static const char* names[] = {"t", "h"};
    for (Index r = 0; r < truth->rows(); ++r)
      out << ',' << (truth->rows() == 2 ? std::string(names[r]) : "truth" + std::to_string(r));
  }
  out << '\n';
  for (Index i = 0; i < embedding.rows(); ++i) {
    for (Index c = 0; c < embedding.cols(); ++c)
      out << (c ? "," : "") << format_double(embedding(i, c));
    if (truth)
      for (Index r = 0; r < truth->rows(); ++r) out << ',' << format_double((*truth)(r, i));
    out << '\n';
  }
}

}  // namespace dppml::bench
