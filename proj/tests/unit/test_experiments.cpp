#include "doctest.h"

#include "dppml/error.hpp"
#include "dppml/experiments.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace dppml;
using namespace dppml::bench;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "dppml_unit";
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig small_recon() {
  ExperimentConfig c;
  c.dataset.kind = "swiss-roll";
  c.dataset.n = 200;
  c.dataset.scale = 0.115;
  c.methods = {parse_method("uniform"), parse_method("kmeans++"), parse_method("efficient-dpp")};
  c.k_values = {10, 20};
  c.repetitions = 3;
  c.m = 10;
  c.seed = 42;
  c.timing = false;
  return c;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(DPPML_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("method names round-trip") {
  for (const char* name : {"uniform", "kmeans-uniform", "kmeans++-seed", "kmeans++", "efficient-dpp",
                           "efficient-dpp+bhattacharyya", "uniform+bhattacharyya"})
    CHECK(to_string(parse_method(name)) == name);
  CHECK_THROWS_AS(parse_method("dpp"), Error);
}

TEST_CASE("config parsing") {
  const auto j = nlohmann::json::parse(R"({
    "dataset": {"kind": "fish-bowl", "n": 500, "scale": 1.2},
    "samplers": ["uniform", "efficient-dpp+bhattacharyya"],
    "k": [10, 20], "repetitions": 4, "sigma": 0.5, "m": 12, "update": "sine", "tau": 0.3,
    "graph_knn": 7, "covariance": "diagonal", "seed": 9, "timing": false, "notes": ["a"]
  })");
  const ExperimentConfig c = config_from_json(j);
  CHECK(c.dataset.kind == "fish-bowl");
  CHECK(c.dataset.n == 500);
  CHECK(c.dataset.scale == 1.2);
  REQUIRE(c.methods.size() == 2);
  CHECK(c.methods[1].metric == GraphMetric::Bhattacharyya);
  CHECK(c.k_values == std::vector<Index>{10, 20});
  CHECK(c.graph_knn == std::vector<Index>{7});
  CHECK(c.tau == 0.3);
  CHECK(c.covariance == CovarianceKind::Diagonal);
  CHECK(c.validation_errors().empty());

  const ExperimentConfig back = config_from_json(config_to_json(c));
  CHECK(config_to_json(back) == config_to_json(c));

  auto code = [](const char* text) {
    try {
      config_from_json(nlohmann::json::parse(text));
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::InvalidArgument;
  };
  CHECK(code(R"({"sampler": "uniform"})") == ErrorCode::InvalidConfig);
  CHECK(code(R"({"dataset": {"kind": "swiss-roll", "size": 3}})") == ErrorCode::InvalidConfig);
  CHECK(code(R"({"k": "ten"})") == ErrorCode::InvalidConfig);
  CHECK(code(R"([1, 2])") == ErrorCode::InvalidConfig);
}

TEST_CASE("config validation lists every problem") {
  ExperimentConfig c = small_recon();
  c.k_values = {0, 500};
  c.sigma = -1.0;
  c.repetitions = 0;
  c.update = "cosine";
  const auto errors = c.validation_errors();
  CHECK(errors.size() == 5);
  c = small_recon();
  c.dataset.kind = "idx";
  c.dataset.path = "/nonexistent/images";
  CHECK(c.validation_errors().size() == 2);
  c = small_recon();
  CHECK(c.validation_errors(true).size() == 1);
}

TEST_CASE("reconstruction bench is byte-reproducible with timing off") {
  ExperimentConfig c = small_recon();
  c.threads = 1;
  const ResultTable a = bench_reconstruction(c);
  c.threads = 2;
  const ResultTable b = bench_reconstruction(c);
  write_table(a, scratch("recon_a.csv"));
  write_table(b, scratch("recon_b.csv"));
  CHECK(slurp(scratch("recon_a.csv")) == slurp(scratch("recon_b.csv")));
  REQUIRE(a.rows.size() == 6);
  for (const auto& r : a.rows) {
    CHECK(r.runs == 3);
    CHECK(r.runtime_ms == 0.0);
    CHECK(r.mean >= 0.0);
  }
  c.seed = 43;
  write_table(bench_reconstruction(c), scratch("recon_c.csv"));
  CHECK(slurp(scratch("recon_a.csv")) != slurp(scratch("recon_c.csv")));
}

TEST_CASE("result table round trip") {
  ExperimentConfig c = small_recon();
  c.repetitions = 2;
  const ResultTable t = bench_reconstruction(c);
  write_table(t, scratch("roundtrip.csv"));
  const ResultTable r = read_table(scratch("roundtrip.csv"));
  CHECK(r.method_column == t.method_column);
  CHECK(r.key_column == t.key_column);
  CHECK(r.value_column == t.value_column);
  CHECK(r.metadata == t.metadata);
  REQUIRE(r.rows.size() == t.rows.size());
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    CHECK(r.rows[i].method == t.rows[i].method);
    CHECK(r.rows[i].key == t.rows[i].key);
    CHECK(r.rows[i].mean == t.rows[i].mean);
    CHECK(r.rows[i].stddev == t.rows[i].stddev);
    CHECK(r.rows[i].seed == t.rows[i].seed);
  }
  CHECK(r.find("kmeans++", 20) != nullptr);
  CHECK(r.find("kmeans++", 30) == nullptr);
}

TEST_CASE("robustness bench: kNN clamps to k - 1 and scores are in [0, 1]") {
  ExperimentConfig c;
  c.dataset.n = 300;
  c.methods = {parse_method("efficient-dpp")};
  c.k_values = {20};
  c.repetitions = 1;
  c.sigma = 3.0;
  c.m = 10;
  c.graph_knn = {5, 19, 50};
  c.timing = false;
  const ResultTable t = bench_robustness(c);
  CHECK(t.key_column == "knn");
  CHECK(t.rows.size() == 6);
  for (const auto& r : t.rows) {
    CHECK(r.mean >= 0.0);
    CHECK(r.mean <= 1.0);
  }
  CHECK(t.find("euclidean", 19) != nullptr);
}

TEST_CASE("classification bench on separated blobs") {
  ExperimentConfig c;
  c.dataset.kind = "two-blobs";
  c.dataset.n = 300;
  c.dataset.test_n = 100;
  c.dataset.dim = 3;
  c.dataset.separation = 12.0;
  c.methods = {parse_method("uniform"), parse_method("efficient-dpp"),
               parse_method("efficient-dpp+bhattacharyya")};
  c.k_values = {40};
  c.repetitions = 2;
  c.sigma = 2.0;
  c.m = 15;
  // Enough neighbors to link the two blobs.
  c.graph_knn = {25};
  c.covariance = CovarianceKind::Diagonal;
  c.timing = false;
  const ResultTable t = bench_classification(c);
  CHECK(t.value_column == "accuracy");
  REQUIRE(t.rows.size() == 3);
  for (const auto& r : t.rows) CHECK(r.mean >= 0.99);

  // Every training point as a landmark.
  c.k_values = {300};
  c.methods = {parse_method("uniform")};
  c.graph_knn = {160};
  c.repetitions = 1;
  CHECK(bench_classification(c).rows.at(0).mean >= 0.99);

  c.dataset.kind = "swiss-roll";
  CHECK_THROWS_AS(bench_classification(c), Error);
}

TEST_CASE("nearest rows") {
  Eigen::MatrixXd train(3, 2), query(2, 2);
  train << 0, 0, 1, 1, 1, 1;
  query << 0.9, 1.2, 0.1, -0.1;
  CHECK(nearest_rows(train, query) == std::vector<Index>{1, 0});
}

TEST_CASE("plot data") {
  ResultTable t;
  CHECK_THROWS_AS(emit_plotdata(t, "bars", scratch("empty")), Error);
  t.rows.push_back({"d", "uniform", 10, 2.0, 0.5, 0.0, 1, 3, "", {}});
  t.rows.push_back({"d", "uniform", 20, 1.0, 0.25, 0.0, 1, 3, "", {}});
  t.rows.push_back({"d", "efficient-dpp+bhattacharyya", 10, 0.5, 0.1, 0.0, 1, 3, "", {}});
  CHECK_THROWS_AS(emit_plotdata(t, "pie", scratch("pie")), Error);

  const auto series = emit_plotdata(t, "error-vs-k", scratch("curve"));
  REQUIRE(series.size() == 2);
  bool found = false;
  for (const auto& p : series) {
    CHECK(fs::exists(p));
    found |= p.filename().string() == "curve_efficient-dpppbhattacharyya.csv";
  }
  CHECK(found);

  const auto bars = emit_plotdata(t, "bars", scratch("bars"));
  REQUIRE(bars.size() == 1);
  const std::string text = slurp(bars[0]);
  CHECK(text.find("sampler,k,mean,low,high") != std::string::npos);
  CHECK(text.find("uniform,10,2,1.5,2.5") != std::string::npos);
}

TEST_CASE("embedding scatter columns") {
  Eigen::MatrixXd emb(2, 2);
  emb << 1, 2, 3, 4;
  Eigen::MatrixXd truth(2, 2);
  truth << 5, 6, 7, 8;
  write_embedding_scatter(emb, truth, scratch("scatter.csv"), {"x"});
  const std::string text = slurp(scratch("scatter.csv"));
  CHECK(text.find("# x\n") == 0);
  CHECK(text.find("phi1,phi2,t,h\n1,2,5,7\n3,4,6,8\n") != std::string::npos);
}

TEST_CASE("command line exit codes") {
  const fs::path good = scratch("cli_good.json"), bad = scratch("cli_bad.json");
  std::ofstream(good) << R"({"dataset": {"n": 100}, "samplers": "efficient-dpp", "k": 10,
                            "m": 10, "repetitions": 1, "timing": false})";
  std::ofstream(bad) << R"({"dataset": {"n": 100}, "k": 500})";
  const std::string out = scratch("cli_out.csv").string();
  CHECK(run_cli("--version") == 0);
  CHECK(run_cli("generate -c " + good.string() + " -o " + out) == 0);
  CHECK(fs::exists(out));
  CHECK(run_cli("sample -c " + good.string() + " -o " + out) == 0);
  CHECK(run_cli("bench-recon -c " + good.string() + " -o " + out) == 0);
  CHECK(run_cli("plotdata -t " + out + " -k bars -o " + scratch("cli_plot").string()) == 0);
  CHECK(run_cli("bench-recon -c " + bad.string() + " -o " + out) == 2);
  CHECK(run_cli("bench-recon -c " + good.string()) == 2);
  CHECK(run_cli("plotdata -t " + out + " -k pie -o " + scratch("cli_plot").string()) == 1);
  CHECK(run_cli("frobnicate") != 0);
}
