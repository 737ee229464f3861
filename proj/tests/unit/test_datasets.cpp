#include "doctest.h"
#include "oracles.hpp"

#include "dppml/datasets.hpp"
#include "dppml/error.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>

using namespace dppml;
namespace fs = std::filesystem;

namespace {

fs::path temp_path(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "dppml_unit";
  fs::create_directories(dir);
  return dir / name;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

void put_be32(std::string& s, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) s.push_back(static_cast<char>((v >> shift) & 0xff));
}

// Tiny IDX pair: `count` images of rows x cols with pixel value (i + p) % 256.
void write_idx(const fs::path& images, const fs::path& labels, std::uint32_t count,
               std::uint32_t label_count, std::uint32_t rows = 2, std::uint32_t cols = 3,
               std::size_t drop_bytes = 0) {
  std::string img;
  put_be32(img, 0x00000803);
  put_be32(img, count);
  put_be32(img, rows);
  put_be32(img, cols);
  for (std::uint32_t i = 0; i < count; ++i)
    for (std::uint32_t p = 0; p < rows * cols; ++p) img.push_back(static_cast<char>((i + p) % 256));
  img.resize(img.size() - drop_bytes);
  std::string lab;
  put_be32(lab, 0x00000801);
  put_be32(lab, label_count);
  for (std::uint32_t i = 0; i < label_count; ++i) lab.push_back(static_cast<char>(i % 10));
  write_file(images, img);
  write_file(labels, lab);
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected dppml::Error");
  return ErrorCode::InvalidArgument;
}

fs::path mnist_dir() {
  if (const char* env = std::getenv("DPPML_MNIST_DIR")) return env;
  return DPPML_TEST_MNIST_DIR;
}

}  // namespace

TEST_CASE("swiss roll radius equals t within the documented range") {
  const PointSet p = generate_swiss_roll(1000, 0.0, 11);
  REQUIRE(p.size() == 1000);
  REQUIRE(p.dim() == 3);
  for (Index i = 0; i < p.size(); ++i) {
    const double radius = std::hypot(p.coords(0, i), p.coords(2, i));
    CHECK(radius >= 1.5 * std::numbers::pi - 1e-12);
    CHECK(radius <= 4.5 * std::numbers::pi + 1e-12);
    CHECK(radius == doctest::Approx((*p.truth)(0, i)).epsilon(1e-12));
    CHECK(p.coords(1, i) >= 0.0);
    CHECK(p.coords(1, i) <= 21.0);
  }
}

TEST_CASE("swiss roll with one point lies on the spiral surface") {
  const PointSet p = generate_swiss_roll(1, 0.0, 3);
  REQUIRE(p.size() == 1);
  const double t = (*p.truth)(0, 0);
  CHECK(p.coords(0, 0) == doctest::Approx(t * std::cos(t)));
  CHECK(p.coords(2, 0) == doctest::Approx(t * std::sin(t)));
}

TEST_CASE("swiss roll truth is recovered by inverting the construction") {
  const PointSet p = generate_swiss_roll(1000, 0.0, 5);
  double worst = 0.0;
  for (Index i = 0; i < p.size(); ++i) {
    const double x = p.coords(0, i), z = p.coords(2, i);
    const double radius = std::hypot(x, z);
    // atan2 gives the angle mod 2pi; pick the branch nearest the radius (which equals t).
    double angle = std::atan2(z, x);
    const double turns = std::round((radius - angle) / (2.0 * std::numbers::pi));
    angle += 2.0 * std::numbers::pi * turns;
    worst = std::max(worst, std::abs(angle - (*p.truth)(0, i)));
    worst = std::max(worst, std::abs(p.coords(1, i) - (*p.truth)(1, i)));
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("generators are bitwise deterministic per seed") {
  const PointSet a = generate_swiss_roll(200, 0.3, 42);
  const PointSet b = generate_swiss_roll(200, 0.3, 42);
  const PointSet c = generate_swiss_roll(200, 0.3, 43);
  CHECK(a.coords == b.coords);
  CHECK(*a.truth == *b.truth);
  CHECK(a.coords != c.coords);
  CHECK(generate_fish_bowl(300, 9).coords == generate_fish_bowl(300, 9).coords);
}

TEST_CASE("swiss roll noise is isotropic with the requested scale") {
  const PointSet clean = generate_swiss_roll(20000, 0.0, 8);
  const PointSet noisy = generate_swiss_roll(20000, 0.5, 8);
  // Same seed draws the same (t, h) before the noise.
  CHECK(*clean.truth == *noisy.truth);
  const Eigen::MatrixXd diff = noisy.coords - clean.coords;
  for (Index r = 0; r < 3; ++r) {
    const double sd = std::sqrt(diff.row(r).squaredNorm() / static_cast<double>(diff.cols()));
    CHECK(sd == doctest::Approx(0.5).epsilon(0.03));
  }
}

TEST_CASE("fish bowl points lie on the unit sphere outside the puncture") {
  const PointSet p = generate_fish_bowl(1000, 4);
  for (Index i = 0; i < p.size(); ++i) {
    CHECK(std::abs(p.coords.col(i).norm() - 1.0) < 1e-12);
    CHECK(p.coords(2, i) <= fish_bowl_max_height() + 1e-12);
  }
  CHECK(fish_bowl_max_height() == doctest::Approx(0.9));
}

TEST_CASE("fish bowl truth is the planar pre-image") {
  const PointSet p = generate_fish_bowl(100, 4);
  for (Index i = 0; i < p.size(); ++i) {
    // Stereographic projection from the north pole.
    const double u = p.coords(0, i) / (1.0 - p.coords(2, i));
    const double v = p.coords(1, i) / (1.0 - p.coords(2, i));
    CHECK(u == doctest::Approx((*p.truth)(0, i)).epsilon(1e-10));
    CHECK(v == doctest::Approx((*p.truth)(1, i)).epsilon(1e-10));
  }
}

TEST_CASE("fish bowl is denser at the top than at the bottom") {
  const PointSet p = generate_fish_bowl(10000, 21);
  Index top = 0, bottom = 0;
  for (Index i = 0; i < p.size(); ++i) {
    top += p.coords(2, i) >= 0.8;
    bottom += p.coords(2, i) <= -0.8;
  }
  CHECK(top > bottom);
  // Planar uniform density maps to sphere density proportional to (1 + r^2)^2, which grows
  // monotonically with height; compare adjacent height bands as well.
  std::vector<Index> bands(9, 0);
  for (Index i = 0; i < p.size(); ++i) {
    const int b = static_cast<int>(std::floor((p.coords(2, i) + 0.9) / 0.2));
    if (b >= 0 && b < 9) ++bands[static_cast<std::size_t>(b)];
  }
  for (std::size_t b = 1; b < bands.size(); ++b) CHECK(bands[b] > bands[b - 1]);
}

TEST_CASE("generators reject n < 1") {
  CHECK(code_of([] { generate_swiss_roll(0, 0.0, 1); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { generate_fish_bowl(0, 1); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { generate_swiss_roll(5, -1.0, 1); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("csv round trip is exact") {
  PointSet p = generate_swiss_roll(50, 0.1, 2);
  p.truth.reset();
  std::vector<int> labels;
  for (int i = 0; i < 50; ++i) labels.push_back(i % 3 - 1);
  p.labels = labels;
  p.coords(0, 0) = 1e-300;
  p.coords(1, 0) = -0.1;
  p.coords(2, 0) = 1.0 / 3.0;
  const fs::path path = temp_path("roundtrip.csv");
  write_csv(p, path);
  const PointSet q = read_csv(path);
  CHECK(q.coords == p.coords);
  REQUIRE(q.labels);
  CHECK(*q.labels == labels);
}

TEST_CASE("csv without labels, comments and shape") {
  const fs::path path = temp_path("small.csv");
  write_file(path, "# comment\nx0,x1\n1,2\n3,4\n5.5,-6e-3\n");
  const PointSet p = read_csv(path);
  CHECK(p.size() == 3);
  CHECK(p.dim() == 2);
  CHECK_FALSE(p.labels);
  CHECK(p.coords(1, 2) == -6e-3);
}

TEST_CASE("csv errors") {
  const fs::path empty = temp_path("empty.csv");
  write_file(empty, "");
  CHECK(code_of([&] { read_csv(empty); }) == ErrorCode::MalformedCsv);

  const fs::path ragged = temp_path("ragged.csv");
  write_file(ragged, "x0,x1\n1,2\n3\n");
  CHECK(code_of([&] { read_csv(ragged); }) == ErrorCode::MalformedCsv);

  const fs::path text = temp_path("text.csv");
  write_file(text, "x0,x1\n1,abc\n");
  CHECK(code_of([&] { read_csv(text); }) == ErrorCode::MalformedCsv);

  CHECK(code_of([] { read_csv(temp_path("missing-file.csv")); }) == ErrorCode::IoFailure);
}

TEST_CASE("idx reader on synthetic files") {
  const fs::path img = temp_path("a-images"), lab = temp_path("a-labels");
  write_idx(img, lab, 5, 5);
  const PointSet p = read_idx(img, lab);
  CHECK(p.size() == 5);
  CHECK(p.dim() == 6);
  CHECK(p.coords(0, 0) == 0.0);
  CHECK(p.coords(5, 4) == doctest::Approx(9.0 / 255.0));
  REQUIRE(p.labels);
  CHECK((*p.labels)[3] == 3);

  const PointSet q = read_idx(img, lab, 2);
  CHECK(q.size() == 2);
}

TEST_CASE("idx errors are distinct") {
  const fs::path img = temp_path("b-images"), lab = temp_path("b-labels");
  write_idx(img, lab, 4, 4);
  CHECK(code_of([&] { read_idx(lab, lab); }) == ErrorCode::BadMagic);
  CHECK(code_of([&] { read_idx(img, img); }) == ErrorCode::BadMagic);

  write_idx(img, lab, 4, 3);
  CHECK(code_of([&] { read_idx(img, lab); }) == ErrorCode::CountMismatch);

  write_idx(img, lab, 4, 4, 2, 3, 5);
  CHECK(code_of([&] { read_idx(img, lab); }) == ErrorCode::Truncated);

  write_file(img, "\x00\x00");
  CHECK(code_of([&] { read_idx(img, lab); }) == ErrorCode::Truncated);
}

TEST_CASE("idx reader on the MNIST test split") {
  const fs::path dir = mnist_dir();
  const fs::path img = dir / "t10k-images-idx3-ubyte", lab = dir / "t10k-labels-idx1-ubyte";
  if (!fs::exists(img) || !fs::exists(lab)) {
    MESSAGE("MNIST files not found in " << dir.string() << "; skipped");
    return;
  }
  const PointSet p = read_idx(img, lab);
  CHECK(p.size() == 10000);
  CHECK(p.dim() == 784);
  CHECK(p.coords.minCoeff() >= 0.0);
  CHECK(p.coords.maxCoeff() <= 1.0);
  const PointSet q = read_idx(dir / "train-images-idx3-ubyte", dir / "train-labels-idx1-ubyte", 100);
  CHECK(q.size() == 100);
  CHECK(code_of([&] { read_idx(lab, lab); }) == ErrorCode::BadMagic);
}

TEST_CASE("point set validation and subsets") {
  PointSet p = oracle::point_set(oracle::random_points(2, 5, 1));
  p.labels = std::vector<int>{0, 1, 2, 3, 4};
  p.truth = Eigen::MatrixXd::Random(1, 5);
  CHECK_NOTHROW(p.validate());
  const PointSet s = p.subset({4, 1});
  CHECK(s.size() == 2);
  CHECK(s.coords.col(0) == p.coords.col(4));
  CHECK((*s.labels)[1] == 1);
  CHECK((*s.truth)(0, 0) == (*p.truth)(0, 4));

  PointSet bad = p;
  bad.coords(0, 0) = std::nan("");
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = p;
  bad.labels->pop_back();
  CHECK_THROWS_AS(bad.validate(), Error);
  CHECK_THROWS_AS(p.subset({7}), Error);
}
