#include "dppml/datasets.hpp"

#include "dppml/error.hpp"
#include "dppml/random.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <string_view>

namespace dppml {

void PointSet::validate() const {
  if (coords.cols() == 0 || coords.rows() == 0)
    throw Error(ErrorCode::InvalidArgument, "point set is empty");
  if (!coords.allFinite()) throw Error(ErrorCode::InvalidArgument, "non-finite coordinate");
  if (labels && static_cast<Index>(labels->size()) != coords.cols())
    throw Error(ErrorCode::CountMismatch, "label count differs from point count");
  if (truth && truth->cols() != coords.cols())
    throw Error(ErrorCode::CountMismatch, "truth column count differs from point count");
}

PointSet PointSet::subset(const std::vector<Index>& indices) const {
  PointSet out;
  out.coords.resize(dim(), static_cast<Index>(indices.size()));
  for (std::size_t c = 0; c < indices.size(); ++c) {
    const Index i = indices[c];
    if (i < 0 || i >= size()) throw Error(ErrorCode::IndexOutOfRange, "subset index out of range");
    out.coords.col(static_cast<Index>(c)) = coords.col(i);
  }
  if (labels) {
    out.labels.emplace();
    out.labels->reserve(indices.size());
    for (Index i : indices) out.labels->push_back((*labels)[static_cast<std::size_t>(i)]);
  }
  if (truth) {
    out.truth = Eigen::MatrixXd(truth->rows(), static_cast<Index>(indices.size()));
    for (std::size_t c = 0; c < indices.size(); ++c)
      out.truth->col(static_cast<Index>(c)) = truth->col(indices[c]);
  }
  return out;
}

PointSet generate_swiss_roll(Index n, double noise, std::uint64_t seed,
                             const SwissRollParams& params) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "swiss roll needs n >= 1");
  if (!(noise >= 0.0)) throw Error(ErrorCode::InvalidArgument, "noise must be non-negative");
  Rng rng = make_rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  PointSet out;
  out.coords.resize(3, n);
  out.truth = Eigen::MatrixXd(2, n);
  for (Index i = 0; i < n; ++i) {
    const double t = params.t_min + (params.t_max - params.t_min) * uniform01(rng);
    const double h = params.height * uniform01(rng);
    out.coords(0, i) = t * std::cos(t);
    out.coords(1, i) = h;
    out.coords(2, i) = t * std::sin(t);
    (*out.truth)(0, i) = t;
    (*out.truth)(1, i) = h;
  }
  if (noise > 0.0) {
    for (Index i = 0; i < n; ++i)
      for (Index r = 0; r < 3; ++r) out.coords(r, i) += noise * gauss(rng);
  }
  return out;
}

double fish_bowl_max_height() { return 1.0 - 2.0 * kFishBowlPunctureFraction; }

PointSet generate_fish_bowl(Index n, std::uint64_t seed) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "fish bowl needs n >= 1");
  Rng rng = make_rng(seed);
  // Inverse stereographic projection from (0,0,1) sends planar radius r to height
  // z = (r^2 - 1) / (r^2 + 1); solve for the radius that reaches the puncture rim.
  const double z_max = fish_bowl_max_height();
  const double radius = std::sqrt((1.0 + z_max) / (1.0 - z_max));

  PointSet out;
  out.coords.resize(3, n);
  out.truth = Eigen::MatrixXd(2, n);
  for (Index i = 0; i < n; ++i) {
    const double r = radius * std::sqrt(uniform01(rng));
    const double angle = 2.0 * std::numbers::pi * uniform01(rng);
    const double u = r * std::cos(angle);
    const double v = r * std::sin(angle);
    const double r2 = u * u + v * v;
    const double denom = 1.0 + r2;
    out.coords(0, i) = 2.0 * u / denom;
    out.coords(1, i) = 2.0 * v / denom;
    out.coords(2, i) = (r2 - 1.0) / denom;
    (*out.truth)(0, i) = u;
    (*out.truth)(1, i) = v;
  }
  return out;
}

namespace {

constexpr std::uint32_t kIdxImageMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

std::vector<unsigned char> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<unsigned char>& bytes, std::size_t offset,
                        const std::filesystem::path& path) {
  if (bytes.size() < offset + 4)
    throw Error(ErrorCode::Truncated, "header truncated in " + path.string());
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

}  // namespace

PointSet read_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                  std::optional<Index> limit) {
  const auto image_bytes = slurp(images);
  const auto label_bytes = slurp(labels);

  const std::uint32_t image_magic = read_be32(image_bytes, 0, images);
  if (image_magic != kIdxImageMagic) {
    std::ostringstream msg;
    msg << "expected image magic 0x00000803 in " << images.string() << ", found 0x" << std::hex
        << image_magic;
    throw Error(ErrorCode::BadMagic, msg.str());
  }
  const std::uint32_t label_magic = read_be32(label_bytes, 0, labels);
  if (label_magic != kIdxLabelMagic) {
    std::ostringstream msg;
    msg << "expected label magic 0x00000801 in " << labels.string() << ", found 0x" << std::hex
        << label_magic;
    throw Error(ErrorCode::BadMagic, msg.str());
  }

  const std::size_t count = read_be32(image_bytes, 4, images);
  const std::size_t rows = read_be32(image_bytes, 8, images);
  const std::size_t cols = read_be32(image_bytes, 12, images);
  const std::size_t label_count = read_be32(label_bytes, 4, labels);
  if (count != label_count)
    throw Error(ErrorCode::CountMismatch, std::to_string(count) + " images but " +
                                              std::to_string(label_count) + " labels");
  const std::size_t pixels = rows * cols;
  if (image_bytes.size() < 16 + count * pixels)
    throw Error(ErrorCode::Truncated, "image payload truncated in " + images.string());
  if (label_bytes.size() < 8 + count)
    throw Error(ErrorCode::Truncated, "label payload truncated in " + labels.string());

  std::size_t n = count;
  if (limit) {
    if (*limit < 1) throw Error(ErrorCode::InvalidArgument, "limit must be >= 1");
    n = std::min(n, static_cast<std::size_t>(*limit));
  }

  PointSet out;
  out.coords.resize(static_cast<Index>(pixels), static_cast<Index>(n));
  out.labels.emplace(n);
  for (std::size_t i = 0; i < n; ++i) {
    const unsigned char* px = image_bytes.data() + 16 + i * pixels;
    for (std::size_t p = 0; p < pixels; ++p)
      out.coords(static_cast<Index>(p), static_cast<Index>(i)) = px[p] / 255.0;
    (*out.labels)[i] = label_bytes[8 + i];
  }
  return out;
}

namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    cells.push_back(line.substr(start, comma == std::string_view::npos ? comma : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
T parse_cell(std::string_view cell, std::size_t line_no) {
  cell = trim(cell);
  T value{};
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || ptr != cell.data() + cell.size() || cell.empty())
    throw Error(ErrorCode::MalformedCsv, "non-numeric cell '" + std::string(cell) + "' on line " +
                                             std::to_string(line_no));
  return value;
}

}  // namespace

PointSet read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());

  std::string line;
  std::size_t line_no = 0;
  std::optional<std::size_t> columns;
  bool has_label = false;
  std::vector<double> values;
  std::vector<int> labels;
  Index dim = 0;

  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = trim(line);
    if (view.empty() || view.front() == '#') continue;
    const auto cells = split_commas(view);
    if (!columns) {
      columns = cells.size();
      has_label = trim(cells.back()) == "label";
      dim = static_cast<Index>(cells.size()) - (has_label ? 1 : 0);
      if (dim < 1) throw Error(ErrorCode::MalformedCsv, "header declares no coordinates");
      continue;
    }
    if (cells.size() != *columns)
      throw Error(ErrorCode::MalformedCsv, "line " + std::to_string(line_no) + " has " +
                                               std::to_string(cells.size()) + " cells, expected " +
                                               std::to_string(*columns));
    for (Index c = 0; c < dim; ++c) values.push_back(parse_cell<double>(cells[c], line_no));
    if (has_label) labels.push_back(parse_cell<int>(cells.back(), line_no));
  }
  if (!columns) throw Error(ErrorCode::MalformedCsv, "empty csv " + path.string());
  const Index n = static_cast<Index>(values.size()) / dim;
  if (n == 0) throw Error(ErrorCode::MalformedCsv, "csv has a header but no rows");

  PointSet out;
  out.coords = Eigen::Map<const Eigen::MatrixXd>(values.data(), dim, n);
  if (has_label) out.labels = std::move(labels);
  out.validate();
  return out;
}

void write_csv(const PointSet& points, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  for (Index c = 0; c < points.dim(); ++c) out << (c ? "," : "") << 'x' << c;
  if (points.labels) out << ",label";
  out << '\n';
  std::array<char, 32> buf{};
  for (Index i = 0; i < points.size(); ++i) {
    for (Index c = 0; c < points.dim(); ++c) {
      // Shortest representation that parses back to the identical double.
      const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), points.coords(c, i));
      if (c) out << ',';
      out.write(buf.data(), res.ptr - buf.data());
    }
    if (points.labels) out << ',' << (*points.labels)[static_cast<std::size_t>(i)];
    out << '\n';
  }
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

}  // namespace dppml
