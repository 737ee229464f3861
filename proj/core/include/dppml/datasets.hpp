#pragma once

#include "dppml/point_set.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>

namespace dppml {

struct SwissRollParams {
  double t_min = 1.5 * 3.14159265358979323846;
  double t_max = 4.5 * 3.14159265358979323846;
  double height = 21.0;
};

// Points (t cos t, h, t sin t) with t ~ U[t_min, t_max], h ~ U[0, height], plus isotropic
// Gaussian noise of standard deviation `noise`. truth row 0 holds t, row 1 holds h.
PointSet generate_swiss_roll(Index n, double noise, std::uint64_t seed,
                             const SwissRollParams& params = {});

// Fraction of the sphere height (measured from the north pole) left empty by the puncture.
inline constexpr double kFishBowlPunctureFraction = 0.05;

// Punctured unit sphere. Points are uniform in a planar disk, lifted by inverse stereographic
// projection from the north pole; the disk radius is chosen so that no point lands in the
// top `kFishBowlPunctureFraction` of the sphere height. The lift concentrates points near
// the rim of the opening (dense top, sparse bottom). truth holds the planar pre-images.
PointSet generate_fish_bowl(Index n, std::uint64_t seed);

// Height z above which the fish bowl has no points.
double fish_bowl_max_height();

// MNIST-style IDX reader. Images are flattened row-major and scaled to [0, 1].
PointSet read_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                  std::optional<Index> limit = std::nullopt);

// CSV with header `x0,...,x{d-1}[,label]`, one point per row. Lines starting with '#'
// are metadata and are skipped on read.
PointSet read_csv(const std::filesystem::path& path);
void write_csv(const PointSet& points, const std::filesystem::path& path);

}  // namespace dppml
