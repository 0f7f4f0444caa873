#pragma once

#include <cstdint>
#include <span>

#include "ssmrecon/mesh.hpp"
#include "ssmrecon/slicer.hpp"

namespace ssmrecon {

struct MaskMetrics {
    double accuracy = 0.0;
    double dice = 0.0;
    double iou = 0.0;
    double hausdorff = 0.0;  ///< mm
};

/// Pixel-wise overlap scores plus boundary Hausdorff distance. Two empty
/// masks score 1 with zero distance; empty against non-empty scores 0 with
/// the raster diagonal as distance. Throws DataError on size mismatch.
[[nodiscard]] MaskMetrics mask_metrics(const Mask& pred, const Mask& truth, double spacing);

/// Symmetric Hausdorff distance between the boundary pixels of two masks, mm.
[[nodiscard]] double mask_hausdorff(const Mask& a, const Mask& b, double spacing);

struct MeshMetrics {
    double chamfer = 0.0;
    double msd = 0.0;
};

inline constexpr std::size_t kDefaultSurfaceSamples = 10000;

/// Mean distance from `n` samples of `from` to the surface of `to`.
[[nodiscard]] double directed_mean_distance(const TriMesh& from, const TriMesh& to,
                                            std::size_t n, std::uint64_t seed);

/// Sum of the two directed mean surface distances.
[[nodiscard]] double chamfer(const TriMesh& a, const TriMesh& b,
                             std::size_t n = kDefaultSurfaceSamples, std::uint64_t seed = 0);
/// Average of the two directed mean surface distances.
[[nodiscard]] double msd(const TriMesh& a, const TriMesh& b,
                         std::size_t n = kDefaultSurfaceSamples, std::uint64_t seed = 0);
[[nodiscard]] MeshMetrics mesh_metrics(const TriMesh& a, const TriMesh& b,
                                       std::size_t n = kDefaultSurfaceSamples,
                                       std::uint64_t seed = 0);

[[nodiscard]] double rmse(std::span<const double> pred, std::span<const double> truth);

}  // namespace ssmrecon
