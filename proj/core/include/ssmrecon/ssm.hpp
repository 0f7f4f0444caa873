#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "ssmrecon/mesh.hpp"

namespace ssmrecon {

/// PCA shape space over a fixed reference topology. Vertex coordinates are
/// flattened as (x0, y0, z0, x1, ...). Immutable after build.
struct ShapeSpace {
    int vertex_count = 0;      ///< M
    int population_size = 0;   ///< N
    Eigen::VectorXd mean;      ///< length 3M
    Eigen::MatrixXd components;  ///< 3M x K, orthonormal columns
    Eigen::VectorXd score_scale; ///< length K, population std of training scores
    std::vector<Face> faces;
    /// Shared slicing window of the training population, when known.
    std::optional<Box3> window;

    [[nodiscard]] int component_count() const { return static_cast<int>(components.cols()); }
    [[nodiscard]] TriMesh mean_mesh() const;
};

/// Standardised shape parameters (alpha).
using ShapeParams = Eigen::VectorXd;

[[nodiscard]] Eigen::VectorXd flatten(const TriMesh& mesh);
[[nodiscard]] TriMesh unflatten(const Eigen::VectorXd& coords, const std::vector<Face>& faces);

/// Thin-SVD PCA of the mean-centred population. Throws DataError on topology
/// mismatch or K > N - 1, NumericalError when a retained component has zero
/// variance ("degenerate population").
[[nodiscard]] ShapeSpace build_ssm(std::span<const TriMesh> population, int components);

/// K used when the caller does not pin one: 50 if the population allows.
[[nodiscard]] int default_component_count(int population_size);

[[nodiscard]] ShapeParams project(const ShapeSpace& space, const TriMesh& mesh);
[[nodiscard]] TriMesh reconstruct(const ShapeSpace& space, const ShapeParams& params);

/// Manifest `<stem>.ssm.json` plus little-endian float64 sidecar
/// `<stem>.ssm.bin` holding mean, components (column-major) and score scale.
/// `path` may name either file or the common stem.
void save_ssm(const ShapeSpace& space, const std::filesystem::path& path);
[[nodiscard]] ShapeSpace load_ssm(const std::filesystem::path& path);

}  // namespace ssmrecon
