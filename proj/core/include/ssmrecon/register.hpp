#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "ssmrecon/mesh.hpp"

namespace ssmrecon {

/// Proper rigid motion x -> R x + t.
struct RigidTransform {
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Vec3 translation = Vec3::Zero();

    [[nodiscard]] Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
    [[nodiscard]] RigidTransform then(const RigidTransform& next) const;
};

void transform_points(const RigidTransform& transform, std::span<Vec3> points);
[[nodiscard]] TriMesh transformed(const TriMesh& mesh, const RigidTransform& transform);

/// Least-squares rotation + translation taking `source` onto `target`
/// (Kabsch, reflections excluded, no scaling). Throws NumericalError when the
/// point sets are collinear or coincident.
[[nodiscard]] RigidTransform rigid_align(std::span<const Vec3> source,
                                         std::span<const Vec3> target);

struct FitConfig {
    int iterations = 50;
    double smoothness = 1.0;  ///< weight of the Laplacian penalty
    double damping = 0.5;     ///< step fraction toward the per-iteration optimum
    double tolerance = 0.01;  ///< mm, mean vertex displacement that stops the loop
    int rigid_iterations = 30;

    void validate() const;
};

struct FitTrace {
    RigidTransform initial;
    /// Energy (sum of squared surface distances + smoothness * |L d|^2) before
    /// the first step and after every iteration.
    std::vector<double> energy;
    int iterations = 0;
};

/// Deforms `templ` onto the surface of `target`, keeping the template topology.
/// Rigid ICP initialisation, then Laplacian-regularised nearest-point fitting
/// of the total displacement field.
[[nodiscard]] TriMesh nonrigid_fit(const TriMesh& templ, const TriMesh& target,
                                   const FitConfig& cfg, FitTrace* trace = nullptr);

/// Rigidly aligns every member to the evolving mean shape until the mean moves
/// less than 1e-6 mm or `max_rounds` is reached. Outputs are centred at the
/// origin. Throws DataError on topology mismatch.
[[nodiscard]] std::vector<TriMesh> generalized_procrustes(std::span<const TriMesh> population,
                                                          int max_rounds = 20);

}  // namespace ssmrecon
