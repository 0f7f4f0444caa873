#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace ssmrecon {

using Vec3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;
using Face = std::array<int, 3>;

/// Triangle mesh in millimeters. Faces are counter-clockwise seen from
/// outside.
struct TriMesh {
    std::vector<Vec3> vertices;
    std::vector<Face> faces;

    [[nodiscard]] bool empty() const { return faces.empty(); }
    [[nodiscard]] std::size_t vertex_count() const { return vertices.size(); }
    [[nodiscard]] std::size_t face_count() const { return faces.size(); }
};

struct Box3 {
    Vec3 min = Vec3::Zero();
    Vec3 max = Vec3::Zero();

    [[nodiscard]] Vec3 extent() const { return max - min; }
    [[nodiscard]] double diagonal() const { return extent().norm(); }
};

/// Sagittal plane x = offset.
struct Plane {
    double offset = 0.0;
};

/// Throws DataError on out-of-range or repeated face indices.
void validate_indices(const TriMesh& mesh);

/// An edge that is not shared by exactly two faces.
struct EdgeDefect {
    int a = 0;
    int b = 0;
    int uses = 0;
};

/// Returns the first edge not shared by exactly two faces (with opposite
/// directions), or nothing when the mesh is closed and consistently oriented.
[[nodiscard]] std::optional<EdgeDefect> find_open_edge(const TriMesh& mesh);

/// Throws DataError naming the unmatched edge.
void require_closed(const TriMesh& mesh);

[[nodiscard]] Box3 bounding_box(std::span<const Vec3> points);
[[nodiscard]] Box3 bounding_box(const TriMesh& mesh);
[[nodiscard]] Vec3 centroid(std::span<const Vec3> points);

[[nodiscard]] double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c);

struct VolumeResult {
    double cm3 = 0.0;        ///< magnitude
    bool inward = false;     ///< raw signed sum was negative
};

/// Volume by the divergence theorem. Requires a closed, consistently
/// oriented mesh; open meshes throw DataError naming an unmatched edge.
[[nodiscard]] VolumeResult mesh_volume(const TriMesh& mesh);

/// Convenience: magnitude of mesh_volume in cm^3.
[[nodiscard]] double signed_volume(const TriMesh& mesh);

/// Raw signed sum in mm^3, no closedness check.
[[nodiscard]] double raw_signed_volume_mm3(const TriMesh& mesh);

/// Area-uniform samples on the surface, deterministic for a given seed.
[[nodiscard]] std::vector<Vec3> surface_samples(const TriMesh& mesh, std::size_t n,
                                                std::uint64_t seed);

/// Closest point on triangle (a, b, c) to p.
[[nodiscard]] Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b,
                                             const Vec3& c);

/// Exact point-to-surface distance by scanning every face.
[[nodiscard]] double nearest_surface_distance_brute(const Vec3& p, const TriMesh& mesh);

/// Exact point-to-surface distance (builds an acceleration tree per call;
/// hold a SurfaceIndex for repeated queries).
[[nodiscard]] double nearest_surface_distance(const Vec3& p, const TriMesh& mesh);

/// Builders used by tests, benchmarks and the synthetic generator.
[[nodiscard]] TriMesh make_box(const Vec3& min, const Vec3& max);
[[nodiscard]] TriMesh make_icosphere(int subdivisions, double radius = 1.0);

void translate(TriMesh& mesh, const Vec3& offset);
void scale(TriMesh& mesh, double factor);
void flip_orientation(TriMesh& mesh);

}  // namespace ssmrecon
