#pragma once

#include <vector>

#include <Eigen/Geometry>

#include "ssmrecon/mesh.hpp"

namespace ssmrecon {

struct SurfaceHit {
    Vec3 point = Vec3::Zero();
    double distance = 0.0;
    int face = -1;
};

/// Bounding-volume hierarchy over the faces of a mesh for exact
/// closest-point queries. Keeps its own copy of the geometry; immutable after
/// construction and safe to query from many threads.
class SurfaceIndex {
public:
    explicit SurfaceIndex(const TriMesh& mesh);

    [[nodiscard]] SurfaceHit closest(const Vec3& p) const;
    [[nodiscard]] double distance(const Vec3& p) const { return closest(p).distance; }

    [[nodiscard]] const TriMesh& mesh() const { return mesh_; }

private:
    struct Node {
        Eigen::AlignedBox3d box;
        int left = -1;   // child index, or -1 for a leaf
        int right = -1;
        int begin = 0;   // leaf range into order_
        int end = 0;
    };

    int build(int begin, int end);

    TriMesh mesh_;
    std::vector<int> order_;
    std::vector<Eigen::AlignedBox3d> face_boxes_;
    std::vector<Node> nodes_;
};

}  // namespace ssmrecon
