#include "ssmrecon/surface_index.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ssmrecon/error.hpp"

namespace ssmrecon {

namespace {
constexpr int kLeafSize = 4;
}

SurfaceIndex::SurfaceIndex(const TriMesh& mesh) : mesh_(mesh) {
    if (mesh_.empty()) throw DataError("cannot index an empty mesh");
    validate_indices(mesh_);
    const int n = static_cast<int>(mesh_.faces.size());
    face_boxes_.resize(n);
    for (int f = 0; f < n; ++f) {
        Eigen::AlignedBox3d box;
        for (int k = 0; k < 3; ++k) box.extend(mesh_.vertices[mesh_.faces[f][k]]);
        face_boxes_[f] = box;
    }
    order_.resize(n);
    std::iota(order_.begin(), order_.end(), 0);
    nodes_.reserve(2 * n / kLeafSize + 2);
    build(0, n);
}

int SurfaceIndex::build(int begin, int end) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    Eigen::AlignedBox3d box;
    Eigen::AlignedBox3d centers;
    for (int i = begin; i < end; ++i) {
        box.extend(face_boxes_[order_[i]]);
        centers.extend(face_boxes_[order_[i]].center());
    }
    nodes_[id].box = box;
    if (end - begin <= kLeafSize) {
        nodes_[id].begin = begin;
        nodes_[id].end = end;
        return id;
    }
    int axis = 0;
    centers.sizes().maxCoeff(&axis);
    const int mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](int a, int b) {
                         const double ca = face_boxes_[a].center()[axis];
                         const double cb = face_boxes_[b].center()[axis];
                         return ca < cb || (ca == cb && a < b);
                     });
    const int left = build(begin, mid);
    const int right = build(mid, end);
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
}

SurfaceHit SurfaceIndex::closest(const Vec3& p) const {
    SurfaceHit best;
    double best_sq = std::numeric_limits<double>::infinity();
    // Explicit stack, nearer child visited first.
    int stack[128];
    int top = 0;
    stack[top++] = 0;
    while (top > 0) {
        const Node& node = nodes_[stack[--top]];
        if (node.box.squaredExteriorDistance(p) >= best_sq) continue;
        if (node.left < 0) {
            for (int i = node.begin; i < node.end; ++i) {
                const int f = order_[i];
                const Face& face = mesh_.faces[f];
                const Vec3 q = closest_point_on_triangle(p, mesh_.vertices[face[0]],
                                                         mesh_.vertices[face[1]],
                                                         mesh_.vertices[face[2]]);
                const double d = (q - p).squaredNorm();
                if (d < best_sq || (d == best_sq && f < best.face)) {
                    best_sq = d;
                    best.point = q;
                    best.face = f;
                }
            }
            continue;
        }
        const double dl = nodes_[node.left].box.squaredExteriorDistance(p);
        const double dr = nodes_[node.right].box.squaredExteriorDistance(p);
        if (dl <= dr) {
            stack[top++] = node.right;
            stack[top++] = node.left;
        } else {
            stack[top++] = node.left;
            stack[top++] = node.right;
        }
    }
    best.distance = std::sqrt(best_sq);
    return best;
}

}  // namespace ssmrecon
