#include "ssmrecon/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <unordered_map>

#include "ssmrecon/error.hpp"
#include "ssmrecon/surface_index.hpp"

namespace ssmrecon {

namespace {

constexpr double kMm3PerCm3 = 1000.0;

std::uint64_t edge_key(int a, int b) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
           static_cast<std::uint32_t>(b);
}

}  // namespace

void validate_indices(const TriMesh& mesh) {
    const auto n = static_cast<long long>(mesh.vertices.size());
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
        const Face& face = mesh.faces[f];
        for (int idx : face) {
            if (idx < 0 || idx >= n) {
                std::ostringstream msg;
                msg << "face " << f << " references vertex " << idx << " but mesh has " << n
                    << " vertices";
                throw DataError(msg.str());
            }
        }
        if (face[0] == face[1] || face[1] == face[2] || face[0] == face[2]) {
            std::ostringstream msg;
            msg << "face " << f << " is degenerate (repeated vertex index)";
            throw DataError(msg.str());
        }
    }
}

std::optional<EdgeDefect> find_open_edge(const TriMesh& mesh) {
    std::unordered_map<std::uint64_t, int> directed;
    directed.reserve(mesh.faces.size() * 3);
    for (const Face& f : mesh.faces) {
        for (int k = 0; k < 3; ++k) ++directed[edge_key(f[k], f[(k + 1) % 3])];
    }
    // Scan in face order so the reported edge is deterministic.
    for (const Face& f : mesh.faces) {
        for (int k = 0; k < 3; ++k) {
            const int a = f[k];
            const int b = f[(k + 1) % 3];
            const int fwd = directed[edge_key(a, b)];
            const auto rev_it = directed.find(edge_key(b, a));
            const int rev = rev_it == directed.end() ? 0 : rev_it->second;
            if (fwd != 1 || rev != 1) return EdgeDefect{a, b, fwd + rev};
        }
    }
    return std::nullopt;
}

void require_closed(const TriMesh& mesh) {
    if (auto defect = find_open_edge(mesh)) {
        std::ostringstream msg;
        msg << "mesh is not closed: edge (" << defect->a << ", " << defect->b << ") is used by "
            << defect->uses << " face(s) instead of 2 with opposite orientation";
        throw DataError(msg.str());
    }
}

Box3 bounding_box(std::span<const Vec3> points) {
    Box3 box;
    if (points.empty()) return box;
    box.min = box.max = points.front();
    for (const Vec3& p : points) {
        box.min = box.min.cwiseMin(p);
        box.max = box.max.cwiseMax(p);
    }
    return box;
}

Box3 bounding_box(const TriMesh& mesh) { return bounding_box(std::span<const Vec3>(mesh.vertices)); }

Vec3 centroid(std::span<const Vec3> points) {
    Vec3 sum = Vec3::Zero();
    for (const Vec3& p : points) sum += p;
    return points.empty() ? sum : Vec3(sum / static_cast<double>(points.size()));
}

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
    return 0.5 * (b - a).cross(c - a).norm();
}

double raw_signed_volume_mm3(const TriMesh& mesh) {
    double sum = 0.0;
    for (const Face& f : mesh.faces) {
        const Vec3& a = mesh.vertices[f[0]];
        const Vec3& b = mesh.vertices[f[1]];
        const Vec3& c = mesh.vertices[f[2]];
        sum += a.dot(b.cross(c));
    }
    return sum / 6.0;
}

VolumeResult mesh_volume(const TriMesh& mesh) {
    validate_indices(mesh);
    require_closed(mesh);
    const double mm3 = raw_signed_volume_mm3(mesh);
    return VolumeResult{std::abs(mm3) / kMm3PerCm3, mm3 < 0.0};
}

double signed_volume(const TriMesh& mesh) { return mesh_volume(mesh).cm3; }

std::vector<Vec3> surface_samples(const TriMesh& mesh, std::size_t n, std::uint64_t seed) {
    if (mesh.empty()) throw DataError("cannot sample an empty mesh");
    std::vector<double> cumulative(mesh.faces.size());
    double total = 0.0;
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
        const Face& face = mesh.faces[f];
        total += triangle_area(mesh.vertices[face[0]], mesh.vertices[face[1]],
                               mesh.vertices[face[2]]);
        cumulative[f] = total;
    }
    if (!(total > 0.0)) throw DataError("cannot sample a mesh with zero surface area");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<Vec3> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double pick = unit(rng) * total;
        auto it = std::upper_bound(cumulative.begin(), cumulative.end(), pick);
        if (it == cumulative.end()) --it;
        const Face& face = mesh.faces[static_cast<std::size_t>(it - cumulative.begin())];
        const double r1 = std::sqrt(unit(rng));
        const double r2 = unit(rng);
        const Vec3& a = mesh.vertices[face[0]];
        const Vec3& b = mesh.vertices[face[1]];
        const Vec3& c = mesh.vertices[face[2]];
        out.push_back((1.0 - r1) * a + r1 * (1.0 - r2) * b + r1 * r2 * c);
    }
    return out;
}

// Voronoi-region walk from Ericson, "Real-Time Collision Detection", 5.1.5.
Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
    const Vec3 ab = b - a;
    const Vec3 ac = c - a;
    const Vec3 ap = p - a;
    const double d1 = ab.dot(ap);
    const double d2 = ac.dot(ap);
    if (d1 <= 0.0 && d2 <= 0.0) return a;

    const Vec3 bp = p - b;
    const double d3 = ab.dot(bp);
    const double d4 = ac.dot(bp);
    if (d3 >= 0.0 && d4 <= d3) return b;

    const double vc = d1 * d4 - d3 * d2;
    if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
        const double v = d1 / (d1 - d3);
        return a + v * ab;
    }

    const Vec3 cp = p - c;
    const double d5 = ab.dot(cp);
    const double d6 = ac.dot(cp);
    if (d6 >= 0.0 && d5 <= d6) return c;

    const double vb = d5 * d2 - d1 * d6;
    if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
        const double w = d2 / (d2 - d6);
        return a + w * ac;
    }

    const double va = d3 * d6 - d5 * d4;
    if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
        const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + w * (c - b);
    }

    const double denom = 1.0 / (va + vb + vc);
    const double v = vb * denom;
    const double w = vc * denom;
    return a + ab * v + ac * w;
}

double nearest_surface_distance_brute(const Vec3& p, const TriMesh& mesh) {
    if (mesh.empty()) throw DataError("nearest distance query on an empty mesh");
    double best = std::numeric_limits<double>::infinity();
    for (const Face& f : mesh.faces) {
        const Vec3 q = closest_point_on_triangle(p, mesh.vertices[f[0]], mesh.vertices[f[1]],
                                                 mesh.vertices[f[2]]);
        best = std::min(best, (q - p).squaredNorm());
    }
    return std::sqrt(best);
}

double nearest_surface_distance(const Vec3& p, const TriMesh& mesh) {
    if (mesh.empty()) throw DataError("nearest distance query on an empty mesh");
    return SurfaceIndex(mesh).distance(p);
}

TriMesh make_box(const Vec3& lo, const Vec3& hi) {
    TriMesh m;
    for (int i = 0; i < 8; ++i) {
        m.vertices.emplace_back((i & 1) ? hi.x() : lo.x(), (i & 2) ? hi.y() : lo.y(),
                                (i & 4) ? hi.z() : lo.z());
    }
    // Outward counter-clockwise quads split into two triangles each.
    const int quads[6][4] = {{0, 2, 3, 1}, {4, 5, 7, 6}, {0, 1, 5, 4},
                             {2, 6, 7, 3}, {0, 4, 6, 2}, {1, 3, 7, 5}};
    for (const auto& q : quads) {
        m.faces.push_back({q[0], q[1], q[2]});
        m.faces.push_back({q[0], q[2], q[3]});
    }
    return m;
}

TriMesh make_icosphere(int subdivisions, double radius) {
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    TriMesh m;
    m.vertices = {{-1, t, 0}, {1, t, 0},  {-1, -t, 0}, {1, -t, 0}, {0, -1, t},  {0, 1, t},
                  {0, -1, -t}, {0, 1, -t}, {t, 0, -1},  {t, 0, 1},  {-t, 0, -1}, {-t, 0, 1}};
    for (Vec3& v : m.vertices) v.normalize();
    m.faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
               {11, 10, 2}, {10, 7, 6}, {7, 1, 8},   {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
               {3, 8, 9},   {4, 9, 5},  {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};

    for (int level = 0; level < subdivisions; ++level) {
        std::map<std::pair<int, int>, int> midpoint;
        auto mid = [&](int a, int b) {
            const auto key = std::minmax(a, b);
            auto it = midpoint.find(key);
            if (it != midpoint.end()) return it->second;
            const int idx = static_cast<int>(m.vertices.size());
            m.vertices.push_back((m.vertices[a] + m.vertices[b]).normalized());
            midpoint.emplace(key, idx);
            return idx;
        };
        std::vector<Face> next;
        next.reserve(m.faces.size() * 4);
        for (const Face& f : m.faces) {
            const int ab = mid(f[0], f[1]);
            const int bc = mid(f[1], f[2]);
            const int ca = mid(f[2], f[0]);
            next.push_back({f[0], ab, ca});
            next.push_back({f[1], bc, ab});
            next.push_back({f[2], ca, bc});
            next.push_back({ab, bc, ca});
        }
        m.faces = std::move(next);
    }
    for (Vec3& v : m.vertices) v *= radius;
    if (raw_signed_volume_mm3(m) < 0.0) flip_orientation(m);
    return m;
}

void translate(TriMesh& mesh, const Vec3& offset) {
    for (Vec3& v : mesh.vertices) v += offset;
}

void scale(TriMesh& mesh, double factor) {
    for (Vec3& v : mesh.vertices) v *= factor;
}

void flip_orientation(TriMesh& mesh) {
    for (Face& f : mesh.faces) std::swap(f[1], f[2]);
}

}  // namespace ssmrecon
