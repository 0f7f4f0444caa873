#include "ssmrecon/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "ssmrecon/error.hpp"
#include "ssmrecon/surface_index.hpp"

namespace ssmrecon {

namespace {

std::vector<std::pair<int, int>> boundary_pixels(const Mask& m) {
    std::vector<std::pair<int, int>> out;
    const int r = m.resolution();
    auto on = [&](int row, int col) {
        return row >= 0 && row < r && col >= 0 && col < r && m.at(row, col);
    };
    for (int row = 0; row < r; ++row) {
        for (int col = 0; col < r; ++col) {
            if (!m.at(row, col)) continue;
            if (!on(row - 1, col) || !on(row + 1, col) || !on(row, col - 1) || !on(row, col + 1)) {
                out.emplace_back(row, col);
            }
        }
    }
    return out;
}

double directed_hausdorff_px(const std::vector<std::pair<int, int>>& from,
                             const std::vector<std::pair<int, int>>& to) {
    long long worst = 0;
    for (const auto& [ra, ca] : from) {
        long long best = std::numeric_limits<long long>::max();
        for (const auto& [rb, cb] : to) {
            const long long dr = ra - rb;
            const long long dc = ca - cb;
            best = std::min(best, dr * dr + dc * dc);
            if (best <= worst) break;  // cannot raise the maximum
        }
        worst = std::max(worst, best);
    }
    return std::sqrt(static_cast<double>(worst));
}

void require_same_size(const Mask& a, const Mask& b) {
    if (a.resolution() != b.resolution()) {
        throw DataError("mask metrics: resolution mismatch (" + std::to_string(a.resolution()) + " vs " +
                        std::to_string(b.resolution()) + ")");
    }
}

}  // namespace

double mask_hausdorff(const Mask& a, const Mask& b, double spacing) {
    require_same_size(a, b);
    if (!(spacing > 0.0)) throw DataError("mask metrics: spacing must be > 0");
    const auto ba = boundary_pixels(a);
    const auto bb = boundary_pixels(b);
    if (ba.empty() && bb.empty()) return 0.0;
    if (ba.empty() || bb.empty()) return std::sqrt(2.0) * a.resolution() * spacing;
    return spacing * std::max(directed_hausdorff_px(ba, bb), directed_hausdorff_px(bb, ba));
}

MaskMetrics mask_metrics(const Mask& pred, const Mask& truth, double spacing) {
    require_same_size(pred, truth);
    if (!(spacing > 0.0)) throw DataError("mask metrics: spacing must be > 0");
    long long tp = 0, fp = 0, fn = 0, tn = 0;
    const auto& p = pred.bits();
    const auto& t = truth.bits();
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] && t[i]) ++tp;
        else if (p[i]) ++fp;
        else if (t[i]) ++fn;
        else ++tn;
    }
    MaskMetrics out;
    const auto total = static_cast<double>(p.size());
    out.accuracy = total > 0 ? static_cast<double>(tp + tn) / total : 1.0;
    if (tp + fp + fn == 0) {
        out.dice = 1.0;
        out.iou = 1.0;
    } else {
        out.dice = 2.0 * tp / static_cast<double>(2 * tp + fp + fn);
        out.iou = tp / static_cast<double>(tp + fp + fn);
    }
    out.hausdorff = mask_hausdorff(pred, truth, spacing);
    return out;
}

double directed_mean_distance(const TriMesh& from, const TriMesh& to, std::size_t n,
                              std::uint64_t seed) {
    if (from.empty() || to.empty()) throw DataError("surface distance on an empty mesh");
    if (n == 0) throw DataError("surface distance needs at least one sample");
    const SurfaceIndex index(to);
    double sum = 0.0;
    for (const Vec3& p : surface_samples(from, n, seed)) sum += index.distance(p);
    return sum / static_cast<double>(n);
}

MeshMetrics mesh_metrics(const TriMesh& a, const TriMesh& b, std::size_t n, std::uint64_t seed) {
    const double ab = directed_mean_distance(a, b, n, seed);
    const double ba = directed_mean_distance(b, a, n, seed);
    return MeshMetrics{ab + ba, 0.5 * (ab + ba)};
}

double chamfer(const TriMesh& a, const TriMesh& b, std::size_t n, std::uint64_t seed) {
    return mesh_metrics(a, b, n, seed).chamfer;
}

double msd(const TriMesh& a, const TriMesh& b, std::size_t n, std::uint64_t seed) {
    return mesh_metrics(a, b, n, seed).msd;
}

double rmse(std::span<const double> pred, std::span<const double> truth) {
    if (pred.size() != truth.size()) throw DataError("rmse: length mismatch");
    if (pred.empty()) throw DataError("rmse: empty input");
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - truth[i];
        sum += d * d;
    }
    return std::sqrt(sum / static_cast<double>(pred.size()));
}

}  // namespace ssmrecon
