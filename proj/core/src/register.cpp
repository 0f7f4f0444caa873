#include "ssmrecon/register.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include <Eigen/SVD>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "ssmrecon/error.hpp"
#include "ssmrecon/surface_index.hpp"

namespace ssmrecon {

RigidTransform RigidTransform::then(const RigidTransform& next) const {
    return RigidTransform{next.rotation * rotation, next.rotation * translation + next.translation};
}

void transform_points(const RigidTransform& transform, std::span<Vec3> points) {
    for (Vec3& p : points) p = transform.apply(p);
}

TriMesh transformed(const TriMesh& mesh, const RigidTransform& transform) {
    TriMesh out = mesh;
    transform_points(transform, out.vertices);
    return out;
}

RigidTransform rigid_align(std::span<const Vec3> source, std::span<const Vec3> target) {
    if (source.size() != target.size()) {
        throw DataError("rigid_align: point lists differ in length (" +
                        std::to_string(source.size()) + " vs " + std::to_string(target.size()) + ")");
    }
    if (source.size() < 3) throw DataError("rigid_align: need at least 3 point pairs");

    const Vec3 cs = centroid(source);
    const Vec3 ct = centroid(target);
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (std::size_t i = 0; i < source.size(); ++i) {
        cov += (source[i] - cs) * (target[i] - ct).transpose();
    }
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::Vector3d sv = svd.singularValues();
    if (!(sv(0) > 0.0) || sv(1) <= 1e-12 * sv(0)) {
        throw NumericalError("rigid_align: degenerate configuration (collinear or coincident points)");
    }
    const Eigen::Matrix3d& u = svd.matrixU();
    const Eigen::Matrix3d& v = svd.matrixV();
    Eigen::Matrix3d fix = Eigen::Matrix3d::Identity();
    fix(2, 2) = (v * u.transpose()).determinant() < 0.0 ? -1.0 : 1.0;

    RigidTransform out;
    out.rotation = v * fix * u.transpose();
    out.translation = ct - out.rotation * cs;
    return out;
}

void FitConfig::validate() const {
    if (iterations < 1) throw ConfigError("fit iterations must be >= 1");
    if (!(smoothness >= 0.0)) throw ConfigError("fit smoothness must be >= 0");
    if (!(damping > 0.0 && damping <= 1.0)) throw ConfigError("fit damping must lie in (0, 1]");
    if (!(tolerance >= 0.0)) throw ConfigError("fit tolerance must be >= 0");
    if (rigid_iterations < 0) throw ConfigError("rigid iterations must be >= 0");
}

namespace {

Vec3 area_centroid(const TriMesh& mesh) {
    Vec3 sum = Vec3::Zero();
    double area = 0.0;
    for (const Face& f : mesh.faces) {
        const Vec3& a = mesh.vertices[f[0]];
        const Vec3& b = mesh.vertices[f[1]];
        const Vec3& c = mesh.vertices[f[2]];
        const double w = triangle_area(a, b, c);
        sum += w * (a + b + c) / 3.0;
        area += w;
    }
    return area > 0.0 ? Vec3(sum / area) : centroid(mesh.vertices);
}

// Uniform graph Laplacian (L d)_i = d_i - mean of neighbours.
Eigen::SparseMatrix<double> uniform_laplacian(const TriMesh& mesh) {
    const int n = static_cast<int>(mesh.vertices.size());
    std::vector<std::set<int>> nbrs(n);
    for (const Face& f : mesh.faces) {
        for (int k = 0; k < 3; ++k) {
            nbrs[f[k]].insert(f[(k + 1) % 3]);
            nbrs[f[(k + 1) % 3]].insert(f[k]);
        }
    }
    std::vector<Eigen::Triplet<double>> entries;
    for (int i = 0; i < n; ++i) {
        entries.emplace_back(i, i, 1.0);
        if (nbrs[i].empty()) continue;
        const double w = 1.0 / static_cast<double>(nbrs[i].size());
        for (int j : nbrs[i]) entries.emplace_back(i, j, -w);
    }
    Eigen::SparseMatrix<double> lap(n, n);
    lap.setFromTriplets(entries.begin(), entries.end());
    return lap;
}

using Field = Eigen::Matrix<double, Eigen::Dynamic, 3>;

Field to_field(std::span<const Vec3> points) {
    Field f(static_cast<Eigen::Index>(points.size()), 3);
    for (std::size_t i = 0; i < points.size(); ++i) f.row(static_cast<Eigen::Index>(i)) = points[i].transpose();
    return f;
}

[[noreturn]] void non_finite(int iteration, const char* what) {
    std::ostringstream msg;
    msg << "nonrigid_fit: non-finite " << what << " at iteration " << iteration;
    throw NumericalError(msg.str());
}

}  // namespace

TriMesh nonrigid_fit(const TriMesh& templ, const TriMesh& target, const FitConfig& cfg,
                     FitTrace* trace) {
    cfg.validate();
    if (templ.empty() || templ.vertices.empty()) throw DataError("nonrigid_fit: empty template");
    if (target.empty()) throw DataError("nonrigid_fit: empty target");
    validate_indices(templ);
    require_closed(templ);

    const SurfaceIndex index(target);
    const auto m = templ.vertices.size();

    // Rigid initialisation: centroid match, then ICP over nearest-point pairs.
    RigidTransform pose;
    pose.translation = area_centroid(target) - area_centroid(templ);
    std::vector<Vec3> moved = templ.vertices;
    transform_points(pose, moved);
    std::vector<Vec3> corr(m);
    double prev_rms = std::numeric_limits<double>::infinity();
    for (int it = 0; it < cfg.rigid_iterations; ++it) {
        double sq = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const SurfaceHit hit = index.closest(moved[i]);
            corr[i] = hit.point;
            sq += hit.distance * hit.distance;
        }
        const double rms = std::sqrt(sq / static_cast<double>(m));
        if (!std::isfinite(rms)) non_finite(it, "rigid residual");
        if (prev_rms - rms < 1e-9 * (1.0 + rms) && it > 0) break;
        prev_rms = rms;
        const RigidTransform step = rigid_align(moved, corr);
        pose = pose.then(step);
        moved = templ.vertices;
        transform_points(pose, moved);
    }

    const Field base = to_field(moved);
    const Eigen::SparseMatrix<double> lap = uniform_laplacian(templ);
    Eigen::SparseMatrix<double> system(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    system.setIdentity();
    if (cfg.smoothness > 0.0) system += cfg.smoothness * Eigen::SparseMatrix<double>(lap.transpose() * lap);
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(system);
    if (solver.info() != Eigen::Success) throw NumericalError("nonrigid_fit: factorisation failed");

    Field disp = Field::Zero(static_cast<Eigen::Index>(m), 3);
    Field targets(static_cast<Eigen::Index>(m), 3);

    // Energy of the current displacement; fills `targets` with the nearest
    // surface points as a side effect.
    auto evaluate = [&](int iteration) {
        double data = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const auto r = static_cast<Eigen::Index>(i);
            const Vec3 p = (base.row(r) + disp.row(r)).transpose();
            const SurfaceHit hit = index.closest(p);
            targets.row(r) = hit.point.transpose();
            data += hit.distance * hit.distance;
        }
        const double smooth = cfg.smoothness > 0.0 ? (lap * disp).squaredNorm() : 0.0;
        const double energy = data + cfg.smoothness * smooth;
        if (!std::isfinite(energy)) non_finite(iteration, "energy");
        return energy;
    };

    FitTrace local;
    FitTrace& tr = trace ? *trace : local;
    tr = FitTrace{};
    tr.initial = pose;
    tr.energy.push_back(evaluate(0));

    for (int it = 1; it <= cfg.iterations; ++it) {
        const Field optimum = solver.solve(targets - base);
        if (solver.info() != Eigen::Success || !optimum.allFinite()) non_finite(it, "displacement");
        const Field step = cfg.damping * (optimum - disp);
        disp += step;
        tr.iterations = it;
        tr.energy.push_back(evaluate(it));
        const double mean_move = step.rowwise().norm().mean();
        if (mean_move < cfg.tolerance) break;
    }

    TriMesh out;
    out.faces = templ.faces;
    out.vertices.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        out.vertices[i] = (base.row(r) + disp.row(r)).transpose();
    }
    return out;
}

std::vector<TriMesh> generalized_procrustes(std::span<const TriMesh> population, int max_rounds) {
    if (population.size() < 2) throw DataError("generalized_procrustes: need at least 2 meshes");
    if (max_rounds < 1) throw ConfigError("generalized_procrustes: max_rounds must be >= 1");
    const TriMesh& ref = population.front();
    for (std::size_t i = 1; i < population.size(); ++i) {
        if (population[i].vertices.size() != ref.vertices.size() || population[i].faces != ref.faces) {
            throw DataError("generalized_procrustes: mesh " + std::to_string(i) +
                            " does not share the reference topology");
        }
    }
    const std::size_t m = ref.vertices.size();

    std::vector<TriMesh> centred(population.begin(), population.end());
    for (TriMesh& mesh : centred) translate(mesh, -centroid(mesh.vertices));

    auto average = [&](const std::vector<TriMesh>& shapes) {
        std::vector<Vec3> mean(m, Vec3::Zero());
        for (const TriMesh& s : shapes) {
            for (std::size_t v = 0; v < m; ++v) mean[v] += s.vertices[v];
        }
        for (Vec3& p : mean) p /= static_cast<double>(shapes.size());
        return mean;
    };

    std::vector<Vec3> mean = average(centred);
    std::vector<TriMesh> aligned = centred;
    for (int round = 0; round < max_rounds; ++round) {
        for (std::size_t i = 0; i < centred.size(); ++i) {
            aligned[i] = transformed(centred[i], rigid_align(centred[i].vertices, mean));
        }
        std::vector<Vec3> next = average(aligned);
        double change = 0.0;
        for (std::size_t v = 0; v < m; ++v) change = std::max(change, (next[v] - mean[v]).norm());
        mean = std::move(next);
        if (change < 1e-6) break;
    }
    // Remove the residual round-off drift of each centroid.
    for (TriMesh& mesh : aligned) translate(mesh, -centroid(mesh.vertices));
    return aligned;
}

}  // namespace ssmrecon
