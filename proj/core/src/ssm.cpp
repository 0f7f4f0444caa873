#include "ssmrecon/ssm.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/SVD>

#include "ssmrecon/binary_io.hpp"
#include "ssmrecon/error.hpp"

namespace ssmrecon {

namespace {
constexpr int kSsmFormatVersion = 1;
constexpr int kDefaultComponents = 50;

void require_topology(const ShapeSpace& space, const TriMesh& mesh) {
    if (static_cast<int>(mesh.vertices.size()) != space.vertex_count || mesh.faces != space.faces) {
        throw DataError("mesh does not share the shape model's reference topology (" +
                        std::to_string(mesh.vertices.size()) + " vs " +
                        std::to_string(space.vertex_count) + " vertices)");
    }
}

nlohmann::json box_json(const Box3& b) {
    return {{"min", {b.min.x(), b.min.y(), b.min.z()}}, {"max", {b.max.x(), b.max.y(), b.max.z()}}};
}

Box3 box_from_json(const nlohmann::json& j) {
    Box3 b;
    for (int k = 0; k < 3; ++k) {
        b.min[k] = j.at("min").at(k).get<double>();
        b.max[k] = j.at("max").at(k).get<double>();
    }
    return b;
}
}  // namespace

Eigen::VectorXd flatten(const TriMesh& mesh) {
    Eigen::VectorXd out(3 * static_cast<Eigen::Index>(mesh.vertices.size()));
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
        out.segment<3>(3 * static_cast<Eigen::Index>(i)) = mesh.vertices[i];
    }
    return out;
}

TriMesh unflatten(const Eigen::VectorXd& coords, const std::vector<Face>& faces) {
    TriMesh mesh;
    mesh.faces = faces;
    mesh.vertices.resize(static_cast<std::size_t>(coords.size() / 3));
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
        mesh.vertices[i] = coords.segment<3>(3 * static_cast<Eigen::Index>(i));
    }
    return mesh;
}

TriMesh ShapeSpace::mean_mesh() const { return unflatten(mean, faces); }

int default_component_count(int population_size) {
    return std::max(1, std::min(kDefaultComponents, population_size - 1));
}

ShapeSpace build_ssm(std::span<const TriMesh> population, int components) {
    const auto n = static_cast<int>(population.size());
    if (n < 2) throw DataError("build_ssm: need at least 2 meshes");
    const TriMesh& ref = population.front();
    for (int i = 1; i < n; ++i) {
        if (population[i].vertices.size() != ref.vertices.size() || population[i].faces != ref.faces) {
            throw DataError("build_ssm: mesh " + std::to_string(i) + " does not share the reference topology");
        }
    }
    const auto dim = 3 * static_cast<Eigen::Index>(ref.vertices.size());
    if (components < 1 || components > n - 1 || components > dim) {
        throw DataError("build_ssm: K = " + std::to_string(components) +
                        " is out of range for N = " + std::to_string(n) + " (need 1 <= K <= N - 1)");
    }

    Eigen::MatrixXd data(n, dim);
    for (int i = 0; i < n; ++i) data.row(i) = flatten(population[i]).transpose();

    ShapeSpace space;
    space.vertex_count = static_cast<int>(ref.vertices.size());
    space.population_size = n;
    space.faces = ref.faces;
    space.mean = data.colwise().mean().transpose();
    data.rowwise() -= space.mean.transpose();

    Eigen::BDCSVD<Eigen::MatrixXd> svd(data, Eigen::ComputeThinV);
    space.components = svd.matrixV().leftCols(components);
    space.score_scale.resize(components);

    const double scale = std::max(1.0, space.mean.cwiseAbs().maxCoeff());
    for (int k = 0; k < components; ++k) {
        auto col = space.components.col(k);
        Eigen::Index arg = 0;
        col.cwiseAbs().maxCoeff(&arg);
        if (col(arg) < 0.0) col = -col;
        const Eigen::VectorXd scores = data * col;
        const double sigma = std::sqrt(scores.squaredNorm() / static_cast<double>(n));
        if (!(sigma > 1e-10 * scale)) {
            throw NumericalError("build_ssm: degenerate population (component " + std::to_string(k + 1) +
                                 " has zero variance)");
        }
        space.score_scale(k) = sigma;
    }
    return space;
}

ShapeParams project(const ShapeSpace& space, const TriMesh& mesh) {
    require_topology(space, mesh);
    const Eigen::VectorXd centred = flatten(mesh) - space.mean;
    return (space.components.transpose() * centred).cwiseQuotient(space.score_scale);
}

TriMesh reconstruct(const ShapeSpace& space, const ShapeParams& params) {
    if (params.size() != space.component_count()) {
        throw DataError("reconstruct: expected " + std::to_string(space.component_count()) +
                        " shape parameters, got " + std::to_string(params.size()));
    }
    if (!params.allFinite()) throw NumericalError("reconstruct: non-finite shape parameter");
    const Eigen::VectorXd coords = space.mean + space.components * params.cwiseProduct(space.score_scale);
    return unflatten(coords, space.faces);
}

void save_ssm(const ShapeSpace& space, const std::filesystem::path& path) {
    const ModelPaths paths = model_paths(path, "ssm");
    const Eigen::Index dim = space.mean.size();
    const Eigen::Index k = space.components.cols();

    std::vector<double> payload;
    payload.reserve(static_cast<std::size_t>(dim + dim * k + k));
    payload.insert(payload.end(), space.mean.data(), space.mean.data() + dim);
    payload.insert(payload.end(), space.components.data(), space.components.data() + dim * k);
    payload.insert(payload.end(), space.score_scale.data(), space.score_scale.data() + k);

    nlohmann::json faces = nlohmann::json::array();
    for (const Face& f : space.faces) faces.push_back({f[0], f[1], f[2]});

    nlohmann::json doc;
    doc["format_version"] = kSsmFormatVersion;
    doc["M"] = space.vertex_count;
    doc["N"] = space.population_size;
    doc["K"] = k;
    doc["faces"] = std::move(faces);
    doc["payload"] = {
        {"file", paths.payload.filename().string()},
        {"encoding", "float64-le"},
        {"mean", {{"offset", 0}, {"count", dim}}},
        {"components", {{"offset", 8 * dim}, {"count", dim * k}, {"layout", "column-major"}}},
        {"score_scale", {{"offset", 8 * (dim + dim * k)}, {"count", k}}},
    };
    if (space.window) doc["window"] = box_json(*space.window);

    write_float64_le(paths.payload, payload);
    write_json(paths.manifest, doc);
}

ShapeSpace load_ssm(const std::filesystem::path& path) {
    const ModelPaths paths = model_paths(path, "ssm");
    const nlohmann::json doc = read_json(paths.manifest);
    try {
        if (doc.at("format_version").get<int>() != kSsmFormatVersion) {
            throw DataError(paths.manifest.string() + ": unsupported format_version " +
                            doc.at("format_version").dump());
        }
        ShapeSpace space;
        space.vertex_count = doc.at("M").get<int>();
        space.population_size = doc.at("N").get<int>();
        const int k = doc.at("K").get<int>();
        if (space.vertex_count < 1 || k < 1 || space.population_size < 2) {
            throw DataError(paths.manifest.string() + ": inconsistent dimensions");
        }
        const Eigen::Index dim = 3 * static_cast<Eigen::Index>(space.vertex_count);
        const auto& pl = doc.at("payload");
        if (pl.at("mean").at("count").get<Eigen::Index>() != dim ||
            pl.at("components").at("count").get<Eigen::Index>() != dim * k ||
            pl.at("score_scale").at("count").get<Eigen::Index>() != k ||
            pl.at("mean").at("offset").get<Eigen::Index>() != 0 ||
            pl.at("components").at("offset").get<Eigen::Index>() != 8 * dim ||
            pl.at("score_scale").at("offset").get<Eigen::Index>() != 8 * (dim + dim * k)) {
            throw DataError(paths.manifest.string() + ": payload layout disagrees with M/K");
        }
        for (const auto& f : doc.at("faces")) {
            Face face{f.at(0).get<int>(), f.at(1).get<int>(), f.at(2).get<int>()};
            space.faces.push_back(face);
        }
        TriMesh probe;
        probe.vertices.resize(static_cast<std::size_t>(space.vertex_count));
        probe.faces = space.faces;
        validate_indices(probe);

        const std::filesystem::path payload_path =
            paths.manifest.parent_path() / pl.at("file").get<std::string>();
        const std::vector<double> values = read_float64_le(payload_path, static_cast<std::size_t>(dim + dim * k + k));
        space.mean = Eigen::Map<const Eigen::VectorXd>(values.data(), dim);
        space.components = Eigen::Map<const Eigen::MatrixXd>(values.data() + dim, dim, k);
        space.score_scale = Eigen::Map<const Eigen::VectorXd>(values.data() + dim + dim * k, k);
        if (doc.contains("window")) space.window = box_from_json(doc.at("window"));
        return space;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(paths.manifest.string() + ": " + e.what());
    }
}

}  // namespace ssmrecon
