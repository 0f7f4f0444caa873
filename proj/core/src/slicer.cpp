#include "ssmrecon/slicer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "ssmrecon/binary_io.hpp"
#include "ssmrecon/error.hpp"

namespace ssmrecon {

namespace fs = std::filesystem;

std::size_t Mask::count_on() const {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

void SliceProtocol::validate() const {
    if (offsets.size() < 2 || offsets.size() > 3) {
        throw ConfigError("slice protocol needs 2 or 3 plane offsets, got " + std::to_string(offsets.size()));
    }
    for (std::size_t i = 0; i < offsets.size(); ++i) {
        if (!(offsets[i] > 0.0 && offsets[i] < 1.0)) throw ConfigError("plane offsets must lie in (0, 1)");
        if (i > 0 && !(offsets[i] > offsets[i - 1])) throw ConfigError("plane offsets must be strictly increasing");
    }
    if (resolution < 16) throw ConfigError("mask resolution must be >= 16");
    const Vec3 e = window.extent();
    if (!(e.x() > 0.0 && e.y() > 0.0 && e.z() > 0.0)) throw ConfigError("slice window has empty extent");
}

Plane SliceProtocol::plane(std::size_t i) const {
    return Plane{window.min.x() + offsets.at(i) * (window.max.x() - window.min.x())};
}

std::size_t MaskStack::input_size() const {
    const auto r = static_cast<std::size_t>(resolution());
    return masks.size() * r * r;
}

std::vector<Polygon2> cross_section(const TriMesh& mesh, const Plane& plane) {
    if (!std::isfinite(plane.offset)) throw DataError("cross_section: plane offset is not finite");
    validate_indices(mesh);
    require_closed(mesh);

    const double c = plane.offset;
    std::vector<char> positive(mesh.vertices.size());
    for (std::size_t v = 0; v < mesh.vertices.size(); ++v) positive[v] = mesh.vertices[v].x() >= c;

    auto key = [](int a, int b) {
        const auto [lo, hi] = std::minmax(a, b);
        return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(lo)) << 32) | static_cast<std::uint32_t>(hi);
    };
    auto crossing = [&](int a, int b) {
        const auto [lo, hi] = std::minmax(a, b);
        const Vec3& p = mesh.vertices[lo];
        const Vec3& q = mesh.vertices[hi];
        const double t = (c - p.x()) / (q.x() - p.x());
        return Vec2(p.y() + t * (q.y() - p.y()), p.z() + t * (q.z() - p.z()));
    };

    // Each crossed face contributes one directed segment between two crossed
    // edges: from its positive->negative edge to its negative->positive edge.
    std::unordered_map<std::uint64_t, std::uint64_t> next;
    std::unordered_map<std::uint64_t, Vec2> point;
    std::vector<std::uint64_t> starts;
    for (const Face& f : mesh.faces) {
        std::uint64_t from = 0, to = 0;
        int crossed = 0;
        for (int k = 0; k < 3; ++k) {
            const int a = f[k];
            const int b = f[(k + 1) % 3];
            if (positive[a] == positive[b]) continue;
            ++crossed;
            const std::uint64_t e = key(a, b);
            if (positive[a]) from = e; else to = e;
            if (!point.contains(e)) point.emplace(e, crossing(a, b));
        }
        if (crossed == 0) continue;
        if (crossed != 2) throw NumericalError("cross_section: inconsistent face classification");
        if (!next.emplace(from, to).second) {
            throw DataError("cross_section: non-manifold crossing, mesh is not consistently oriented");
        }
        starts.push_back(from);
    }

    std::vector<Polygon2> loops;
    std::unordered_map<std::uint64_t, bool> used;
    for (std::uint64_t start : starts) {
        if (used[start]) continue;
        Polygon2 loop;
        std::uint64_t cur = start;
        for (std::size_t guard = 0; guard <= next.size(); ++guard) {
            used[cur] = true;
            const Vec2& p = point.at(cur);
            if (loop.empty() || (p - loop.back()).norm() > 0.0) loop.push_back(p);
            auto it = next.find(cur);
            if (it == next.end()) throw NumericalError("cross_section: failed to close a loop");
            cur = it->second;
            if (cur == start) break;
        }
        if (cur != start) throw NumericalError("cross_section: failed to close a loop");
        if (loop.size() > 1 && (loop.front() - loop.back()).norm() == 0.0) loop.pop_back();
        if (loop.size() >= 3) loops.push_back(std::move(loop));
    }
    return loops;
}

double signed_area(const Polygon2& loop) {
    double twice = 0.0;
    for (std::size_t i = 0, n = loop.size(); i < n; ++i) {
        const Vec2& a = loop[i];
        const Vec2& b = loop[(i + 1) % n];
        twice += a.x() * b.y() - b.x() * a.y();
    }
    return 0.5 * twice;
}

double total_signed_area(const std::vector<Polygon2>& loops) {
    double sum = 0.0;
    for (const Polygon2& l : loops) sum += signed_area(l);
    return sum;
}

Window2 yz_window(const Box3& box) {
    return Window2{Vec2(box.min.y(), box.min.z()), Vec2(box.max.y(), box.max.z())};
}

Mask rasterize(const std::vector<Polygon2>& loops, const Window2& window, int resolution) {
    if (resolution < 16) throw ConfigError("rasterize: resolution must be >= 16");
    Mask mask(resolution);
    const double sy = (window.max.x() - window.min.x()) / resolution;
    const double sz = (window.max.y() - window.min.y()) / resolution;
    std::vector<double> xs;
    for (int row = 0; row < resolution; ++row) {
        const double zc = window.min.y() + (row + 0.5) * sz;
        xs.clear();
        for (const Polygon2& loop : loops) {
            for (std::size_t i = 0, n = loop.size(); i < n; ++i) {
                const Vec2& a = loop[i];
                const Vec2& b = loop[(i + 1) % n];
                if ((a.y() <= zc) == (b.y() <= zc)) continue;
                const double t = (zc - a.y()) / (b.y() - a.y());
                xs.push_back(a.x() + t * (b.x() - a.x()));
            }
        }
        std::sort(xs.begin(), xs.end());
        for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
            const double first = std::ceil((xs[k] - window.min.x()) / sy - 0.5);
            const double last = std::ceil((xs[k + 1] - window.min.x()) / sy - 0.5);
            const int j0 = static_cast<int>(std::clamp(first, 0.0, static_cast<double>(resolution)));
            const int j1 = static_cast<int>(std::clamp(last, 0.0, static_cast<double>(resolution)));
            for (int j = j0; j < j1; ++j) mask.set(row, j, true);
        }
    }
    return mask;
}

MaskStack make_mask_stack(const TriMesh& mesh, const SliceProtocol& protocol) {
    protocol.validate();
    MaskStack stack;
    stack.window = protocol.window;
    stack.offsets = protocol.offsets;
    const Window2 w = yz_window(protocol.window);
    stack.spacing_y = (w.max.x() - w.min.x()) / protocol.resolution;
    stack.spacing_z = (w.max.y() - w.min.y()) / protocol.resolution;
    for (std::size_t i = 0; i < protocol.offsets.size(); ++i) {
        stack.masks.push_back(rasterize(cross_section(mesh, protocol.plane(i)), w, protocol.resolution));
    }
    return stack;
}

Box3 shared_window(const std::vector<Box3>& boxes, double margin) {
    if (boxes.empty()) throw DataError("shared_window: no boxes");
    Box3 all = boxes.front();
    for (const Box3& b : boxes) {
        all.min = all.min.cwiseMin(b.min);
        all.max = all.max.cwiseMax(b.max);
    }
    const Vec3 grow = margin * all.extent();
    all.min -= grow;
    all.max += grow;
    const double side = std::max(all.extent().y(), all.extent().z());
    for (int axis : {1, 2}) {
        const double pad = 0.5 * (side - all.extent()[axis]);
        all.min[axis] -= pad;
        all.max[axis] += pad;
    }
    return all;
}

void save_mask(const Mask& mask, const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write mask " + path.string());
    out << "P5\n" << mask.resolution() << ' ' << mask.resolution() << "\n255\n";
    std::vector<char> bytes(mask.bits().size());
    std::transform(mask.bits().begin(), mask.bits().end(), bytes.begin(),
                   [](std::uint8_t b) { return static_cast<char>(b ? 255 : 0); });
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("write failure on " + path.string());
}

namespace {

// Next whitespace-delimited header token of a PGM, skipping '#' comments.
std::string pgm_token(std::istream& in) {
    std::string tok;
    int ch = 0;
    while ((ch = in.get()) != EOF) {
        if (ch == '#') {
            while ((ch = in.get()) != EOF && ch != '\n') {}
            continue;
        }
        if (std::isspace(ch)) {
            if (!tok.empty()) break;
            continue;
        }
        tok.push_back(static_cast<char>(ch));
    }
    return tok;
}

}  // namespace

Mask load_mask(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open mask " + path.string());
    const std::string magic = pgm_token(in);
    if (magic != "P5") throw DataError(path.string() + ": not a binary PGM (P5)");
    int width = 0, height = 0, maxval = 0;
    try {
        width = std::stoi(pgm_token(in));
        height = std::stoi(pgm_token(in));
        maxval = std::stoi(pgm_token(in));
    } catch (const std::exception&) {
        throw DataError(path.string() + ": malformed PGM header");
    }
    if (maxval != 255) throw DataError(path.string() + ": PGM maxval must be 255");
    if (width != height || width < 1) throw DataError(path.string() + ": masks must be square");
    Mask mask(width);
    std::vector<char> bytes(static_cast<std::size_t>(width) * height);
    in.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (in.gcount() != static_cast<std::streamsize>(bytes.size())) {
        throw DataError(path.string() + ": truncated PGM payload");
    }
    for (int r = 0; r < height; ++r) {
        for (int c = 0; c < width; ++c) {
            const auto v = static_cast<unsigned char>(bytes[static_cast<std::size_t>(r) * width + c]);
            if (v != 0 && v != 255) {
                throw DataError(path.string() + ": binary masks must be 0 or 255 (found " +
                                std::to_string(v) + ")");
            }
            mask.set(r, c, v == 255);
        }
    }
    return mask;
}

namespace {
nlohmann::json box_json(const Box3& b) {
    return {{"min", {b.min.x(), b.min.y(), b.min.z()}}, {"max", {b.max.x(), b.max.y(), b.max.z()}}};
}
}  // namespace

void save_mask_stack(const MaskStack& stack, const fs::path& manifest) {
    if (stack.masks.empty()) throw DataError("refusing to save an empty mask stack");
    for (const Mask& m : stack.masks) {
        if (m.resolution() != stack.resolution()) {
            throw DataError("refusing to save a mask stack with mixed resolutions");
        }
    }
    if (stack.offsets.size() != stack.masks.size()) {
        throw DataError("mask stack has " + std::to_string(stack.masks.size()) + " masks but " +
                        std::to_string(stack.offsets.size()) + " offsets");
    }
    std::string stem = manifest.filename().string();
    if (const auto dot = stem.find('.'); dot != std::string::npos) stem.resize(dot);
    nlohmann::json files = nlohmann::json::array();
    for (std::size_t i = 0; i < stack.masks.size(); ++i) {
        const std::string name = stem + "_slice" + std::to_string(i) + ".pgm";
        save_mask(stack.masks[i], manifest.parent_path() / name);
        files.push_back(name);
    }
    nlohmann::json doc;
    doc["format_version"] = 1;
    doc["resolution"] = stack.resolution();
    doc["masks"] = std::move(files);
    doc["offsets"] = stack.offsets;
    doc["window"] = box_json(stack.window);
    doc["spacing"] = {{"y", stack.spacing_y}, {"z", stack.spacing_z}};
    write_json(manifest, doc);
}

MaskStack load_mask_stack(const fs::path& manifest) {
    const nlohmann::json doc = read_json(manifest);
    try {
        MaskStack stack;
        const int resolution = doc.at("resolution").get<int>();
        stack.offsets = doc.at("offsets").get<std::vector<double>>();
        for (int k = 0; k < 3; ++k) {
            stack.window.min[k] = doc.at("window").at("min").at(k).get<double>();
            stack.window.max[k] = doc.at("window").at("max").at(k).get<double>();
        }
        stack.spacing_y = doc.at("spacing").at("y").get<double>();
        stack.spacing_z = doc.at("spacing").at("z").get<double>();
        if (!(stack.spacing_y > 0.0 && stack.spacing_z > 0.0)) {
            throw DataError(manifest.string() + ": pixel spacing must be positive");
        }
        for (const auto& name : doc.at("masks")) {
            Mask m = load_mask(manifest.parent_path() / name.get<std::string>());
            if (m.resolution() != resolution) {
                throw DataError(manifest.string() + ": member " + name.get<std::string>() +
                                " has resolution " + std::to_string(m.resolution()) +
                                ", manifest says " + std::to_string(resolution));
            }
            stack.masks.push_back(std::move(m));
        }
        if (stack.masks.size() != stack.offsets.size()) {
            throw DataError(manifest.string() + ": mask count and offset count differ");
        }
        return stack;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(manifest.string() + ": " + e.what());
    }
}

}  // namespace ssmrecon
