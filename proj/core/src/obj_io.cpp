#include "ssmrecon/obj_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ssmrecon/error.hpp"

namespace ssmrecon {

namespace {

[[noreturn]] void parse_fail(const std::string& source, std::size_t line, const std::string& what) {
    std::ostringstream msg;
    msg << source << ":" << line << ": " << what;
    throw DataError(msg.str());
}

// Parses the vertex index of an `f` token ("7", "7/1", "7//3", "-1/2/3").
int parse_face_index(const std::string& token, long long vertex_count, const std::string& source,
                     std::size_t line) {
    const std::string head = token.substr(0, token.find('/'));
    long long idx = 0;
    const auto [ptr, ec] = std::from_chars(head.data(), head.data() + head.size(), idx);
    if (ec != std::errc() || ptr != head.data() + head.size() || idx == 0) {
        parse_fail(source, line, "malformed face index '" + token + "'");
    }
    const long long resolved = idx > 0 ? idx - 1 : vertex_count + idx;
    if (resolved < 0 || resolved >= vertex_count) {
        std::ostringstream msg;
        msg << "face index " << idx << " out of range (" << vertex_count << " vertices)";
        parse_fail(source, line, msg.str());
    }
    return static_cast<int>(resolved);
}

}  // namespace

TriMesh read_obj(std::istream& in, const std::string& source) {
    TriMesh mesh;
    std::string raw;
    std::size_t line_no = 0;
    std::vector<int> poly;
    while (std::getline(in, raw)) {
        ++line_no;
        if (const auto hash = raw.find('#'); hash != std::string::npos) raw.resize(hash);
        std::istringstream line(raw);
        std::string tag;
        if (!(line >> tag)) continue;
        if (tag == "v") {
            double x = 0, y = 0, z = 0;
            if (!(line >> x >> y >> z)) parse_fail(source, line_no, "malformed vertex record");
            mesh.vertices.emplace_back(x, y, z);
        } else if (tag == "f") {
            poly.clear();
            std::string token;
            const auto n = static_cast<long long>(mesh.vertices.size());
            while (line >> token) poly.push_back(parse_face_index(token, n, source, line_no));
            if (poly.size() < 3) parse_fail(source, line_no, "face with fewer than 3 vertices");
            for (std::size_t k = 1; k + 1 < poly.size(); ++k) {
                const Face face{poly[0], poly[k], poly[k + 1]};
                if (face[0] == face[1] || face[1] == face[2] || face[0] == face[2]) {
                    parse_fail(source, line_no, "degenerate face (repeated vertex)");
                }
                mesh.faces.push_back(face);
            }
        }
        // vn, vt, o, g, s, usemtl, mtllib and friends are ignored.
    }
    if (in.bad()) throw DataError(source + ": read failure");
    return mesh;
}

TriMesh load_mesh(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open mesh file " + path.string());
    return read_obj(in, path.string());
}

void write_obj(const TriMesh& mesh, std::ostream& out) {
    char buf[128];
    for (const Vec3& v : mesh.vertices) {
        std::snprintf(buf, sizeof buf, "v %.17g %.17g %.17g\n", v.x(), v.y(), v.z());
        out << buf;
    }
    for (const Face& f : mesh.faces) {
        out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
    }
}

void save_mesh(const TriMesh& mesh, const std::filesystem::path& path) {
    validate_indices(mesh);
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write mesh file " + path.string());
    write_obj(mesh, out);
    out.flush();
    if (!out) throw DataError("write failure on " + path.string());
}

}  // namespace ssmrecon
