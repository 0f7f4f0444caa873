#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "ssmrecon/mesh.hpp"

namespace ssmrecon {

/// Reads `v` and `f` records of a Wavefront OBJ. Polygons are fan-triangulated,
/// negative (relative) indices are accepted, other records are ignored.
/// Errors name the offending line.
[[nodiscard]] TriMesh load_mesh(const std::filesystem::path& path);
[[nodiscard]] TriMesh read_obj(std::istream& in, const std::string& source_name = "<stream>");

/// Writes vertices with 17 significant digits so load_mesh(save_mesh(m)) == m.
void save_mesh(const TriMesh& mesh, const std::filesystem::path& path);
void write_obj(const TriMesh& mesh, std::ostream& out);

}  // namespace ssmrecon
