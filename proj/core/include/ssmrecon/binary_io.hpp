#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace ssmrecon {

/// A model file is a JSON manifest plus a raw float64 little-endian sidecar.
/// `stem.<kind>.json` and `stem.<kind>.bin`.
struct ModelPaths {
    std::filesystem::path manifest;
    std::filesystem::path payload;
};

/// Accepts the manifest path, the payload path, or the bare stem.
[[nodiscard]] ModelPaths model_paths(const std::filesystem::path& path, const std::string& kind);

void write_float64_le(const std::filesystem::path& path, std::span<const double> values);
/// Reads exactly `count` doubles; throws DataError when the file is shorter or longer.
[[nodiscard]] std::vector<double> read_float64_le(const std::filesystem::path& path,
                                                  std::size_t count);

void write_json(const std::filesystem::path& path, const nlohmann::json& doc);
[[nodiscard]] nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace ssmrecon
