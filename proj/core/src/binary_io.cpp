#include "ssmrecon/binary_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "ssmrecon/error.hpp"

namespace ssmrecon {

namespace fs = std::filesystem;

ModelPaths model_paths(const fs::path& path, const std::string& kind) {
    std::string s = path.string();
    for (const std::string& suffix : {"." + kind + ".json", "." + kind + ".bin"}) {
        if (s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0) {
            s.resize(s.size() - suffix.size());
            break;
        }
    }
    return ModelPaths{fs::path(s + "." + kind + ".json"), fs::path(s + "." + kind + ".bin")};
}

void write_float64_le(const fs::path& path, std::span<const double> values) {
    static_assert(sizeof(double) == 8);
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    if constexpr (std::endian::native == std::endian::little) {
        out.write(reinterpret_cast<const char*>(values.data()),
                  static_cast<std::streamsize>(values.size_bytes()));
    } else {
        for (double v : values) {
            auto bits = std::bit_cast<std::uint64_t>(v);
            unsigned char bytes[8];
            for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(bits >> (8 * i));
            out.write(reinterpret_cast<const char*>(bytes), 8);
        }
    }
    out.flush();
    if (!out) throw DataError("write failure on " + path.string());
}

std::vector<double> read_float64_le(const fs::path& path, std::size_t count) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open payload " + path.string());
    in.seekg(0, std::ios::end);
    const auto size = static_cast<std::size_t>(in.tellg());
    if (size != count * 8) {
        throw DataError("payload " + path.string() + " holds " + std::to_string(size) +
                        " bytes, manifest requires " + std::to_string(count * 8));
    }
    in.seekg(0);
    std::vector<double> values(count);
    in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(count * 8));
    if (!in) throw DataError("read failure on " + path.string());
    if constexpr (std::endian::native != std::endian::little) {
        for (double& v : values) {
            auto bits = std::bit_cast<std::uint64_t>(v);
            std::uint64_t swapped = 0;
            for (int i = 0; i < 8; ++i) swapped = (swapped << 8) | ((bits >> (8 * i)) & 0xff);
            v = std::bit_cast<double>(swapped);
        }
    }
    return values;
}

void write_json(const fs::path& path, const nlohmann::json& doc) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << doc.dump(2) << '\n';
    if (!out) throw DataError("write failure on " + path.string());
}

nlohmann::json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

}  // namespace ssmrecon
