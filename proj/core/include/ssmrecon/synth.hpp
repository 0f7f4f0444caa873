#pragma once

#include <cstdint>
#include <vector>

#include "ssmrecon/mesh.hpp"

namespace ssmrecon {

struct SynthConfig {
    int n = 60;
    std::uint64_t seed = 1;
    int base_level = 3;
    int mode_count = 8;
    double amplitude = 0.25;  ///< max radial displacement, fraction of radius
    double volume_min = 800.0;  ///< cm^3
    double volume_max = 1600.0;
    std::vector<int> levels{3, 4};  ///< tessellation levels drawn per subject
    Vec3 aspect{1.6, 1.2, 1.0};

    void validate() const;
};

struct SynthSubject {
    TriMesh mesh;
    double volume = 0.0;  ///< cm^3
    std::uint64_t seed = 0;
    int level = 0;
    double amplitude = 0.0;  ///< after any retries
};

/// One synthetic liver-scale subject derived from seed + index.
[[nodiscard]] SynthSubject generate_subject(const SynthConfig& cfg, int index);

[[nodiscard]] std::vector<SynthSubject> generate_population(const SynthConfig& cfg);

}  // namespace ssmrecon
