#include "ssmrecon/synth.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>

#include "ssmrecon/error.hpp"
#include "ssmrecon/slicer.hpp"

namespace ssmrecon {

void SynthConfig::validate() const {
    if (n < 2) throw ConfigError("synth: population size must be >= 2");
    if (base_level < 0 || base_level > 6) throw ConfigError("synth: base level must lie in [0, 6]");
    if (mode_count < 0) throw ConfigError("synth: mode count must be >= 0");
    if (!(amplitude >= 0.0 && amplitude < 0.5)) throw ConfigError("synth: amplitude must lie in [0, 0.5)");
    if (!(volume_min > 0.0 && volume_max >= volume_min)) throw ConfigError("synth: invalid volume range");
    for (int level : levels) {
        if (level < 0 || level > 6) throw ConfigError("synth: tessellation levels must lie in [0, 6]");
    }
    if (!(aspect.minCoeff() > 0.0)) throw ConfigError("synth: aspect ratios must be positive");
}

namespace {

struct Mode {
    int polar = 0;      // Chebyshev order in cos(theta)
    int azimuth = 0;    // order of the azimuthal harmonic
    bool sine = false;
};

// Smooth modes on the unit sphere, lowest combined order first:
// T_a(cos theta) * sin^b(theta) * {cos, sin}(b phi).
std::vector<Mode> mode_table() {
    std::vector<Mode> modes;
    for (int order = 1; order <= 6; ++order) {
        for (int a = 0; a <= 3; ++a) {
            const int b = order - a;
            if (b < 0 || b > 3) continue;
            modes.push_back({a, b, false});
            if (b > 0) modes.push_back({a, b, true});
        }
    }
    return modes;
}

double evaluate_mode(const Mode& m, const Vec3& dir) {
    const double z = std::clamp(dir.z(), -1.0, 1.0);
    const double polar = std::cos(m.polar * std::acos(z));
    const std::complex<double> w = std::pow(std::complex<double>(dir.x(), dir.y()), m.azimuth);
    return polar * (m.sine ? w.imag() : w.real());
}

bool sections_are_positive(const TriMesh& mesh) {
    if (raw_signed_volume_mm3(mesh) <= 0.0) return false;
    const Box3 box = bounding_box(mesh);
    for (double f : {0.1, 0.3, 0.5, 0.7, 0.9}) {
        const Plane plane{box.min.x() + f * box.extent().x()};
        for (const Polygon2& loop : cross_section(mesh, plane)) {
            if (signed_area(loop) < 0.0) return false;
        }
    }
    return true;
}

}  // namespace

SynthSubject generate_subject(const SynthConfig& cfg, int index) {
    cfg.validate();
    SynthSubject subject;
    subject.seed = cfg.seed + static_cast<std::uint64_t>(index);
    std::mt19937_64 rng(subject.seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);

    const std::vector<int>& levels = cfg.levels;
    if (levels.empty()) {
        subject.level = cfg.base_level;
    } else {
        std::uniform_int_distribution<std::size_t> pick(0, levels.size() - 1);
        subject.level = levels[pick(rng)];
    }

    const std::vector<Mode> table = mode_table();
    const auto count = std::min<std::size_t>(static_cast<std::size_t>(cfg.mode_count), table.size());
    std::vector<double> coeff(count);
    double norm = 0.0;
    for (double& c : coeff) {
        c = unit(rng);
        norm += std::abs(c);
    }
    std::uniform_real_distribution<double> volume_draw(cfg.volume_min, cfg.volume_max);
    const double target_volume = volume_draw(rng);

    const TriMesh sphere = make_icosphere(subject.level, 1.0);
    const Vec3 aspect = cfg.aspect / std::cbrt(cfg.aspect.prod());

    double amplitude = cfg.amplitude;
    for (int attempt = 0; attempt <= 10; ++attempt) {
        TriMesh mesh = sphere;
        for (Vec3& v : mesh.vertices) {
            double g = 0.0;
            for (std::size_t m = 0; m < count; ++m) g += coeff[m] * evaluate_mode(table[m], v);
            if (norm > 0.0) g *= amplitude / norm;
            v = (v * (1.0 + g)).cwiseProduct(aspect);
        }
        const double raw_cm3 = raw_signed_volume_mm3(mesh) / 1000.0;
        if (raw_cm3 > 0.0) scale(mesh, std::cbrt(target_volume / raw_cm3));
        if (sections_are_positive(mesh)) {
            subject.mesh = std::move(mesh);
            subject.volume = signed_volume(subject.mesh);
            subject.amplitude = amplitude;
            return subject;
        }
        amplitude *= 0.7;
    }
    throw NumericalError("synth: subject " + std::to_string(index) +
                         " still self-intersects after 10 amplitude reductions");
}

std::vector<SynthSubject> generate_population(const SynthConfig& cfg) {
    cfg.validate();
    std::vector<SynthSubject> out;
    out.reserve(static_cast<std::size_t>(cfg.n));
    for (int i = 0; i < cfg.n; ++i) out.push_back(generate_subject(cfg, i));
    return out;
}

}  // namespace ssmrecon
