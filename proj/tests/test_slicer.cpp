#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "ssmrecon/binary_io.hpp"
#include "ssmrecon/error.hpp"
#include "ssmrecon/slicer.hpp"
#include "ssmrecon/synth.hpp"
#include "support/oracles.hpp"

using namespace ssmrecon;

namespace {

Polygon2 rect(double y0, double z0, double y1, double z1) {
    return {Vec2(y0, z0), Vec2(y1, z0), Vec2(y1, z1), Vec2(y0, z1)};
}

Polygon2 random_star(std::mt19937_64& rng, Vec2 centre, double radius, int points) {
    std::uniform_real_distribution<double> u(0.3, 1.0);
    Polygon2 loop;
    for (int i = 0; i < points; ++i) {
        const double a = 2 * std::numbers::pi * i / points;
        loop.push_back(centre + radius * u(rng) * Vec2(std::cos(a), std::sin(a)));
    }
    return loop;
}

SliceProtocol protocol_for(const TriMesh& mesh, std::vector<double> offsets = {0.35, 0.5, 0.65}, int r = 64) {
    SliceProtocol p;
    p.offsets = std::move(offsets);
    p.window = shared_window({bounding_box(mesh)});
    p.resolution = r;
    return p;
}

}  // namespace

TEST(CrossSection, CubeMidPlaneIsOneSquare) {
    const TriMesh cube = make_box(Vec3(0, 0, 0), Vec3(10, 10, 10));
    const auto loops = cross_section(cube, Plane{5.0});
    ASSERT_EQ(loops.size(), 1u);
    EXPECT_NEAR(signed_area(loops[0]), 100.0, 1e-9);
    for (const Vec2& p : loops[0]) {
        const bool on_edge = std::abs(p.x()) < 1e-9 || std::abs(p.x() - 10) < 1e-9 || std::abs(p.y()) < 1e-9 ||
                             std::abs(p.y() - 10) < 1e-9;
        EXPECT_TRUE(on_edge);
    }
}

TEST(CrossSection, SphereThroughCentreIsACircle) {
    const TriMesh s = make_icosphere(5, 10.0);
    const auto loops = cross_section(s, Plane{0.0123});
    ASSERT_EQ(loops.size(), 1u);
    const double circle = std::numbers::pi * (100.0 - 0.0123 * 0.0123);
    EXPECT_NEAR(signed_area(loops[0]), circle, 0.01 * circle);
}

TEST(CrossSection, MissingPlaneGivesNoLoops) {
    EXPECT_TRUE(cross_section(make_icosphere(2, 10.0), Plane{1000.0}).empty());
}

TEST(CrossSection, OpenMeshIsRejected) {
    TriMesh m = make_icosphere(2, 10.0);
    m.faces.erase(m.faces.begin() + 3);
    EXPECT_THROW((void)cross_section(m, Plane{0.0}), DataError);
}

TEST(CrossSection, TwoComponentsGiveTwoPositiveLoops) {
    TriMesh a = make_box(Vec3(0, 0, 0), Vec3(10, 10, 10));
    const TriMesh b = make_box(Vec3(0, 20, 0), Vec3(10, 25, 4));
    const int base = static_cast<int>(a.vertices.size());
    a.vertices.insert(a.vertices.end(), b.vertices.begin(), b.vertices.end());
    for (Face f : b.faces) a.faces.push_back({f[0] + base, f[1] + base, f[2] + base});
    const auto loops = cross_section(a, Plane{5.0});
    ASSERT_EQ(loops.size(), 2u);
    for (const auto& l : loops) EXPECT_GT(signed_area(l), 0.0);
    EXPECT_NEAR(total_signed_area(loops), 120.0, 1e-9);
}

TEST(CrossSection, SyntheticLoopsCloseAndAreaVariesSmoothly) {
    SynthConfig cfg;
    cfg.n = 4;
    cfg.seed = 31;
    for (const SynthSubject& s : generate_population(cfg)) {
        const Box3 box = bounding_box(s.mesh);
        double previous = -1.0;
        for (double f = 0.30; f <= 0.705; f += 0.01) {
            const auto loops = cross_section(s.mesh, Plane{box.min.x() + f * box.extent().x()});
            ASSERT_FALSE(loops.empty());
            const double area = total_signed_area(loops);
            EXPECT_GT(area, 0.0);
            if (previous > 0.0) EXPECT_LT(std::abs(area - previous), 0.2 * previous) << "offset " << f;
            previous = area;
        }
    }
}

TEST(Rasterize, FullWindowSquareLightsEverything) {
    const Window2 w{Vec2(0, 0), Vec2(10, 10)};
    const Mask m = rasterize({rect(-1, -1, 11, 11)}, w, 32);
    EXPECT_EQ(m.count_on(), 32u * 32u);
    EXPECT_EQ(rasterize({}, w, 32).count_on(), 0u);
}

TEST(Rasterize, LeftHalfSquareCount) {
    const Window2 w{Vec2(0, 0), Vec2(10, 10)};
    for (int r : {16, 17, 64, 191}) {
        const Mask m = rasterize({rect(0, 0, 5, 10)}, w, r);
        const double half = r * r / 2.0;
        EXPECT_LE(std::abs(static_cast<double>(m.count_on()) - half), r) << "R=" << r;
    }
}

TEST(Rasterize, PixelZeroIsTheWindowMinimumCorner) {
    const Window2 w{Vec2(0, 0), Vec2(16, 16)};
    const Mask m = rasterize({rect(0, 0, 1, 2)}, w, 16);
    EXPECT_EQ(m.count_on(), 2u);
    EXPECT_TRUE(m.at(0, 0));
    EXPECT_TRUE(m.at(1, 0));  // row follows the second polygon coordinate
    EXPECT_FALSE(m.at(0, 1));
}

TEST(Rasterize, AgreesWithPerPixelFillOracle) {
    std::mt19937_64 rng(5);
    const Window2 w{Vec2(-20, -10), Vec2(20, 30)};
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<Polygon2> loops{random_star(rng, Vec2(0, 10), 18, 5 + trial % 13)};
        if (trial % 3 == 0) loops.push_back(random_star(rng, Vec2(3, 12), 6, 7));  // overlapping, even-odd
        for (int r : {16, 37, 64}) {
            EXPECT_EQ(rasterize(loops, w, r), oracle::fill_per_pixel(loops, w, r)) << "trial " << trial << " R=" << r;
        }
    }
}

TEST(Rasterize, AreaErrorWithinBoundaryBand) {
    Polygon2 hexagon;
    for (int i = 0; i < 6; ++i) {
        const double a = 2 * std::numbers::pi * i / 6 + 0.1;
        hexagon.push_back(Vec2(10.3 + 7.7 * std::cos(a), 9.1 + 7.7 * std::sin(a)));
    }
    const double exact = signed_area(hexagon);
    const double perimeter = 6 * 7.7;
    const Window2 w{Vec2(0, 0), Vec2(20, 20)};
    // misclassified pixels all meet the boundary: |error| <= perimeter * pixel diagonal
    for (int r : {32, 64, 128, 256, 512}) {
        const double h = 20.0 / r;
        const double err = std::abs(rasterize({hexagon}, w, r).count_on() * h * h - exact);
        EXPECT_LE(err, perimeter * std::sqrt(2.0) * h) << "R=" << r;
    }
}

TEST(Rasterize, ResolutionBelowSixteenRejected) {
    EXPECT_THROW((void)rasterize({}, Window2{Vec2(0, 0), Vec2(1, 1)}, 8), ConfigError);
}

TEST(MaskStackTest, MeanShapeThreeAndTwoPlanes) {
    SynthConfig cfg;
    cfg.n = 2;
    const TriMesh mesh = generate_subject(cfg, 0).mesh;
    const MaskStack three = make_mask_stack(mesh, protocol_for(mesh));
    ASSERT_EQ(three.masks.size(), 3u);
    for (const Mask& m : three.masks) EXPECT_GT(m.count_on(), 0u);
    EXPECT_EQ(three.input_size(), 3u * 64 * 64);
    EXPECT_NEAR(three.spacing_y, three.spacing_z, 1e-12);
    const MaskStack two = make_mask_stack(mesh, protocol_for(mesh, {0.4, 0.6}));
    EXPECT_EQ(two.masks.size(), 2u);
}

TEST(MaskStackTest, GrowingTheMeshGrowsEveryMask) {
    SynthConfig cfg;
    const TriMesh mesh = generate_subject(cfg, 3).mesh;
    SliceProtocol p = protocol_for(mesh, {0.35, 0.5, 0.65}, 96);
    p.window = shared_window({bounding_box(mesh)}, 0.3);
    // scale about the window centre so the planes keep cutting the same region
    const Vec3 c = 0.5 * (p.window.min + p.window.max);
    TriMesh bigger = mesh;
    for (Vec3& v : bigger.vertices) v = c + 1.1 * (v - c);
    const MaskStack a = make_mask_stack(mesh, p);
    const MaskStack b = make_mask_stack(bigger, p);
    for (std::size_t i = 0; i < a.masks.size(); ++i) EXPECT_GT(b.masks[i].count_on(), a.masks[i].count_on());
}

TEST(MaskStackTest, ProtocolValidation) {
    const TriMesh mesh = make_icosphere(2, 10.0);
    EXPECT_THROW((void)make_mask_stack(mesh, protocol_for(mesh, {0.5})), ConfigError);
    EXPECT_THROW((void)make_mask_stack(mesh, protocol_for(mesh, {0.5, 0.4})), ConfigError);
    EXPECT_THROW((void)make_mask_stack(mesh, protocol_for(mesh, {0.2, 0.4, 0.6, 0.8})), ConfigError);
    EXPECT_THROW((void)make_mask_stack(mesh, protocol_for(mesh, {0.35, 0.5}, 15)), ConfigError);
}

TEST(SharedWindowTest, MarginAndSquarePixels) {
    const Box3 a{Vec3(0, 0, 0), Vec3(100, 60, 40)};
    const Box3 b{Vec3(-10, 5, 5), Vec3(90, 70, 30)};
    const Box3 w = shared_window({a, b}, 0.1);
    EXPECT_NEAR(w.min.x(), -10 - 11.0, 1e-9);
    EXPECT_NEAR(w.max.x(), 100 + 11.0, 1e-9);
    EXPECT_NEAR(w.extent().y(), w.extent().z(), 1e-9);
    EXPECT_LE(w.min.y(), 0 - 7.0 + 1e-9);
    EXPECT_GE(w.max.y(), 70 + 7.0 - 1e-9);
    EXPECT_LE(w.min.z(), 0 - 4.0 + 1e-9);
    EXPECT_GE(w.max.z(), 40 + 4.0 - 1e-9);
}

TEST(MaskIo, RandomMaskRoundTrip) {
    testutil::TempDir dir("mask");
    std::mt19937_64 rng(2);
    Mask m(40);
    for (int r = 0; r < 40; ++r) {
        for (int c = 0; c < 40; ++c) m.set(r, c, rng() % 2);
    }
    save_mask(m, dir.path() / "m.pgm");
    EXPECT_EQ(load_mask(dir.path() / "m.pgm"), m);
}

TEST(MaskIo, NonBinaryValueIsRejected) {
    testutil::TempDir dir("mask");
    const auto path = dir.path() / "seven.pgm";
    {
        std::ofstream out(path, std::ios::binary);
        out << "P5\n16 16\n255\n";
        std::string payload(256, '\0');
        payload[17] = 7;
        out << payload;
    }
    try {
        (void)load_mask(path);
        FAIL() << "expected DataError";
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("binary masks must be 0 or 255"), std::string::npos) << e.what();
    }
}

TEST(MaskIo, StackRoundTripAndMixedResolutionRefused) {
    testutil::TempDir dir("mask");
    const TriMesh mesh = make_icosphere(3, 20.0);
    const MaskStack s = make_mask_stack(mesh, protocol_for(mesh, {0.3, 0.5, 0.7}, 48));
    save_mask_stack(s, dir.path() / "subj.json");
    const MaskStack back = load_mask_stack(dir.path() / "subj.json");
    ASSERT_EQ(back.masks.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(back.masks[i], s.masks[i]);
    EXPECT_EQ(back.offsets, s.offsets);
    EXPECT_EQ(back.spacing_y, s.spacing_y);
    EXPECT_EQ(back.window.min, s.window.min);
    EXPECT_EQ(back.window.max, s.window.max);

    MaskStack mixed = s;
    mixed.masks[1] = Mask(32);
    EXPECT_THROW(save_mask_stack(mixed, dir.path() / "mixed.json"), DataError);
}

TEST(MaskIo, HeaderMismatchRejected) {
    testutil::TempDir dir("mask");
    const auto path = dir.path() / "bad.pgm";
    {
        std::ofstream out(path, std::ios::binary);
        out << "P2\n16 16\n255\n";
    }
    EXPECT_THROW((void)load_mask(path), DataError);
    {
        std::ofstream out(path, std::ios::binary);
        out << "P5\n16 16\n255\n" << std::string(100, '\0');
    }
    EXPECT_THROW((void)load_mask(path), DataError);
}
