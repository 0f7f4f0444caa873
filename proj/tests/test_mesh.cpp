#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "ssmrecon/error.hpp"
#include "ssmrecon/mesh.hpp"
#include "ssmrecon/obj_io.hpp"
#include "ssmrecon/surface_index.hpp"
#include "ssmrecon/synth.hpp"
#include "support/oracles.hpp"

using namespace ssmrecon;

namespace {

TriMesh cube10() { return make_box(Vec3(0, 0, 0), Vec3(10, 10, 10)); }

std::string obj_text(const TriMesh& mesh) {
    std::ostringstream out;
    write_obj(mesh, out);
    return out.str();
}

int count_prefix(const std::string& text, const std::string& prefix) {
    std::istringstream in(text);
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
        if (line.rfind(prefix, 0) == 0) ++n;
    }
    return n;
}

}  // namespace

TEST(MeshVolume, CubeOfEdge10IsOneCubicCentimetre) {
    EXPECT_NEAR(signed_volume(cube10()), 1.0, 1e-12);
    EXPECT_FALSE(mesh_volume(cube10()).inward);
}

TEST(MeshVolume, InvertedCubeReportsMagnitudeAndFlag) {
    TriMesh m = cube10();
    flip_orientation(m);
    const VolumeResult v = mesh_volume(m);
    EXPECT_NEAR(v.cm3, 1.0, 1e-12);
    EXPECT_TRUE(v.inward);
}

TEST(MeshVolume, IcosphereMatchesSphereAndVoxelOracle) {
    const TriMesh s = make_icosphere(4, 10.0);
    const double analytic = 4.0 / 3.0 * std::numbers::pi * 1000.0 / 1000.0;
    EXPECT_NEAR(signed_volume(s), 4.18879, 4.18879 * 0.005);
    EXPECT_NEAR(signed_volume(s), analytic, analytic * 0.005);
    const double voxels = oracle::voxel_volume_mm3(s, 0.25) / 1000.0;
    EXPECT_NEAR(signed_volume(s), voxels, voxels * 0.01);
}

TEST(MeshVolume, OpenMeshNamesAnEdge) {
    TriMesh m = cube10();
    m.faces.pop_back();
    try {
        (void)signed_volume(m);
        FAIL() << "expected DataError";
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("edge ("), std::string::npos) << e.what();
    }
}

TEST(MeshVolume, RigidMotionInvariance) {
    const TriMesh base = make_icosphere(3, 7.0);
    const double v0 = signed_volume(base);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-50.0, 50.0);
    for (int trial = 0; trial < 5; ++trial) {
        TriMesh m = base;
        const Eigen::Matrix3d r = oracle::rotation(Vec3(u(rng), u(rng), u(rng)), u(rng));
        const Vec3 t(u(rng), u(rng), u(rng));
        for (Vec3& v : m.vertices) v = r * v + t;
        EXPECT_NEAR(signed_volume(m), v0, 1e-9 * v0);
    }
}

TEST(MeshVolume, ScalesCubically) {
    const TriMesh base = make_icosphere(3, 5.0);
    const double v0 = signed_volume(base);
    for (double s : {0.5, 2.0, 3.7}) {
        TriMesh m = base;
        scale(m, s);
        EXPECT_NEAR(signed_volume(m), v0 * s * s * s, 1e-9 * v0 * s * s * s);
    }
}

TEST(MeshVolume, SyntheticLiversAgreeWithVoxelOracle) {
    SynthConfig cfg;
    cfg.n = 2;
    cfg.seed = 99;
    for (int i = 0; i < cfg.n; ++i) {
        const SynthSubject s = generate_subject(cfg, i);
        const double voxels = oracle::voxel_volume_mm3(s.mesh, 0.5) / 1000.0;
        EXPECT_NEAR(signed_volume(s.mesh), voxels, 0.01 * voxels) << "subject " << i;
    }
}

TEST(MeshValidate, RejectsOutOfRangeAndRepeatedIndices) {
    TriMesh m = cube10();
    m.faces[0] = {0, 1, 8};
    EXPECT_THROW(validate_indices(m), DataError);
    m.faces[0] = {0, 0, 1};
    EXPECT_THROW(validate_indices(m), DataError);
    EXPECT_NO_THROW(validate_indices(cube10()));
    EXPECT_FALSE(find_open_edge(cube10()).has_value());
}

TEST(SurfaceSamples, SingleTriangleSamplesStayOnTheTriangle) {
    TriMesh tri{{Vec3(1, 2, 3), Vec3(11, 4, 5), Vec3(3, 12, -4)}, {Face{0, 1, 2}}};
    const Vec3 n = (tri.vertices[1] - tri.vertices[0]).cross(tri.vertices[2] - tri.vertices[0]).normalized();
    for (const Vec3& p : surface_samples(tri, 1000, 17)) {
        EXPECT_LT(std::abs((p - tri.vertices[0]).dot(n)), 1e-9);
        EXPECT_LT(oracle::triangle_distance(p, tri.vertices[0], tri.vertices[1], tri.vertices[2]), 1e-9);
    }
}

TEST(SurfaceSamples, CubeFaceSharesFollowArea) {
    const TriMesh m = make_box(Vec3(0, 0, 0), Vec3(10, 20, 30));
    const auto pts = surface_samples(m, 60000, 4);
    // Box faces: x = 0/10 have area 600, y = 0/20 have 300, z = 0/30 have 200.
    const double total = 2 * (600.0 + 300.0 + 200.0);
    std::array<int, 6> count{};
    for (const Vec3& p : pts) {
        if (std::abs(p.x()) < 1e-9) ++count[0];
        else if (std::abs(p.x() - 10) < 1e-9) ++count[1];
        else if (std::abs(p.y()) < 1e-9) ++count[2];
        else if (std::abs(p.y() - 20) < 1e-9) ++count[3];
        else if (std::abs(p.z()) < 1e-9) ++count[4];
        else if (std::abs(p.z() - 30) < 1e-9) ++count[5];
    }
    const std::array<double, 6> area{600, 600, 300, 300, 200, 200};
    for (int f = 0; f < 6; ++f) {
        EXPECT_NEAR(count[f] / 60000.0, area[f] / total, 0.02 * area[f] / total) << "face " << f;
    }
}

TEST(SurfaceSamples, SameSeedSamePoints) {
    const TriMesh m = make_icosphere(2, 3.0);
    EXPECT_EQ(surface_samples(m, 500, 8), surface_samples(m, 500, 8));
    EXPECT_NE(surface_samples(m, 500, 8), surface_samples(m, 500, 9));
    EXPECT_THROW((void)surface_samples(TriMesh{}, 10, 1), DataError);
}

TEST(NearestDistance, VertexAndAnalyticCases) {
    const TriMesh m = cube10();
    for (const Vec3& v : m.vertices) EXPECT_NEAR(nearest_surface_distance(v, m), 0.0, 1e-12);
    EXPECT_NEAR(nearest_surface_distance(Vec3(5, 5, 20), m), 10.0, 1e-12);
    EXPECT_NEAR(nearest_surface_distance(Vec3(0, 0, 15), m), 5.0, 1e-12);
    const TriMesh centred = make_box(Vec3(-5, -5, -5), Vec3(5, 5, 5));
    EXPECT_NEAR(nearest_surface_distance(Vec3(0, 0, 15), centred), 10.0, 1e-12);
    // edge and corner regions
    EXPECT_NEAR(nearest_surface_distance(Vec3(13, 5, 14), m), 5.0, 1e-12);
    EXPECT_NEAR(nearest_surface_distance(Vec3(-1, -2, -2), m), 3.0, 1e-12);
    EXPECT_THROW((void)nearest_surface_distance(Vec3::Zero(), TriMesh{}), DataError);
}

TEST(NearestDistance, AgreesWithBruteForceOracle) {
    const TriMesh m = make_icosphere(3, 10.0);  // 1280 faces
    TriMesh small = make_icosphere(2, 10.0);    // 320 faces
    small.vertices[5] *= 1.3;
    const SurfaceIndex index(m);
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(-25.0, 25.0);
    for (int i = 0; i < 400; ++i) {
        const Vec3 p(u(rng), u(rng), u(rng));
        EXPECT_NEAR(index.distance(p), oracle::surface_distance(p, m), 1e-9);
        EXPECT_NEAR(nearest_surface_distance(p, small), oracle::surface_distance(p, small), 1e-9);
        EXPECT_NEAR(nearest_surface_distance_brute(p, small), oracle::surface_distance(p, small), 1e-9);
    }
}

TEST(ObjIo, CubeWritesEightVerticesTwelveFaces) {
    const std::string text = obj_text(cube10());
    EXPECT_EQ(count_prefix(text, "v "), 8);
    EXPECT_EQ(count_prefix(text, "f "), 12);
    std::istringstream in(text);
    const TriMesh back = read_obj(in);
    EXPECT_EQ(back.vertex_count(), 8u);
    EXPECT_EQ(back.face_count(), 12u);
}

TEST(ObjIo, RoundTripIsExact) {
    testutil::TempDir dir("obj");
    TriMesh m = make_icosphere(3, 10.0);
    for (Vec3& v : m.vertices) v += Vec3(1.0 / 3.0, -2e-7, 123.456789);
    save_mesh(m, dir.path() / "s.obj");
    const TriMesh back = load_mesh(dir.path() / "s.obj");
    ASSERT_EQ(back.vertex_count(), m.vertex_count());
    double worst = 0.0;
    for (std::size_t i = 0; i < m.vertex_count(); ++i) worst = std::max(worst, (back.vertices[i] - m.vertices[i]).norm());
    EXPECT_LT(worst, 1e-6);
    EXPECT_EQ(worst, 0.0);
    EXPECT_EQ(back.faces, m.faces);
}

TEST(ObjIo, EmptyMeshRoundTrips) {
    testutil::TempDir dir("obj");
    save_mesh(TriMesh{}, dir.path() / "e.obj");
    const TriMesh back = load_mesh(dir.path() / "e.obj");
    EXPECT_EQ(back.vertex_count(), 0u);
    EXPECT_EQ(back.face_count(), 0u);
}

TEST(ObjIo, QuadsFanAndNegativeIndicesAndIgnoredRecords) {
    std::istringstream in(
        "# comment\n"
        "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\n"
        "vn 0 0 1\nvt 0 0\n"
        "f 1/1/1 2/1/1 3/1/1 4/1/1\n"
        "f -4 -2 -1\n");
    const TriMesh m = read_obj(in);
    ASSERT_EQ(m.face_count(), 3u);
    EXPECT_EQ(m.faces[0], (Face{0, 1, 2}));
    EXPECT_EQ(m.faces[1], (Face{0, 2, 3}));
    EXPECT_EQ(m.faces[2], (Face{0, 2, 3}));
}

TEST(ObjIo, OutOfRangeIndexNamesTheLine) {
    std::ostringstream text;
    for (int i = 0; i < 8; ++i) text << "v " << i << " 0 0\n";
    text << "f 1 2 3\n";
    text << "f 1 2 9\n";
    std::istringstream in(text.str());
    try {
        (void)read_obj(in, "bad.obj");
        FAIL() << "expected DataError";
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("bad.obj:10"), std::string::npos) << e.what();
    }
}

TEST(ObjIo, MalformedVertexAndMissingFile) {
    std::istringstream in("v 1 2\n");
    EXPECT_THROW((void)read_obj(in), DataError);
    EXPECT_THROW((void)load_mesh("/nonexistent/path/x.obj"), DataError);
}
