#include <catch2/catch_amalgamated.hpp>

#include "randlat/tiling.hpp"

using namespace randlat;

TEST_CASE("reference tetrahedron has unit circumradius and the closed-form volume") {
    TilingSpec t(1.0);
    REQUIRE(t.circumradius() == Catch::Approx(1.0).epsilon(1e-12));
    REQUIRE(t.simplex_volume() == Catch::Approx(8.0 / (9.0 * std::sqrt(3.0))).epsilon(1e-12));
    REQUIRE(t.inradius() == Catch::Approx(1.0 / 3.0).epsilon(1e-12));
    REQUIRE_THROWS_AS(TilingSpec(0.5), std::invalid_argument);
}

TEST_CASE("group elements are deterministic and translations stay in the cell") {
    auto lat = LatticeSpec::cubic();
    auto a = sample_group_element(lat, TranslationMode::CellTranslation, 9);
    auto b = sample_group_element(lat, TranslationMode::CellTranslation, 9);
    REQUIRE(a.rotation.c[0] == b.rotation.c[0]);
    REQUIRE(a.translation == b.translation);
    for (std::uint64_t s = 0; s < 200; ++s) {
        auto g = sample_group_element(lat, TranslationMode::CellTranslation, s);
        for (int i = 0; i < 3; ++i) {
            REQUIRE(g.translation[i] >= -0.5);
            REQUIRE(g.translation[i] < 0.5);
        }
        REQUIRE(g.rotation.orthonormality_residual() < 1e-12);
        REQUIRE(g.rotation.det() == Catch::Approx(1.0).epsilon(1e-9));
    }
    Box3 fb{{0, 0, 0}, {2, 3, 4}};
    auto g = sample_group_element(lat, TranslationMode::Free, 5, fb);
    REQUIRE(fb.contains(g.translation));
}

TEST_CASE("rotation matrix entries average to zero") {
    auto lat = LatticeSpec::cubic();
    const int n = 20000;
    double acc[3][3] = {};
    for (int s = 0; s < n; ++s) {
        auto g = sample_group_element(lat, TranslationMode::CellTranslation,
                                      static_cast<std::uint64_t>(s));
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) acc[i][j] += g.rotation.c[j][i];
    }
    // entries have variance 1/3 under the Haar measure
    double tol = 4.0 * std::sqrt(1.0 / 3.0 / n);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) REQUIRE(std::abs(acc[i][j] / n) < tol);
}

TEST_CASE("rotation angles follow the haar density") {
    Stream s(derive_key(77, stream::rotation));
    std::vector<double> angles(100000);
    for (auto& a : angles) a = rotation_angle(uniform_rotation(s));
    double d = ks_statistic(angles, haar_angle_cdf);
    REQUIRE(d < ks_critical_coefficient(0.01) / std::sqrt(100000.0));
}

TEST_CASE("tiling identity holds for a cube") {
    auto cube = DomainShape::cube(10.0);
    auto rep = tiling_volume_identity(cube, TilingSpec(2.0), 1000, 100, 31);
    REQUIRE(rep.lhs == 1000.0);
    REQUIRE(rep.rel_error < 0.01);
}

TEST_CASE("tiling identity holds on a simplex-shaped domain") {
    Stream s(derive_key(5, stream::rotation));
    Mat3 r = uniform_rotation(s);
    TilingSpec t(2.0);
    std::array<Vec3, 4> scaled;
    for (int i = 0; i < 4; ++i) scaled[i] = t.simplex[i] * t.scale;
    auto dom = DomainShape::simplex(scaled).rotated(r).translated({0.2, 0.4, -0.1});
    auto rep = tiling_volume_identity(dom, t, 1500, 80, 32);
    REQUIRE(rep.rel_error < 0.01);
}

TEST_CASE("tiling identity is scale-free in the domain size") {
    auto tiny = DomainShape::cube(0.2);
    auto rep = tiling_volume_identity(tiny, TilingSpec(1.0), 1000, 50, 33);
    REQUIRE(rep.lhs == Catch::Approx(0.008));
    REQUIRE(rep.rel_error < 0.015);
}

TEST_CASE("tiling identity across shapes and scales") {
    auto ball = DomainShape::ball(5.0);
    for (double ell : {1.0, 2.0, 4.0}) {
        auto rep = tiling_volume_identity(ball, TilingSpec(ell), 1000, 50, 34);
        REQUIRE(rep.rel_error < 0.015);
    }
}

TEST_CASE("tiling identity validates its sample counts") {
    auto cube = DomainShape::cube(4.0);
    REQUIRE_THROWS_AS(tiling_volume_identity(cube, TilingSpec(1.0), 100, 10, 1),
                      std::invalid_argument);
}

TEST_CASE("inner cells never cover more than the domain") {
    auto cube = DomainShape::cube(16.0, {0.5, 0.5, 0.5});
    auto cls = classify_cells(cube, TilingSpec(2.0), 41);
    REQUIRE(static_cast<double>(cls.inner) * 1.0 <= cube.volume());
    REQUIRE(cls.boundary > 0);
}

TEST_CASE("cell classification is invariant under lattice translations") {
    TilingSpec t(2.0);
    auto a = classify_cells(DomainShape::cube(16.0, {0.5, 0.5, 0.5}), t, 42);
    auto b = classify_cells(DomainShape::cube(16.0, {3.5, -1.5, 2.5}), t, 42);
    REQUIRE(a.inner == b.inner);
    REQUIRE(a.boundary == b.boundary);
}

TEST_CASE("boundary cell counts grow like a surface") {
    TilingSpec t(2.0);
    auto s16 = classify_cells(DomainShape::cube(16.0, {0.5, 0.5, 0.5}), t, 43);
    auto s32 = classify_cells(DomainShape::cube(32.0, {0.5, 0.5, 0.5}), t, 43);
    double ratio = static_cast<double>(s32.boundary) / static_cast<double>(s16.boundary);
    REQUIRE(ratio > 3.0);
    REQUIRE(ratio < 5.5);
}
