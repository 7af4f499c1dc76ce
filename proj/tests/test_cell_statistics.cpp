#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "randlat/cell_statistics.hpp"

using namespace randlat;

namespace {
NuclearConfiguration gaussian_cfg(std::uint64_t seed, double half_cells = 8.5) {
    return sample_configuration(LatticeSpec::cubic(),
                                DisplacementLaw::gaussian_isotropic(0.5),
                                ChargeLaw::constant(1.0),
                                Box3{{-half_cells, -half_cells, -half_cells},
                                     {half_cells, half_cells, half_cells}},
                                4.0, seed);
}
}  // namespace

TEST_CASE("perfect lattice cell statistics") {
    auto cfg = sample_configuration(LatticeSpec::cubic(), DisplacementLaw::point_mass(),
                                    ChargeLaw::constant(1.0),
                                    Box3{{-4.5, -4.5, -4.5}, {4.5, 4.5, 4.5}}, 2.0, 1);
    CellIndex index(cfg);
    auto st = cell_statistics(index, {0, 0, 0}, 0.5, {1.0, 2.0});
    REQUIRE(st.x0 == 1);
    REQUIRE(st.x1 == 1.0);
    REQUIRE(st.xp_value(2.0) == 4.0);  // min(1, 0.5)^-2
    REQUIRE_FALSE(st.margin_truncated);
}

TEST_CASE("compact law with a guaranteed gap bounds X1 by 1/eta") {
    // Displacements within [-0.25, 0.25)^3 leave a gap of at least 0.5
    // between axis neighbors, so X0 = 1 and X1 <= 2 in every cell.
    auto law = DisplacementLaw::compact_in_cell({{-0.25, -0.25, -0.25}, {0.25, 0.25, 0.25}});
    auto cfg = sample_configuration(LatticeSpec::cubic(), law, ChargeLaw::constant(1.0),
                                    Box3{{-5.5, -5.5, -5.5}, {5.5, 5.5, 5.5}}, 2.0, 21);
    CellIndex index(cfg);
    for (const Vec3i& j : interior_cells(cfg)) {
        auto st = cell_statistics(index, j, 0.5);
        REQUIRE(st.x0 == 1);
        REQUIRE(st.x1 <= 2.0);
    }
}

TEST_CASE("statistics match a from-scratch recomputation on random cells") {
    auto cfg = gaussian_cfg(47);
    CellIndex index(cfg);
    auto cells = interior_cells(cfg);
    Stream pick(derive_key(5, stream::mc));
    for (int t = 0; t < 100; ++t) {
        const Vec3i& j = cells[pick.next_u64() % cells.size()];
        auto st = cell_statistics(index, j, 0.5, {1.0, 2.0});
        // recompute from scratch: gather nuclei of cell j by full scan
        std::int64_t x0 = 0;
        double x1 = 0, xp2 = 0;
        for (std::size_t i = 0; i < cfg.size(); ++i) {
            if (cfg.lattice.cell_of(cfg.position(i)) != j) continue;
            ++x0;
            double d = oracle::nn_brute_force_exact(cfg, i);
            x1 += 1.0 / d;
            double dp = std::min(d, 0.5);
            xp2 += 1.0 / (dp * dp);
        }
        REQUIRE(st.x0 == x0);
        REQUIRE(st.x1 == Catch::Approx(x1).epsilon(1e-13));
        REQUIRE(st.xp_value(2.0) == Catch::Approx(xp2).epsilon(1e-13));
    }
}

TEST_CASE("margin cells are rejected") {
    auto cfg = gaussian_cfg(3, 4.5);
    CellIndex index(cfg);
    REQUIRE_THROWS_AS(cell_statistics(index, {5, 0, 0}, 0.5), std::invalid_argument);
    REQUIRE_THROWS_AS(cell_statistics(index, {-7, 0, 0}, 0.5), std::invalid_argument);
}

TEST_CASE("truncated statistics are monotone in eps and obey the square bound") {
    auto cfg = gaussian_cfg(11, 6.5);
    CellIndex index(cfg);
    for (const Vec3i& j : interior_cells(cfg)) {
        double prev = -1;
        for (double eps : {0.1, 0.2, 0.4, 0.8}) {
            auto st = cell_statistics(index, j, eps, {2.0});
            double v = st.xp_value(2.0);
            if (prev >= 0) REQUIRE(v <= prev * (1 + 1e-12));
            prev = v;
            // X'_2 <= (X0/eps + X1)^2, from (delta')^-1 <= eps^-1 + delta^-1
            double bound = (static_cast<double>(st.x0) / eps + st.x1);
            REQUIRE(v <= bound * bound * (1 + 1e-12));
        }
    }
}

TEST_CASE("cell statistics are equivariant under lattice shifts") {
    auto cfg = gaussian_cfg(13, 5.5);
    const Vec3i k{2, -1, 1};
    auto shifted = shift_configuration(cfg, k);
    CellIndex a(cfg), b(shifted);
    for (const Vec3i& j : interior_cells(shifted)) {
        auto sj = cell_statistics(b, j, 0.5, {1.0, 2.0});
        auto so = cell_statistics(a, j + k, 0.5, {1.0, 2.0});
        REQUIRE(sj.x0 == so.x0);
        REQUIRE(sj.x1 == so.x1);  // bit-exact: separations are site-relative
        REQUIRE(sj.xp_value(2.0) == so.xp_value(2.0));
    }
}

TEST_CASE("empty cells carry the empty-sum convention") {
    auto cfg = sample_configuration(LatticeSpec::cubic(), DisplacementLaw::point_mass(),
                                    ChargeLaw::vacancy(0.97, 1.0),
                                    Box3{{-6.5, -6.5, -6.5}, {6.5, 6.5, 6.5}}, 2.0, 2);
    REQUIRE(cfg.size() >= 2);
    CellIndex index(cfg);
    bool saw_empty = false;
    for (const Vec3i& j : interior_cells(cfg)) {
        auto st = cell_statistics(index, j, 0.5);
        if (st.x0 == 0) {
            saw_empty = true;
            REQUIRE(st.x1 == 0.0);
            REQUIRE(st.xp_value(1.0) == 0.0);
        }
    }
    REQUIRE(saw_empty);
}
