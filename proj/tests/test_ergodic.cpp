#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <sstream>

#include "randlat/csv.hpp"
#include "randlat/ergodic.hpp"

using namespace randlat;

namespace {
ModelSpec gaussian_model() {
    ModelSpec m;
    m.displacement = DisplacementLaw::gaussian_isotropic(0.5);
    return m;
}
}  // namespace

TEST_CASE("domain sequences validate and report their distortion") {
    auto seq = DomainSequence::cubes({8, 16, 32});
    REQUIRE(seq.containment_constant() == Catch::Approx(std::sqrt(3.0)).epsilon(1e-12));
    REQUIRE_THROWS_AS(DomainSequence::cubes({8, 8}), std::invalid_argument);
    REQUIRE_THROWS_AS(DomainSequence::cubes({}), std::invalid_argument);
}

TEST_CASE("spatial averages of the trivial model are exactly one at every size") {
    ModelSpec m;  // point mass
    auto res = ergodic_average(m, {StatisticSpec::Kind::X0},
                               DomainSequence::cubes({4, 8}), 5, 3);
    for (const auto& r : res) {
        REQUIRE(r.trace_average == 1.0);
        REQUIRE(r.cross_mean == 1.0);
        REQUIRE(r.l1_error == 0.0);
    }
}

TEST_CASE("occupation averages concentrate as domains grow") {
    auto res = ergodic_average(gaussian_model(), {StatisticSpec::Kind::X0},
                               DomainSequence::cubes({8, 16, 32}), 7, 60);
    REQUIRE(res.size() == 3);
    // L1 errors nonincreasing within 2 combined standard errors
    for (std::size_t i = 1; i < res.size(); ++i) {
        double tol = 2 * (res[i - 1].l1_error_se + res[i].l1_error_se);
        REQUIRE(res[i].l1_error <= res[i - 1].l1_error + tol);
    }
    REQUIRE(res.back().l1_error <= 0.02);
    REQUIRE(std::abs(res.back().cross_mean - 1.0) < 0.01);
}

TEST_CASE("a single trace tracks the cross-replica mean of the largest size") {
    auto res = ergodic_average(gaussian_model(), {StatisticSpec::Kind::X1},
                               DomainSequence::cubes({8, 16, 32}), 11, 40);
    double target = res.back().cross_mean;
    for (std::size_t i = 0; i < res.size(); ++i) {
        double bracket = 6.0 * (res[i].l1_error + res.back().l1_error) + 1e-12;
        if (i + 1 == res.size())
            REQUIRE(std::abs(res[i].trace_average - target) <= bracket);
    }
    // brackets shrink with size
    REQUIRE(res[2].l1_error < res[0].l1_error);
}

TEST_CASE("charge density estimates converge to the mean charge per cell") {
    auto res = neutrality_estimate(gaussian_model(), DomainSequence::cubes({8, 16}), 60, 3);
    for (const auto& r : res) {
        REQUIRE(r.estimate.ci_lo <= 1.0);
        REQUIRE(r.estimate.ci_hi >= 1.0);
    }

    ModelSpec vac;
    vac.displacement = DisplacementLaw::gaussian_isotropic(0.5);
    vac.charge = ChargeLaw::vacancy(0.3, 2.0);
    auto rv = neutrality_estimate(vac, DomainSequence::cubes({16, 32}), 60, 4);
    REQUIRE(rv.back().estimate.ci_lo <= 1.4);
    REQUIRE(rv.back().estimate.ci_hi >= 1.4);

    ModelSpec pm;
    pm.charge = ChargeLaw::constant(2.0);
    auto rp = neutrality_estimate(pm, DomainSequence::cubes({8, 16}), 30, 5);
    for (const auto& r : rp) {
        REQUIRE(r.estimate.mean == 2.0);
        REQUIRE(r.estimate.std_dev == 0.0);
    }
}

TEST_CASE("per-volume energies of the deterministic model have no spread") {
    ModelSpec pm;
    auto series = thermo_scan(pm, DomainSequence::cubes({8, 16, 32}), 0.5, 1.0, 30, 7);
    // replicas are bit-identical; the residual spread is summation roundoff
    for (const auto& s : series.per_size) REQUIRE(s.l1_dev <= 1e-13 * s.mean);
    // surface component per volume decays like |D|^(-1/3)
    std::vector<double> lx, ly;
    for (const auto& s : series.per_size) {
        lx.push_back(std::log(s.volume));
        ly.push_back(std::log(s.boundary_mean));
    }
    auto f = ols_fit(lx, ly);
    REQUIRE(f.slope > -1.0 / 3.0 - 0.1);
    REQUIRE(f.slope < -1.0 / 3.0 + 0.1);
}

TEST_CASE("the kinetic component responds linearly to its coefficient") {
    ModelSpec pm;
    auto s1 = thermo_scan(pm, DomainSequence::cubes({8, 16}), 0.5, 1.0, 30, 7);
    auto s2 = thermo_scan(pm, DomainSequence::cubes({8, 16}), 0.5, 2.0, 30, 7);
    for (std::size_t i = 0; i < 2; ++i)
        REQUIRE(s2.per_size[i].kinetic_mean == 2.0 * s1.per_size[i].kinetic_mean);
    REQUIRE(s2.fitted_limit - s1.fitted_limit ==
            Catch::Approx(s1.per_size[1].kinetic_mean).epsilon(1e-12));
}

TEST_CASE("per-volume fluctuations decay like a central limit") {
    auto series = thermo_scan(gaussian_model(), DomainSequence::cubes({8, 16, 32}), 0.5,
                              1.0, 40, 9);
    REQUIRE(series.l1_decay_slope < -0.2);
    REQUIRE(series.l1_decay_slope > -0.8);
    REQUIRE(series.fitted_limit > 0.0);
}

TEST_CASE("gap diagnostic on an empty configuration") {
    NuclearConfiguration empty;
    empty.window = {{-5, -5, -5}, {5, 5, 5}};
    auto d = DomainShape::cube(6.0, {0.5, 0.5, 0.5});
    auto rep = graf_schenker_gap(empty, d, TilingSpec(2.0), 1.0, 0.5, 1.0, 500, 3);
    REQUIRE(rep.lhs == 0.0);
    REQUIRE(rep.integral_mean == 0.0);
    REQUIRE(rep.rhs == Catch::Approx(-0.5 * d.volume()).epsilon(1e-12));
    REQUIRE(rep.gap >= 0.0);
}

TEST_CASE("gap diagnostic is positive when the penalty term dominates") {
    auto cfg = sample_configuration(LatticeSpec::cubic(), DisplacementLaw::point_mass(),
                                    ChargeLaw::constant(1.0), Box3{{-2, -2, -2}, {3, 3, 3}},
                                    1.0, 1);
    auto d = DomainShape::cube(1.2, {0.5, 0.5, 0.5});
    auto rep = graf_schenker_gap(cfg, d, TilingSpec(8.0), 1.0, 0.5, 1.0, 500, 4);
    REQUIRE(rep.gap > 0.0);
}

TEST_CASE("gap diagnostic sweeps the tiling scale") {
    auto cfg = sample_configuration(LatticeSpec::cubic(),
                                    DisplacementLaw::gaussian_isotropic(0.5),
                                    ChargeLaw::constant(1.0),
                                    Box3{{-6.5, -6.5, -6.5}, {7.5, 7.5, 7.5}}, 4.0, 5);
    auto d = DomainShape::cube(8.0, {0.5, 0.5, 0.5});
    double prev_rhs = -1e300;
    for (double ell : {1.0, 2.0, 4.0}) {
        auto rep = graf_schenker_gap(cfg, d, TilingSpec(ell), 1.0, 0.5, 1.0, 600, 6);
        REQUIRE(std::isfinite(rep.gap));
        REQUIRE(rep.integral_se < 0.2 * std::max(1.0, std::abs(rep.integral_mean)));
        prev_rhs = rep.rhs;
    }
    (void)prev_rhs;  // trend table is reported, not asserted
}

TEST_CASE("charge density agrees with the exported charge table per replica") {
    ModelSpec m;
    m.displacement = DisplacementLaw::uniform_ball(0.3);
    m.charge = ChargeLaw::uniform_interval(1.0, 3.0);
    auto seq = DomainSequence::cubes({6});
    auto res = neutrality_estimate(m, seq, 2, 77);

    // recompute both replicas from the exported nuclei tables
    DomainShape d = seq.shape(0);
    double acc = 0;
    for (std::size_t r = 0; r < 2; ++r) {
        auto cfg = m.realize(d.bounding_box(), m.displacement.max_cutoff(),
                             MomentEstimate::replica_seed(77, r));
        std::ostringstream os;
        export_nuclei_csv(cfg, os);
        std::istringstream is(os.str());
        std::string line;
        std::getline(is, line);  // header
        double total = 0;
        while (std::getline(is, line)) {
            double x, y, z, q;
            std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf", &x, &y, &z, &q);
            if (d.contains({x, y, z})) total += q;
        }
        acc += total / d.volume();
    }
    REQUIRE(res[0].estimate.mean == Catch::Approx(acc / 2.0).epsilon(1e-12));
}

TEST_CASE("gap diagnostic validates the group sample size") {
    NuclearConfiguration empty;
    empty.window = {{-1, -1, -1}, {1, 1, 1}};
    REQUIRE_THROWS_AS(graf_schenker_gap(empty, DomainShape::cube(2.0), TilingSpec(2.0), 1.0,
                                        0.5, 1.0, 100, 1),
                      std::invalid_argument);
}
