#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "randlat/cell_index.hpp"
#include "randlat/domain.hpp"
#include "randlat/stats.hpp"

namespace randlat {

// Intersection of two regions, seen through the same split-argument interface
// as DomainShape. For interior points the distance to the intersection's
// boundary is the smaller of the two distances.
template <class RegionA, class RegionB>
struct RegionIntersection {
    const RegionA& a;
    const RegionB& b;
    bool contains_parts(const Vec3& base, const Vec3& off) const {
        return a.contains_parts(base, off) && b.contains_parts(base, off);
    }
    double boundary_distance_parts(const Vec3& base, const Vec3& off) const {
        return std::min(a.boundary_distance_parts(base, off),
                        b.boundary_distance_parts(base, off));
    }
};

struct ScreeningCloud {
    std::size_t nucleus_index = 0;
    Vec3 nucleus_position{};
    double nucleus_charge = 0.0;
    Vec3 center{};          // cloud center X; cloud charge is -nucleus_charge
    double radius = 0.0;    // delta' / 8
    double delta_prime = 0.0;
    bool on_top = true;
    Vec3 inward_direction{};  // recorded for cone-offset placements
};

// Screens every nucleus of the configuration inside D with a radial cloud of
// opposite total charge: on top of the nucleus when it sits deeper than
// cone_epsilon, otherwise displaced by delta'/4 along the inward direction
// toward the eroded domain. Cloud radii are delta'/8 with
// delta' = min(delta, cone_epsilon).
inline std::vector<ScreeningCloud> build_screening(const NuclearConfiguration& config,
                                                   const DomainShape& domain,
                                                   double cone_epsilon, std::uint64_t seed) {
    if (!(cone_epsilon > 0))
        throw std::invalid_argument("build_screening: cone_epsilon must be > 0");
    CellIndex index(config);
    Stream erode_stream(derive_key(seed, stream::mc));
    std::vector<ScreeningCloud> clouds;
    for (std::size_t i = 0; i < config.size(); ++i) {
        const Nucleus& n = config.nuclei[i];
        Vec3 site = config.lattice.site_position(n.site);
        if (!domain.contains_parts(site, n.disp)) continue;
        ScreeningCloud c;
        c.nucleus_index = i;
        c.nucleus_position = config.position(i);
        c.nucleus_charge = n.charge;
        c.delta_prime = std::min(index.nearest_neighbor(i).delta, cone_epsilon);
        c.radius = c.delta_prime / 8.0;
        double depth = domain.boundary_distance_parts(site, n.disp);
        if (depth >= cone_epsilon) {
            c.on_top = true;
            c.center = c.nucleus_position;
        } else {
            Vec3 target;
            try {
                target = domain.nearest_eroded_point(c.nucleus_position, cone_epsilon,
                                                     erode_stream);
            } catch (const std::runtime_error& e) {
                std::ostringstream os;
                os << "build_screening: no inward direction for nucleus " << i << " at "
                   << c.nucleus_position << ": " << e.what();
                throw std::runtime_error(os.str());
            }
            Vec3 dir = target - c.nucleus_position;
            double len = dir.norm();
            if (len == 0.0) {
                c.on_top = true;  // already on the eroded set
                c.center = c.nucleus_position;
            } else {
                c.on_top = false;
                c.inward_direction = dir / len;
                c.center = c.nucleus_position + c.inward_direction * (c.delta_prime / 4.0);
            }
        }
        if (!domain.contains(c.center) || domain.boundary_distance(c.center) < c.radius) {
            std::ostringstream os;
            os << "build_screening: no admissible cloud placement for nucleus " << i << " at "
               << c.nucleus_position << " (depth " << depth
               << "); the domain is thinner than its cone audit suggested";
            throw std::runtime_error(os.str());
        }
        clouds.push_back(c);
    }

    // Pairwise disjointness; overlap needs centers within cone_epsilon/4, so a
    // coarse hash grid keeps this linear.
    const double cell = std::max(cone_epsilon, 1e-9);
    std::unordered_map<Vec3i, std::vector<std::size_t>, Vec3iHash> grid;
    auto key_of = [&](const Vec3& p) {
        return Vec3i{static_cast<std::int64_t>(std::floor(p.x / cell)),
                     static_cast<std::int64_t>(std::floor(p.y / cell)),
                     static_cast<std::int64_t>(std::floor(p.z / cell))};
    };
    for (std::size_t i = 0; i < clouds.size(); ++i) {
        Vec3i k = key_of(clouds[i].center);
        for (std::int64_t dx = -1; dx <= 1; ++dx)
            for (std::int64_t dy = -1; dy <= 1; ++dy)
                for (std::int64_t dz = -1; dz <= 1; ++dz) {
                    auto it = grid.find(k + Vec3i{dx, dy, dz});
                    if (it == grid.end()) continue;
                    for (std::size_t j : it->second) {
                        double d = (clouds[i].center - clouds[j].center).norm();
                        if (d <= clouds[i].radius + clouds[j].radius) {
                            std::ostringstream os;
                            os << "build_screening: clouds of nuclei "
                               << clouds[i].nucleus_index << " and "
                               << clouds[j].nucleus_index << " overlap";
                            throw std::runtime_error(os.str());
                        }
                    }
                }
        grid[k].push_back(i);
    }
    return clouds;
}

struct CellEnergyBreakdown {
    Vec3i cell{};
    double kinetic = 0.0;
    double boundary = 0.0;
    double lieb_yau = 0.0;
};

struct TrialEnergyReport {
    double kinetic = 0.0;        // c_kin sum z^(5/3) / delta'^2 over nuclei in D
    double boundary = 0.0;       // pair sum z z' / (r (1+r^2)) over the boundary collar
    double lieb_yau = 0.0;       // (Z^2/8) sum 1/delta, when charges are constant
    bool lieb_yau_defined = false;
    double cone_epsilon = 0.0;
    double c_kin = 1.0;
    std::size_t nuclei_in_domain = 0;
    std::size_t collar_nuclei = 0;
    bool any_margin_truncated = false;
    std::vector<CellEnergyBreakdown> per_cell;  // sorted by cell index

    double total() const { return kinetic + boundary; }
};

// Classical trial-state energy of the screened configuration on a region:
// the kinetic surrogate paid to squeeze the clouds plus the residual
// dipole-tail pair interaction of the boundary collar.
template <class Region>
TrialEnergyReport trial_energy(const CellIndex& index, const Region& domain,
                               double cone_epsilon, double c_kin) {
    if (!(cone_epsilon > 0))
        throw std::invalid_argument("trial_energy: cone_epsilon must be > 0");
    const NuclearConfiguration& cfg = index.config();
    TrialEnergyReport rep;
    rep.cone_epsilon = cone_epsilon;
    rep.c_kin = c_kin;

    std::unordered_map<Vec3i, CellEnergyBreakdown, Vec3iHash> cells;
    std::vector<std::size_t> collar;
    std::vector<double> kin_terms, ly_terms;
    bool charges_constant = true;
    double z0 = 0.0;

    for (std::size_t i = 0; i < cfg.size(); ++i) {
        const Nucleus& n = cfg.nuclei[i];
        Vec3 site = cfg.lattice.site_position(n.site);
        if (!domain.contains_parts(site, n.disp)) continue;
        ++rep.nuclei_in_domain;
        if (rep.nuclei_in_domain == 1) z0 = n.charge;
        charges_constant = charges_constant && (n.charge == z0);

        NeighborDistance nd = index.nearest_neighbor(i);
        rep.any_margin_truncated = rep.any_margin_truncated || nd.margin_truncated;
        double dp = std::min(nd.delta, cone_epsilon);
        double kin = c_kin * std::pow(n.charge, 5.0 / 3.0) / (dp * dp);
        kin_terms.push_back(kin);
        ly_terms.push_back(1.0 / nd.delta);
        Vec3i cell = cfg.lattice.cell_of_parts(n.site, n.disp);
        cells[cell].kinetic += kin;
        cells[cell].lieb_yau += 1.0 / nd.delta;
        if (domain.boundary_distance_parts(site, n.disp) <= cone_epsilon)
            collar.push_back(i);
    }
    rep.collar_nuclei = collar.size();
    rep.kinetic = kin_terms.empty() ? 0.0 : pairwise_sum(kin_terms);

    std::vector<double> pair_terms;
    pair_terms.reserve(collar.size());
    for (std::size_t a = 0; a < collar.size(); ++a) {
        const Nucleus& na = cfg.nuclei[collar[a]];
        Vec3i cell_a = cfg.lattice.cell_of_parts(na.site, na.disp);
        for (std::size_t b = a + 1; b < collar.size(); ++b) {
            const Nucleus& nb = cfg.nuclei[collar[b]];
            double r = cfg.separation(na, nb).norm();
            double term = na.charge * nb.charge / (r * (1.0 + r * r));
            pair_terms.push_back(term);
            cells[cell_a].boundary += 0.5 * term;
            cells[cfg.lattice.cell_of_parts(nb.site, nb.disp)].boundary += 0.5 * term;
        }
    }
    rep.boundary = pair_terms.empty() ? 0.0 : pairwise_sum(pair_terms);

    if (charges_constant && rep.nuclei_in_domain > 0) {
        rep.lieb_yau_defined = true;
        double s = ly_terms.empty() ? 0.0 : pairwise_sum(ly_terms);
        rep.lieb_yau = z0 * z0 / 8.0 * s;
        for (auto& [cell, br] : cells) br.lieb_yau *= z0 * z0 / 8.0;
    } else {
        for (auto& [cell, br] : cells) br.lieb_yau = 0.0;
    }

    rep.per_cell.reserve(cells.size());
    for (auto& [cell, br] : cells) {
        CellEnergyBreakdown e = br;
        e.cell = cell;
        rep.per_cell.push_back(e);
    }
    std::sort(rep.per_cell.begin(), rep.per_cell.end(),
              [](const CellEnergyBreakdown& x, const CellEnergyBreakdown& y) {
                  return x.cell < y.cell;
              });
    return rep;
}

template <class Region>
TrialEnergyReport trial_energy(const NuclearConfiguration& config, const Region& domain,
                               double cone_epsilon, double c_kin) {
    CellIndex index(config);
    return trial_energy(index, domain, cone_epsilon, c_kin);
}

// The improved-stability sum (Z^2/8) sum over nuclei in D of 1/delta; stated
// for equal charges only.
template <class Region>
double lieb_yau_term(const NuclearConfiguration& config, const Region& domain, double z) {
    CellIndex index(config);
    std::vector<double> terms;
    for (std::size_t i = 0; i < config.size(); ++i) {
        const Nucleus& n = config.nuclei[i];
        Vec3 site = config.lattice.site_position(n.site);
        if (!domain.contains_parts(site, n.disp)) continue;
        if (n.charge != z)
            throw std::invalid_argument(
                "lieb_yau_term: bound is stated for constant nuclear charge");
        terms.push_back(1.0 / index.nearest_neighbor(i).delta);
    }
    return terms.empty() ? 0.0 : z * z / 8.0 * pairwise_sum(terms);
}

}  // namespace randlat
