#pragma once

#include <cstdint>
#include <string>

#include "randlat/configuration.hpp"
#include "randlat/lattice.hpp"
#include "randlat/laws.hpp"

namespace randlat {

// Everything defining the law of the random configuration: the lattice, the
// displacement law, the charge law. A Poisson model replaces the lattice draw
// with a homogeneous field of the given intensity.
struct ModelSpec {
    LatticeSpec lattice = LatticeSpec::cubic();
    DisplacementLaw displacement = DisplacementLaw::point_mass();
    ChargeLaw charge = ChargeLaw::constant(1.0);
    bool poisson = false;
    double intensity = 1.0;

    NuclearConfiguration realize(const Box3& window, double margin, std::uint64_t seed) const {
        if (poisson) return poisson_configuration(intensity, charge, window, margin, seed);
        return sample_configuration(lattice, displacement, charge, window, margin, seed);
    }

    // Margin guaranteeing that the window sees every contributing site and
    // that nearest-neighbor distances around the window's interior cells are
    // essentially never truncated.
    double protocol_margin() const {
        double cell = 2.0 * lattice.cell_bounding_radius() / std::sqrt(3.0);
        return std::max(displacement.max_cutoff(), 4.0 * cell);
    }

    std::string describe() const {
        if (poisson) return "poisson(intensity=" + std::to_string(intensity) + ")";
        return "iid(displacement=" + displacement.describe() + ",charge=" + charge.describe() +
               ")";
    }
};

}  // namespace randlat
