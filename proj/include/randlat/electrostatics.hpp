#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "randlat/vec.hpp"

namespace randlat {

struct PointCharge {
    Vec3 position;
    double charge = 0.0;
};

namespace detail {
inline void require_distinct(double r2) {
    if (!(r2 > 0))
        throw std::invalid_argument("pair energy: coincident charge positions");
}
}  // namespace detail

// Total Coulomb pair energy, sum over unordered pairs of q q' / r.
inline double coulomb_energy(std::span<const PointCharge> charges) {
    double e = 0;
    for (std::size_t i = 0; i < charges.size(); ++i)
        for (std::size_t j = i + 1; j < charges.size(); ++j) {
            double r2 = (charges[i].position - charges[j].position).norm2();
            detail::require_distinct(r2);
            e += charges[i].charge * charges[j].charge / std::sqrt(r2);
        }
    return e;
}

// Screened pair energy with kernel exp(-m r) / r.
inline double yukawa_energy(std::span<const PointCharge> charges, double mass = 1.0) {
    if (!(mass >= 0)) throw std::invalid_argument("yukawa_energy: mass must be >= 0");
    double e = 0;
    for (std::size_t i = 0; i < charges.size(); ++i)
        for (std::size_t j = i + 1; j < charges.size(); ++j) {
            double r2 = (charges[i].position - charges[j].position).norm2();
            detail::require_distinct(r2);
            double r = std::sqrt(r2);
            e += charges[i].charge * charges[j].charge * std::exp(-mass * r) / r;
        }
    return e;
}

// Deficit of the Coulomb/Yukawa comparison at unit screening mass:
//   sum_{i != j} q_i q_j (1/r - e^{-r}/r) + sum_i q_i^2.
// The kernel difference is positive definite, so the deficit is nonnegative
// for every charge system.
inline double yukawa_comparison_deficit(std::span<const PointCharge> charges) {
    double e = 0;
    for (std::size_t i = 0; i < charges.size(); ++i)
        for (std::size_t j = i + 1; j < charges.size(); ++j) {
            double r2 = (charges[i].position - charges[j].position).norm2();
            detail::require_distinct(r2);
            double r = std::sqrt(r2);
            // (1 - e^{-r})/r without cancellation at small r
            e += charges[i].charge * charges[j].charge * (-std::expm1(-r) / r);
        }
    double q2 = 0;
    for (const PointCharge& c : charges) q2 += c.charge * c.charge;
    return 2.0 * e + q2;
}

// Interaction of two screened nuclei beyond perfect cancellation: nucleus
// charges z, z' at R, R' with opposite point charges at the cloud centers
// X, X'. Exact for non-overlapping radial clouds (outside its support a
// radial cloud acts as a point at its center).
inline double dipole_interaction(const Vec3& r_pos, double z, const Vec3& x_pos,
                                 const Vec3& r2_pos, double z2, const Vec3& x2_pos) {
    double rr = (r_pos - r2_pos).norm();
    if (!(rr > 0)) throw std::invalid_argument("dipole_interaction: coincident nuclei");
    double off1 = (x_pos - r_pos).norm();
    double off2 = (x2_pos - r2_pos).norm();
    // offsets within r/4 keep the clouds at least r/2 apart and the point
    // formula valid; beyond that the clouds may overlap
    if (off1 > 0.25 * rr || off2 > 0.25 * rr)
        throw std::invalid_argument(
            "dipole_interaction: screening offset exceeds |R-R'|/4 (clouds may overlap)");
    double xx = (x_pos - x2_pos).norm();
    double xr2 = (x_pos - r2_pos).norm();
    double x2r = (x2_pos - r_pos).norm();
    detail::require_distinct(xx * xx);
    detail::require_distinct(xr2 * xr2);
    detail::require_distinct(x2r * x2r);
    return z * z2 * (1.0 / rr + 1.0 / xx - 1.0 / xr2 - 1.0 / x2r);
}

}  // namespace randlat
