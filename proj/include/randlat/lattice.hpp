#pragma once

#include <cmath>
#include <stdexcept>

#include "randlat/rng.hpp"
#include "randlat/vec.hpp"

namespace randlat {

// A discrete translation group of R^3 with a half-open fundamental cell.
// The basis columns span the lattice; the cell W is the parallelepiped of
// fractional coordinates [-1/2, 1/2)^3, so R^3 is the disjoint union of the
// cells W + B j over integer j.
class LatticeSpec {
public:
    static LatticeSpec cubic() { return LatticeSpec(Mat3::identity()); }

    explicit LatticeSpec(const Mat3& basis) : basis_(basis), inv_(basis.inverse()) {
        double d = basis.det();
        if (!(std::abs(d) > 1e-12))
            throw std::invalid_argument("LatticeSpec: basis vectors must be linearly independent");
        cell_volume_ = std::abs(d);
        // Slab thickness along the i-th fractional axis is 1/|g_i| for g_i the
        // i-th row of the inverse basis; it lower-bounds the distance between
        // points whose fractional coordinates differ by one.
        Mat3 invt = inv_.transpose();
        min_thickness_ = 1e300;
        for (int i = 0; i < 3; ++i)
            min_thickness_ = std::min(min_thickness_, 1.0 / invt.c[i].norm());
        // Radius and diameter of W from its corners.
        cell_bounding_radius_ = 0.0;
        for (int s = 0; s < 8; ++s) {
            Vec3 f{(s & 1) ? 0.5 : -0.5, (s & 2) ? 0.5 : -0.5, (s & 4) ? 0.5 : -0.5};
            cell_bounding_radius_ = std::max(cell_bounding_radius_, (basis_ * f).norm());
        }
        cubic_ = basis.is_identity();
    }

    const Mat3& basis() const { return basis_; }
    const Mat3& inverse_basis() const { return inv_; }
    bool is_cubic() const { return cubic_; }
    double cell_volume() const { return cell_volume_; }
    double cell_min_thickness() const { return min_thickness_; }
    double cell_bounding_radius() const { return cell_bounding_radius_; }
    double cell_diameter() const { return 2.0 * cell_bounding_radius_; }

    Vec3 site_position(const Vec3i& j) const {
        if (cubic_) return j.to_vec3();
        return basis_ * j.to_vec3();
    }

    // Index of the cell owning x: fractional coordinates rounded to the
    // nearest lattice point, with the half-open convention (boundary
    // positions belong to the cell on their low-fraction side).
    Vec3i cell_of(const Vec3& x) const {
        Vec3 f = cubic_ ? x : inv_ * x;
        return {static_cast<std::int64_t>(std::floor(f.x + 0.5)),
                static_cast<std::int64_t>(std::floor(f.y + 0.5)),
                static_cast<std::int64_t>(std::floor(f.z + 0.5))};
    }

    // Cell of (site + offset), computed relative to the site so the answer is
    // invariant under integer translations of the frame.
    Vec3i cell_of_parts(const Vec3i& site, const Vec3& offset) const {
        return site + cell_of(offset);
    }

    // Axis-aligned bounding box of the cell W + B j.
    Box3 cell_box(const Vec3i& j) const {
        Vec3 p = site_position(j);
        if (cubic_) return {p - Vec3{0.5, 0.5, 0.5}, p + Vec3{0.5, 0.5, 0.5}};
        Box3 b{p, p};
        for (int s = 0; s < 8; ++s) {
            Vec3 f{(s & 1) ? 0.5 : -0.5, (s & 2) ? 0.5 : -0.5, (s & 4) ? 0.5 : -0.5};
            Vec3 c = p + basis_ * f;
            b.lo = {std::min(b.lo.x, c.x), std::min(b.lo.y, c.y), std::min(b.lo.z, c.z)};
            b.hi = {std::max(b.hi.x, c.x), std::max(b.hi.y, c.y), std::max(b.hi.z, c.z)};
        }
        return b;
    }

    // Audit that the cells tile space disjointly: random points must map to
    // exactly one cell index, and that cell must map back around the point.
    bool tiles_disjointly(std::uint64_t seed = 7, int n_samples = 4096) const {
        Stream s(derive_key(seed, stream::mc));
        for (int i = 0; i < n_samples; ++i) {
            Vec3 x = s.uniform_in_box({{-7, -7, -7}, {7, 7, 7}});
            Vec3i j = cell_of(x);
            Vec3 f = inv_ * (x - site_position(j));
            if (!(f.x >= -0.5 && f.x < 0.5 && f.y >= -0.5 && f.y < 0.5 && f.z >= -0.5 &&
                  f.z < 0.5))
                return false;
        }
        return true;
    }

private:
    Mat3 basis_;
    Mat3 inv_;
    double cell_volume_ = 1.0;
    double min_thickness_ = 1.0;
    double cell_bounding_radius_ = 0.0;
    bool cubic_ = true;
};

}  // namespace randlat
