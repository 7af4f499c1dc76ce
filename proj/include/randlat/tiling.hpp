#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "randlat/domain.hpp"
#include "randlat/lattice.hpp"
#include "randlat/rotation.hpp"
#include "randlat/stats.hpp"

namespace randlat {

// Regular tetrahedron with unit circumradius, circumcenter at the origin.
inline std::array<Vec3, 4> reference_tetrahedron() {
    const double s = 1.0 / std::sqrt(3.0);
    return {Vec3{s, s, s}, Vec3{s, -s, -s}, Vec3{-s, s, -s}, Vec3{-s, -s, s}};
}

struct TilingSpec {
    std::array<Vec3, 4> simplex = reference_tetrahedron();
    double scale = 1.0;  // the dilation factor of the simplex

    TilingSpec() = default;
    explicit TilingSpec(double ell) : scale(ell) { validate(); }
    TilingSpec(const std::array<Vec3, 4>& verts, double ell) : simplex(verts), scale(ell) {
        validate();
    }

    void validate() const {
        if (!(scale >= 1.0)) throw std::invalid_argument("TilingSpec: scale must be >= 1");
        Vec3 e1 = simplex[1] - simplex[0], e2 = simplex[2] - simplex[0],
             e3 = simplex[3] - simplex[0];
        if (std::abs(e1.dot(e2.cross(e3))) < 1e-12)
            throw std::invalid_argument("TilingSpec: degenerate simplex");
    }

    double simplex_volume() const {
        Vec3 e1 = simplex[1] - simplex[0], e2 = simplex[2] - simplex[0],
             e3 = simplex[3] - simplex[0];
        return std::abs(e1.dot(e2.cross(e3))) / 6.0;
    }
    double scaled_volume() const { return simplex_volume() * scale * scale * scale; }
    // Bounding radius of the reference simplex about the origin.
    double circumradius() const {
        double r = 0;
        for (const Vec3& v : simplex) r = std::max(r, v.norm());
        return r;
    }
    // Largest inscribed ball about the origin (distance to the nearest face).
    double inradius() const {
        static const int faces[4][3] = {{0, 1, 2}, {0, 1, 3}, {0, 2, 3}, {1, 2, 3}};
        double r = 1e300;
        for (auto& f : faces) {
            Vec3 n = (simplex[f[1]] - simplex[f[0]]).cross(simplex[f[2]] - simplex[f[0]]);
            n = n.normalized();
            r = std::min(r, std::abs(n.dot(simplex[f[0]])));
        }
        return r;
    }
};

struct GroupElement {
    Mat3 rotation = Mat3::identity();
    Vec3 translation{};
};

enum class TranslationMode { CellTranslation, Free };

// Haar-uniform rotation plus a translation uniform on the fundamental cell
// (cell-translation mode) or on a caller box (free mode).
inline GroupElement sample_group_element(const LatticeSpec& lattice, TranslationMode mode,
                                         std::uint64_t seed,
                                         const Box3& free_box = {{0, 0, 0}, {1, 1, 1}}) {
    Stream rs(derive_key(seed, stream::rotation));
    Stream ts(derive_key(seed, stream::translation));
    GroupElement g;
    g.rotation = uniform_rotation(rs);
    if (mode == TranslationMode::CellTranslation) {
        Vec3 f{ts.uniform(-0.5, 0.5), ts.uniform(-0.5, 0.5), ts.uniform(-0.5, 0.5)};
        g.translation = lattice.basis() * f;
    } else {
        g.translation = ts.uniform_in_box(free_box);
    }
    return g;
}

struct TilingIdentityReport {
    double lhs = 0.0;  // |D|
    double rhs = 0.0;  // Monte Carlo estimate of the group average
    double rel_error = 0.0;
    double rhs_std_error = 0.0;
    std::size_t group_samples = 0;
    std::size_t points_per_sample = 0;
};

// Checks |D| = integral over rigid motions g of |D cap (g l simplex)| / |l simplex|,
// where the translation integral is decomposed through the lattice. Writing
// the double integral from the D side turns it into
//   |D| * |W| * E[ #lattice translates of a simplex sample containing x ] / |l simplex|
// with x uniform in D and g Haar-uniform, which is what the estimator samples.
inline TilingIdentityReport tiling_volume_identity(const DomainShape& d, const TilingSpec& tiling,
                                                   std::size_t n_g, std::size_t n_mc,
                                                   std::uint64_t seed,
                                                   const LatticeSpec& lattice = LatticeSpec::cubic()) {
    if (n_g < 1000) throw std::invalid_argument("tiling_volume_identity: need n_g >= 1e3");
    if (n_mc < 1) throw std::invalid_argument("tiling_volume_identity: need n_mc >= 1");

    Stream mc(derive_key(seed, stream::mc));
    const double ell = tiling.scale;
    std::vector<double> per_g(n_g);
    for (std::size_t gi = 0; gi < n_g; ++gi) {
        GroupElement g = sample_group_element(lattice, TranslationMode::CellTranslation,
                                              derive_key(seed, stream::rotation, gi));
        // Scaled rotated simplex S = R (l simplex); points y with y in S + tau + Bj
        // <=> B j in (y - tau) - S.
        std::array<Vec3, 4> w;
        Box3 sb{{1e300, 1e300, 1e300}, {-1e300, -1e300, -1e300}};
        for (int i = 0; i < 4; ++i) {
            w[i] = g.rotation * (tiling.simplex[i] * ell);
            sb.lo = {std::min(sb.lo.x, w[i].x), std::min(sb.lo.y, w[i].y),
                     std::min(sb.lo.z, w[i].z)};
            sb.hi = {std::max(sb.hi.x, w[i].x), std::max(sb.hi.y, w[i].y),
                     std::max(sb.hi.z, w[i].z)};
        }
        // Barycentric solve against the vertex matrix of S.
        Mat3 tmat;
        tmat.c[0] = w[1] - w[0];
        tmat.c[1] = w[2] - w[0];
        tmat.c[2] = w[3] - w[0];
        Mat3 tinv = tmat.inverse();

        double count_sum = 0;
        for (std::size_t k = 0; k < n_mc; ++k) {
            Vec3 x = d.sample_point(mc);
            Vec3 y = x - g.translation;
            // lattice points j with (y - j) in S: j in y - S
            Vec3 lo = y - sb.hi, hi = y - sb.lo;
            std::int64_t c = 0;
            for (std::int64_t jx = static_cast<std::int64_t>(std::ceil(lo.x));
                 jx <= static_cast<std::int64_t>(std::floor(hi.x)); ++jx)
                for (std::int64_t jy = static_cast<std::int64_t>(std::ceil(lo.y));
                     jy <= static_cast<std::int64_t>(std::floor(hi.y)); ++jy)
                    for (std::int64_t jz = static_cast<std::int64_t>(std::ceil(lo.z));
                         jz <= static_cast<std::int64_t>(std::floor(hi.z)); ++jz) {
                        Vec3 q{y.x - static_cast<double>(jx), y.y - static_cast<double>(jy),
                               y.z - static_cast<double>(jz)};
                        Vec3 b = tinv * (q - w[0]);
                        if (b.x >= 0 && b.y >= 0 && b.z >= 0 && b.x + b.y + b.z <= 1.0) ++c;
                    }
            count_sum += static_cast<double>(c);
        }
        per_g[gi] = count_sum / static_cast<double>(n_mc);
    }
    auto s = summarize(per_g);
    TilingIdentityReport rep;
    rep.lhs = d.volume();
    double factor = d.volume() * lattice.cell_volume() / tiling.scaled_volume();
    rep.rhs = factor * s.mean;
    rep.rhs_std_error = factor * s.std_error;
    rep.rel_error = std::abs(rep.rhs - rep.lhs) / rep.lhs;
    rep.group_samples = n_g;
    rep.points_per_sample = n_mc;
    return rep;
}

struct CellClassification {
    std::size_t inner = 0;     // sites whose every simplex pose stays inside D
    std::size_t boundary = 0;  // sites with a sampled pose meeting the boundary
};

// Classifies lattice sites against the moving simplex: a site is inner when
// the ball certainly containing every pose (radius l*circumradius + diam W)
// fits inside D around it; boundary sites are detected from sampled poses.
inline CellClassification classify_cells(const DomainShape& d, const TilingSpec& tiling,
                                         std::uint64_t seed, std::size_t n_pose = 32,
                                         const LatticeSpec& lattice = LatticeSpec::cubic()) {
    const double ell = tiling.scale;
    const double pose_radius = ell * tiling.circumradius();
    const double inner_radius = pose_radius + lattice.cell_diameter();
    const double ins = ell * tiling.inradius();

    std::vector<GroupElement> poses(n_pose);
    for (std::size_t i = 0; i < n_pose; ++i)
        poses[i] = sample_group_element(lattice, TranslationMode::CellTranslation,
                                        derive_key(seed, stream::rotation, i));

    Box3 bb = d.bounding_box().expanded(pose_radius + lattice.cell_bounding_radius() + 1.0);
    Vec3i lo = lattice.cell_of(bb.lo), hi = lattice.cell_of(bb.hi);
    CellClassification out;
    for (std::int64_t x = lo.x; x <= hi.x; ++x)
        for (std::int64_t y = lo.y; y <= hi.y; ++y)
            for (std::int64_t z = lo.z; z <= hi.z; ++z) {
                Vec3 site = lattice.site_position({x, y, z});
                bool in_d = d.contains(site);
                double bd = d.boundary_distance(site);
                if (in_d && bd >= inner_radius) {
                    ++out.inner;
                    continue;
                }
                // Quick reject: every pose lies within pose_radius + |tau| of
                // the site; beyond that the boundary is unreachable.
                if (bd > pose_radius + lattice.cell_bounding_radius()) continue;
                bool meets = false;
                for (const GroupElement& g : poses) {
                    Vec3 center = site + g.translation;
                    double dc = d.boundary_distance(center);
                    if (dc >= pose_radius) continue;        // pose fully one side
                    if (dc < ins) {                         // inscribed ball straddles
                        meets = true;
                        break;
                    }
                    bool inside0 = d.contains(center);
                    for (const Vec3& v : tiling.simplex) {
                        Vec3 p = center + g.rotation * (v * ell);
                        if (d.contains(p) != inside0) {
                            meets = true;
                            break;
                        }
                    }
                    if (meets) break;
                }
                if (meets) ++out.boundary;
            }
    return out;
}

}  // namespace randlat
