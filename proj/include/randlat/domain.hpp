#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "randlat/lattice.hpp"
#include "randlat/rng.hpp"
#include "randlat/stats.hpp"
#include "randlat/vec.hpp"

namespace randlat {

namespace geom {

// Squared distance from a point to a closed axis-aligned box.
inline double point_box_dist2(const Vec3& p, const Vec3& lo, const Vec3& hi) {
    double d2 = 0;
    for (int a = 0; a < 3; ++a) {
        double d = 0;
        if (p[a] < lo[a]) d = lo[a] - p[a];
        else if (p[a] > hi[a]) d = p[a] - hi[a];
        d2 += d * d;
    }
    return d2;
}

// Distance from a point to a closed triangle (Ericson, Real-Time Collision
// Detection, 5.1.5).
inline double point_triangle_distance(const Vec3& p, const Vec3& a, const Vec3& b,
                                      const Vec3& c) {
    Vec3 ab = b - a, ac = c - a, ap = p - a;
    double d1 = ab.dot(ap), d2 = ac.dot(ap);
    if (d1 <= 0 && d2 <= 0) return (p - a).norm();
    Vec3 bp = p - b;
    double d3 = ab.dot(bp), d4 = ac.dot(bp);
    if (d3 >= 0 && d4 <= d3) return (p - b).norm();
    double vc = d1 * d4 - d3 * d2;
    if (vc <= 0 && d1 >= 0 && d3 <= 0) {
        double v = d1 / (d1 - d3);
        return (p - (a + ab * v)).norm();
    }
    Vec3 cp = p - c;
    double d5 = ab.dot(cp), d6 = ac.dot(cp);
    if (d6 >= 0 && d5 <= d6) return (p - c).norm();
    double vb = d5 * d2 - d1 * d6;
    if (vb <= 0 && d2 >= 0 && d6 <= 0) {
        double w = d2 / (d2 - d6);
        return (p - (a + ac * w)).norm();
    }
    double va = d3 * d6 - d5 * d4;
    if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0) {
        double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (p - (b + (c - b) * w)).norm();
    }
    double denom = 1.0 / (va + vb + vc);
    double v = vb * denom, w = vc * denom;
    return (p - (a + ab * v + ac * w)).norm();
}

// Separating-axis test between an axis-aligned box and an oriented box, with
// touching counted as separated (open-interior semantics).
inline bool obb_aabb_interiors_intersect(const Vec3& a_center, const Vec3& a_half,
                                         const Mat3& rot, const Vec3& b_center,
                                         const Vec3& b_half) {
    Vec3 d = b_center - a_center;
    auto separated_on = [&](const Vec3& axis) {
        double len2 = axis.norm2();
        if (len2 < 1e-24) return false;
        double dist = std::abs(d.dot(axis));
        double ra = a_half.x * std::abs(axis.x) + a_half.y * std::abs(axis.y) +
                    a_half.z * std::abs(axis.z);
        double rb = b_half.x * std::abs(rot.c[0].dot(axis)) +
                    b_half.y * std::abs(rot.c[1].dot(axis)) +
                    b_half.z * std::abs(rot.c[2].dot(axis));
        return dist >= ra + rb;
    };
    for (int i = 0; i < 3; ++i) {
        Vec3 e{i == 0 ? 1.0 : 0.0, i == 1 ? 1.0 : 0.0, i == 2 ? 1.0 : 0.0};
        if (separated_on(e)) return false;
        if (separated_on(rot.c[i])) return false;
    }
    for (int i = 0; i < 3; ++i) {
        Vec3 e{i == 0 ? 1.0 : 0.0, i == 1 ? 1.0 : 0.0, i == 2 ? 1.0 : 0.0};
        for (int j = 0; j < 3; ++j)
            if (separated_on(e.cross(rot.c[j]))) return false;
    }
    return true;
}

// Separating-axis test between an axis-aligned box and a tetrahedron, open
// semantics as above.
inline bool tetra_aabb_interiors_intersect(const Vec3& a_center, const Vec3& a_half,
                                           const std::array<Vec3, 4>& v) {
    auto separated_on = [&](const Vec3& axis) {
        double len2 = axis.norm2();
        if (len2 < 1e-24) return false;
        double ra = a_half.x * std::abs(axis.x) + a_half.y * std::abs(axis.y) +
                    a_half.z * std::abs(axis.z);
        double c = a_center.dot(axis);
        double tmin = v[0].dot(axis), tmax = tmin;
        for (int i = 1; i < 4; ++i) {
            double t = v[i].dot(axis);
            tmin = std::min(tmin, t);
            tmax = std::max(tmax, t);
        }
        return tmin >= c + ra || tmax <= c - ra;
    };
    static const int faces[4][3] = {{0, 1, 2}, {0, 1, 3}, {0, 2, 3}, {1, 2, 3}};
    for (int i = 0; i < 3; ++i) {
        Vec3 e{i == 0 ? 1.0 : 0.0, i == 1 ? 1.0 : 0.0, i == 2 ? 1.0 : 0.0};
        if (separated_on(e)) return false;
    }
    for (auto& f : faces) {
        Vec3 n = (v[f[1]] - v[f[0]]).cross(v[f[2]] - v[f[0]]);
        if (separated_on(n)) return false;
    }
    static const int edges[6][2] = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
    for (auto& ed : edges) {
        Vec3 e = v[ed[1]] - v[ed[0]];
        for (int i = 0; i < 3; ++i) {
            Vec3 ax{i == 0 ? 1.0 : 0.0, i == 1 ? 1.0 : 0.0, i == 2 ? 1.0 : 0.0};
            if (separated_on(e.cross(ax))) return false;
        }
    }
    return true;
}

}  // namespace geom

// A bounded open region: an axis-box, ball, or tetrahedron under a rigid
// transform, or a union of lattice cells. World points map to the local frame
// through x -> R^T (x - t).
class DomainShape {
public:
    enum class Kind { Box, Ball, Simplex, CellUnion };

    static DomainShape cube(double side, const Vec3& center = {}) {
        return box({side, side, side}, center);
    }
    static DomainShape box(const Vec3& extents, const Vec3& center = {}) {
        if (!(extents.x > 0 && extents.y > 0 && extents.z > 0))
            throw std::invalid_argument("DomainShape::box: extents must be positive");
        DomainShape d;
        d.kind_ = Kind::Box;
        d.half_ = extents * 0.5;
        d.trans_ = center;
        d.volume_ = extents.x * extents.y * extents.z;
        return d;
    }
    static DomainShape ball(double radius, const Vec3& center = {}) {
        if (!(radius > 0)) throw std::invalid_argument("DomainShape::ball: radius must be > 0");
        DomainShape d;
        d.kind_ = Kind::Ball;
        d.radius_ = radius;
        d.trans_ = center;
        d.volume_ = 4.0 / 3.0 * 3.14159265358979323846 * radius * radius * radius;
        return d;
    }
    static DomainShape simplex(const std::array<Vec3, 4>& vertices) {
        DomainShape d;
        d.kind_ = Kind::Simplex;
        d.verts_ = vertices;
        Vec3 e1 = vertices[1] - vertices[0];
        Vec3 e2 = vertices[2] - vertices[0];
        Vec3 e3 = vertices[3] - vertices[0];
        double det = e1.dot(e2.cross(e3));
        if (std::abs(det) < 1e-12)
            throw std::invalid_argument("DomainShape::simplex: degenerate vertices");
        d.volume_ = std::abs(det) / 6.0;
        d.init_simplex_planes();
        return d;
    }
    // Union of cells of a cubic lattice (identity transform only).
    static DomainShape cell_union(const std::vector<Vec3i>& cells) {
        if (cells.empty()) throw std::invalid_argument("DomainShape::cell_union: no cells");
        DomainShape d;
        d.kind_ = Kind::CellUnion;
        d.cells_.assign(cells.begin(), cells.end());
        std::sort(d.cells_.begin(), d.cells_.end());
        d.cells_.erase(std::unique(d.cells_.begin(), d.cells_.end()), d.cells_.end());
        d.volume_ = static_cast<double>(d.cells_.size());
        d.init_cell_union_faces();
        return d;
    }

    DomainShape rotated(const Mat3& r) const {
        if (kind_ == Kind::CellUnion)
            throw std::invalid_argument("DomainShape: cell unions cannot be rotated");
        if (r.orthonormality_residual() > 1e-12 || std::abs(r.det() - 1.0) > 1e-12)
            throw std::invalid_argument("DomainShape: rotation must be orthonormal, det +1");
        DomainShape d = *this;
        d.rot_ = r * rot_;
        d.has_rot_ = !d.rot_.is_identity();
        return d;
    }
    DomainShape translated(const Vec3& t) const {
        if (kind_ == Kind::CellUnion)
            throw std::invalid_argument(
                "DomainShape: translate cell unions by relabeling their cells");
        DomainShape d = *this;
        d.trans_ = trans_ + t;
        return d;
    }
    // Exact translation by a lattice vector: cell unions relabel their cells.
    DomainShape translated_cells(const Vec3i& k) const {
        if (kind_ != Kind::CellUnion)
            return translated(k.to_vec3());
        DomainShape d = *this;
        for (auto& c : d.cells_) c = c + k;
        d.init_cell_union_faces();
        return d;
    }

    Kind kind() const { return kind_; }
    double volume() const { return volume_; }
    const Vec3& translation() const { return trans_; }
    const Mat3& rotation() const { return rot_; }
    const std::vector<Vec3i>& cells() const { return cells_; }

    Box3 bounding_box() const {
        switch (kind_) {
            case Kind::Box: {
                Box3 b{{1e300, 1e300, 1e300}, {-1e300, -1e300, -1e300}};
                for (int s = 0; s < 8; ++s) {
                    Vec3 c{(s & 1) ? half_.x : -half_.x, (s & 2) ? half_.y : -half_.y,
                           (s & 4) ? half_.z : -half_.z};
                    grow(b, rot_ * c + trans_);
                }
                return b;
            }
            case Kind::Ball:
                return {trans_ - Vec3{radius_, radius_, radius_},
                        trans_ + Vec3{radius_, radius_, radius_}};
            case Kind::Simplex: {
                Box3 b{{1e300, 1e300, 1e300}, {-1e300, -1e300, -1e300}};
                for (const Vec3& v : verts_) grow(b, rot_ * v + trans_);
                return b;
            }
            case Kind::CellUnion: {
                Box3 b{{1e300, 1e300, 1e300}, {-1e300, -1e300, -1e300}};
                for (const Vec3i& c : cells_) {
                    grow(b, c.to_vec3() - Vec3{0.5, 0.5, 0.5});
                    grow(b, c.to_vec3() + Vec3{0.5, 0.5, 0.5});
                }
                return b;
            }
        }
        return {};
    }

    bool contains(const Vec3& x) const { return contains_parts(x, {0, 0, 0}); }
    double boundary_distance(const Vec3& x) const { return boundary_distance_parts(x, {0, 0, 0}); }

    // Split-argument variants: the integer-ish base is combined with the
    // translation before the fractional offset is added, which makes results
    // bit-stable when base and translation move together by a lattice vector.
    bool contains_parts(const Vec3& base, const Vec3& off) const {
        Vec3 local = to_local(base, off);
        switch (kind_) {
            case Kind::Box:
                return std::abs(local.x) < half_.x && std::abs(local.y) < half_.y &&
                       std::abs(local.z) < half_.z;
            case Kind::Ball: return local.norm2() < radius_ * radius_;
            case Kind::Simplex: {
                for (int f = 0; f < 4; ++f)
                    if (plane_n_[f].dot(local) >= plane_d_[f]) return false;
                return true;
            }
            case Kind::CellUnion: {
                Vec3i cell{static_cast<std::int64_t>(std::floor(local.x + 0.5)),
                           static_cast<std::int64_t>(std::floor(local.y + 0.5)),
                           static_cast<std::int64_t>(std::floor(local.z + 0.5))};
                return std::binary_search(cells_.begin(), cells_.end(), cell);
            }
        }
        return false;
    }

    // Unsigned distance to the boundary, valid on both sides.
    double boundary_distance_parts(const Vec3& base, const Vec3& off) const {
        Vec3 local = to_local(base, off);
        switch (kind_) {
            case Kind::Box: {
                Vec3 q{std::abs(local.x) - half_.x, std::abs(local.y) - half_.y,
                       std::abs(local.z) - half_.z};
                double inside = std::max({q.x, q.y, q.z});
                if (inside <= 0) return -inside;
                Vec3 o{std::max(q.x, 0.0), std::max(q.y, 0.0), std::max(q.z, 0.0)};
                return o.norm();
            }
            case Kind::Ball: return std::abs(local.norm() - radius_);
            case Kind::Simplex: {
                bool inside = true;
                double min_plane = 1e300;
                for (int f = 0; f < 4; ++f) {
                    double s = plane_d_[f] - plane_n_[f].dot(local);  // >0 inside
                    if (s < 0) inside = false;
                    min_plane = std::min(min_plane, s);
                }
                if (inside) return min_plane;
                static const int faces[4][3] = {{0, 1, 2}, {0, 1, 3}, {0, 2, 3}, {1, 2, 3}};
                double best = 1e300;
                for (auto& f : faces)
                    best = std::min(best, geom::point_triangle_distance(
                                              local, verts_[f[0]], verts_[f[1]], verts_[f[2]]));
                return best;
            }
            case Kind::CellUnion: {
                double best2 = 1e300;
                for (const auto& face : faces_)
                    best2 = std::min(best2, geom::point_box_dist2(local, face.lo, face.hi));
                return std::sqrt(best2);
            }
        }
        return 0.0;
    }

    // Depth below the boundary for interior points, 0 outside.
    double interior_depth_parts(const Vec3& base, const Vec3& off) const {
        return contains_parts(base, off) ? boundary_distance_parts(base, off) : 0.0;
    }

    Vec3 sample_point(Stream& s) const {
        switch (kind_) {
            case Kind::Box:
                return rot_ * s.uniform_in_box({-half_, half_}) + trans_;
            case Kind::Ball: return s.uniform_in_ball(radius_) + trans_;
            case Kind::Simplex: {
                double u[3] = {s.next_double(), s.next_double(), s.next_double()};
                std::sort(u, u + 3);
                double w0 = u[0], w1 = u[1] - u[0], w2 = u[2] - u[1], w3 = 1.0 - u[2];
                Vec3 p = verts_[0] * w0 + verts_[1] * w1 + verts_[2] * w2 + verts_[3] * w3;
                return rot_ * p + trans_;
            }
            case Kind::CellUnion: {
                const Vec3i& c = cells_[s.next_u64() % cells_.size()];
                return s.uniform_in_box({c.to_vec3() - Vec3{0.5, 0.5, 0.5},
                                         c.to_vec3() + Vec3{0.5, 0.5, 0.5}});
            }
        }
        return {};
    }

    // Nearest point of the eroded region {y in D : d(y, boundary) >= eps};
    // closed form for boxes and balls, sampled search otherwise.
    Vec3 nearest_eroded_point(const Vec3& x, double eps, Stream& s) const {
        switch (kind_) {
            case Kind::Box: {
                Vec3 h = half_ - Vec3{eps, eps, eps};
                if (!(h.x > 0 && h.y > 0 && h.z > 0))
                    throw std::runtime_error("nearest_eroded_point: erosion empties the box");
                Vec3 local = rot_.transpose() * (x - trans_);
                Vec3 cl{std::clamp(local.x, -h.x, h.x), std::clamp(local.y, -h.y, h.y),
                        std::clamp(local.z, -h.z, h.z)};
                return rot_ * cl + trans_;
            }
            case Kind::Ball: {
                double r = radius_ - eps;
                if (!(r > 0))
                    throw std::runtime_error("nearest_eroded_point: erosion empties the ball");
                Vec3 local = x - trans_;
                double n = local.norm();
                if (n <= r) return x;
                return local * (r / n) + trans_;
            }
            case Kind::Simplex:
            case Kind::CellUnion: {
                Vec3 best{};
                double best2 = 1e300;
                const int tries = 4096;
                for (int i = 0; i < tries; ++i) {
                    Vec3 c = sample_point(s);
                    if (boundary_distance(c) < eps) continue;
                    double d2 = (c - x).norm2();
                    if (d2 < best2) {
                        best2 = d2;
                        best = c;
                    }
                }
                if (best2 == 1e300)
                    throw std::runtime_error(
                        "nearest_eroded_point: no interior point found at this erosion depth");
                return best;
            }
        }
        return {};
    }

    std::string describe() const {
        switch (kind_) {
            case Kind::Box: {
                Vec3 e = half_ * 2.0;
                if (e.x == e.y && e.y == e.z) return "cube(side=" + std::to_string(e.x) + ")";
                return "box(" + std::to_string(e.x) + "," + std::to_string(e.y) + "," +
                       std::to_string(e.z) + ")";
            }
            case Kind::Ball: return "ball(radius=" + std::to_string(radius_) + ")";
            case Kind::Simplex: return "simplex";
            case Kind::CellUnion:
                return "cell_union(" + std::to_string(cells_.size()) + " cells)";
        }
        return "?";
    }

    const std::array<Vec3, 4>& local_vertices() const { return verts_; }
    Vec3 box_half_extents() const { return half_; }
    double ball_radius() const { return radius_; }
    std::array<Vec3, 4> world_vertices() const {
        std::array<Vec3, 4> w;
        for (int i = 0; i < 4; ++i) w[i] = rot_ * verts_[i] + trans_;
        return w;
    }

private:
    static void grow(Box3& b, const Vec3& p) {
        b.lo = {std::min(b.lo.x, p.x), std::min(b.lo.y, p.y), std::min(b.lo.z, p.z)};
        b.hi = {std::max(b.hi.x, p.x), std::max(b.hi.y, p.y), std::max(b.hi.z, p.z)};
    }

    Vec3 to_local(const Vec3& base, const Vec3& off) const {
        Vec3 shifted = (base - trans_) + off;
        return has_rot_ ? rot_.transpose() * shifted : shifted;
    }

    void init_simplex_planes() {
        static const int faces[4][3] = {{0, 1, 2}, {0, 1, 3}, {0, 2, 3}, {1, 2, 3}};
        Vec3 centroid = (verts_[0] + verts_[1] + verts_[2] + verts_[3]) * 0.25;
        for (int f = 0; f < 4; ++f) {
            Vec3 n = (verts_[faces[f][1]] - verts_[faces[f][0]])
                         .cross(verts_[faces[f][2]] - verts_[faces[f][0]]);
            n = n.normalized();
            double d = n.dot(verts_[faces[f][0]]);
            if (n.dot(centroid) > d) {  // make the normal outward
                n = -n;
                d = -d;
            }
            plane_n_[f] = n;
            plane_d_[f] = d;
        }
    }

    struct Face {
        Vec3 lo, hi;  // degenerate axis-aligned rectangle
    };
    void init_cell_union_faces() {
        faces_.clear();
        std::unordered_set<Vec3i, Vec3iHash> members(cells_.begin(), cells_.end());
        static const Vec3i dirs[6] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0},
                                      {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
        for (const Vec3i& c : cells_) {
            Vec3 lo = c.to_vec3() - Vec3{0.5, 0.5, 0.5};
            Vec3 hi = c.to_vec3() + Vec3{0.5, 0.5, 0.5};
            for (int d = 0; d < 6; ++d) {
                if (members.count(c + dirs[d])) continue;
                Face f{lo, hi};
                int axis = d / 2;
                double plane = (d % 2 == 0) ? hi[axis] : lo[axis];
                f.lo[axis] = plane;
                f.hi[axis] = plane;
                faces_.push_back(f);
            }
        }
    }

    Kind kind_ = Kind::Box;
    Mat3 rot_ = Mat3::identity();
    bool has_rot_ = false;
    Vec3 trans_{};
    Vec3 half_{0.5, 0.5, 0.5};
    double radius_ = 1.0;
    std::array<Vec3, 4> verts_{};
    std::array<Vec3, 4> plane_n_{};
    std::array<double, 4> plane_d_{};
    std::vector<Vec3i> cells_;
    std::vector<Face> faces_;
    double volume_ = 1.0;
};

struct CollarEstimate {
    double volume = 0.0;
    double std_error = 0.0;
};

// Monte Carlo volume of the two-sided boundary collar of relative thickness t:
// |{x : d(x, boundary) <= |D|^(1/3) t}|.
inline CollarEstimate collar_volume(const DomainShape& d, double t, std::size_t n_mc,
                                    std::uint64_t seed) {
    if (!(t >= 0)) throw std::invalid_argument("collar_volume: t must be >= 0");
    if (n_mc < 10000) throw std::invalid_argument("collar_volume: need n_mc >= 1e4");
    if (t == 0.0) return {0.0, 0.0};
    double w = std::cbrt(d.volume()) * t;
    Box3 bb = d.bounding_box().expanded(w * 1.0000001);
    Stream s(derive_key(seed, stream::mc));
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n_mc; ++i) {
        Vec3 x = s.uniform_in_box(bb);
        if (d.boundary_distance(x) <= w) ++hits;
    }
    double p = static_cast<double>(hits) / static_cast<double>(n_mc);
    CollarEstimate c;
    c.volume = bb.volume() * p;
    c.std_error = bb.volume() * std::sqrt(p * (1 - p) / static_cast<double>(n_mc));
    return c;
}

struct FisherEstimate {
    double a = 0.0;
    double a_std_error = 0.0;
    std::vector<double> t_grid;
    std::vector<double> ratios;      // collar / (|D| t)
    std::vector<double> ratio_se;
};

// Smallest constant a with collar(t) <= |D| a t across the grid: the largest
// observed ratio, with its Monte Carlo error bar.
inline FisherEstimate fisher_a_estimate(const DomainShape& d, const std::vector<double>& t_grid,
                                        std::size_t n_mc, std::uint64_t seed) {
    if (t_grid.empty()) throw std::invalid_argument("fisher_a_estimate: empty grid");
    for (double t : t_grid)
        if (!(t > 0 && t <= 0.2))
            throw std::invalid_argument("fisher_a_estimate: grid must lie in (0, 0.2]");
    FisherEstimate f;
    f.t_grid = t_grid;
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        auto c = collar_volume(d, t_grid[i], n_mc, derive_key(seed, stream::mc, i));
        double denom = d.volume() * t_grid[i];
        f.ratios.push_back(c.volume / denom);
        f.ratio_se.push_back(c.std_error / denom);
        if (f.ratios.back() > f.a) {
            f.a = f.ratios.back();
            f.a_std_error = f.ratio_se.back();
        }
    }
    return f;
}

struct ConeCheckResult {
    bool pass = true;
    std::size_t checked_inside = 0;
    std::size_t checked_outside = 0;
    std::vector<Vec3> witnesses;  // sampled points admitting no cone direction
};

// Probabilistic audit of the cone property for D and its complement: every
// sampled point must admit a codebook direction whose finite cone
// {y : (x-y).v > (1-eps^2)|x-y|, |x-y| < eps} is contained in the same side.
// One-sided: witnesses certify failure; passing is only statistical evidence.
inline ConeCheckResult cone_check(const DomainShape& d, double cone_epsilon,
                                  std::size_t n_samples, std::uint64_t seed,
                                  std::size_t n_probe = 96) {
    if (!(cone_epsilon > 0)) throw std::invalid_argument("cone_check: cone_epsilon must be > 0");
    // Fibonacci sphere codebook.
    const std::size_t n_dir = 482;
    std::vector<Vec3> dirs(n_dir);
    const double golden = 3.14159265358979323846 * (3.0 - std::sqrt(5.0));
    for (std::size_t i = 0; i < n_dir; ++i) {
        double z = 1.0 - 2.0 * (static_cast<double>(i) + 0.5) / static_cast<double>(n_dir);
        double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        double th = golden * static_cast<double>(i);
        dirs[i] = {r * std::cos(th), r * std::sin(th), z};
    }

    ConeCheckResult res;
    Stream s(derive_key(seed, stream::mc));
    Box3 shell = d.bounding_box().expanded(cone_epsilon);
    const double cap = 1.0 - cone_epsilon * cone_epsilon;

    auto admits_direction = [&](const Vec3& x, bool inside) {
        // Shared probe offsets per point: s in (0, eps] by cube-root (uniform
        // in cone volume), direction within the cap around v.
        std::vector<double> us(n_probe), zs(n_probe), phis(n_probe);
        for (std::size_t k = 0; k < n_probe; ++k) {
            us[k] = cone_epsilon * std::cbrt(s.next_double_pos());
            zs[k] = cap + (1.0 - cap) * s.next_double();
            phis[k] = s.uniform(0, 2 * 3.14159265358979323846);
        }
        for (const Vec3& v : dirs) {
            Vec3 e1 = std::abs(v.x) < 0.8 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
            e1 = (e1 - v * e1.dot(v)).normalized();
            Vec3 e2 = v.cross(e1);
            bool ok = true;
            for (std::size_t k = 0; k < n_probe && ok; ++k) {
                double rho = std::sqrt(std::max(0.0, 1.0 - zs[k] * zs[k]));
                Vec3 u = v * zs[k] + (e1 * std::cos(phis[k]) + e2 * std::sin(phis[k])) * rho;
                Vec3 y = x - u * us[k];
                if (d.contains(y) != inside) ok = false;
            }
            if (ok) return true;
        }
        return false;
    };

    for (std::size_t i = 0; i < n_samples; ++i) {
        Vec3 x = d.sample_point(s);
        ++res.checked_inside;
        if (!admits_direction(x, true)) {
            res.pass = false;
            res.witnesses.push_back(x);
        }
    }
    std::size_t got = 0;
    std::size_t guard = 0;
    while (got < n_samples && guard < 400 * n_samples) {
        ++guard;
        Vec3 x = s.uniform_in_box(shell);
        if (d.contains(x)) continue;
        ++got;
        ++res.checked_outside;
        if (!admits_direction(x, false)) {
            res.pass = false;
            res.witnesses.push_back(x);
        }
    }
    return res;
}

struct RegularizedVolume {
    double volume = 0.0;
    std::size_t cell_count = 0;
};

// Volume of the union of lattice cells whose interior meets D: the computable
// surrogate for the regularized volume.
inline RegularizedVolume regularized_volume(const DomainShape& d, const LatticeSpec& lattice) {
    if (!lattice.is_cubic())
        throw std::invalid_argument("regularized_volume: cubic lattice expected");
    RegularizedVolume rv;
    if (d.kind() == DomainShape::Kind::CellUnion) {
        rv.cell_count = d.cells().size();
        rv.volume = d.volume();
        return rv;
    }
    Box3 bb = d.bounding_box();
    Vec3i lo = lattice.cell_of(bb.lo) - Vec3i{1, 1, 1};
    Vec3i hi = lattice.cell_of(bb.hi) + Vec3i{1, 1, 1};
    const std::array<Vec3, 4> wv =
        d.kind() == DomainShape::Kind::Simplex ? d.world_vertices() : std::array<Vec3, 4>{};
    for (std::int64_t x = lo.x; x <= hi.x; ++x)
        for (std::int64_t y = lo.y; y <= hi.y; ++y)
            for (std::int64_t z = lo.z; z <= hi.z; ++z) {
                Vec3 c{static_cast<double>(x), static_cast<double>(y), static_cast<double>(z)};
                bool meets = false;
                switch (d.kind()) {
                    case DomainShape::Kind::Box:
                        meets = geom::obb_aabb_interiors_intersect(c, {0.5, 0.5, 0.5},
                                                                   d.rotation(), d.translation(),
                                                                   d.box_half_extents());
                        break;
                    case DomainShape::Kind::Ball:
                        meets = geom::point_box_dist2(d.translation(), c - Vec3{0.5, 0.5, 0.5},
                                                      c + Vec3{0.5, 0.5, 0.5}) <
                                d.ball_radius() * d.ball_radius();
                        break;
                    case DomainShape::Kind::Simplex:
                        meets = geom::tetra_aabb_interiors_intersect(c, {0.5, 0.5, 0.5}, wv);
                        break;
                    case DomainShape::Kind::CellUnion: break;  // handled above
                }
                if (meets) ++rv.cell_count;
            }
    rv.volume = static_cast<double>(rv.cell_count) * lattice.cell_volume();
    return rv;
}

}  // namespace randlat
