#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <ostream>

namespace randlat {

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
    double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator-() const { return {-x, -y, -z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
    bool operator==(const Vec3& o) const { return x == o.x && y == o.y && z == o.z; }

    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double norm2() const { return dot(*this); }
    double norm() const { return std::sqrt(norm2()); }
    Vec3 normalized() const { double n = norm(); return {x / n, y / n, z / n}; }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

inline std::ostream& operator<<(std::ostream& os, const Vec3& v) {
    return os << "(" << v.x << ", " << v.y << ", " << v.z << ")";
}

struct Vec3i {
    std::int64_t x = 0, y = 0, z = 0;

    std::int64_t& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
    std::int64_t operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }

    Vec3i operator+(const Vec3i& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3i operator-(const Vec3i& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3i operator-() const { return {-x, -y, -z}; }
    bool operator==(const Vec3i& o) const { return x == o.x && y == o.y && z == o.z; }
    bool operator!=(const Vec3i& o) const { return !(*this == o); }
    bool operator<(const Vec3i& o) const {
        if (x != o.x) return x < o.x;
        if (y != o.y) return y < o.y;
        return z < o.z;
    }

    Vec3 to_vec3() const {
        return {static_cast<double>(x), static_cast<double>(y), static_cast<double>(z)};
    }
};

inline std::ostream& operator<<(std::ostream& os, const Vec3i& v) {
    return os << "(" << v.x << ", " << v.y << ", " << v.z << ")";
}

// Column-major 3x3 matrix; c[j] is the j-th column.
struct Mat3 {
    std::array<Vec3, 3> c{Vec3{1, 0, 0}, Vec3{0, 1, 0}, Vec3{0, 0, 1}};

    static Mat3 identity() { return {}; }

    Vec3 operator*(const Vec3& v) const {
        return c[0] * v.x + c[1] * v.y + c[2] * v.z;
    }
    Mat3 operator*(const Mat3& o) const {
        Mat3 r;
        for (int j = 0; j < 3; ++j) r.c[j] = (*this) * o.c[j];
        return r;
    }
    Mat3 transpose() const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) r.c[j][i] = c[i][j];
        return r;
    }
    double det() const { return c[0].dot(c[1].cross(c[2])); }
    Mat3 inverse() const {
        double d = det();
        Mat3 r;
        Vec3 r0 = c[1].cross(c[2]) / d;
        Vec3 r1 = c[2].cross(c[0]) / d;
        Vec3 r2 = c[0].cross(c[1]) / d;
        // rows of the inverse
        r.c[0] = {r0.x, r1.x, r2.x};
        r.c[1] = {r0.y, r1.y, r2.y};
        r.c[2] = {r0.z, r1.z, r2.z};
        return r;
    }
    double trace() const { return c[0].x + c[1].y + c[2].z; }
    bool is_identity() const {
        return c[0] == Vec3{1, 0, 0} && c[1] == Vec3{0, 1, 0} && c[2] == Vec3{0, 0, 1};
    }
    // Frobenius norm of R^T R - I, used to audit orthonormality.
    double orthonormality_residual() const {
        Mat3 g = transpose() * (*this);
        double s = 0;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double e = g.c[j][i] - (i == j ? 1.0 : 0.0);
                s += e * e;
            }
        return std::sqrt(s);
    }
};

// Axis-aligned box, half-open: [lo, hi) on every axis.
struct Box3 {
    Vec3 lo, hi;

    bool valid() const { return lo.x < hi.x && lo.y < hi.y && lo.z < hi.z; }
    bool contains(const Vec3& p) const {
        return p.x >= lo.x && p.x < hi.x && p.y >= lo.y && p.y < hi.y &&
               p.z >= lo.z && p.z < hi.z;
    }
    double volume() const {
        if (!valid()) return 0.0;
        return (hi.x - lo.x) * (hi.y - lo.y) * (hi.z - lo.z);
    }
    Vec3 extent() const { return hi - lo; }
    Vec3 center() const { return (lo + hi) * 0.5; }
    Box3 expanded(double d) const { return {lo - Vec3{d, d, d}, hi + Vec3{d, d, d}}; }
    Box3 translated(const Vec3& t) const { return {lo + t, hi + t}; }
    // Distance from an interior point to the nearest face (0 outside).
    double interior_depth(const Vec3& p) const {
        if (!contains(p)) return 0.0;
        double d = p.x - lo.x;
        d = std::min(d, hi.x - p.x);
        d = std::min(d, p.y - lo.y);
        d = std::min(d, hi.y - p.y);
        d = std::min(d, p.z - lo.z);
        d = std::min(d, hi.z - p.z);
        return d;
    }
};

inline std::uint64_t hash_combine64(std::uint64_t h, std::uint64_t v) {
    h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return h;
}

struct Vec3iHash {
    std::size_t operator()(const Vec3i& v) const {
        std::uint64_t h = 0x2545f4914f6cdd1dULL;
        h = hash_combine64(h, static_cast<std::uint64_t>(v.x));
        h = hash_combine64(h, static_cast<std::uint64_t>(v.y));
        h = hash_combine64(h, static_cast<std::uint64_t>(v.z));
        return static_cast<std::size_t>(h);
    }
};

}  // namespace randlat
