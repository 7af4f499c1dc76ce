#pragma once

#include <cmath>

#include "randlat/rng.hpp"
#include "randlat/vec.hpp"

namespace randlat {

// Rotation matrix of a unit quaternion (w, x, y, z).
inline Mat3 quaternion_to_matrix(double w, double x, double y, double z) {
    Mat3 m;
    m.c[0] = {1 - 2 * (y * y + z * z), 2 * (x * y + w * z), 2 * (x * z - w * y)};
    m.c[1] = {2 * (x * y - w * z), 1 - 2 * (x * x + z * z), 2 * (y * z + w * x)};
    m.c[2] = {2 * (x * z + w * y), 2 * (y * z - w * x), 1 - 2 * (x * x + y * y)};
    return m;
}

// Haar-uniform rotation: a normalized 4-dimensional Gaussian is uniform on
// the quaternion sphere.
inline Mat3 uniform_rotation(Stream& s) {
    for (;;) {
        double a, b, c, d;
        s.next_normal_pair(a, b);
        s.next_normal_pair(c, d);
        double n2 = a * a + b * b + c * c + d * d;
        if (n2 < 1e-12) continue;
        double inv = 1.0 / std::sqrt(n2);
        return quaternion_to_matrix(a * inv, b * inv, c * inv, d * inv);
    }
}

inline double rotation_angle(const Mat3& r) {
    double c = 0.5 * (r.trace() - 1.0);
    return std::acos(std::clamp(c, -1.0, 1.0));
}

// CDF of the rotation angle under the Haar measure: (theta - sin theta) / pi.
inline double haar_angle_cdf(double theta) {
    return (theta - std::sin(theta)) / 3.14159265358979323846;
}

}  // namespace randlat
