#include <catch2/catch_amalgamated.hpp>

#include "randlat/rng.hpp"
#include "randlat/stats.hpp"

using namespace randlat;

TEST_CASE("streams are deterministic and label-separated") {
    Stream a(derive_key(42, stream::displacement));
    Stream b(derive_key(42, stream::displacement));
    Stream c(derive_key(42, stream::charge));
    for (int i = 0; i < 100; ++i) {
        auto va = a.next_u64();
        REQUIRE(va == b.next_u64());
        REQUIRE(va != c.next_u64());
    }
}

TEST_CASE("site keys differ across sites and match across calls") {
    auto k1 = derive_key(7, stream::displacement, Vec3i{1, 2, 3});
    auto k2 = derive_key(7, stream::displacement, Vec3i{1, 2, 3});
    auto k3 = derive_key(7, stream::displacement, Vec3i{3, 2, 1});
    auto k4 = derive_key(8, stream::displacement, Vec3i{1, 2, 3});
    REQUIRE(k1 == k2);
    REQUIRE(k1 != k3);
    REQUIRE(k1 != k4);
}

TEST_CASE("uniform doubles stay in range and have the right mean") {
    Stream s(derive_key(1, stream::mc));
    std::vector<double> v(100000);
    for (auto& x : v) {
        x = s.next_double();
        REQUIRE(x >= 0.0);
        REQUIRE(x < 1.0);
    }
    auto sum = summarize(v);
    REQUIRE(std::abs(sum.mean - 0.5) < 5 * sum.std_error);
}

TEST_CASE("normals have unit variance and zero mean") {
    Stream s(derive_key(2, stream::mc));
    std::size_t n = 100000;
    std::vector<double> v(n), v2(n);
    for (std::size_t i = 0; i < n; ++i) {
        double a, b;
        s.next_normal_pair(a, b);
        v[i] = a;
        v2[i] = a * a;
    }
    auto m = summarize(v);
    auto m2 = summarize(v2);
    REQUIRE(std::abs(m.mean) < 4 * m.std_error);
    REQUIRE(std::abs(m2.mean - 1.0) < 4 * m2.std_error);
}

TEST_CASE("poisson counts have matching mean and variance at large mean") {
    Stream s(derive_key(3, stream::poisson));
    const double mean = 1000.0;
    std::vector<double> v(4000);
    for (auto& x : v) x = static_cast<double>(s.next_poisson(mean));
    auto m = summarize(v);
    REQUIRE(std::abs(m.mean - mean) < 5 * m.std_error);
    double var = m.std_dev * m.std_dev;
    REQUIRE(var / mean > 0.9);
    REQUIRE(var / mean < 1.1);
}

TEST_CASE("ball sampling stays inside the ball") {
    Stream s(derive_key(4, stream::mc));
    for (int i = 0; i < 1000; ++i) REQUIRE(s.uniform_in_ball(0.3).norm() <= 0.3);
}
