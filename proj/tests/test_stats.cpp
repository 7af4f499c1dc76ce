#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "randlat/stats.hpp"

using namespace randlat;

TEST_CASE("pairwise sum equals plain sum on exact integers") {
    std::vector<double> v(1037);
    double plain = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        v[i] = static_cast<double>(i % 97);
        plain += v[i];
    }
    REQUIRE(pairwise_sum(v) == plain);
}

TEST_CASE("summary of a constant sample") {
    std::vector<double> v(50, 3.25);
    auto s = summarize(v);
    REQUIRE(s.mean == 3.25);
    REQUIRE(s.std_dev == 0.0);
    REQUIRE(s.ci_lo == 3.25);
    REQUIRE(s.ci_hi == 3.25);
}

TEST_CASE("normal quantile hits textbook values") {
    REQUIRE(std::abs(normal_quantile(0.975) - 1.959963985) < 1e-6);
    REQUIRE(std::abs(normal_quantile(0.995) - 2.5758293035) < 1e-6);
    REQUIRE(std::abs(normal_quantile(0.5)) < 1e-9);
    REQUIRE(std::abs(normal_quantile(0.3) + normal_quantile(0.7)) < 1e-9);
}

TEST_CASE("ols recovers an exact line") {
    std::vector<double> x{1, 2, 3, 4, 5}, y;
    for (double xi : x) y.push_back(2.5 * xi - 1.0);
    auto f = ols_fit(x, y);
    REQUIRE(std::abs(f.slope - 2.5) < 1e-12);
    REQUIRE(std::abs(f.intercept + 1.0) < 1e-12);
    REQUIRE(f.r2 > 1.0 - 1e-12);
    REQUIRE(f.slope_se < 1e-10);
}

TEST_CASE("ks statistic accepts its own distribution and rejects a shifted one") {
    std::mt19937_64 g(11);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<double> sample(20000);
    for (auto& x : sample) x = u(g);
    double d = ks_statistic(sample, [](double t) { return std::clamp(t, 0.0, 1.0); });
    double crit = ks_critical_coefficient(0.01) / std::sqrt(20000.0);
    REQUIRE(d < crit);
    double d_bad =
        ks_statistic(sample, [](double t) { return std::clamp(t * t, 0.0, 1.0); });
    REQUIRE(d_bad > crit);
}

TEST_CASE("two-sample ks separates distinct laws") {
    std::mt19937_64 g(12);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<double> a(5000), b(5000), c(5000);
    for (auto& x : a) x = u(g);
    for (auto& x : b) x = u(g);
    for (auto& x : c) x = u(g) * 0.8;
    double crit = ks_critical_coefficient(0.01) * std::sqrt(2.0 / 5000.0);
    REQUIRE(ks_two_sample_statistic(a, b) < crit);
    REQUIRE(ks_two_sample_statistic(a, c) > crit);
}
