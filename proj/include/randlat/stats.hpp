#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace randlat {

// Pairwise (cascade) summation over a fixed-order sequence. The result depends
// only on the values and their order, never on thread count.
inline double pairwise_sum(std::span<const double> v) {
    if (v.size() <= 8) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    std::size_t h = v.size() / 2;
    return pairwise_sum(v.subspan(0, h)) + pairwise_sum(v.subspan(h));
}

inline double mean_of(std::span<const double> v) {
    if (v.empty()) throw std::invalid_argument("mean_of: empty sample");
    return pairwise_sum(v) / static_cast<double>(v.size());
}

// Unbiased sample variance (n-1 denominator), two-pass for stability.
inline double variance_of(std::span<const double> v, double mean) {
    if (v.size() < 2) return 0.0;
    std::vector<double> sq(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        double d = v[i] - mean;
        sq[i] = d * d;
    }
    return pairwise_sum(sq) / static_cast<double>(v.size() - 1);
}

// Inverse standard normal CDF, Acklam's rational approximation (~1.15e-9
// relative accuracy, plenty for confidence limits).
inline double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::domain_error("normal_quantile: p must be in (0,1)");
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    double q, r;
    if (p < plow) {
        q = std::sqrt(-2 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
    }
    if (p > 1 - plow) {
        q = std::sqrt(-2 * std::log(1 - p));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
    }
    q = p - 0.5;
    r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
}

struct SampleSummary {
    std::size_t n = 0;
    double mean = 0.0;
    double std_dev = 0.0;
    double std_error = 0.0;
    double ci_level = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
};

inline SampleSummary summarize(std::span<const double> v, double ci_level = 0.99) {
    SampleSummary s;
    s.n = v.size();
    s.mean = mean_of(v);
    s.std_dev = std::sqrt(variance_of(v, s.mean));
    s.std_error = s.std_dev / std::sqrt(static_cast<double>(v.size()));
    s.ci_level = ci_level;
    double z = normal_quantile(0.5 + ci_level / 2.0);
    s.ci_lo = s.mean - z * s.std_error;
    s.ci_hi = s.mean + z * s.std_error;
    return s;
}

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_se = 0.0;
    double r2 = 0.0;
    std::size_t n = 0;
};

// Ordinary least squares y = a + b x.
inline LineFit ols_fit(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("ols_fit: need >= 2 points of equal count");
    std::size_t n = x.size();
    double mx = mean_of(x), my = mean_of(y);
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0) throw std::invalid_argument("ols_fit: degenerate abscissae");
    LineFit f;
    f.n = n;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ss_res = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double e = y[i] - (f.intercept + f.slope * x[i]);
        ss_res += e * e;
    }
    f.r2 = syy > 0 ? 1.0 - ss_res / syy : 1.0;
    f.slope_se = n > 2 ? std::sqrt(ss_res / (static_cast<double>(n) - 2.0) / sxx) : 0.0;
    return f;
}

// Asymptotic Kolmogorov-Smirnov critical statistic, c(alpha) = sqrt(-ln(alpha/2)/2).
inline double ks_critical_coefficient(double alpha) {
    return std::sqrt(-std::log(alpha / 2.0) / 2.0);
}

// One-sample KS statistic against a CDF.
template <class Cdf>
double ks_statistic(std::vector<double> sample, Cdf&& cdf) {
    std::sort(sample.begin(), sample.end());
    double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        double f = cdf(sample[i]);
        d = std::max(d, std::abs(f - static_cast<double>(i) / n));
        d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
    }
    return d;
}

// Two-sample KS statistic (ties allowed; conservative for discrete data).
inline double ks_two_sample_statistic(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        double t = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= t) ++i;
        while (j < b.size() && b[j] <= t) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

}  // namespace randlat
