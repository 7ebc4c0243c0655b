#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

#include "diffc/random.hpp"

namespace diffc {

/// Streaming mean/variance (Welford).
struct RunningStat {
    std::size_t n = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) {
        ++n;
        const double d = x - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (x - mean);
    }
    void merge(const RunningStat& o);
    double variance() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
    double std_error() const;
};

/// Two-sided one-sample Kolmogorov-Smirnov test against an analytic CDF.
double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf);
/// Asymptotic p-value with Stephens' small-sample correction.
double ks_p_value(double statistic, std::size_t n);

/// Energy distance 2 E|X-Y| - E|X-X'| - E|Y-Y'| between two samples.
double energy_distance_1d(std::vector<double> x, std::vector<double> y);
/// Permutation p-value (B relabelings of the pooled sample); O((n+m) log)
/// per permutation via sorted prefix sums.
double energy_test_p_1d(const std::vector<double>& x, const std::vector<double>& y,
                        int permutations, const StreamKey& key);

/// Multivariate versions, O(n^2) distances; keep n modest.
double energy_distance_nd(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y);
double energy_test_p_nd(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, int permutations,
                        const StreamKey& key);

/// Adaptive Gauss-Kronrod quadrature of f over [a, b].
double integrate(const std::function<double(double)>& f, double a, double b,
                 double rel_tol = 1e-9);

}  // namespace diffc
