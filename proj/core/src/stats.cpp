#include "diffc/stats.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace diffc {

void RunningStat::merge(const RunningStat& o) {
    if (o.n == 0) return;
    if (n == 0) {
        *this = o;
        return;
    }
    const double total = static_cast<double>(n + o.n);
    const double delta = o.mean - mean;
    m2 += o.m2 + delta * delta * static_cast<double>(n) * static_cast<double>(o.n) / total;
    mean += delta * static_cast<double>(o.n) / total;
    n += o.n;
}

double RunningStat::std_error() const {
    return n > 1 ? std::sqrt(variance() / static_cast<double>(n)) : 0.0;
}

double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf) {
    if (samples.empty()) throw std::invalid_argument("ks_statistic: empty sample");
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double f = cdf(samples[i]);
        d = std::max(d, std::abs(f - static_cast<double>(i) / n));
        d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
    }
    return d;
}

double ks_p_value(double statistic, std::size_t n) {
    const double rn = std::sqrt(static_cast<double>(n));
    const double lam = (rn + 0.12 + 0.11 / rn) * statistic;
    double sum = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * lam * lam);
        sum += (k % 2 == 1 ? term : -term);
        if (term < 1e-16) break;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

namespace {

// sum over all pairs |s_i - s_j| (ordered pairs counted once), s sorted
double pair_abs_sum(const std::vector<double>& s) {
    double acc = 0.0, prefix = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        acc += s[i] * static_cast<double>(i) - prefix;
        prefix += s[i];
    }
    return acc;
}

// sum_{i,j} |x_i - y_j| with both inputs sorted
double cross_abs_sum(const std::vector<double>& xs, const std::vector<double>& ys) {
    double acc = 0.0;
    std::size_t ix = 0;
    double prefix_x = 0.0;
    const double total_x = std::accumulate(xs.begin(), xs.end(), 0.0);
    for (double y : ys) {
        while (ix < xs.size() && xs[ix] <= y) prefix_x += xs[ix++];
        const double below = static_cast<double>(ix);
        acc += y * below - prefix_x + (total_x - prefix_x) - y * (static_cast<double>(xs.size()) - below);
    }
    return acc;
}

double energy_from_sorted(const std::vector<double>& xs, const std::vector<double>& ys) {
    const double n = static_cast<double>(xs.size());
    const double m = static_cast<double>(ys.size());
    return 2.0 * cross_abs_sum(xs, ys) / (n * m) - 2.0 * pair_abs_sum(xs) / (n * n) -
           2.0 * pair_abs_sum(ys) / (m * m);
}

}  // namespace

double energy_distance_1d(std::vector<double> x, std::vector<double> y) {
    if (x.empty() || y.empty()) throw std::invalid_argument("energy distance: empty sample");
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    return energy_from_sorted(x, y);
}

double energy_test_p_1d(const std::vector<double>& x, const std::vector<double>& y,
                        int permutations, const StreamKey& key) {
    if (permutations < 1) throw std::invalid_argument("energy test: need permutations >= 1");
    const double observed = energy_distance_1d(x, y);

    std::vector<double> pooled(x);
    pooled.insert(pooled.end(), y.begin(), y.end());
    std::sort(pooled.begin(), pooled.end());

    const CounterStream stream(key, 0, StreamTag::shuffle);
    const std::size_t n = x.size();
    int exceed = 0;
    std::vector<std::uint32_t> idx(pooled.size());
    std::vector<double> px, py;
    for (int b = 0; b < permutations; ++b) {
        // Fisher-Yates on index labels; the pooled values stay sorted so
        // the split samples are sorted by construction.
        std::iota(idx.begin(), idx.end(), 0u);
        for (std::size_t i = idx.size() - 1; i > 0; --i) {
            const std::uint64_t item = static_cast<std::uint64_t>(b) * idx.size() + i;
            const std::size_t j =
                static_cast<std::size_t>(stream.uniform(item, 0) * static_cast<double>(i + 1));
            std::swap(idx[i], idx[std::min(j, i)]);
        }
        px.clear();
        py.clear();
        for (std::size_t i = 0; i < pooled.size(); ++i)
            (idx[i] < n ? px : py).push_back(pooled[i]);
        if (energy_from_sorted(px, py) >= observed) ++exceed;
    }
    return static_cast<double>(1 + exceed) / static_cast<double>(permutations + 1);
}

namespace {

double energy_nd(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
    const auto mean_cross = [](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
        double acc = 0.0;
        for (Eigen::Index i = 0; i < a.rows(); ++i)
            for (Eigen::Index j = 0; j < b.rows(); ++j)
                acc += (a.row(i) - b.row(j)).norm();
        return acc / (static_cast<double>(a.rows()) * static_cast<double>(b.rows()));
    };
    return 2.0 * mean_cross(x, y) - mean_cross(x, x) - mean_cross(y, y);
}

}  // namespace

double energy_distance_nd(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
    if (x.rows() == 0 || y.rows() == 0 || x.cols() != y.cols())
        throw std::invalid_argument("energy distance: bad sample shapes");
    return energy_nd(x, y);
}

double energy_test_p_nd(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, int permutations,
                        const StreamKey& key) {
    const double observed = energy_distance_nd(x, y);
    Eigen::MatrixXd pooled(x.rows() + y.rows(), x.cols());
    pooled << x, y;
    const CounterStream stream(key, 0, StreamTag::shuffle);
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(pooled.rows()));
    int exceed = 0;
    for (int b = 0; b < permutations; ++b) {
        std::iota(idx.begin(), idx.end(), 0);
        for (std::size_t i = idx.size() - 1; i > 0; --i) {
            const std::uint64_t item = static_cast<std::uint64_t>(b) * idx.size() + i;
            const std::size_t j =
                static_cast<std::size_t>(stream.uniform(item, 0) * static_cast<double>(i + 1));
            std::swap(idx[i], idx[std::min(j, i)]);
        }
        Eigen::MatrixXd px(x.rows(), x.cols()), py(y.rows(), y.cols());
        for (Eigen::Index i = 0; i < pooled.rows(); ++i) {
            if (i < x.rows())
                px.row(i) = pooled.row(idx[static_cast<std::size_t>(i)]);
            else
                py.row(i - x.rows()) = pooled.row(idx[static_cast<std::size_t>(i)]);
        }
        if (energy_nd(px, py) >= observed) ++exceed;
    }
    return static_cast<double>(1 + exceed) / static_cast<double>(permutations + 1);
}

double integrate(const std::function<double(double)>& f, double a, double b, double rel_tol) {
    double error = 0.0;
    const double v = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
        f, a, b, /*max_depth=*/15, rel_tol, &error);
    return v;
}

}  // namespace diffc
