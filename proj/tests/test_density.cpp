#include <doctest.h>

#include <cmath>

#include "diffc/density.hpp"

using namespace diffc;

namespace {

Eigen::ArrayXd arr1(double v) {
    Eigen::ArrayXd a(1);
    a(0) = v;
    return a;
}

// Dense grid search over z in [-20, 20], the independent check on the
// analytic infimum.
double wmin_grid_oracle(const DiagonalGaussian& p, const DiagonalGaussian& q) {
    double best = 1e300;
    for (double z = -20.0; z <= 20.0; z += 1e-4)
        best = std::min(best, std::exp(p.log_density(arr1(z)) - q.log_density(arr1(z))));
    return best;
}

}  // namespace

TEST_CASE("diagonal gaussian density and sampling") {
    const DiagonalGaussian g(arr1(1.0), arr1(4.0));
    // log N(3; 1, 4) = -0.5 log(8 pi) - 0.5
    CHECK(g.log_density(arr1(3.0)) ==
          doctest::Approx(-0.5 * std::log(8.0 * M_PI) - 0.5).epsilon(1e-12));
    const StreamKey key = StreamKey::from_seed(1);
    CHECK(g.sample(key, 5, 7)(0) == g.sample(key, 5, 7)(0));
    CHECK(g.sample(key, 5, 7)(0) != g.sample(key, 5, 8)(0));
}

TEST_CASE("kl divergence between diagonal gaussians") {
    const DiagonalGaussian p(arr1(0.0), arr1(1.0));
    const DiagonalGaussian q(arr1(0.7), arr1(0.09));
    // 0.5 (var + mu^2 - 1 - ln var)
    const double expect = 0.5 * (0.09 + 0.49 - 1.0 - std::log(0.09));
    CHECK(kl_divergence_nats(q, p) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(kl_divergence_nats(p, p) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("analytic density-ratio infimum") {
    const DiagonalGaussian p(arr1(0.0), arr1(1.0));
    SUBCASE("identical pair gives 1") {
        // variance must shrink strictly, so use an epsilon-close target
        const DiagonalGaussian q(arr1(0.0), arr1(1.0 - 1e-12));
        CHECK(gaussian_wmin(p, q) == doctest::Approx(1.0).epsilon(1e-9));
    }
    SUBCASE("centered shrink") {
        const DiagonalGaussian q(arr1(0.0), arr1(0.25));
        CHECK(gaussian_wmin(p, q) == doctest::Approx(0.5).epsilon(1e-12));
    }
    SUBCASE("shifted shrink against the grid oracle") {
        const DiagonalGaussian q(arr1(1.0), arr1(0.25));
        const double w = gaussian_wmin(p, q);
        CHECK(w == doctest::Approx(0.2567085595162960).epsilon(1e-10));
        CHECK(w == doctest::Approx(wmin_grid_oracle(p, q)).epsilon(1e-6));
    }
    SUBCASE("multivariate product") {
        Eigen::ArrayXd mean(2), var(2);
        mean << 0.0, 1.0;
        var << 0.25, 0.25;
        const DiagonalGaussian q2(mean, var);
        const DiagonalGaussian p2(Eigen::ArrayXd::Zero(2), Eigen::ArrayXd::Ones(2));
        CHECK(gaussian_wmin(p2, q2) ==
              doctest::Approx(0.5 * 0.2567085595162960).epsilon(1e-10));
    }
    SUBCASE("unsupported pair") {
        const DiagonalGaussian q(arr1(0.0), arr1(1.5));
        CHECK_THROWS_AS(gaussian_wmin(p, q), std::domain_error);
    }
}

TEST_CASE("probe validation of a caller-supplied bound") {
    const DiagonalGaussian p(arr1(0.0), arr1(1.0));
    const DiagonalGaussian q(arr1(0.5), arr1(0.25));
    const double w = gaussian_wmin(p, q);
    const StreamKey key = StreamKey::from_seed(77);
    CHECK(probe_wmin(p, q, w, 100000, key));
    CHECK_FALSE(probe_wmin(p, q, 2.0 * w, 100000, key));
    CHECK_THROWS_AS(probe_wmin(p, q, 0.0, 10, key), std::domain_error);
}
