#include <doctest.h>

#include <cmath>
#include <vector>

#include "diffc/density.hpp"
#include "diffc/rcc.hpp"
#include "diffc/stats.hpp"
#include "diffc/zipf.hpp"

using namespace diffc;

namespace {

constexpr double kLog2E = 1.4426950408889634;

Eigen::ArrayXd arr1(double v) {
    Eigen::ArrayXd a(1);
    a(0) = v;
    return a;
}

double normal_cdf(double x, double mean, double sd) {
    return 0.5 * std::erfc(-(x - mean) / (sd * std::sqrt(2.0)));
}

struct GaussianPair {
    DiagonalGaussian prior;
    DiagonalGaussian target;
    double w_min;
    double kl_bits;
};

GaussianPair make_pair(double mu, double var) {
    DiagonalGaussian p(arr1(0.0), arr1(1.0));
    DiagonalGaussian q(arr1(mu), arr1(var));
    const double w = gaussian_wmin(p, q);
    const double kl = kl_divergence_nats(q, p) * kLog2E;
    return {std::move(p), std::move(q), w, kl};
}

}  // namespace

TEST_CASE("identical distributions select the first candidate") {
    const DiagonalGaussian p(arr1(0.0), arr1(1.0));
    const StreamKey key = StreamKey::from_seed(5);
    for (std::uint64_t step = 0; step < 20; ++step) {
        RccChannel ch{&p, &p, 1.0, key, step};
        const TransmissionRecord rec = rcc_encode(ch, 0.0);
        CHECK(rec.selected_index == 1);
        CHECK(rec.candidates_examined == 1);
    }
}

TEST_CASE("encode/decode round trip is bit-identical") {
    const GaussianPair pair = make_pair(0.5, 0.25);
    const StreamKey key = StreamKey::from_seed(42);
    for (std::uint64_t step = 0; step < 50; ++step) {
        RccChannel ch{&pair.prior, &pair.target, pair.w_min, key, step};
        const TransmissionRecord rec = rcc_encode(ch, pair.kl_bits);
        const Eigen::ArrayXd z = rcc_decode(rec.selected_index, pair.prior, key, step);
        const Eigen::ArrayXd z2 = pair.prior.sample(key, step, rec.selected_index);
        CHECK(z(0) == z2(0));
        CHECK(rec.candidates_examined >= rec.selected_index);
    }
}

TEST_CASE("decoded samples follow the target distribution") {
    const GaussianPair pair = make_pair(0.5, 0.25);
    const StreamKey key = StreamKey::from_seed(2024);
    const std::size_t trials = 5000;
    std::vector<double> decoded;
    decoded.reserve(trials);
    for (std::uint64_t step = 0; step < trials; ++step) {
        RccChannel ch{&pair.prior, &pair.target, pair.w_min, key, step};
        const TransmissionRecord rec = rcc_encode(ch, pair.kl_bits);
        decoded.push_back(rcc_decode(rec.selected_index, pair.prior, key, step)(0));
    }
    const double d = ks_statistic(
        decoded, [&](double x) { return normal_cdf(x, 0.5, 0.5); });
    CHECK(ks_p_value(d, trials) > 0.01);

    SUBCASE("a wrong stream id decodes to prior samples instead") {
        std::vector<double> wrong;
        wrong.reserve(trials);
        for (std::uint64_t step = 0; step < trials; ++step) {
            RccChannel ch{&pair.prior, &pair.target, pair.w_min, key, step};
            const TransmissionRecord rec = rcc_encode(ch, pair.kl_bits);
            wrong.push_back(
                rcc_decode(rec.selected_index, pair.prior, key, step + trials)(0));
        }
        const double dw = ks_statistic(
            wrong, [&](double x) { return normal_cdf(x, 0.5, 0.5); });
        CHECK(ks_p_value(dw, trials) <= 0.01);
    }
}

TEST_CASE("2-D transmissions are exact (energy test)") {
    Eigen::ArrayXd mp(2), vp(2), mq(2), vq(2);
    mp << 0.0, 0.0;
    vp << 1.0, 1.0;
    mq << 0.6, -0.4;
    vq << 0.2, 0.5;
    const DiagonalGaussian prior(mp, vp), target(mq, vq);
    const double w = gaussian_wmin(prior, target);
    const StreamKey key = StreamKey::from_seed(4242);
    const double kl = kl_divergence_nats(target, prior) * kLog2E;

    const int n = 2000;
    Eigen::MatrixXd decoded(n, 2), fresh(n, 2);
    for (int i = 0; i < n; ++i) {
        const auto step = static_cast<std::uint64_t>(i);
        RccChannel ch{&prior, &target, w, key, step};
        const TransmissionRecord rec = rcc_encode(ch, kl);
        decoded.row(i) = rcc_decode(rec.selected_index, prior, key, step).transpose();
        fresh.row(i) = target.sample(key, step + 100000, 1).transpose();
    }
    CHECK(energy_test_p_nd(decoded, fresh, 99, StreamKey::from_seed(11)) > 0.01);
}

TEST_CASE("mean ideal codelength meets the coding-cost bound") {
    // Pick the target so the relative entropy is exactly 2 bits.
    const double var = 0.25;
    const double mu = std::sqrt(2.0 * 2.0 / kLog2E - var + 1.0 + std::log(var));
    const GaussianPair pair = make_pair(mu, var);
    REQUIRE(pair.kl_bits == doctest::Approx(2.0).epsilon(1e-12));

    const StreamKey key = StreamKey::from_seed(99);
    RunningStat ideal;
    for (std::uint64_t step = 0; step < 5000; ++step) {
        RccChannel ch{&pair.prior, &pair.target, pair.w_min, key, step};
        ideal.add(rcc_encode(ch, pair.kl_bits).ideal_codelength_bits);
    }
    CHECK(ideal.mean + 1.0 <= 2.0 + std::log2(3.0) + 5.0);
}

TEST_CASE("examined candidates grow with the information content") {
    const StreamKey key = StreamKey::from_seed(7);
    double prev = 0.0;
    for (double kl_bits : {1.0, 2.0, 3.0, 4.0, 5.0}) {
        // variance fixed, mean solved for the requested relative entropy
        const double var = 0.25;
        const double mu =
            std::sqrt(2.0 * kl_bits / kLog2E - var + 1.0 + std::log(var));
        const GaussianPair pair = make_pair(mu, var);
        RunningStat examined;
        for (std::uint64_t step = 0; step < 400; ++step) {
            RccChannel ch{&pair.prior, &pair.target, pair.w_min, key,
                          static_cast<std::uint64_t>(kl_bits * 10000) + step};
            examined.add(static_cast<double>(rcc_encode(ch, kl_bits).candidates_examined));
        }
        CHECK(examined.mean > prev);
        prev = examined.mean;
    }
}

TEST_CASE("invalid bound is rejected before the loop can hang") {
    const GaussianPair pair = make_pair(0.5, 0.25);
    const StreamKey key = StreamKey::from_seed(1);
    RccChannel ch{&pair.prior, &pair.target, 0.0, key, 0};
    CHECK_THROWS_AS(rcc_encode(ch, pair.kl_bits), std::domain_error);
    ch.w_min = -1.0;
    CHECK_THROWS_AS(rcc_encode(ch, pair.kl_bits), std::domain_error);
}

TEST_CASE("candidate budget failure carries the partial state") {
    const GaussianPair pair = make_pair(0.5, 0.25);
    const StreamKey key = StreamKey::from_seed(3);
    // A bound far below the true infimum cannot trigger the stopping rule.
    RccChannel ch{&pair.prior, &pair.target, 1e-12, key, 0};
    try {
        (void)rcc_encode(ch, pair.kl_bits, /*budget=*/256);
        FAIL("expected BudgetExceededError");
    } catch (const BudgetExceededError& e) {
        CHECK(e.candidates_examined == 256);
        CHECK(e.best_index >= 1);
        CHECK(e.best_index <= 256);
        CHECK(std::isfinite(e.best_log_score));
    }
}
