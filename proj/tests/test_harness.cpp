#include <doctest.h>

#include <cmath>

#include "diffc/harness.hpp"
#include "diffc/stats.hpp"

using namespace diffc;

namespace {

AnalyticSource bimodal() { return AnalyticSource::gmm1d({0.5, 0.5}, {-2.0, 2.0}, {0.25, 0.25}); }

const StreamKey kKey = StreamKey::from_seed(20240601);

}  // namespace

TEST_CASE("smoothness statistic of the standard normal is 1 per dimension") {
    for (double sigma : {0.0, 0.3, 0.9}) {
        const GEstimate g =
            estimate_g(AnalyticSource::standard_normal(1), sigma, 50000, kKey, 1);
        CHECK(std::abs(g.g_value - 1.0) <= 3.0 * g.std_error);
    }
    SUBCASE("scales with dimension") {
        const GEstimate g = estimate_g(AnalyticSource::standard_normal(3), 0.5, 20000, kKey, 2);
        CHECK(std::abs(g.g_value - 3.0) <= 3.0 * g.std_error);
    }
    SUBCASE("sample floor is enforced") {
        CHECK_THROWS_AS(estimate_g(AnalyticSource::standard_normal(1), 0.1, 10, kKey, 3),
                        std::invalid_argument);
    }
}

TEST_CASE("smoothness statistic of the smoothed two-sided exponential") {
    // Quadrature value for scale 1/sqrt(2), smoothing 1e-3: 1.9968115873848524
    // (the smoothing shaves ~3.2e-3 off the sharp-density value 2).
    const SmoothedLaplace1D lap{1.0 / std::sqrt(2.0), 1e-3};
    const GEstimate g = estimate_g(lap, 0.0, 50000, kKey, 4);
    CHECK(std::abs(g.g_value - 1.9968115873848524) <= 3.0 * g.std_error);
}

TEST_CASE("corrupting toward the stationary point drives g to 1 per dimension") {
    const GEstimate g = estimate_g(bimodal(), 0.9995, 50000, kKey, 5);
    CHECK(std::abs(g.g_value - 1.0) <= 5.0 * g.std_error);
}

TEST_CASE("smoothing monotonicity report") {
    const TheoremReport r =
        check_smoothness_monotone(bimodal(), {0.1, 0.3, 0.5, 0.7, 0.9}, 20000, kKey);
    CHECK(r.passed());
    REQUIRE(r.assertions.size() == 5);
    // well-separated modes: the drop should be strict and large
    CHECK(r.assertions.back().estimate < 0.5 * r.assertions.front().estimate);

    SUBCASE("holds trivially on the standard normal") {
        const TheoremReport rn =
            check_smoothness_monotone(AnalyticSource::standard_normal(1), {0.2, 0.8}, 20000, kKey);
        CHECK(rn.passed());
    }
}

TEST_CASE("flow/ancestral error ratio approaches one half") {
    SUBCASE("analytic check on the standard normal") {
        for (double sigma : {0.02, 0.1}) {
            const double s2 = sigma * sigma;
            const double ratio = (2.0 - 2.0 * std::sqrt(1.0 - s2)) / (2.0 * s2);
            CHECK(ratio > 0.45);
            CHECK(ratio < 0.55);
        }
    }
    const TheoremReport r = check_flow_ancestral_ratio(bimodal(), {0.02, 0.5}, 40000, kKey);
    CHECK(r.passed());
    REQUIRE(r.assertions.size() >= 2);
    CHECK(r.assertions[0].estimate > 0.45);
    CHECK(r.assertions[0].estimate < 0.55);
}

TEST_CASE("flow optimality report") {
    const TheoremReport r = check_flow_optimality(bimodal(), 0.3, 20000, 300, kKey);
    CHECK(r.passed());
    REQUIRE(r.assertions.size() == 4);
    CHECK(r.assertions[0].estimate <= 1e-3);  // transport match
    // independent redraw loses by about 2 Var(X)
    const Assertion& redraw = r.assertions[3];
    CHECK(redraw.estimate > 4.0);
}

TEST_CASE("water-filled channel rate bound report") {
    SUBCASE("well-separated mixture") {
        const TheoremReport r = check_theorem1(bimodal(), {0.2, 1.0, 3.0}, 50000, kKey);
        CHECK(r.passed());
    }
    SUBCASE("gaussian source achieves the bound with equality") {
        const TheoremReport r =
            check_theorem1(AnalyticSource::gaussian(Spectrum{{2.0}}), {0.5}, 50000, kKey);
        CHECK(r.passed());
        // slack is zero up to Monte Carlo noise: the tight bound minus the
        // estimate should be within a few s.e. of 3 s.e.
        const Assertion& tight = r.assertions[0];
        CHECK(std::abs(tight.bound - tight.estimate) < 6.0 * tight.std_error + 1e-3);
    }
    SUBCASE("near-gaussian mixture has small slack") {
        const AnalyticSource src = AnalyticSource::gmm1d({0.5, 0.5}, {-0.1, 0.1}, {0.25, 0.25});
        const TheoremReport r = check_theorem1(src, {0.02, 0.1}, 50000, kKey);
        CHECK(r.passed());
        for (const Assertion& a : r.assertions)
            if (a.condition.rfind("I <= R*(D/2) -", 0) == 0)
                CHECK(a.bound - a.estimate < 0.05);
    }
    SUBCASE("2-D product source") {
        const AnalyticSource src =
            AnalyticSource::product(bimodal(), AnalyticSource::standard_normal(1));
        const TheoremReport r = check_theorem1(src, {0.5}, 20000, kKey);
        CHECK(r.passed());
    }
    SUBCASE("dimension cap") {
        CHECK_THROWS_AS(check_theorem1(AnalyticSource::standard_normal(3), {0.5}, 2000, kKey),
                        std::invalid_argument);
    }
}

TEST_CASE("report CSV schema") {
    const TheoremReport r =
        check_smoothness_monotone(AnalyticSource::standard_normal(1), {0.5}, 2000, kKey);
    const std::string csv = reports_to_csv({&r, 1});
    CHECK(csv.rfind("theorem,condition,n,estimate,stderr,bound,pass\n", 0) == 0);
    CHECK(csv.find("lemma-smoothing,") != std::string::npos);
}

TEST_CASE("reports are reproducible bit-for-bit") {
    const TheoremReport a = check_flow_ancestral_ratio(bimodal(), {0.1}, 5000, kKey);
    const TheoremReport b = check_flow_ancestral_ratio(bimodal(), {0.1}, 5000, kKey);
    REQUIRE(a.assertions.size() == b.assertions.size());
    for (std::size_t i = 0; i < a.assertions.size(); ++i) {
        CHECK(a.assertions[i].estimate == b.assertions[i].estimate);
        CHECK(a.assertions[i].std_error == b.assertions[i].std_error);
    }
}
