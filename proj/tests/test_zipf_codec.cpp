#include <doctest.h>

#include <cmath>
#include <vector>

#include "diffc/random.hpp"
#include "diffc/stats.hpp"
#include "diffc/zipf.hpp"
#include "diffc/zipf_codec.hpp"

using namespace diffc;

namespace {

std::uint64_t roundtrip(std::uint64_t n, double lambda, unsigned* bits_out = nullptr) {
    BitWriter w;
    serialize_index(n, lambda, w);
    if (bits_out) *bits_out = static_cast<unsigned>(w.bit_size());
    BitReader r(w.bytes(), w.bit_size());
    return deserialize_index(lambda, r);
}

// Approximate inverse-CDF sampler used only to generate test indices; the
// distributional shape is what matters, not exactness.
std::uint64_t draw_index(double lambda, double u) {
    const double zeta = riemann_zeta(lambda);
    const double tail = (1.0 - u) * zeta;
    const double a = std::pow(std::max(tail, 1e-300) * (lambda - 1.0), 1.0 / (1.0 - lambda));
    if (!(a >= 1.0)) return 1;
    if (a >= static_cast<double>(kZipfIndexMax)) return kZipfIndexMax;
    return static_cast<std::uint64_t>(a);
}

}  // namespace

TEST_CASE("bit writer/reader basics") {
    BitWriter w;
    w.append_bits(0b1011, 4);
    w.append_bits(0b1, 1);
    CHECK(w.bit_size() == 5);
    BitReader r(w.bytes(), w.bit_size());
    CHECK(r.remaining() == 5);
    const auto probe = r.peek120();
    CHECK(static_cast<std::uint64_t>(probe >> 115) == 0b10111);
    r.skip(5);
    CHECK(r.remaining() == 0);
    CHECK_THROWS_AS(r.skip(1), FramingError);
}

TEST_CASE("index round trip across magnitudes and exponents") {
    for (double lambda : {1.05, 1.1, 1.337297992286938, 1.6532797258459593}) {
        for (std::uint64_t n :
             {std::uint64_t{1}, std::uint64_t{2}, std::uint64_t{3}, std::uint64_t{17},
              std::uint64_t{100}, std::uint64_t{12345}, std::uint64_t{1} << 20,
              (std::uint64_t{1} << 32) - 1, std::uint64_t{1} << 32, (std::uint64_t{1} << 32) + 9,
              std::uint64_t{1} << 40, std::uint64_t{1} << 55, kZipfIndexMax}) {
            unsigned bits = 0;
            CHECK(roundtrip(n, lambda, &bits) == n);
            // realized length within 2 bits of the ideal codelength
            CHECK(static_cast<double>(bits) <= zipf_codelength(n, lambda) + 2.0 + 1e-9);
        }
    }
}

TEST_CASE("out-of-range index throws") {
    BitWriter w;
    CHECK_THROWS_AS(serialize_index(0, 1.2, w), std::range_error);
    CHECK_THROWS_AS(serialize_index(kZipfIndexMax + 1, 1.2, w), std::range_error);
    CHECK_THROWS_AS(serialize_index(5, 1.0, w), std::domain_error);
}

TEST_CASE("truncated payload raises a framing error, never a wrong index") {
    const double lambda = 1.15;
    for (std::uint64_t n : {std::uint64_t{7}, std::uint64_t{1000}, std::uint64_t{1} << 33}) {
        BitWriter w;
        serialize_index(n, lambda, w);
        for (std::size_t cut = 1; cut <= w.bit_size(); ++cut) {
            BitReader r(w.bytes(), w.bit_size() - cut);
            CHECK_THROWS_AS((void)deserialize_index(lambda, r), FramingError);
        }
    }
}

TEST_CASE("concatenated codewords decode in sequence") {
    const double lambda = 1.3;
    const std::vector<std::uint64_t> indices = {4, 1, 900, 2, 1 << 22, 31, 1};
    BitWriter w;
    for (std::uint64_t n : indices) serialize_index(n, lambda, w);
    BitReader r(w.bytes(), w.bit_size());
    for (std::uint64_t n : indices) CHECK(deserialize_index(lambda, r) == n);
}

TEST_CASE("mean realized length tracks the ideal codelength on random draws") {
    const double lambda = 1.1;
    const StreamKey key = StreamKey::from_seed(314);
    const CounterStream stream(key, 0, StreamTag::probe);
    RunningStat realized, ideal;
    for (std::uint64_t i = 0; i < 100000; ++i) {
        const std::uint64_t n = draw_index(lambda, stream.uniform(i, 0));
        unsigned bits = 0;
        REQUIRE(roundtrip(n, lambda, &bits) == n);
        realized.add(static_cast<double>(bits));
        ideal.add(zipf_codelength(n, lambda));
    }
    CHECK(realized.mean <= ideal.mean + 2.0);
    CHECK(realized.mean >= ideal.mean - 0.5);  // a prefix code cannot beat entropy by much
}
