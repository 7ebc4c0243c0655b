#include <doctest.h>

#include <cmath>

#include "diffc/random.hpp"
#include "diffc/stats.hpp"

using namespace diffc;

TEST_CASE("philox4x32-10 known-answer vectors") {
    // Reference vectors from the Random123 test suite.
    auto out = philox4x32({0, 0, 0, 0}, {0, 0});
    CHECK(out[0] == 0x6627e8d5u);
    CHECK(out[1] == 0xe169c58du);
    CHECK(out[2] == 0xbc57ac4cu);
    CHECK(out[3] == 0x9b00dbd8u);

    out = philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                     {0xffffffffu, 0xffffffffu});
    CHECK(out[0] == 0x408f276du);
    CHECK(out[1] == 0x41c83b0eu);
    CHECK(out[2] == 0xa20bc7c6u);
    CHECK(out[3] == 0x6d5451fdu);

    out = philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                     {0xa4093822u, 0x299f31d0u});
    CHECK(out[0] == 0xd16cfe09u);
    CHECK(out[1] == 0x94fdccebu);
    CHECK(out[2] == 0x5001e420u);
    CHECK(out[3] == 0x24126ea1u);
}

TEST_CASE("streams are deterministic and domain-separated") {
    const StreamKey key = StreamKey::from_seed(7);
    const CounterStream a(key, 3, StreamTag::candidates);
    const CounterStream a2(key, 3, StreamTag::candidates);
    const CounterStream b(key, 3, StreamTag::arrivals);
    const CounterStream c(key, 4, StreamTag::candidates);

    CHECK(a.normal(10, 0) == a2.normal(10, 0));
    CHECK(a.normal(10, 0) != b.normal(10, 0));
    CHECK(a.normal(10, 0) != c.normal(10, 0));
    CHECK(a.normal(10, 0) != a.normal(11, 0));
    CHECK(a.normal(10, 0) != a.normal(10, 1));
}

TEST_CASE("key bytes round-trip") {
    const StreamKey key = StreamKey::from_seed(123456789);
    unsigned char bytes[16];
    key.to_bytes(bytes);
    CHECK(StreamKey::from_bytes(bytes) == key);
}

TEST_CASE("normal and exponential moments") {
    const StreamKey key = StreamKey::from_seed(11);
    const CounterStream s(key, 0, StreamTag::source_sample);
    RunningStat normals, exps;
    for (std::uint64_t i = 0; i < 200000; ++i) {
        normals.add(s.normal(i, 0));
        normals.add(s.normal(i, 1));
        exps.add(s.exponential(i));
    }
    CHECK(std::abs(normals.mean) < 3.0 * normals.std_error());
    CHECK(std::abs(normals.variance() - 1.0) < 0.01);
    CHECK(std::abs(exps.mean - 1.0) < 3.0 * exps.std_error());
    CHECK(std::abs(exps.variance() - 1.0) < 0.02);
}

TEST_CASE("uniform lies in (0, 1]") {
    const StreamKey key = StreamKey::from_seed(5);
    const CounterStream s(key, 0, StreamTag::probe);
    for (std::uint64_t i = 0; i < 10000; ++i) {
        const double u = s.uniform(i, 0);
        CHECK(u > 0.0);
        CHECK(u <= 1.0);
    }
}
