#include "diffc/random.hpp"

#include <cmath>
#include <numbers>

namespace diffc {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

// Two 32-bit words -> double in (0, 1] with 53-bit resolution.
inline double u53(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t x = (static_cast<std::uint64_t>(hi) << 32) | lo;
    return static_cast<double>((x >> 11) + 1) * 0x1.0p-53;
}

}  // namespace

std::uint64_t mix64(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ull;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBull;
    x ^= x >> 31;
    return x;
}

StreamKey StreamKey::from_seed(std::uint64_t seed) {
    StreamKey k;
    k.words[0] = mix64(seed + 0x9E3779B97F4A7C15ull);
    k.words[1] = mix64(k.words[0] + 0x9E3779B97F4A7C15ull);
    return k;
}

StreamKey StreamKey::from_bytes(std::span<const unsigned char, 16> bytes) {
    StreamKey k;
    for (int w = 0; w < 2; ++w) {
        std::uint64_t v = 0;
        for (int i = 7; i >= 0; --i) v = (v << 8) | bytes[8 * w + i];
        k.words[w] = v;
    }
    return k;
}

void StreamKey::to_bytes(std::span<unsigned char, 16> out) const {
    for (int w = 0; w < 2; ++w)
        for (int i = 0; i < 8; ++i)
            out[8 * w + i] = static_cast<unsigned char>(words[w] >> (8 * i));
}

std::array<std::uint32_t, 4> philox4x32(const std::array<std::uint32_t, 4>& counter,
                                        const std::array<std::uint32_t, 2>& key) {
    std::array<std::uint32_t, 4> c = counter;
    std::array<std::uint32_t, 2> k = key;
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kPhiloxM0, c[0], hi0, lo0);
        mulhilo(kPhiloxM1, c[2], hi1, lo1);
        c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
        k[0] += kPhiloxW0;
        k[1] += kPhiloxW1;
    }
    return c;
}

CounterStream::CounterStream(const StreamKey& key, std::uint64_t stream_id, StreamTag tag) {
    std::uint64_t h = 0x9E3779B97F4A7C15ull;
    h = mix64(h ^ key.words[0]);
    h = mix64(h ^ key.words[1]);
    h = mix64(h ^ stream_id);
    h = mix64(h ^ static_cast<std::uint64_t>(tag));
    key_ = {static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
}

std::array<std::uint32_t, 4> CounterStream::block(std::uint64_t item, std::uint32_t blk) const {
    return philox4x32({static_cast<std::uint32_t>(item), static_cast<std::uint32_t>(item >> 32),
                       blk, 0u},
                      key_);
}

double CounterStream::uniform(std::uint64_t item, std::uint32_t slot) const {
    const auto w = block(item, slot);
    return u53(w[0], w[1]);
}

double CounterStream::normal(std::uint64_t item, std::uint32_t slot) const {
    const auto w = block(item, slot / 2);
    const double u1 = u53(w[0], w[1]);
    const double u2 = u53(w[2], w[3]);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    return (slot % 2 == 0) ? r * std::cos(a) : r * std::sin(a);
}

void CounterStream::fill_normals(std::uint64_t item, std::span<double> out) const {
    for (std::size_t i = 0; i < out.size(); i += 2) {
        const auto w = block(item, static_cast<std::uint32_t>(i / 2));
        const double u1 = u53(w[0], w[1]);
        const double u2 = u53(w[2], w[3]);
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        out[i] = r * std::cos(a);
        if (i + 1 < out.size()) out[i + 1] = r * std::sin(a);
    }
}

double CounterStream::exponential(std::uint64_t item) const {
    return -std::log(uniform(item, 0));
}

}  // namespace diffc
