#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>

namespace diffc {

/// 128-bit key shared between encoder and decoder. All randomness in the
/// library is a pure function of (key, stream id, tag, item index), so any
/// draw can be recomputed without replaying the draws before it.
struct StreamKey {
    std::array<std::uint64_t, 2> words{0, 0};

    static StreamKey from_seed(std::uint64_t seed);
    static StreamKey from_bytes(std::span<const unsigned char, 16> bytes);
    void to_bytes(std::span<unsigned char, 16> out) const;

    friend bool operator==(const StreamKey&, const StreamKey&) = default;
};

/// SplitMix64 finalizer; used for key derivation, not for output streams.
std::uint64_t mix64(std::uint64_t x);

/// One block of Philox4x32-10 (Salmon et al.).
std::array<std::uint32_t, 4> philox4x32(const std::array<std::uint32_t, 4>& counter,
                                        const std::array<std::uint32_t, 2>& key);

/// Domain-separation tags. Candidate values, arrival times, forward noise
/// etc. never alias even under the same (key, stream id).
enum class StreamTag : std::uint64_t {
    candidates = 1,
    arrivals = 2,
    forward_noise = 3,
    ancestral_noise = 4,
    source_sample = 5,
    probe = 6,
    shuffle = 7,
};

/// Random-access stream of uniforms / normals / exponentials addressed by
/// (item, slot). Distinct items are independent; slots index the draws that
/// make up one item (e.g. the M coordinates of one candidate vector).
/// uniform(item, slot) consumes generator block `slot` while normal(item,
/// slot) consumes block `slot/2`; a caller mixing both kinds on one stream
/// must keep those blocks disjoint.
class CounterStream {
  public:
    CounterStream(const StreamKey& key, std::uint64_t stream_id, StreamTag tag);

    /// Uniform in (0, 1], 53-bit resolution.
    double uniform(std::uint64_t item, std::uint32_t slot) const;
    /// Standard normal draw.
    double normal(std::uint64_t item, std::uint32_t slot) const;
    void fill_normals(std::uint64_t item, std::span<double> out) const;
    /// Exponential(1) draw.
    double exponential(std::uint64_t item) const;

  private:
    std::array<std::uint32_t, 4> block(std::uint64_t item, std::uint32_t blk) const;

    std::array<std::uint32_t, 2> key_;
};

}  // namespace diffc
