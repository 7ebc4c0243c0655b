#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace diffc {

/// Decoding ran off the end of the payload or hit a non-canonical
/// codeword. Truncated streams always fail with this, never with a wrong
/// index.
class FramingError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// MSB-first bit sink.
class BitWriter {
  public:
    void append_bit(bool bit);
    /// Append the `count` low bits of `value`, most significant first.
    void append_bits(std::uint64_t value, unsigned count);
    std::size_t bit_size() const { return bit_size_; }
    /// Zero-padded to a whole number of bytes.
    const std::vector<unsigned char>& bytes() const { return bytes_; }

  private:
    std::vector<unsigned char> bytes_;
    std::size_t bit_size_ = 0;
};

/// MSB-first bit source over a byte buffer with an explicit bit count.
class BitReader {
  public:
    BitReader(std::span<const unsigned char> bytes, std::size_t bit_count);

    std::size_t remaining() const { return bit_count_ - position_; }
    /// Next min(120, remaining) bits, left-aligned at bit 119 of the result.
    /// Short reads are zero-padded on the right.
    unsigned __int128 peek120() const;
    /// Throws FramingError when fewer than nbits remain.
    void skip(std::size_t nbits);

  private:
    std::span<const unsigned char> bytes_;
    std::size_t bit_count_;
    std::size_t position_ = 0;
};

/// Largest index the codec accepts.
inline constexpr std::uint64_t kZipfIndexMax = std::uint64_t{1} << 62;

/// Append a prefix-free codeword for index n under the Zipf(lambda) model.
/// The realized length never exceeds zipf_codelength(n, lambda) + 2 bits.
/// Throws std::range_error for n > kZipfIndexMax (or an interval too small
/// to resolve at the coder's 120-bit precision).
void serialize_index(std::uint64_t n, double lambda, BitWriter& out);

/// Inverse of serialize_index. Throws FramingError on truncation.
std::uint64_t deserialize_index(double lambda, BitReader& in);

/// Codeword length in bits without emitting it.
unsigned serialized_index_bits(std::uint64_t n, double lambda);

}  // namespace diffc
