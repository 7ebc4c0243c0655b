#include "diffc/zipf_codec.hpp"

#include <mpfr.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <unordered_map>

namespace diffc {

void BitWriter::append_bit(bool bit) {
    if (bit_size_ % 8 == 0) bytes_.push_back(0);
    if (bit) bytes_.back() |= static_cast<unsigned char>(0x80u >> (bit_size_ % 8));
    ++bit_size_;
}

void BitWriter::append_bits(std::uint64_t value, unsigned count) {
    for (unsigned i = count; i-- > 0;) append_bit((value >> i) & 1u);
}

BitReader::BitReader(std::span<const unsigned char> bytes, std::size_t bit_count)
    : bytes_(bytes), bit_count_(bit_count) {
    if (bit_count > bytes.size() * 8) throw FramingError("bit count exceeds payload size");
}

unsigned __int128 BitReader::peek120() const {
    unsigned __int128 v = 0;
    const std::size_t take = std::min<std::size_t>(120, remaining());
    for (std::size_t i = 0; i < take; ++i) {
        const std::size_t bit = position_ + i;
        const bool b = (bytes_[bit / 8] >> (7 - bit % 8)) & 1u;
        v = (v << 1) | static_cast<unsigned>(b);
    }
    return v << (120 - take);
}

void BitReader::skip(std::size_t nbits) {
    if (nbits > remaining()) throw FramingError("payload truncated");
    position_ += nbits;
}

namespace {

// Interval coder over the exact (untruncated) Zipf CDF in 120 fractional
// bits. Cumulative masses come from MPFR with correct rounding: a direct
// partial-sum table below kDirectLimit and an Euler-Maclaurin tail
// expansion above it, so F(n) is available for any n up to kZipfIndexMax
// without summation. Encoder and decoder quantize the same values, which
// is what makes the round trip exact.

constexpr int kFracBits = 120;
constexpr mpfr_prec_t kPrec = 192;
constexpr std::uint64_t kDirectLimit = 1024;

using u128 = unsigned __int128;

const u128 kOne = u128{1} << kFracBits;

// sum_{k >= a} k^-s via Euler-Maclaurin through the B8 term; relative error
// ~ a^-10 poly(s), negligible for a > kDirectLimit at this precision.
void tail_sum(mpfr_t out, std::uint64_t a, const mpfr_t s) {
    mpfr_t as, t, acc, c;
    mpfr_inits2(kPrec, as, t, acc, c, nullptr);

    mpfr_set_ui(t, static_cast<unsigned long>(a), MPFR_RNDN);
    mpfr_neg(as, s, MPFR_RNDN);
    mpfr_pow(as, t, as, MPFR_RNDN);  // a^-s

    // a^(1-s)/(s-1) + a^-s/2
    mpfr_mul_ui(acc, as, static_cast<unsigned long>(a), MPFR_RNDN);
    mpfr_sub_ui(c, s, 1, MPFR_RNDN);
    mpfr_div(acc, acc, c, MPFR_RNDN);
    mpfr_div_ui(t, as, 2, MPFR_RNDN);
    mpfr_add(acc, acc, t, MPFR_RNDN);

    // Bernoulli corrections: sign * s(s+1)..(s+2k-2) a^-(s+2k-1) / denom
    struct Term {
        int rising;
        unsigned long denom;
        int sign;
    };
    constexpr Term terms[] = {{1, 12, +1}, {3, 720, -1}, {5, 30240, +1}, {7, 1209600, -1}};
    for (const Term& tm : terms) {
        mpfr_set(t, as, MPFR_RNDN);
        for (int i = 0; i < tm.rising; ++i) mpfr_div_ui(t, t, static_cast<unsigned long>(a), MPFR_RNDN);
        mpfr_mul(t, t, s, MPFR_RNDN);
        for (int j = 1; j < tm.rising; ++j) {
            mpfr_add_ui(c, s, static_cast<unsigned long>(j), MPFR_RNDN);
            mpfr_mul(t, t, c, MPFR_RNDN);
        }
        mpfr_div_ui(t, t, tm.denom, MPFR_RNDN);
        if (tm.sign > 0)
            mpfr_add(acc, acc, t, MPFR_RNDN);
        else
            mpfr_sub(acc, acc, t, MPFR_RNDN);
    }

    mpfr_set(out, acc, MPFR_RNDN);
    mpfr_clears(as, t, acc, c, nullptr);
}

struct ZipfModel {
    double lambda;
    mpfr_t s, zeta;
    std::vector<u128> cum_direct;  // quantized F(n) for n = 0..kDirectLimit
    double zeta_d;

    explicit ZipfModel(double lam) : lambda(lam) {
        mpfr_inits2(kPrec, s, zeta, nullptr);
        mpfr_set_d(s, lam, MPFR_RNDN);

        mpfr_t partial, term, t;
        mpfr_inits2(kPrec, partial, term, t, nullptr);
        mpfr_set_ui(partial, 0, MPFR_RNDN);

        // zeta and the direct partial sums in one pass
        std::vector<mpfr_t> partials(kDirectLimit + 1);
        for (auto& p : partials) mpfr_init2(p, kPrec);
        mpfr_set_ui(partials[0], 0, MPFR_RNDN);
        for (std::uint64_t n = 1; n <= kDirectLimit; ++n) {
            mpfr_set_ui(t, static_cast<unsigned long>(n), MPFR_RNDN);
            mpfr_neg(term, s, MPFR_RNDN);
            mpfr_pow(term, t, term, MPFR_RNDN);
            mpfr_add(partial, partial, term, MPFR_RNDN);
            mpfr_set(partials[n], partial, MPFR_RNDN);
        }
        tail_sum(t, kDirectLimit + 1, s);
        mpfr_add(zeta, partial, t, MPFR_RNDN);
        zeta_d = mpfr_get_d(zeta, MPFR_RNDN);

        cum_direct.assign(kDirectLimit + 1, 0);
        for (std::uint64_t n = 1; n <= kDirectLimit; ++n)
            cum_direct[n] = quantize_ratio(partials[n]);
        for (auto& p : partials) mpfr_clear(p);
        mpfr_clears(partial, term, t, nullptr);
    }
    ~ZipfModel() { mpfr_clears(s, zeta, nullptr); }
    ZipfModel(const ZipfModel&) = delete;
    ZipfModel& operator=(const ZipfModel&) = delete;

    // round(x / zeta * 2^120), exact split into 64-bit halves
    u128 quantize_ratio(const mpfr_t x) const {
        mpfr_t r, hi, t;
        mpfr_inits2(kPrec, r, hi, t, nullptr);
        mpfr_div(r, x, zeta, MPFR_RNDN);
        mpfr_mul_2ui(r, r, kFracBits, MPFR_RNDN);
        mpfr_round(r, r);  // integer < 2^121, exact at this precision
        mpfr_div_2ui(hi, r, 64, MPFR_RNDN);
        mpfr_floor(hi, hi);
        const std::uint64_t h = mpfr_get_ui(hi, MPFR_RNDZ);
        mpfr_mul_2ui(t, hi, 64, MPFR_RNDN);
        mpfr_sub(r, r, t, MPFR_RNDN);  // exact: low 64 bits
        const std::uint64_t l = mpfr_get_ui(r, MPFR_RNDZ);
        mpfr_clears(r, hi, t, nullptr);
        const u128 out = (u128{h} << 64) + l;
        return out > kOne ? kOne : out;
    }

    u128 cum(std::uint64_t n) const {
        if (n == 0) return 0;
        if (n <= kDirectLimit) return cum_direct[n];
        mpfr_t t;
        mpfr_init2(t, kPrec);
        tail_sum(t, n + 1, s);
        mpfr_sub(t, zeta, t, MPFR_RNDN);
        const u128 q = quantize_ratio(t);
        mpfr_clear(t);
        return q;
    }
};

const ZipfModel& model_for(double lambda) {
    thread_local std::unordered_map<double, std::unique_ptr<ZipfModel>> cache;
    auto it = cache.find(lambda);
    if (it == cache.end())
        it = cache.emplace(lambda, std::make_unique<ZipfModel>(lambda)).first;
    return *it->second;
}

// Double-precision inverse-CDF estimate seeding the decode search;
// correctness never depends on it.
std::uint64_t rough_inverse(const ZipfModel& m, double u) {
    const double tail = (1.0 - u) * m.zeta_d;
    if (tail <= 0.0) return kZipfIndexMax;
    const double a = std::pow(tail * (m.lambda - 1.0), 1.0 / (1.0 - m.lambda));
    if (!(a >= 1.0)) return 1;
    if (a >= static_cast<double>(kZipfIndexMax)) return kZipfIndexMax;
    return static_cast<std::uint64_t>(a);
}

struct Codeword {
    unsigned length;
    u128 value;  // left-aligned: bits kFracBits-1 .. kFracBits-length
};

Codeword codeword_for(const ZipfModel& m, std::uint64_t n) {
    const u128 lo = m.cum(n - 1);
    const u128 hi = m.cum(n);
    if (hi <= lo) throw std::range_error("zipf index interval not resolvable");
    const u128 mass = hi - lo;

    // Smallest L whose step can possibly fit, then grow until an aligned
    // cell [v, v + 2^(120-L)) lies inside [lo, hi). At most one growth step
    // is ever needed, so the length stays within ideal + 2 bits.
    unsigned L = 1;
    while (L < kFracBits && (u128{1} << (kFracBits - L)) > mass) ++L;
    for (;; ++L) {
        if (L > kFracBits) throw std::range_error("zipf index interval not resolvable");
        const int shift = kFracBits - static_cast<int>(L);
        const u128 step = u128{1} << shift;
        const u128 rem = lo & (step - 1);
        const u128 v = rem ? (lo - rem + step) : lo;
        if (v + step <= hi) return {L, v};
    }
}

}  // namespace

void serialize_index(std::uint64_t n, double lambda, BitWriter& out) {
    if (n < 1 || n > kZipfIndexMax) throw std::range_error("index beyond representable range");
    if (!(lambda > 1.0)) throw std::domain_error("lambda must exceed 1");
    const Codeword cw = codeword_for(model_for(lambda), n);
    for (unsigned i = 0; i < cw.length; ++i)
        out.append_bit((cw.value >> (kFracBits - 1 - i)) & 1);
}

unsigned serialized_index_bits(std::uint64_t n, double lambda) {
    if (n < 1 || n > kZipfIndexMax) throw std::range_error("index beyond representable range");
    if (!(lambda > 1.0)) throw std::domain_error("lambda must exceed 1");
    return codeword_for(model_for(lambda), n).length;
}

std::uint64_t deserialize_index(double lambda, BitReader& in) {
    if (!(lambda > 1.0)) throw std::domain_error("lambda must exceed 1");
    const ZipfModel& m = model_for(lambda);
    if (in.remaining() == 0) throw FramingError("payload truncated");
    // The probe uses every available bit; while the payload is intact it
    // lies inside the true codeword's interval, which in turn lies inside
    // the symbol's interval.
    const u128 probe = in.peek120();

    std::uint64_t lo = 1, hi = kZipfIndexMax;
    {
        const double u = static_cast<double>(static_cast<std::uint64_t>(probe >> 64)) * 0x1.0p-56;
        const std::uint64_t guess = rough_inverse(m, u);
        std::uint64_t a = guess > 8 ? guess / 8 : 1;
        std::uint64_t b = guess < kZipfIndexMax / 8 ? guess * 8 : kZipfIndexMax;
        while (a > 1 && m.cum(a - 1) > probe) a = (a > 64) ? a / 64 : 1;
        while (b < kZipfIndexMax && m.cum(b) <= probe)
            b = (b < kZipfIndexMax / 64) ? b * 64 : kZipfIndexMax;
        lo = a;
        hi = b;
    }
    if (m.cum(hi) <= probe)
        throw FramingError("payload does not decode to a representable index");
    while (lo < hi) {
        const std::uint64_t mid = lo + (hi - lo) / 2;
        if (m.cum(mid) <= probe)
            lo = mid + 1;
        else
            hi = mid;
    }
    const std::uint64_t n = lo;

    const Codeword cw = codeword_for(m, n);
    if (in.remaining() < cw.length) throw FramingError("payload truncated");
    // Canonical-codeword check: a truncated prefix can never masquerade as
    // a shorter valid codeword because the code is prefix-free.
    const u128 mask = (~u128{0}) << (kFracBits - cw.length);
    if ((probe & mask) != cw.value) throw FramingError("non-canonical codeword");
    in.skip(cw.length);
    return n;
}

}  // namespace diffc
