#pragma once

#include <cstdint>

namespace diffc {

/// Exponent of the index-coding Zipf distribution for a transmission
/// carrying `info_content_bits` bits: 1 + 1/(I + e^-1 log2 e + 1).
/// Always > 1. Throws std::domain_error on negative input.
double zipf_exponent(double info_content_bits);

/// Riemann zeta for s > 1, Euler-Maclaurin tail, absolute error < 1e-12.
double riemann_zeta(double s);

/// Ideal codelength -log2(n^-lambda / zeta(lambda)) in bits.
/// Throws std::domain_error unless n >= 1 and lambda > 1.
double zipf_codelength(std::uint64_t n, double lambda);

/// Achievable-rate bound for a transmission of C bits of relative entropy:
/// C + log2(C + 1) + 5.
double bound_check(double kl_bits);

}  // namespace diffc
