#pragma once

#include <cstdint>
#include <stdexcept>

#include "diffc/density.hpp"
#include "diffc/random.hpp"

namespace diffc {

/// One reverse-channel-coding transmission: communicate an exact sample of
/// `target` using the shared candidate stream of `prior`. w_min must lower
/// bound inf_z prior(z)/target(z); gaussian_wmin() provides it analytically
/// for diagonal Gaussian pairs, anything else is caller-supplied (see
/// probe_wmin).
struct RccChannel {
    const Density* prior = nullptr;
    const Density* target = nullptr;
    double w_min = 0.0;
    StreamKey stream_key;
    std::uint64_t step_id = 0;
};

struct TransmissionRecord {
    std::uint64_t selected_index = 0;     // N*, >= 1
    std::uint64_t candidates_examined = 0;
    double ideal_codelength_bits = 0.0;   // -log2 p_lambda(N*)
    double kl_nats_estimate = 0.0;        // the C/I that set lambda
    double lambda = 0.0;
};

/// Hard cap on examined candidates; a valid w_min terminates long before
/// this, so hitting it signals a misconfigured bound.
inline constexpr std::uint64_t kCandidateBudget = std::uint64_t{1} << 30;

class BudgetExceededError : public std::runtime_error {
  public:
    BudgetExceededError(std::uint64_t examined, std::uint64_t best_index, double best_log_score);
    std::uint64_t candidates_examined;
    std::uint64_t best_index;
    double best_log_score;
};

/// Select the candidate index whose value is an exact draw from the target
/// (over the joint randomness of the arrival and candidate streams).
/// kl_bits_estimate is the relative entropy (bits) used to pick the index
/// code's Zipf exponent; it does not affect which index is selected.
TransmissionRecord rcc_encode(const RccChannel& channel, double kl_bits_estimate,
                              std::uint64_t budget = kCandidateBudget);

/// The decoder's half: regenerate the selected candidate. Bit-identical to
/// the value the encoder scored.
Eigen::ArrayXd rcc_decode(std::uint64_t selected_index, const Density& prior,
                          const StreamKey& key, std::uint64_t step_id);

}  // namespace diffc
