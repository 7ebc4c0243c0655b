#include "diffc/rcc.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "diffc/zipf.hpp"

namespace diffc {

BudgetExceededError::BudgetExceededError(std::uint64_t examined, std::uint64_t best,
                                         double best_log)
    : std::runtime_error("rcc: candidate budget exceeded; w_min is likely invalid"),
      candidates_examined(examined),
      best_index(best),
      best_log_score(best_log) {}

TransmissionRecord rcc_encode(const RccChannel& channel, double kl_bits_estimate,
                              std::uint64_t budget) {
    if (channel.prior == nullptr || channel.target == nullptr)
        throw std::invalid_argument("rcc_encode: missing densities");
    if (!(channel.w_min > 0.0))
        throw std::domain_error("rcc_encode: w_min must be positive (non-termination hazard)");
    if (channel.prior->dim() != channel.target->dim())
        throw std::invalid_argument("rcc_encode: dimension mismatch");

    const CounterStream arrivals(channel.stream_key, channel.step_id, StreamTag::arrivals);
    const double log_w_min = std::log(channel.w_min);

    // Scores are tracked in log space; t itself stays well within double
    // range because the loop ends after O(2^KL) candidates.
    double t = 0.0;
    double best_log_score = std::numeric_limits<double>::infinity();
    std::uint64_t best_index = 0;

    for (std::uint64_t n = 1;; ++n) {
        if (n > budget) throw BudgetExceededError(n - 1, best_index, best_log_score);
        const Eigen::ArrayXd z = channel.prior->sample(channel.stream_key, channel.step_id, n);
        t += arrivals.exponential(n);
        // Group the density ratio before adding the arrival term so that an
        // identical pair scores exactly log(t) and stops on candidate 1.
        const double log_ratio =
            channel.prior->log_density(z) - channel.target->log_density(z);
        const double log_score = log_ratio + std::log(t);
        if (log_score < best_log_score) {
            best_log_score = log_score;
            best_index = n;
        }
        if (best_log_score <= std::log(t) + log_w_min) {
            TransmissionRecord rec;
            rec.selected_index = best_index;
            rec.candidates_examined = n;
            rec.kl_nats_estimate = kl_bits_estimate * std::numbers::ln2;
            rec.lambda = zipf_exponent(std::max(kl_bits_estimate, 0.0));
            rec.ideal_codelength_bits = zipf_codelength(best_index, rec.lambda);
            return rec;
        }
    }
}

Eigen::ArrayXd rcc_decode(std::uint64_t selected_index, const Density& prior,
                          const StreamKey& key, std::uint64_t step_id) {
    if (selected_index < 1) throw std::invalid_argument("rcc_decode: index must be >= 1");
    return prior.sample(key, step_id, selected_index);
}

}  // namespace diffc
