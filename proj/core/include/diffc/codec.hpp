#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "diffc/diffusion.hpp"
#include "diffc/random.hpp"
#include "diffc/source.hpp"

namespace diffc {

/// Malformed or mismatched container (magic, version, descriptors).
class FormatError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Impossible encode configuration, e.g. a chunk budget below a single
/// step's information content.
class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Versioned binary container. Layout (little-endian): magic "DIFC",
/// version u8, schedule preset id u8, T u16, t_stop u16, chunk budget u32
/// (bits), stream key (16 bytes), source hash (32 bytes), payload length
/// u32 (bytes), payload.
struct Bitstream {
    std::uint8_t version = 1;
    std::uint8_t schedule_preset = 0;
    std::uint16_t steps = 0;
    std::uint16_t stop_step = 0;
    std::uint32_t chunk_budget_bits = 0;
    StreamKey stream_key;
    std::array<unsigned char, 32> source_hash{};
    std::vector<unsigned char> payload;

    std::vector<unsigned char> to_bytes() const;
    static Bitstream from_bytes(std::span<const unsigned char> bytes);
};

/// Information accounting for one encode. per_step entries run from
/// s = T-1 down to t_stop; the prior term is the corruption-endpoint
/// transmission. bound_bits charges each greedily-packed chunk of steps
/// at its achievable-rate bound.
struct RateLedger {
    double prior_term_bits = 0.0;
    std::vector<double> per_step_kl_bits;
    double bound_bits = 0.0;
    int first_step = 0;  // schedule index of per_step_kl_bits.front()

    double total_kl_bits() const;
    std::string to_csv() const;
};

struct EncodeResult {
    Bitstream bitstream;
    RateLedger ledger;
    Eigen::ArrayXd z_stop;  // the encoder's z at t_stop
};

/// 32-byte identity of (source, schedule) used for header validation.
std::array<unsigned char, 32> source_schedule_hash(const AnalyticSource& source,
                                                   const DiffusionSchedule& schedule);

/// z_t = sqrt(1 - sigma_t^2) x + sigma_t u with u from the keyed stream.
Eigen::ArrayXd forward_corrupt(const Eigen::ArrayXd& x, const DiffusionSchedule& schedule,
                               int t, const StreamKey& key, std::uint64_t stream_id,
                               std::uint64_t item);

EncodeResult encode(const Eigen::ArrayXd& x, const AnalyticSource& source,
                    const DiffusionSchedule& schedule, int t_stop,
                    std::uint32_t chunk_budget_bits, const StreamKey& key);

/// Reproduces the encoder's z_{t_stop} exactly.
Eigen::ArrayXd decode_to_z(const Bitstream& bitstream, const AnalyticSource& source,
                           const DiffusionSchedule& schedule);

/// Exact draw from p(x | z) for the variance-preserving channel at noise
/// level sigma.
Eigen::ArrayXd reconstruct_ancestral(const Eigen::ArrayXd& z, double sigma,
                                     const AnalyticSource& source, const StreamKey& key,
                                     std::uint64_t stream_id, std::uint64_t item);
Eigen::ArrayXd reconstruct_ancestral(const Eigen::ArrayXd& z, const DiffusionSchedule& schedule,
                                     int t, const AnalyticSource& source, const StreamKey& key,
                                     std::uint64_t stream_id, std::uint64_t item);

/// Deterministic reconstruction: integrate the probability-flow ODE from
/// noise level sigma down to 0 with fixed-step RK4 in the
/// variance-exploding parameterization.
Eigen::ArrayXd reconstruct_flow(const Eigen::ArrayXd& z, double sigma,
                                const AnalyticSource& source, int ode_steps = 256);
Eigen::ArrayXd reconstruct_flow(const Eigen::ArrayXd& z, const DiffusionSchedule& schedule,
                                int t, const AnalyticSource& source, int ode_steps = 256);
/// Scalar fast path for 1-D sources; same integrator, no allocations.
double reconstruct_flow1(double z, double sigma, const AnalyticSource& source,
                         int ode_steps = 256);

/// Fig-style chunked-transport cost model: (C/B) (B + log2(B+1) + 5).
double chunk_overhead(double total_kl_bits, double chunk_bits);

/// Score-model view of an analytic source on a schedule: the two maps a
/// trained network would provide, with Tweedie's identity linking them.
struct ScoreModel {
    const AnalyticSource* source = nullptr;
    const DiffusionSchedule* schedule = nullptr;

    Eigen::ArrayXd score(const Eigen::ArrayXd& z, int t) const;
    Eigen::ArrayXd posterior_mean(const Eigen::ArrayXd& z, int t) const;
};

}  // namespace diffc
