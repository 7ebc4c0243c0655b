#pragma once

#include <cstdint>
#include <vector>

namespace diffc {

/// Discrete corruption schedule: z_t = sqrt(1 - sigma_t^2) x + sigma_t u
/// for t = 1..T with sigma strictly increasing in (0, 1). eta_t is the
/// variance-exploding equivalent sigma_t / sqrt(1 - sigma_t^2), and the
/// implied continuous-time drift integral is -ln(1 - sigma_t^2).
struct DiffusionSchedule {
    enum class Preset : std::uint8_t { custom = 0, cosine = 1 };

    Preset preset = Preset::custom;
    std::vector<double> sigma;  // sigma[t-1] for t = 1..T

    int steps() const { return static_cast<int>(sigma.size()); }
    double sigma_at(int t) const;          // 1-based
    double signal_at(int t) const;         // sqrt(1 - sigma_t^2)
    double eta_at(int t) const;
    double beta_integral_at(int t) const;  // integral of beta up to t
    double beta_step_at(int t) const;      // increment over (t-1, t]

    /// Step whose sigma_t is closest to the requested level.
    int nearest_step(double sigma_target) const;

    void validate() const;

    static DiffusionSchedule cosine(int T);
    static DiffusionSchedule from_sigmas(std::vector<double> sigmas);
};

}  // namespace diffc
