#pragma once

#include <span>
#include <string>
#include <vector>

#include "diffc/random.hpp"
#include "diffc/source.hpp"

namespace diffc {

/// Monte Carlo estimate of the smoothness statistic E||score(Z)||^2 at one
/// corruption level. g_tilde is the variance-exploding view (1-sigma^2) g.
struct GEstimate {
    double sigma = 0.0;
    double g_value = 0.0;
    double g_tilde = 0.0;
    double std_error = 0.0;
    std::size_t n = 0;
};

/// One tested inequality/limit with its sampling metadata.
struct Assertion {
    std::string theorem;
    std::string condition;
    std::size_t n = 0;
    double estimate = 0.0;
    double std_error = 0.0;
    double bound = 0.0;
    bool pass = false;
};

struct TheoremReport {
    std::string id;
    std::vector<Assertion> assertions;
    bool passed() const;
};

/// Report rows `theorem,condition,n,estimate,stderr,bound,pass`.
std::string reports_to_csv(std::span<const TheoremReport> reports);

/// sigma = 0 gives the uncorrupted statistic.
GEstimate estimate_g(const AnalyticSource& source, double sigma, std::size_t n,
                     const StreamKey& key, std::uint64_t stream_id);
GEstimate estimate_g(const SmoothedLaplace1D& source, double sigma, std::size_t n,
                     const StreamKey& key, std::uint64_t stream_id);

/// Corruption only smooths: g_tilde(sigma) <= g(0) + 3 s.e. on every grid
/// point.
TheoremReport check_smoothness_monotone(const AnalyticSource& source,
                                        const std::vector<double>& sigma_grid, std::size_t n,
                                        const StreamKey& key);

/// MSE(flow)/MSE(posterior draw) across a sigma grid; asserted to lie in
/// [0.45, 0.55] at the smallest sigma, reported elsewhere.
TheoremReport check_flow_ancestral_ratio(const AnalyticSource& source,
                                         const std::vector<double>& sigma_grid, std::size_t n,
                                         const StreamKey& key, int ode_steps = 64);

/// Flow reconstruction is the best realism-preserving reconstruction:
/// matches the quantile-transport oracle pointwise and beats each rival's
/// MSE by at least 3 s.e. Rivals that fail the realism two-sample test are
/// disqualified and reported.
TheoremReport check_flow_optimality(const AnalyticSource& source, double sigma,
                                    std::size_t n_mse, std::size_t n_probes,
                                    const StreamKey& key, int ode_steps = 128);

/// Rate bound of the water-filled channel against the Gaussian benchmark:
/// I[X,Z] <= R*(D/2) - KL(P_Z || P_Z*) within 3 combined s.e. per theta.
TheoremReport check_theorem1(const AnalyticSource& source, const std::vector<double>& theta_grid,
                             std::size_t n, const StreamKey& key);

}  // namespace diffc
