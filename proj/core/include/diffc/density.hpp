#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "diffc/random.hpp"

namespace diffc {

/// A distribution usable as a reverse-channel-coding endpoint: log density
/// plus a deterministic candidate generator. sample(key, id, index) is a
/// pure function, so encoder and decoder reproduce candidate `index`
/// without generating its predecessors.
class Density {
  public:
    virtual ~Density() = default;
    virtual Eigen::Index dim() const = 0;
    virtual double log_density(const Eigen::ArrayXd& z) const = 0;
    virtual Eigen::ArrayXd sample(const StreamKey& key, std::uint64_t stream_id,
                                  std::uint64_t index) const = 0;
};

class DiagonalGaussian final : public Density {
  public:
    DiagonalGaussian(Eigen::ArrayXd mean, Eigen::ArrayXd var);

    Eigen::Index dim() const override { return mean_.size(); }
    double log_density(const Eigen::ArrayXd& z) const override;
    Eigen::ArrayXd sample(const StreamKey& key, std::uint64_t stream_id,
                          std::uint64_t index) const override;

    const Eigen::ArrayXd& mean() const { return mean_; }
    const Eigen::ArrayXd& var() const { return var_; }

  private:
    Eigen::ArrayXd mean_;
    Eigen::ArrayXd var_;
    double log_norm_;  // -0.5 * sum log(2 pi var)
};

/// KL(q || p) between diagonal Gaussians, in nats.
double kl_divergence_nats(const DiagonalGaussian& q, const DiagonalGaussian& p);

/// Analytic inf_z p(z)/q(z) for diagonal Gaussians: the product over
/// coordinates of the per-coordinate infimum, attained at
/// z_j = (mu_qj sp_j - mu_pj sq_j) / (sp_j - sq_j) with s* the variances.
/// Throws std::domain_error when some coordinate has target variance >=
/// prior variance (the ratio would have no positive lower bound).
double gaussian_wmin(const DiagonalGaussian& prior, const DiagonalGaussian& target);

/// Validate a caller-supplied bound on `points` draws from the target:
/// returns true when w_min <= p(z)/q(z) held everywhere. A violation means
/// exactness is silently broken, so callers should at least warn.
bool probe_wmin(const Density& prior, const Density& target, double w_min,
                std::uint64_t points, const StreamKey& key);

}  // namespace diffc
