#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "diffc/random.hpp"
#include "diffc/spectrum.hpp"

namespace diffc {

/// Diagonal Gaussian corruption z_j = signal_j x_j + sqrt(noise_var_j) u_j.
struct DiagChannel {
    Eigen::ArrayXd signal;
    Eigen::ArrayXd noise_var;

    bool is_isotropic() const;

    /// Variance-preserving channel at noise level sigma.
    static DiagChannel vp(double sigma, Eigen::Index dim);
    /// Variance-exploding channel y = x + eta u.
    static DiagChannel ve(double eta, Eigen::Index dim);
    /// General per-component channel.
    static DiagChannel make(Eigen::ArrayXd signal, Eigen::ArrayXd noise_var);
};

/// A source with everything analytic: a Gaussian mixture with diagonal
/// component covariances, optionally viewed through an orthogonal rotation
/// (x = Q s). Exact densities, scores, posteriors and samplers for any
/// diagonal channel; rotated sources support isotropic channels (the only
/// kind the diffusion path uses), where the rotation commutes with the
/// corruption.
class AnalyticSource {
  public:
    static AnalyticSource gaussian(const Spectrum& spectrum);
    static AnalyticSource standard_normal(Eigen::Index dim);
    /// 1-D mixture; weights must be positive and sum to 1 within 1e-12.
    static AnalyticSource gmm1d(std::vector<double> weights, std::vector<double> means,
                                std::vector<double> vars);
    /// Independent product of two sources (component count multiplies).
    static AnalyticSource product(const AnalyticSource& a, const AnalyticSource& b);
    /// Same mixture seen through x = Q s; Q must be orthogonal within 1e-10.
    AnalyticSource rotated(const Eigen::MatrixXd& q) const;

    Eigen::Index dim() const { return means_.cols(); }
    Eigen::Index mixture_size() const { return means_.rows(); }
    bool is_gaussian() const { return mixture_size() == 1; }
    bool has_rotation() const { return rotation_.has_value(); }
    const Eigen::MatrixXd& rotation() const { return *rotation_; }

    const Eigen::VectorXd& weights() const { return weights_; }
    const Eigen::MatrixXd& component_means() const { return means_; }
    const Eigen::MatrixXd& component_vars() const { return vars_; }

    /// Per-dimension means in the mixture basis.
    Eigen::ArrayXd mean_diag() const;
    /// Per-dimension variances in the mixture basis.
    Eigen::ArrayXd variance_diag() const;
    /// Per-dimension second moments in the mixture basis.
    Eigen::ArrayXd second_moment_diag() const;
    /// sum of per-dimension variances (rotation invariant).
    double total_variance() const;

    /// The same mixture with the rotation stripped, plus coordinate maps
    /// between the two views. The stepwise codec runs in the mixture basis,
    /// where every distribution involved is diagonal.
    AnalyticSource without_rotation() const;
    Eigen::ArrayXd to_mixture_basis(const Eigen::ArrayXd& x) const;
    Eigen::ArrayXd from_mixture_basis(const Eigen::ArrayXd& s) const;

    /// Canonical byte serialization; feeds the bitstream source hash.
    std::vector<unsigned char> descriptor_bytes() const;

    Eigen::ArrayXd sample(const StreamKey& key, std::uint64_t stream_id,
                          std::uint64_t index) const;

    double log_pdf(const Eigen::ArrayXd& x) const;
    Eigen::ArrayXd score(const Eigen::ArrayXd& x) const;

    double corrupted_log_pdf(const DiagChannel& ch, const Eigen::ArrayXd& z) const;
    Eigen::ArrayXd corrupted_score(const DiagChannel& ch, const Eigen::ArrayXd& z) const;
    Eigen::ArrayXd posterior_mean(const DiagChannel& ch, const Eigen::ArrayXd& z) const;
    /// Per-dimension Var(X_j | z), in the mixture basis.
    Eigen::ArrayXd posterior_var_diag(const DiagChannel& ch, const Eigen::ArrayXd& z) const;
    /// Exact draw from p(x | z): responsibility-weighted component pick,
    /// then the component's Gaussian posterior.
    Eigen::ArrayXd posterior_sample(const DiagChannel& ch, const Eigen::ArrayXd& z,
                                    const StreamKey& key, std::uint64_t stream_id,
                                    std::uint64_t index) const;

    /// 1-D marginal CDF / quantile (throws unless dim() == 1).
    double cdf(double x) const;
    double quantile(double u) const;
    double corrupted_cdf(const DiagChannel& ch, double z) const;

    /// Allocation-free scalar core for 1-D sources: score of
    /// z = signal X + sqrt(noise_var) U. The bulk Monte Carlo paths live on
    /// this.
    double corrupted_score1(double signal, double noise_var, double z) const;
    double posterior_mean1(double signal, double noise_var, double z) const;
    double posterior_var1(double signal, double noise_var, double z) const;

  private:
    AnalyticSource() = default;
    Eigen::ArrayXd responsibilities(const DiagChannel& ch, const Eigen::ArrayXd& z) const;
    void require_plain_or_isotropic(const DiagChannel& ch) const;

    Eigen::VectorXd weights_;  // K
    Eigen::MatrixXd means_;    // K x M
    Eigen::MatrixXd vars_;     // K x M
    std::optional<Eigen::MatrixXd> rotation_;
};

/// Unit-scale Laplace density convolved with a small Gaussian, so the score
/// exists everywhere. Supports exactly what the smoothness diagnostics
/// need: sampling and the analytic score of any isotropic corruption.
struct SmoothedLaplace1D {
    double scale;      // Laplace scale b; variance is 2 b^2
    double smoothing;  // convolving Gaussian's std

    double sample(const StreamKey& key, std::uint64_t stream_id, std::uint64_t index) const;
    /// Score of z = signal * X + sqrt(noise_var) * U at z.
    double corrupted_score(double signal, double noise_var, double z) const;
};

}  // namespace diffc
