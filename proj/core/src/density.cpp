#include "diffc/density.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace diffc {

DiagonalGaussian::DiagonalGaussian(Eigen::ArrayXd mean, Eigen::ArrayXd var)
    : mean_(std::move(mean)), var_(std::move(var)) {
    if (mean_.size() != var_.size() || mean_.size() == 0)
        throw std::invalid_argument("diagonal gaussian: mean/var size mismatch");
    if (!(var_ > 0.0).all())
        throw std::invalid_argument("diagonal gaussian: variances must be positive");
    log_norm_ = -0.5 * (var_ * 2.0 * std::numbers::pi).log().sum();
}

double DiagonalGaussian::log_density(const Eigen::ArrayXd& z) const {
    return log_norm_ - 0.5 * ((z - mean_).square() / var_).sum();
}

Eigen::ArrayXd DiagonalGaussian::sample(const StreamKey& key, std::uint64_t stream_id,
                                        std::uint64_t index) const {
    const CounterStream stream(key, stream_id, StreamTag::candidates);
    Eigen::ArrayXd u(dim());
    stream.fill_normals(index, {u.data(), static_cast<std::size_t>(u.size())});
    return mean_ + var_.sqrt() * u;
}

double kl_divergence_nats(const DiagonalGaussian& q, const DiagonalGaussian& p) {
    if (q.dim() != p.dim()) throw std::invalid_argument("kl: dimension mismatch");
    const Eigen::ArrayXd ratio = q.var() / p.var();
    return 0.5 * (-ratio.log() + ratio + (q.mean() - p.mean()).square() / p.var() - 1.0).sum();
}

double gaussian_wmin(const DiagonalGaussian& prior, const DiagonalGaussian& target) {
    if (prior.dim() != target.dim()) throw std::invalid_argument("wmin: dimension mismatch");
    double log_w = 0.0;
    for (Eigen::Index j = 0; j < prior.dim(); ++j) {
        const double vp = prior.var()(j), vq = target.var()(j);
        const double mp = prior.mean()(j), mq = target.mean()(j);
        if (!(vq < vp))
            throw std::domain_error(
                "gaussian_wmin: target variance must be strictly below prior variance");
        const double zs = (mq * vp - mp * vq) / (vp - vq);
        log_w += 0.5 * std::log(vq / vp);
        log_w += -0.5 * (zs - mp) * (zs - mp) / vp + 0.5 * (zs - mq) * (zs - mq) / vq;
    }
    return std::exp(log_w);
}

bool probe_wmin(const Density& prior, const Density& target, double w_min,
                std::uint64_t points, const StreamKey& key) {
    if (!(w_min > 0.0)) throw std::domain_error("probe_wmin: bound must be positive");
    const double log_w = std::log(w_min);
    for (std::uint64_t i = 0; i < points; ++i) {
        const Eigen::ArrayXd z = target.sample(key, /*stream_id=*/0, i);
        if (prior.log_density(z) - target.log_density(z) < log_w) return false;
    }
    return true;
}

}  // namespace diffc
