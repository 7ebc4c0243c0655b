#include "diffc/source.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace diffc {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;  // ln(2 pi)

double normal_cdf(double x) { return 0.5 * std::erfc(-x * (1.0 / std::numbers::sqrt2)); }

void append_doubles(std::vector<unsigned char>& out, const double* p, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        std::uint64_t bits;
        std::memcpy(&bits, &p[i], 8);
        for (int b = 0; b < 8; ++b) out.push_back(static_cast<unsigned char>(bits >> (8 * b)));
    }
}

}  // namespace

bool DiagChannel::is_isotropic() const {
    return (signal == signal(0)).all() && (noise_var == noise_var(0)).all();
}

DiagChannel DiagChannel::vp(double sigma, Eigen::Index dim) {
    if (!(sigma > 0.0) || !(sigma < 1.0))
        throw std::domain_error("vp channel: sigma must lie in (0,1)");
    DiagChannel ch;
    ch.signal = Eigen::ArrayXd::Constant(dim, std::sqrt(1.0 - sigma * sigma));
    ch.noise_var = Eigen::ArrayXd::Constant(dim, sigma * sigma);
    return ch;
}

DiagChannel DiagChannel::ve(double eta, Eigen::Index dim) {
    if (!(eta > 0.0)) throw std::domain_error("ve channel: eta must be positive");
    DiagChannel ch;
    ch.signal = Eigen::ArrayXd::Constant(dim, 1.0);
    ch.noise_var = Eigen::ArrayXd::Constant(dim, eta * eta);
    return ch;
}

DiagChannel DiagChannel::make(Eigen::ArrayXd signal, Eigen::ArrayXd noise_var) {
    if (signal.size() != noise_var.size()) throw std::invalid_argument("channel: size mismatch");
    if (!(noise_var > 0.0).all())
        throw std::invalid_argument("channel: noise variances must be positive");
    return {std::move(signal), std::move(noise_var)};
}

AnalyticSource AnalyticSource::gaussian(const Spectrum& spectrum) {
    spectrum.validate();
    AnalyticSource s;
    const Eigen::Index m = static_cast<Eigen::Index>(spectrum.dim());
    s.weights_ = Eigen::VectorXd::Ones(1);
    s.means_ = Eigen::MatrixXd::Zero(1, m);
    s.vars_.resize(1, m);
    for (Eigen::Index j = 0; j < m; ++j)
        s.vars_(0, j) = spectrum.lambdas[static_cast<std::size_t>(j)];
    return s;
}

AnalyticSource AnalyticSource::standard_normal(Eigen::Index dim) {
    Spectrum sp;
    sp.lambdas.assign(static_cast<std::size_t>(dim), 1.0);
    return gaussian(sp);
}

AnalyticSource AnalyticSource::gmm1d(std::vector<double> weights, std::vector<double> means,
                                     std::vector<double> vars) {
    const std::size_t k = weights.size();
    if (k == 0 || means.size() != k || vars.size() != k)
        throw std::invalid_argument("gmm1d: component lists must match and be non-empty");
    double wsum = 0.0;
    for (double w : weights) {
        if (!(w > 0.0)) throw std::invalid_argument("gmm1d: weights must be positive");
        wsum += w;
    }
    if (std::abs(wsum - 1.0) > 1e-12) throw std::invalid_argument("gmm1d: weights must sum to 1");
    for (double v : vars)
        if (!(v > 0.0)) throw std::invalid_argument("gmm1d: variances must be positive");

    AnalyticSource s;
    s.weights_ = Eigen::Map<Eigen::VectorXd>(weights.data(), static_cast<Eigen::Index>(k));
    s.means_.resize(static_cast<Eigen::Index>(k), 1);
    s.vars_.resize(static_cast<Eigen::Index>(k), 1);
    for (std::size_t i = 0; i < k; ++i) {
        s.means_(static_cast<Eigen::Index>(i), 0) = means[i];
        s.vars_(static_cast<Eigen::Index>(i), 0) = vars[i];
    }
    return s;
}

AnalyticSource AnalyticSource::product(const AnalyticSource& a, const AnalyticSource& b) {
    if (a.has_rotation() || b.has_rotation())
        throw std::invalid_argument("product: factor sources must be unrotated");
    AnalyticSource s;
    const Eigen::Index ka = a.mixture_size(), kb = b.mixture_size();
    s.weights_.resize(ka * kb);
    s.means_.resize(ka * kb, a.dim() + b.dim());
    s.vars_.resize(ka * kb, a.dim() + b.dim());
    for (Eigen::Index i = 0; i < ka; ++i) {
        for (Eigen::Index j = 0; j < kb; ++j) {
            const Eigen::Index r = i * kb + j;
            s.weights_(r) = a.weights_(i) * b.weights_(j);
            s.means_.row(r) << a.means_.row(i), b.means_.row(j);
            s.vars_.row(r) << a.vars_.row(i), b.vars_.row(j);
        }
    }
    return s;
}

AnalyticSource AnalyticSource::rotated(const Eigen::MatrixXd& q) const {
    if (q.rows() != dim() || q.cols() != dim())
        throw std::invalid_argument("rotated: rotation shape mismatch");
    const double err =
        (q * q.transpose() - Eigen::MatrixXd::Identity(dim(), dim())).cwiseAbs().maxCoeff();
    if (err > 1e-10) throw std::invalid_argument("rotated: matrix not orthogonal");
    AnalyticSource s = *this;
    s.rotation_ = q;
    return s;
}

Eigen::ArrayXd AnalyticSource::mean_diag() const {
    Eigen::ArrayXd mean = Eigen::ArrayXd::Zero(dim());
    for (Eigen::Index k = 0; k < mixture_size(); ++k)
        mean += weights_(k) * means_.row(k).array().transpose();
    return mean;
}

Eigen::ArrayXd AnalyticSource::variance_diag() const {
    Eigen::ArrayXd second = Eigen::ArrayXd::Zero(dim());
    Eigen::ArrayXd mean = Eigen::ArrayXd::Zero(dim());
    for (Eigen::Index k = 0; k < mixture_size(); ++k) {
        second +=
            weights_(k) * (vars_.row(k).array() + means_.row(k).array().square()).transpose();
        mean += weights_(k) * means_.row(k).array().transpose();
    }
    return second - mean.square();
}

Eigen::ArrayXd AnalyticSource::second_moment_diag() const {
    Eigen::ArrayXd second = Eigen::ArrayXd::Zero(dim());
    for (Eigen::Index k = 0; k < mixture_size(); ++k)
        second +=
            weights_(k) * (vars_.row(k).array() + means_.row(k).array().square()).transpose();
    return second;
}

double AnalyticSource::total_variance() const { return variance_diag().sum(); }

AnalyticSource AnalyticSource::without_rotation() const {
    AnalyticSource s = *this;
    s.rotation_.reset();
    return s;
}

Eigen::ArrayXd AnalyticSource::to_mixture_basis(const Eigen::ArrayXd& x) const {
    if (!rotation_) return x;
    return (rotation_->transpose() * x.matrix()).array();
}

Eigen::ArrayXd AnalyticSource::from_mixture_basis(const Eigen::ArrayXd& s) const {
    if (!rotation_) return s;
    return (*rotation_ * s.matrix()).array();
}

std::vector<unsigned char> AnalyticSource::descriptor_bytes() const {
    std::vector<unsigned char> out;
    const char tag[] = "diffc-source-v1";
    out.insert(out.end(), tag, tag + sizeof(tag));
    const std::uint32_t header[2] = {static_cast<std::uint32_t>(mixture_size()),
                                     static_cast<std::uint32_t>(dim())};
    for (std::uint32_t h : header)
        for (int b = 0; b < 4; ++b) out.push_back(static_cast<unsigned char>(h >> (8 * b)));
    append_doubles(out, weights_.data(), static_cast<std::size_t>(weights_.size()));
    append_doubles(out, means_.data(), static_cast<std::size_t>(means_.size()));
    append_doubles(out, vars_.data(), static_cast<std::size_t>(vars_.size()));
    out.push_back(rotation_ ? 1 : 0);
    if (rotation_)
        append_doubles(out, rotation_->data(), static_cast<std::size_t>(rotation_->size()));
    return out;
}

Eigen::ArrayXd AnalyticSource::sample(const StreamKey& key, std::uint64_t stream_id,
                                      std::uint64_t index) const {
    const CounterStream stream(key, stream_id, StreamTag::source_sample);
    Eigen::Index k = 0;
    if (mixture_size() > 1) {
        double u = stream.uniform(index, 0);
        for (; k + 1 < mixture_size(); ++k) {
            u -= weights_(k);
            if (u <= 0.0) break;
        }
    }
    Eigen::ArrayXd s(dim());
    // Normals start at slot 2: slot 0 is the categorical uniform's block and
    // must not be reused.
    for (Eigen::Index j = 0; j < dim(); ++j)
        s(j) = means_(k, j) +
               std::sqrt(vars_(k, j)) * stream.normal(index, 2 + static_cast<std::uint32_t>(j));
    if (rotation_) return (*rotation_ * s.matrix()).array();
    return s;
}

// --- mixture-basis cores -------------------------------------------------

Eigen::ArrayXd AnalyticSource::responsibilities(const DiagChannel& ch,
                                                const Eigen::ArrayXd& z) const {
    Eigen::ArrayXd logw(mixture_size());
    for (Eigen::Index k = 0; k < mixture_size(); ++k) {
        const Eigen::ArrayXd cv =
            ch.signal.square() * vars_.row(k).array().transpose() + ch.noise_var;
        const Eigen::ArrayXd diff = z - ch.signal * means_.row(k).array().transpose();
        logw(k) =
            std::log(weights_(k)) - 0.5 * cv.log().sum() - 0.5 * (diff.square() / cv).sum();
    }
    const double m = logw.maxCoeff();
    Eigen::ArrayXd r = (logw - m).exp();
    return r / r.sum();
}

void AnalyticSource::require_plain_or_isotropic(const DiagChannel& ch) const {
    if (rotation_ && !ch.is_isotropic())
        throw std::logic_error(
            "rotated sources support only isotropic channels (anisotropic noise does not "
            "commute with the rotation)");
}

double AnalyticSource::corrupted_log_pdf(const DiagChannel& ch, const Eigen::ArrayXd& z) const {
    require_plain_or_isotropic(ch);
    const Eigen::ArrayXd s = rotation_ ? (rotation_->transpose() * z.matrix()).array().eval() : z;
    Eigen::ArrayXd logw(mixture_size());
    for (Eigen::Index k = 0; k < mixture_size(); ++k) {
        const Eigen::ArrayXd cv =
            ch.signal.square() * vars_.row(k).array().transpose() + ch.noise_var;
        const Eigen::ArrayXd diff = s - ch.signal * means_.row(k).array().transpose();
        logw(k) =
            std::log(weights_(k)) - 0.5 * cv.log().sum() - 0.5 * (diff.square() / cv).sum();
    }
    const double m = logw.maxCoeff();
    return m + std::log((logw - m).exp().sum()) - 0.5 * kLog2Pi * static_cast<double>(dim());
}

double AnalyticSource::log_pdf(const Eigen::ArrayXd& x) const {
    DiagChannel plain;
    plain.signal = Eigen::ArrayXd::Ones(dim());
    plain.noise_var = Eigen::ArrayXd::Zero(dim());
    return corrupted_log_pdf(plain, x);
}

Eigen::ArrayXd AnalyticSource::corrupted_score(const DiagChannel& ch,
                                               const Eigen::ArrayXd& z) const {
    require_plain_or_isotropic(ch);
    const Eigen::ArrayXd s = rotation_ ? (rotation_->transpose() * z.matrix()).array().eval() : z;
    const Eigen::ArrayXd r = responsibilities(ch, s);
    Eigen::ArrayXd g = Eigen::ArrayXd::Zero(dim());
    for (Eigen::Index k = 0; k < mixture_size(); ++k) {
        const Eigen::ArrayXd cv =
            ch.signal.square() * vars_.row(k).array().transpose() + ch.noise_var;
        g += r(k) * (ch.signal * means_.row(k).array().transpose() - s) / cv;
    }
    if (rotation_) return (*rotation_ * g.matrix()).array();
    return g;
}

Eigen::ArrayXd AnalyticSource::score(const Eigen::ArrayXd& x) const {
    DiagChannel plain;
    plain.signal = Eigen::ArrayXd::Ones(dim());
    plain.noise_var = Eigen::ArrayXd::Zero(dim());
    return corrupted_score(plain, x);
}

Eigen::ArrayXd AnalyticSource::posterior_mean(const DiagChannel& ch,
                                              const Eigen::ArrayXd& z) const {
    require_plain_or_isotropic(ch);
    const Eigen::ArrayXd s = rotation_ ? (rotation_->transpose() * z.matrix()).array().eval() : z;
    const Eigen::ArrayXd r = responsibilities(ch, s);
    Eigen::ArrayXd mean = Eigen::ArrayXd::Zero(dim());
    for (Eigen::Index k = 0; k < mixture_size(); ++k) {
        const Eigen::ArrayXd v = vars_.row(k).array().transpose();
        const Eigen::ArrayXd mu = means_.row(k).array().transpose();
        const Eigen::ArrayXd cv = ch.signal.square() * v + ch.noise_var;
        mean += r(k) * (ch.signal * v * s + ch.noise_var * mu) / cv;
    }
    if (rotation_) return (*rotation_ * mean.matrix()).array();
    return mean;
}

Eigen::ArrayXd AnalyticSource::posterior_var_diag(const DiagChannel& ch,
                                                  const Eigen::ArrayXd& z) const {
    require_plain_or_isotropic(ch);
    const Eigen::ArrayXd s = rotation_ ? (rotation_->transpose() * z.matrix()).array().eval() : z;
    const Eigen::ArrayXd r = responsibilities(ch, s);
    Eigen::ArrayXd first = Eigen::ArrayXd::Zero(dim());
    Eigen::ArrayXd second = Eigen::ArrayXd::Zero(dim());
    for (Eigen::Index k = 0; k < mixture_size(); ++k) {
        const Eigen::ArrayXd v = vars_.row(k).array().transpose();
        const Eigen::ArrayXd mu = means_.row(k).array().transpose();
        const Eigen::ArrayXd cv = ch.signal.square() * v + ch.noise_var;
        const Eigen::ArrayXd pm = (ch.signal * v * s + ch.noise_var * mu) / cv;
        const Eigen::ArrayXd pv = v * ch.noise_var / cv;
        first += r(k) * pm;
        second += r(k) * (pv + pm.square());
    }
    // Reported in the mixture basis, the only basis where it is diagonal.
    return (second - first.square()).max(0.0);
}

Eigen::ArrayXd AnalyticSource::posterior_sample(const DiagChannel& ch, const Eigen::ArrayXd& z,
                                                const StreamKey& key, std::uint64_t stream_id,
                                                std::uint64_t index) const {
    require_plain_or_isotropic(ch);
    const Eigen::ArrayXd s = rotation_ ? (rotation_->transpose() * z.matrix()).array().eval() : z;
    const CounterStream stream(key, stream_id, StreamTag::ancestral_noise);
    Eigen::Index k = 0;
    if (mixture_size() > 1) {
        const Eigen::ArrayXd r = responsibilities(ch, s);
        double u = stream.uniform(index, 0);
        for (; k + 1 < mixture_size(); ++k) {
            u -= r(k);
            if (u <= 0.0) break;
        }
    }
    const Eigen::ArrayXd v = vars_.row(k).array().transpose();
    const Eigen::ArrayXd mu = means_.row(k).array().transpose();
    const Eigen::ArrayXd cv = ch.signal.square() * v + ch.noise_var;
    const Eigen::ArrayXd pm = (ch.signal * v * s + ch.noise_var * mu) / cv;
    const Eigen::ArrayXd pv = v * ch.noise_var / cv;
    Eigen::ArrayXd out(dim());
    for (Eigen::Index j = 0; j < dim(); ++j)
        out(j) =
            pm(j) + std::sqrt(pv(j)) * stream.normal(index, 2 + static_cast<std::uint32_t>(j));
    if (rotation_) return (*rotation_ * out.matrix()).array();
    return out;
}

double AnalyticSource::cdf(double x) const {
    if (dim() != 1) throw std::logic_error("cdf: defined for 1-D sources only");
    double c = 0.0;
    for (Eigen::Index k = 0; k < mixture_size(); ++k)
        c += weights_(k) * normal_cdf((x - means_(k, 0)) / std::sqrt(vars_(k, 0)));
    return c;
}

double AnalyticSource::corrupted_cdf(const DiagChannel& ch, double z) const {
    if (dim() != 1) throw std::logic_error("corrupted_cdf: defined for 1-D sources only");
    double c = 0.0;
    for (Eigen::Index k = 0; k < mixture_size(); ++k) {
        const double cv = ch.signal(0) * ch.signal(0) * vars_(k, 0) + ch.noise_var(0);
        c += weights_(k) * normal_cdf((z - ch.signal(0) * means_(k, 0)) / std::sqrt(cv));
    }
    return c;
}

double AnalyticSource::quantile(double u) const {
    if (dim() != 1) throw std::logic_error("quantile: defined for 1-D sources only");
    if (!(u > 0.0) || !(u < 1.0)) throw std::domain_error("quantile: u must lie in (0,1)");
    double lo = means_.col(0).minCoeff() - 12.0 * std::sqrt(vars_.maxCoeff());
    double hi = means_.col(0).maxCoeff() + 12.0 * std::sqrt(vars_.maxCoeff());
    while (cdf(lo) > u) lo -= 10.0;
    while (cdf(hi) < u) hi += 10.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (cdf(mid) < u)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

double AnalyticSource::corrupted_score1(double signal, double noise_var, double z) const {
    if (dim() != 1) throw std::logic_error("corrupted_score1: 1-D sources only");
    const Eigen::Index K = mixture_size();
    double max_lw = -std::numeric_limits<double>::infinity();
    double lw[32];
    if (K > 32) {
        Eigen::ArrayXd zz(1);
        zz(0) = z;
        DiagChannel ch;
        ch.signal = Eigen::ArrayXd::Constant(1, signal);
        ch.noise_var = Eigen::ArrayXd::Constant(1, noise_var);
        return corrupted_score(ch, zz)(0);
    }
    for (Eigen::Index k = 0; k < K; ++k) {
        const double cv = signal * signal * vars_(k, 0) + noise_var;
        const double d = z - signal * means_(k, 0);
        lw[k] = std::log(weights_(k)) - 0.5 * std::log(cv) - 0.5 * d * d / cv;
        max_lw = std::max(max_lw, lw[k]);
    }
    double wsum = 0.0, acc = 0.0;
    for (Eigen::Index k = 0; k < K; ++k) {
        const double r = std::exp(lw[k] - max_lw);
        const double cv = signal * signal * vars_(k, 0) + noise_var;
        wsum += r;
        acc += r * (signal * means_(k, 0) - z) / cv;
    }
    return acc / wsum;
}

double AnalyticSource::posterior_mean1(double signal, double noise_var, double z) const {
    if (dim() != 1) throw std::logic_error("posterior_mean1: 1-D sources only");
    const double s = corrupted_score1(signal, noise_var, z);
    // Tweedie in the scaled coordinates: E[X|z] = (z + nv * score) / signal.
    return (z + noise_var * s) / signal;
}

double AnalyticSource::posterior_var1(double signal, double noise_var, double z) const {
    if (dim() != 1) throw std::logic_error("posterior_var1: 1-D sources only");
    Eigen::ArrayXd zz(1);
    zz(0) = z;
    DiagChannel ch;
    ch.signal = Eigen::ArrayXd::Constant(1, signal);
    ch.noise_var = Eigen::ArrayXd::Constant(1, noise_var);
    return posterior_var_diag(ch, zz)(0);
}

double SmoothedLaplace1D::sample(const StreamKey& key, std::uint64_t stream_id,
                                 std::uint64_t index) const {
    const CounterStream stream(key, stream_id, StreamTag::source_sample);
    const double u = stream.uniform(index, 0);
    double v = 2.0 * u - 1.0;
    v = std::clamp(v, -(1.0 - 0x1.0p-53), 1.0 - 0x1.0p-53);
    const double laplace = (v < 0.0 ? 1.0 : -1.0) * scale * std::log1p(-std::abs(v));
    return laplace + smoothing * stream.normal(index, 2);
}

double SmoothedLaplace1D::corrupted_score(double signal, double noise_var, double z) const {
    // signal * X + noise is again a smoothed Laplace: scale b' = signal * b,
    // smoothing s'^2 = signal^2 eps^2 + noise_var.
    const double b = signal * scale;
    const double s2 = signal * signal * smoothing * smoothing + noise_var;
    const double s = std::sqrt(s2);
    if (std::abs(z) >= 38.0 * s) return (z > 0.0 ? -1.0 : 1.0) / b;
    const double ua = (s2 / b - z) / s * (1.0 / std::numbers::sqrt2);
    const double ub = (s2 / b + z) / s * (1.0 / std::numbers::sqrt2);
    const double a_term = std::exp(-z / b) * std::erfc(ua);
    const double b_term = std::exp(z / b) * std::erfc(ub);
    return (b_term - a_term) / (a_term + b_term) / b;
}

}  // namespace diffc
