#include "diffc/diffusion.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace diffc {

namespace {
constexpr double kSigmaSqMax = 1.0 - 1e-4;
constexpr double kCosineOffset = 0.008;
}  // namespace

double DiffusionSchedule::sigma_at(int t) const {
    if (t < 1 || t > steps()) throw std::out_of_range("schedule step out of range");
    return sigma[static_cast<std::size_t>(t - 1)];
}

double DiffusionSchedule::signal_at(int t) const {
    const double s = sigma_at(t);
    return std::sqrt(1.0 - s * s);
}

double DiffusionSchedule::eta_at(int t) const {
    const double s = sigma_at(t);
    return s / std::sqrt(1.0 - s * s);
}

double DiffusionSchedule::beta_integral_at(int t) const {
    const double s = sigma_at(t);
    return -std::log1p(-s * s);
}

double DiffusionSchedule::beta_step_at(int t) const {
    return beta_integral_at(t) - (t > 1 ? beta_integral_at(t - 1) : 0.0);
}

int DiffusionSchedule::nearest_step(double sigma_target) const {
    int best = 1;
    double best_gap = std::abs(sigma_at(1) - sigma_target);
    for (int t = 2; t <= steps(); ++t) {
        const double gap = std::abs(sigma_at(t) - sigma_target);
        if (gap < best_gap) {
            best_gap = gap;
            best = t;
        }
    }
    return best;
}

void DiffusionSchedule::validate() const {
    if (sigma.empty()) throw std::invalid_argument("schedule: need at least one step");
    double prev = 0.0;
    for (double s : sigma) {
        if (!(s > prev) || !(s < 1.0))
            throw std::invalid_argument("schedule: sigma must be strictly increasing in (0,1)");
        prev = s;
    }
}

DiffusionSchedule DiffusionSchedule::cosine(int T) {
    if (T < 1) throw std::invalid_argument("schedule: T must be >= 1");
    DiffusionSchedule sch;
    sch.preset = Preset::cosine;
    sch.sigma.resize(static_cast<std::size_t>(T));
    const auto f = [](double u) {
        const double c = std::cos(0.5 * std::numbers::pi * (u + kCosineOffset) /
                                  (1.0 + kCosineOffset));
        return c * c;
    };
    const double f0 = f(0.0);
    for (int t = 1; t <= T; ++t) {
        const double u = static_cast<double>(t) / T;
        double s2 = 1.0 - f(u) / f0;
        s2 = std::min(s2, kSigmaSqMax);
        sch.sigma[static_cast<std::size_t>(t - 1)] = std::sqrt(s2);
    }
    // The clamp can flatten the last steps of a long schedule; keep them
    // strictly increasing.
    for (int i = T - 2; i >= 0; --i) {
        auto& s = sch.sigma[static_cast<std::size_t>(i)];
        const double next = sch.sigma[static_cast<std::size_t>(i + 1)];
        if (s >= next) s = next * (1.0 - 1e-9);
    }
    sch.validate();
    return sch;
}

DiffusionSchedule DiffusionSchedule::from_sigmas(std::vector<double> sigmas) {
    DiffusionSchedule sch;
    sch.preset = Preset::custom;
    sch.sigma = std::move(sigmas);
    sch.validate();
    return sch;
}

}  // namespace diffc
