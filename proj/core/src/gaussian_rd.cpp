#include "diffc/gaussian_rd.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "diffc/io.hpp"

namespace diffc {

namespace {

void require_sigma(double sigma) {
    if (!(sigma > 0.0) || !(sigma < 1.0))
        throw std::domain_error("noise level sigma must lie in (0, 1)");
}

void require_theta(double theta) {
    if (!(theta >= 0.0)) throw std::domain_error("noise threshold theta must be nonnegative");
}

// alpha_i for the optimal flow schedule, with a formulation that stays
// accurate for theta << lambda (1 - alpha^2 would otherwise cancel).
struct FlowCoeff {
    double alpha;
    double one_minus_alpha_sq;
};

FlowCoeff optimal_flow_coeff(double lambda, double theta) {
    const double root = std::sqrt(lambda * lambda + theta * theta);
    const double alpha = (root - theta) / lambda;
    const double one_minus_alpha = theta * (root + lambda - theta) / (lambda * (root + lambda));
    return {alpha, one_minus_alpha * (1.0 + alpha)};
}

RDPoint make_point(const Spectrum& s, double total_bits, double distortion) {
    RDPoint p;
    p.rate_bpd = total_bits / static_cast<double>(s.dim());
    p.distortion = distortion;
    if (distortion > 0.0) {
        p.snr_db = snr_db_from_distortion(s, distortion);
    } else {
        p.rate_unbounded = true;
    }
    return p;
}

}  // namespace

std::string variant_name(Variant v) {
    switch (v) {
        case Variant::diffc_a: return "DiffC-A";
        case Variant::diffc_f: return "DiffC-F";
        case Variant::diffc_a_star: return "DiffC-A*";
        case Variant::diffc_f_star: return "DiffC-F*";
        case Variant::pink_a: return "P-A";
        case Variant::pink_f: return "P-F";
        case Variant::rd_reference: return "R*(D)";
        case Variant::rd_half_reference: return "R*(D/2)";
    }
    throw std::logic_error("unknown variant");
}

Variant variant_from_name(const std::string& name) {
    for (Variant v : {Variant::diffc_a, Variant::diffc_f, Variant::diffc_a_star,
                      Variant::diffc_f_star, Variant::pink_a, Variant::pink_f,
                      Variant::rd_reference, Variant::rd_half_reference}) {
        if (variant_name(v) == name) return v;
    }
    throw std::invalid_argument("unknown curve variant: " + name);
}

bool variant_uses_theta(Variant v) {
    return v == Variant::diffc_a_star || v == Variant::diffc_f_star ||
           v == Variant::rd_reference || v == Variant::rd_half_reference;
}

double snr_db_from_distortion(const Spectrum& spectrum, double distortion) {
    return 10.0 * std::log10(2.0 * spectrum.total()) - 10.0 * std::log10(distortion);
}

GaussianSchedule GaussianSchedule::isotropic(const Spectrum& s, double sigma) {
    s.validate();
    require_sigma(sigma);
    GaussianSchedule g{Kind::isotropic, sigma, {}};
    const double a = std::sqrt(1.0 - sigma * sigma);
    g.components.assign(s.dim(), {a, sigma});
    return g;
}

GaussianSchedule GaussianSchedule::waterfilled(const Spectrum& s, double theta) {
    s.validate();
    require_theta(theta);
    GaussianSchedule g{Kind::waterfilled, theta, {}};
    g.components.reserve(s.dim());
    for (double l : s.lambdas) {
        const double g2 = std::min(1.0, theta / l);
        g.components.push_back({std::sqrt(1.0 - g2), std::sqrt(g2 * l)});
    }
    return g;
}

GaussianSchedule GaussianSchedule::optimal_flow(const Spectrum& s, double theta) {
    s.validate();
    require_theta(theta);
    GaussianSchedule g{Kind::optimal_flow, theta, {}};
    g.components.reserve(s.dim());
    for (double l : s.lambdas) {
        const FlowCoeff c = optimal_flow_coeff(l, theta);
        g.components.push_back({c.alpha, std::sqrt(c.one_minus_alpha_sq * l)});
    }
    return g;
}

GaussianSchedule GaussianSchedule::pink(const Spectrum& s, double sigma) {
    s.validate();
    require_sigma(sigma);
    GaussianSchedule g{Kind::pink, sigma, {}};
    const double a = std::sqrt(1.0 - sigma * sigma);
    g.components.reserve(s.dim());
    for (double l : s.lambdas) g.components.push_back({a, sigma * std::sqrt(l)});
    return g;
}

RDPoint diffc_a_point(const Spectrum& spectrum, double sigma) {
    spectrum.validate();
    require_sigma(sigma);
    const double s2 = sigma * sigma;
    double distortion = 0.0;
    double bits = 0.0;
    for (double l : spectrum.lambdas) {
        const double st2 = s2 / (s2 + l - l * s2);
        distortion += 2.0 * l * st2;
        bits += -0.5 * std::log2(st2);
    }
    return make_point(spectrum, bits, distortion);
}

RDPoint diffc_f_point(const Spectrum& spectrum, double sigma) {
    spectrum.validate();
    require_sigma(sigma);
    const double s2 = sigma * sigma;
    const double eta2 = s2 / (1.0 - s2);
    double distortion = 0.0;
    for (double l : spectrum.lambdas)
        distortion += 2.0 * l * (1.0 - std::sqrt(l / (l + eta2)));
    const RDPoint a = diffc_a_point(spectrum, sigma);
    RDPoint p = a;
    p.distortion = distortion;
    p.snr_db = snr_db_from_distortion(spectrum, distortion);
    return p;
}

RDPoint diffc_a_star_point(const Spectrum& spectrum, double theta) {
    spectrum.validate();
    require_theta(theta);
    if (theta == 0.0) {
        RDPoint p;
        p.rate_unbounded = true;
        return p;
    }
    double distortion = 0.0;
    double bits = 0.0;
    for (double l : spectrum.lambdas) {
        const double g2 = std::min(1.0, theta / l);
        distortion += 2.0 * l * g2;
        bits += -0.5 * std::log2(g2);
    }
    return make_point(spectrum, bits, distortion);
}

RDPoint diffc_f_star_point(const Spectrum& spectrum, double theta) {
    spectrum.validate();
    require_theta(theta);
    if (theta == 0.0) {
        RDPoint p;
        p.rate_unbounded = true;
        return p;
    }
    double distortion = 0.0;
    double bits = 0.0;
    for (double l : spectrum.lambdas) {
        const FlowCoeff c = optimal_flow_coeff(l, theta);
        distortion += 2.0 * l * (1.0 - c.alpha);
        bits += -0.5 * std::log2(c.one_minus_alpha_sq);
    }
    return make_point(spectrum, bits, distortion);
}

RDPoint pink_point(const Spectrum& spectrum, double sigma, Reconstruction reconstruction) {
    spectrum.validate();
    require_sigma(sigma);
    const double s2 = sigma * sigma;
    const double per_comp =
        reconstruction == Reconstruction::ancestral ? 2.0 * s2
                                                    : 2.0 * (1.0 - std::sqrt(1.0 - s2));
    const double distortion = per_comp * spectrum.total();
    const double bits = -std::log2(sigma) * static_cast<double>(spectrum.dim());
    return make_point(spectrum, bits, distortion);
}

RDPoint variant_point(const Spectrum& spectrum, Variant v, double control) {
    switch (v) {
        case Variant::diffc_a: return diffc_a_point(spectrum, control);
        case Variant::diffc_f: return diffc_f_point(spectrum, control);
        case Variant::diffc_a_star: return diffc_a_star_point(spectrum, control);
        case Variant::diffc_f_star: return diffc_f_star_point(spectrum, control);
        case Variant::pink_a: return pink_point(spectrum, control, Reconstruction::ancestral);
        case Variant::pink_f: return pink_point(spectrum, control, Reconstruction::flow);
        case Variant::rd_reference: {
            require_theta(control);
            if (control == 0.0) return RDPoint{0.0, 0.0, 0.0, true};
            double d = 0.0;
            for (double l : spectrum.lambdas) d += std::min(l, control);
            return make_point(spectrum, gaussian_rdf(spectrum, d), d);
        }
        case Variant::rd_half_reference: {
            require_theta(control);
            if (control == 0.0) return RDPoint{0.0, 0.0, 0.0, true};
            double half = 0.0;
            for (double l : spectrum.lambdas) half += std::min(l, control);
            return make_point(spectrum, gaussian_rdf(spectrum, half), 2.0 * half);
        }
    }
    throw std::logic_error("unknown variant");
}

std::vector<double> per_component_snr(const Spectrum& spectrum,
                                      const GaussianSchedule& schedule,
                                      Reconstruction reconstruction) {
    spectrum.validate();
    if (schedule.components.size() != spectrum.dim())
        throw std::domain_error("per_component_snr: schedule/spectrum length mismatch");

    std::vector<double> out(spectrum.dim());
    for (std::size_t i = 0; i < spectrum.dim(); ++i) {
        const double l = spectrum.lambdas[i];
        const double a = schedule.components[i].signal_coeff;
        const double nv = schedule.components[i].noise_std * schedule.components[i].noise_std;
        // 2*lambda / D_i as a single ratio so that the zero-SNR components of
        // a water-filled schedule come out at exactly 0 dB.
        double ratio;
        if (reconstruction == Reconstruction::ancestral) {
            // D_i = 2 * posterior variance; ratio written so that a zeroed
            // signal coefficient gives exactly 1 (0 dB).
            ratio = (a * a * l) / nv + 1.0;
        } else {
            // Flow maps z_i to the variance-matched scale; D_i = 2 l (1 - rho)
            // with rho the x/z correlation.
            const double rho = a * std::sqrt(l / (a * a * l + nv));
            ratio = 1.0 / (1.0 - rho);
        }
        out[i] = 10.0 * std::log10(ratio);
    }
    return out;
}

RDCurve sweep_curve(const Spectrum& spectrum, Variant v, const std::vector<double>& grid) {
    if (grid.empty()) throw std::domain_error("sweep_curve: empty control grid");
    RDCurve curve{v, {}};
    curve.points.reserve(grid.size());
    for (double c : grid) {
        const RDPoint p = variant_point(spectrum, v, c);
        if (!p.rate_unbounded) curve.points.push_back(p);
    }
    std::sort(curve.points.begin(), curve.points.end(),
              [](const RDPoint& a, const RDPoint& b) { return a.rate_bpd < b.rate_bpd; });
    return curve;
}

double control_for_rate(const Spectrum& spectrum, Variant v, double rate_bpd) {
    if (!(rate_bpd > 0.0)) throw std::domain_error("control_for_rate: rate must be positive");
    const auto rate_at = [&](double c) { return variant_point(spectrum, v, c).rate_bpd; };

    double lo, hi;
    if (variant_uses_theta(v)) {
        lo = 0.0;  // rate -> inf
        hi = *std::max_element(spectrum.lambdas.begin(), spectrum.lambdas.end());
        for (int i = 0; i < 80 && rate_at(hi) > rate_bpd; ++i) hi *= 2.0;
    } else {
        lo = 1e-15;  // rate -> inf as sigma -> 0
        hi = 1.0 - 1e-15;
    }
    // rate is monotone decreasing in the control parameter for every variant
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (rate_at(mid) > rate_bpd)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

std::vector<double> log_grid(double lo, double hi, std::size_t n) {
    if (!(lo > 0.0) || !(hi > lo) || n < 2)
        throw std::invalid_argument("log_grid: need 0 < lo < hi and n >= 2");
    std::vector<double> g(n);
    const double step = std::log(hi / lo) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) g[i] = lo * std::exp(step * static_cast<double>(i));
    return g;
}

std::string curve_to_csv(const RDCurve& curve) {
    std::ostringstream out;
    out << "variant,rate_bpd,distortion,snr_db\n";
    for (const RDPoint& p : curve.points) {
        out << variant_name(curve.variant) << ',' << format_sig(p.rate_bpd) << ','
            << format_sig(p.distortion) << ',' << format_sig(p.snr_db) << '\n';
    }
    return out.str();
}

}  // namespace diffc
