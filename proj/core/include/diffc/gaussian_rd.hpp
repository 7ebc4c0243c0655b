#pragma once

#include <string>
#include <vector>

#include "diffc/spectrum.hpp"

namespace diffc {

/// One point on a rate/SNR trade-off curve. Rates are reported per
/// dimension. Zero-noise endpoints carry infinite rate; they are flagged
/// instead of storing a floating infinity.
struct RDPoint {
    double rate_bpd = 0.0;
    double distortion = 0.0;
    double snr_db = 0.0;
    bool rate_unbounded = false;
};

enum class Variant {
    diffc_a,        // isotropic noise, posterior-sample reconstruction
    diffc_f,        // isotropic noise, flow reconstruction
    diffc_a_star,   // water-filled noise, posterior-sample reconstruction
    diffc_f_star,   // optimal-flow noise, identity reconstruction
    pink_a,         // covariance-matched noise, posterior-sample reconstruction
    pink_f,         // covariance-matched noise, flow reconstruction
    rd_reference,   // R*(D)
    rd_half_reference,  // R*(D/2)
};

std::string variant_name(Variant v);
Variant variant_from_name(const std::string& name);

/// True when the variant's control parameter is a noise threshold theta
/// (otherwise it is a noise level sigma in (0,1)).
bool variant_uses_theta(Variant v);

enum class Reconstruction { ancestral, flow };

/// Per-component channel coefficients: z_i = signal_coeff_i * x_i +
/// noise_std_i * u_i with u_i standard normal.
struct GaussianSchedule {
    enum class Kind { isotropic, waterfilled, optimal_flow, pink };
    struct Component {
        double signal_coeff;
        double noise_std;
    };

    Kind kind;
    double control = 0.0;  // sigma for isotropic/pink, theta otherwise
    std::vector<Component> components;

    static GaussianSchedule isotropic(const Spectrum& s, double sigma);
    static GaussianSchedule waterfilled(const Spectrum& s, double theta);
    static GaussianSchedule optimal_flow(const Spectrum& s, double theta);
    static GaussianSchedule pink(const Spectrum& s, double sigma);
};

struct RDCurve {
    Variant variant;
    std::vector<RDPoint> points;  // sorted by rate ascending
};

double snr_db_from_distortion(const Spectrum& spectrum, double distortion);

RDPoint diffc_a_point(const Spectrum& spectrum, double sigma);
RDPoint diffc_f_point(const Spectrum& spectrum, double sigma);
RDPoint diffc_a_star_point(const Spectrum& spectrum, double theta);
RDPoint diffc_f_star_point(const Spectrum& spectrum, double theta);
RDPoint pink_point(const Spectrum& spectrum, double sigma, Reconstruction reconstruction);

/// Evaluate any variant at its control value.
RDPoint variant_point(const Spectrum& spectrum, Variant v, double control);

/// SNR per principal component in dB. For water-filled schedules every
/// component with lambda_i <= theta reports exactly 0 dB.
std::vector<double> per_component_snr(const Spectrum& spectrum,
                                      const GaussianSchedule& schedule,
                                      Reconstruction reconstruction);

/// Evaluate a curve over a grid of control values. Points are returned
/// sorted by rate ascending; unbounded-rate endpoints are dropped.
RDCurve sweep_curve(const Spectrum& spectrum, Variant v, const std::vector<double>& grid);

/// Invert the monotone rate(control) map: control value at which the
/// variant attains the requested rate in bits/dimension.
double control_for_rate(const Spectrum& spectrum, Variant v, double rate_bpd);

/// 64 log-spaced values, the default sweep grid.
std::vector<double> log_grid(double lo, double hi, std::size_t n = 64);

/// CSV rows `variant,rate_bpd,distortion,snr_db`, 12 significant digits.
std::string curve_to_csv(const RDCurve& curve);

}  // namespace diffc
