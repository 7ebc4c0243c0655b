#include "diffc/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "diffc/io.hpp"

namespace diffc {

namespace {
constexpr double kEigenvalueFloor = 1e-12;
}

double Spectrum::total() const {
    double s = 0.0;
    for (double l : lambdas) s += l;
    return s;
}

void Spectrum::validate() const {
    if (lambdas.empty()) throw std::invalid_argument("spectrum: no components");
    for (double l : lambdas) {
        if (!std::isfinite(l) || l <= 0.0)
            throw std::invalid_argument("spectrum: eigenvalues must be finite and positive");
    }
}

WaterfillSolution waterfill(const Spectrum& spectrum, double total_distortion) {
    spectrum.validate();
    const double sum = spectrum.total();
    if (!(total_distortion > 0.0) || total_distortion > sum * (1.0 + 1e-12))
        throw std::domain_error("waterfill: total distortion must lie in (0, sum lambda]");
    total_distortion = std::min(total_distortion, sum);

    const auto allocated = [&](double theta) {
        double s = 0.0;
        for (double l : spectrum.lambdas) s += std::min(l, theta);
        return s;
    };

    double lo = 0.0;
    double hi = *std::max_element(spectrum.lambdas.begin(), spectrum.lambdas.end());
    // The map theta -> allocated(theta) is monotone; plain bisection converges
    // to machine precision in ~100 steps.
    for (int it = 0; it < 200 && lo < hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (allocated(mid) < total_distortion)
            lo = mid;
        else
            hi = mid;
    }
    WaterfillSolution out;
    out.theta = 0.5 * (lo + hi);
    out.per_component.reserve(spectrum.dim());
    for (double l : spectrum.lambdas) out.per_component.push_back(std::min(l, out.theta));
    for (double d : out.per_component) out.total += d;
    return out;
}

double gaussian_rdf(const Spectrum& spectrum, double total_distortion) {
    const WaterfillSolution w = waterfill(spectrum, total_distortion);
    double bits = 0.0;
    for (std::size_t i = 0; i < spectrum.dim(); ++i) {
        const double ratio = spectrum.lambdas[i] / w.per_component[i];
        if (ratio > 1.0) bits += 0.5 * std::log2(ratio);
    }
    return bits;
}

FittedSpectrum fit_spectrum(const Eigen::MatrixXd& samples) {
    const Eigen::Index n = samples.rows();
    const Eigen::Index m = samples.cols();
    if (m < 1) throw std::invalid_argument("fit_spectrum: empty sample matrix");
    if (n < m + 1) throw std::invalid_argument("fit_spectrum: need at least M+1 samples");
    if (!samples.allFinite()) throw std::invalid_argument("fit_spectrum: non-finite values");

    const Eigen::RowVectorXd mean = samples.colwise().mean();
    const Eigen::MatrixXd centered = samples.rowwise() - mean;
    const Eigen::MatrixXd cov =
        (centered.adjoint() * centered) / static_cast<double>(n - 1);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("fit_spectrum: eigendecomposition failed");

    FittedSpectrum out;
    out.spectrum.lambdas.resize(static_cast<std::size_t>(m));
    out.rotation.resize(m, m);
    // Eigen returns ascending order; report descending.
    for (Eigen::Index i = 0; i < m; ++i) {
        double l = solver.eigenvalues()(m - 1 - i);
        if (l < kEigenvalueFloor) {
            l = kEigenvalueFloor;
            out.rank_deficient = true;
        }
        out.spectrum.lambdas[static_cast<std::size_t>(i)] = l;
        out.rotation.col(i) = solver.eigenvectors().col(m - 1 - i);
    }
    return out;
}

Spectrum read_spectrum_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open spectrum file: " + path);
    Spectrum s;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        s.lambdas.push_back(std::stod(line));
    }
    s.validate();
    return s;
}

void write_spectrum_file(const Spectrum& spectrum, const std::string& path) {
    std::ostringstream body;
    for (double l : spectrum.lambdas) body << format_sig(l) << '\n';
    write_file_atomic(path, body.str());
}

}  // namespace diffc
