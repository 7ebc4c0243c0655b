#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace diffc {

/// Eigenvalues of a Gaussian source covariance, in data units squared.
/// Order is not significant; helpers keep them as given.
struct Spectrum {
    std::vector<double> lambdas;

    std::size_t dim() const { return lambdas.size(); }
    double total() const;

    /// Throws std::invalid_argument unless all entries are finite, positive
    /// and there is at least one.
    void validate() const;
};

/// Distortion allocation D_i = min(lambda_i, theta) at a given total.
struct WaterfillSolution {
    double theta = 0.0;
    std::vector<double> per_component;
    double total = 0.0;
};

/// Reverse water-filling: find theta with sum_i min(lambda_i, theta) equal
/// to total_distortion. Bisection on the monotone allocation map, relative
/// tolerance ~1e-15. Throws std::domain_error if total_distortion is outside
/// (0, sum lambda_i].
WaterfillSolution waterfill(const Spectrum& spectrum, double total_distortion);

/// Gaussian rate-distortion function in total bits:
/// 0.5 * sum_i log2(lambda_i / D_i) with D_i from waterfill().
double gaussian_rdf(const Spectrum& spectrum, double total_distortion);

/// Sample-covariance eigendecomposition of fit_spectrum().
struct FittedSpectrum {
    Spectrum spectrum;           // eigenvalues, descending, floored at 1e-12
    Eigen::MatrixXd rotation;    // columns are eigenvectors, matching order
    bool rank_deficient = false; // some eigenvalue hit the floor
};

/// Fit a Gaussian spectrum to data: rows of `samples` are M-dimensional
/// observations. Requires at least M+1 rows and finite values.
FittedSpectrum fit_spectrum(const Eigen::MatrixXd& samples);

/// Spectrum file format: one lambda per line, plain decimal.
Spectrum read_spectrum_file(const std::string& path);
void write_spectrum_file(const Spectrum& spectrum, const std::string& path);

}  // namespace diffc
