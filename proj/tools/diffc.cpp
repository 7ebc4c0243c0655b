// Command-line laboratory for the diffusion compression codec: analytic
// rate-distortion curves, encode/decode on analytic-score sources, and the
// Monte Carlo theorem checks. Outputs are plain CSV/binary files.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "diffc/codec.hpp"
#include "diffc/gaussian_rd.hpp"
#include "diffc/harness.hpp"
#include "diffc/io.hpp"
#include "diffc/spectrum.hpp"
#include "diffc/zipf_codec.hpp"

namespace {

using namespace diffc;

constexpr int kExitOk = 0;
constexpr int kExitAssertionFailure = 1;
constexpr int kExitInputError = 2;

// --source grammar:
//   normal            standard normal, 1-D
//   normal:M          standard normal, M dimensions
//   gmm:w,mu,var;...  1-D mixture, one w,mu,var triple per component
//   spectrum:PATH     zero-mean Gaussian with eigenvalues from a file
//   samples:PATH      Gaussian fitted to a whitespace-separated matrix file
AnalyticSource parse_source(const std::string& text) {
    if (text == "normal") return AnalyticSource::standard_normal(1);
    if (text.rfind("normal:", 0) == 0)
        return AnalyticSource::standard_normal(std::stol(text.substr(7)));
    if (text.rfind("gmm:", 0) == 0) {
        std::vector<double> w, mu, var;
        std::stringstream comps(text.substr(4));
        std::string comp;
        while (std::getline(comps, comp, ';')) {
            double a, b, c;
            if (std::sscanf(comp.c_str(), "%lf,%lf,%lf", &a, &b, &c) != 3)
                throw std::invalid_argument("bad mixture component: " + comp);
            w.push_back(a);
            mu.push_back(b);
            var.push_back(c);
        }
        return AnalyticSource::gmm1d(w, mu, var);
    }
    if (text.rfind("spectrum:", 0) == 0)
        return AnalyticSource::gaussian(read_spectrum_file(text.substr(9)));
    if (text.rfind("samples:", 0) == 0) {
        std::ifstream in(text.substr(8));
        if (!in) throw std::runtime_error("cannot open sample matrix: " + text.substr(8));
        std::vector<std::vector<double>> rows;
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::istringstream ls(line);
            std::vector<double> row;
            double v;
            while (ls >> v) row.push_back(v);
            if (!row.empty()) rows.push_back(std::move(row));
        }
        if (rows.empty()) throw std::runtime_error("empty sample matrix");
        Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                          static_cast<Eigen::Index>(rows[0].size()));
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != rows[0].size())
                throw std::runtime_error("ragged sample matrix");
            for (std::size_t j = 0; j < rows[i].size(); ++j)
                m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
        }
        const FittedSpectrum fit = fit_spectrum(m);
        if (fit.rank_deficient)
            std::cerr << "warning: sample covariance is rank deficient; "
                         "eigenvalues floored at 1e-12\n";
        return AnalyticSource::gaussian(fit.spectrum).rotated(fit.rotation);
    }
    throw std::invalid_argument("unrecognized --source: " + text);
}

std::vector<double> parse_grid(const std::string& text) {
    double lo, hi;
    unsigned long n;
    if (std::sscanf(text.c_str(), "%lf:%lf:%lu", &lo, &hi, &n) != 3)
        throw std::invalid_argument("grid must be lo:hi:count, got " + text);
    return log_grid(lo, hi, n);
}

DiffusionSchedule make_schedule(const std::string& preset, int steps) {
    if (preset == "cosine") return DiffusionSchedule::cosine(steps);
    throw std::invalid_argument("unknown schedule preset: " + preset);
}

std::string variant_file_stem(Variant v) {
    switch (v) {
        case Variant::diffc_a: return "diffc_a";
        case Variant::diffc_f: return "diffc_f";
        case Variant::diffc_a_star: return "diffc_a_star";
        case Variant::diffc_f_star: return "diffc_f_star";
        case Variant::pink_a: return "p_a";
        case Variant::pink_f: return "p_f";
        case Variant::rd_reference: return "rd";
        case Variant::rd_half_reference: return "rd_half";
    }
    return "unknown";
}

Eigen::ArrayXd read_vector_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open vector file: " + path);
    std::vector<double> vals;
    double v;
    while (in >> v) vals.push_back(v);
    if (vals.empty()) throw std::runtime_error("empty vector file: " + path);
    Eigen::ArrayXd x(static_cast<Eigen::Index>(vals.size()));
    for (std::size_t i = 0; i < vals.size(); ++i) x(static_cast<Eigen::Index>(i)) = vals[i];
    return x;
}

void write_vector_file(const Eigen::ArrayXd& x, const std::string& path) {
    std::ostringstream out;
    for (Eigen::Index i = 0; i < x.size(); ++i) out << format_sig(x(i)) << '\n';
    write_file_atomic(path, out.str());
}

int cmd_rd_curve(const std::string& spectrum_path, const std::string& sigma_grid,
                 const std::string& theta_grid, double snr_rate, const std::string& out_dir) {
    const Spectrum spec = read_spectrum_file(spectrum_path);
    std::filesystem::create_directories(out_dir);

    const double lam_max = *std::max_element(spec.lambdas.begin(), spec.lambdas.end());
    const std::vector<double> sigmas =
        sigma_grid.empty() ? log_grid(1e-3, 0.999, 64) : parse_grid(sigma_grid);
    const std::vector<double> thetas =
        theta_grid.empty() ? log_grid(1e-6 * lam_max, lam_max, 64) : parse_grid(theta_grid);

    for (Variant v : {Variant::diffc_a, Variant::diffc_f, Variant::diffc_a_star,
                      Variant::diffc_f_star, Variant::pink_a, Variant::pink_f,
                      Variant::rd_reference, Variant::rd_half_reference}) {
        const RDCurve curve = sweep_curve(spec, v, variant_uses_theta(v) ? thetas : sigmas);
        write_file_atomic(out_dir + "/" + variant_file_stem(v) + ".csv", curve_to_csv(curve));
    }

    // Per-component SNR with each noise family tuned to the same rate.
    std::ostringstream snr;
    snr << "variant,component,snr_db\n";
    const auto emit = [&](Variant v, const GaussianSchedule& sch, Reconstruction recon) {
        const auto values = per_component_snr(spec, sch, recon);
        for (std::size_t i = 0; i < values.size(); ++i)
            snr << variant_name(v) << ',' << i << ',' << format_sig(values[i]) << '\n';
    };
    emit(Variant::diffc_a,
         GaussianSchedule::isotropic(spec, control_for_rate(spec, Variant::diffc_a, snr_rate)),
         Reconstruction::ancestral);
    emit(Variant::diffc_f,
         GaussianSchedule::isotropic(spec, control_for_rate(spec, Variant::diffc_f, snr_rate)),
         Reconstruction::flow);
    emit(Variant::diffc_a_star,
         GaussianSchedule::waterfilled(spec,
                                       control_for_rate(spec, Variant::diffc_a_star, snr_rate)),
         Reconstruction::ancestral);
    emit(Variant::diffc_f_star,
         GaussianSchedule::optimal_flow(spec,
                                        control_for_rate(spec, Variant::diffc_f_star, snr_rate)),
         Reconstruction::flow);
    emit(Variant::pink_a,
         GaussianSchedule::pink(spec, control_for_rate(spec, Variant::pink_a, snr_rate)),
         Reconstruction::ancestral);
    emit(Variant::pink_f,
         GaussianSchedule::pink(spec, control_for_rate(spec, Variant::pink_f, snr_rate)),
         Reconstruction::flow);
    write_file_atomic(out_dir + "/per_component_snr.csv", snr.str());
    return kExitOk;
}

int cmd_encode(const std::string& source_text, const std::string& preset, int steps, int t_stop,
               unsigned chunk_bits, std::uint64_t seed, const std::string& input,
               const std::string& out_path) {
    const AnalyticSource source = parse_source(source_text);
    const DiffusionSchedule schedule = make_schedule(preset, steps);
    const StreamKey key = StreamKey::from_seed(seed);

    const Eigen::ArrayXd x =
        input.empty() ? source.sample(key, /*stream_id=*/0xD1FFC, 0) : read_vector_file(input);
    const EncodeResult result = encode(x, source, schedule, t_stop, chunk_bits, key);

    const auto bytes = result.bitstream.to_bytes();
    write_file_atomic(out_path,
                      std::string(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
    write_file_atomic(out_path + ".ledger.csv", result.ledger.to_csv());
    std::cout << "encoded " << x.size() << " dims in " << bytes.size() << " bytes; "
              << "information " << format_sig(result.ledger.total_kl_bits()) << " bits, bound "
              << format_sig(result.ledger.bound_bits) << " bits\n";
    return kExitOk;
}

int cmd_decode(const std::string& source_text, const std::string& preset, int steps,
               const std::string& recon, int ode_steps, const std::string& in_path,
               const std::string& out_path) {
    const AnalyticSource source = parse_source(source_text);
    const DiffusionSchedule schedule = make_schedule(preset, steps);

    const std::string raw = read_file(in_path);
    const Bitstream bitstream =
        Bitstream::from_bytes({reinterpret_cast<const unsigned char*>(raw.data()), raw.size()});
    const Eigen::ArrayXd z = decode_to_z(bitstream, source, schedule);

    Eigen::ArrayXd out;
    if (recon == "z") {
        out = z;
    } else if (recon == "ancestral") {
        out = reconstruct_ancestral(z, schedule, bitstream.stop_step, source,
                                    bitstream.stream_key, /*stream_id=*/0xDEC0DE, 0);
    } else if (recon == "flow") {
        out = reconstruct_flow(z, schedule, bitstream.stop_step, source, ode_steps);
    } else {
        throw std::invalid_argument("--recon must be z, ancestral or flow");
    }
    write_vector_file(out, out_path);
    return kExitOk;
}

int cmd_verify(const std::string& theorem, const std::string& source_text, std::size_t samples,
               double sigma, std::uint64_t seed, const std::string& out_path) {
    const StreamKey key = StreamKey::from_seed(seed);
    const AnalyticSource source = parse_source(source_text);
    std::vector<TheoremReport> reports;

    const bool all = theorem == "all";
    if (all || theorem == "1")
        reports.push_back(check_theorem1(source, {0.2, 1.0, 3.0}, samples, key));
    if (all || theorem == "2")
        reports.push_back(check_flow_ancestral_ratio(source, {sigma, 0.5}, samples, key));
    if (all || theorem == "3")
        reports.push_back(
            check_flow_optimality(source, sigma > 0.1 ? sigma : 0.3, samples, 1000, key));
    if (all || theorem == "smoothness")
        reports.push_back(
            check_smoothness_monotone(source, {0.1, 0.3, 0.5, 0.7, 0.9}, samples, key));
    if (all || theorem == "g") {
        TheoremReport g{"g-anchors", {}};
        const GEstimate normal =
            estimate_g(AnalyticSource::standard_normal(1), 0.0, samples, key, 7000);
        g.assertions.push_back({"g-anchors", "standard normal g = 1", normal.n, normal.g_value,
                                normal.std_error, 3.0 * normal.std_error,
                                std::abs(normal.g_value - 1.0) <= 3.0 * normal.std_error});
        const GEstimate lap =
            estimate_g(SmoothedLaplace1D{1.0 / std::sqrt(2.0), 1e-3}, 0.0, 1000, key, 7001);
        g.assertions.push_back({"g-anchors", "smoothed two-sided exponential g = 2", lap.n,
                                lap.g_value, lap.std_error, 3.0 * lap.std_error,
                                std::abs(lap.g_value - 2.0) <= 3.0 * lap.std_error});
        reports.push_back(std::move(g));
    }
    if (reports.empty()) throw std::invalid_argument("unknown theorem id: " + theorem);

    write_file_atomic(out_path, reports_to_csv(reports));
    bool ok = true;
    for (const TheoremReport& r : reports) {
        for (const Assertion& a : r.assertions) {
            std::cout << (a.pass ? "pass" : "FAIL") << "  " << r.id << ": " << a.condition
                      << "  (estimate " << format_sig(a.estimate) << ", bound "
                      << format_sig(a.bound) << ")\n";
            ok = ok && a.pass;
        }
    }
    return ok ? kExitOk : kExitAssertionFailure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"rate-distortion laboratory for diffusion-based compression"};
    app.require_subcommand(1);
    app.set_config("--config");

    auto* rd = app.add_subcommand("rd-curve", "analytic rate/SNR curves for a Gaussian source");
    std::string spectrum_path, sigma_grid, theta_grid, out_dir = "curves";
    double snr_rate = 0.391;
    rd->add_option("--spectrum", spectrum_path, "eigenvalue file, one per line")->required();
    rd->add_option("--sigma-grid", sigma_grid, "lo:hi:count, log spaced (default 1e-3:0.999:64)");
    rd->add_option("--theta-grid", theta_grid, "lo:hi:count, log spaced");
    rd->add_option("--snr-rate", snr_rate, "rate (bpd) for the per-component SNR file");
    rd->add_option("--out", out_dir, "output directory");

    auto* enc = app.add_subcommand("encode", "progressive encode of one source vector");
    std::string source_text = "normal", preset = "cosine", input_path, out_path = "out.dfc";
    int steps = 100, t_stop = 1, ode_steps = 256;
    unsigned chunk_bits = 64;
    std::uint64_t seed = 0;
    enc->add_option("--source", source_text, "source spec (see README)")->required();
    enc->add_option("--schedule", preset, "schedule preset (cosine)");
    enc->add_option("--steps", steps, "number of corruption steps T");
    enc->add_option("--t-stop", t_stop, "progressive stop step in [1, T]");
    enc->add_option("--chunk-bits", chunk_bits, "chunk budget B in bits");
    enc->add_option("--seed", seed, "shared-randomness seed")->required();
    enc->add_option("--input", input_path, "vector file; sampled from the source if omitted");
    enc->add_option("--out", out_path, "bitstream output path");

    auto* dec = app.add_subcommand("decode", "decode a bitstream to z or a reconstruction");
    std::string recon = "z", in_path;
    dec->add_option("--source", source_text, "source spec (must match the encoder's)")->required();
    dec->add_option("--schedule", preset, "schedule preset (cosine)");
    dec->add_option("--steps", steps, "number of corruption steps T");
    dec->add_option("--recon", recon, "z | ancestral | flow");
    dec->add_option("--ode-steps", ode_steps, "flow integrator steps");
    dec->add_option("--in", in_path, "bitstream input path")->required();
    dec->add_option("--out", out_path, "reconstruction output path")->required();

    auto* ver = app.add_subcommand("verify", "Monte Carlo checks of the theory");
    std::string theorem = "all";
    std::size_t samples = 100000;
    double sigma = 0.02;
    ver->add_option("--theorem", theorem, "1 | 2 | 3 | smoothness | g | all");
    ver->add_option("--source", source_text, "source spec (default two-component mixture at +-2)");
    ver->add_option("--samples", samples, "Monte Carlo sample count");
    ver->add_option("--sigma", sigma, "noise level for the limit checks");
    ver->add_option("--seed", seed, "root seed")->required();
    ver->add_option("--out", out_path, "report CSV path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (rd->parsed())
            return cmd_rd_curve(spectrum_path, sigma_grid, theta_grid, snr_rate, out_dir);
        if (enc->parsed())
            return cmd_encode(source_text, preset, steps, t_stop, chunk_bits, seed, input_path,
                              out_path);
        if (dec->parsed())
            return cmd_decode(source_text, preset, steps, recon, ode_steps, in_path, out_path);
        if (ver->parsed()) {
            if (!ver->count("--source")) source_text = "gmm:0.5,-2,0.25;0.5,2,0.25";
            if (!ver->count("--out")) out_path = "report.csv";
            return cmd_verify(theorem, source_text, samples, sigma, seed, out_path);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInputError;
    }
    return kExitOk;
}
