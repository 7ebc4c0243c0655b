#include "diffc/codec.hpp"

#include <cmath>
#include <cstring>
#include <numbers>
#include <sstream>

#include "diffc/density.hpp"
#include "diffc/io.hpp"
#include "diffc/rcc.hpp"
#include "diffc/zipf.hpp"
#include "diffc/zipf_codec.hpp"

namespace diffc {

namespace {

constexpr double kLog2E = 1.4426950408889634;

void put_u16(std::vector<unsigned char>& out, std::uint16_t v) {
    out.push_back(static_cast<unsigned char>(v));
    out.push_back(static_cast<unsigned char>(v >> 8));
}

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

std::uint16_t get_u16(std::span<const unsigned char> b, std::size_t at) {
    return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

std::uint32_t get_u32(std::span<const unsigned char> b, std::size_t at) {
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | b[at + static_cast<std::size_t>(i)];
    return v;
}

// q(z_s | z_{s+1}, x) = N(c1 z_{s+1} + c2 x, tau2 I): the forward-process
// bridge for the variance-preserving corruption.
struct StepGeometry {
    double c1, c2, tau2;
};

StepGeometry step_geometry(const DiffusionSchedule& sch, int s) {
    const int t = s + 1;
    const double as = sch.signal_at(s), at = sch.signal_at(t);
    const double ss2 = sch.sigma_at(s) * sch.sigma_at(s);
    const double st2 = sch.sigma_at(t) * sch.sigma_at(t);
    const double ats = at / as;
    const double sts2 = st2 - ats * ats * ss2;
    StepGeometry g;
    g.tau2 = ss2 * sts2 / st2;
    g.c1 = ats * ss2 / st2;
    g.c2 = as * sts2 / st2;
    return g;
}

// The model prior for step s given the already-transmitted z_{s+1}: the
// bridge with x replaced by E[X | z_{s+1}] and the variance widened by the
// posterior uncertainty c2^2 Var(X_j | z_{s+1}). Exact when the source is
// Gaussian; the Gaussian approximation whose KL Eq-style accounting
// charges otherwise.
DiagonalGaussian step_prior(const AnalyticSource& basis_source, const DiffusionSchedule& sch,
                            int s, const Eigen::ArrayXd& z_next) {
    const StepGeometry g = step_geometry(sch, s);
    const DiagChannel ch = DiagChannel::vp(sch.sigma_at(s + 1), basis_source.dim());
    const Eigen::ArrayXd pm = basis_source.posterior_mean(ch, z_next);
    const Eigen::ArrayXd pv = basis_source.posterior_var_diag(ch, z_next);
    return DiagonalGaussian(g.c1 * z_next + g.c2 * pm,
                            g.tau2 + g.c2 * g.c2 * pv);
}

// Expected step information E[KL | z_{s+1}] in bits. With the widened
// prior variance this collapses to 0.5 sum log(v_p / tau2), which both
// sides can evaluate, so it also seeds the index code's exponent.
double step_expected_kl_bits(const DiagonalGaussian& prior, double tau2) {
    return 0.5 * kLog2E * (prior.var() / tau2).log().sum();
}

// The corruption-endpoint prior: the moment-matched Gaussian view of the
// corrupted source. Exactly the Z_T marginal for Gaussian sources; for
// mixtures the mismatch it charges is the (tiny, a_T^2-suppressed)
// non-Gaussianity of Z_T. Standardizing by the source scale also keeps the
// reverse-channel candidate counts bounded by a per-dimension chi-square
// rather than the raw signal energy.
DiagonalGaussian endpoint_prior(const AnalyticSource& basis_source,
                                const DiffusionSchedule& sch) {
    const int T = sch.steps();
    const double aT = sch.signal_at(T);
    const double sT2 = sch.sigma_at(T) * sch.sigma_at(T);
    return DiagonalGaussian(aT * basis_source.mean_diag(),
                            aT * aT * basis_source.variance_diag() + sT2);
}

double prior_term_expected_kl_bits(const AnalyticSource& basis_source,
                                   const DiffusionSchedule& sch) {
    const int T = sch.steps();
    const double aT = sch.signal_at(T);
    const double sT2 = sch.sigma_at(T) * sch.sigma_at(T);
    const Eigen::ArrayXd vp = aT * aT * basis_source.variance_diag() + sT2;
    return 0.5 * kLog2E * (vp / sT2).log().sum();
}

// Both sides must agree on the payload's Zipf exponents; quantizing the
// expected-KL input keeps the per-lambda coder tables finite.
double payload_lambda(double expected_kl_bits) {
    const double q = std::round(std::max(expected_kl_bits, 0.0) * 16.0) / 16.0;
    return zipf_exponent(q);
}

struct ChunkPacker {
    double budget;
    double current = 0.0;
    double bound_bits = 0.0;

    void add(double kl_bits, const std::string& what) {
        if (kl_bits > budget)
            throw ConfigError("chunk budget " + format_sig(budget) + " bits is below the " +
                              format_sig(kl_bits) + "-bit information content of " + what);
        if (current + kl_bits > budget) {
            bound_bits += bound_check(current);
            current = 0.0;
        }
        current += kl_bits;
    }
    double finish() {
        if (current > 0.0) bound_bits += bound_check(current);
        return bound_bits;
    }
};

}  // namespace

std::vector<unsigned char> Bitstream::to_bytes() const {
    std::vector<unsigned char> out;
    out.reserve(64 + payload.size());
    out.insert(out.end(), {'D', 'I', 'F', 'C'});
    out.push_back(version);
    out.push_back(schedule_preset);
    put_u16(out, steps);
    put_u16(out, stop_step);
    put_u32(out, chunk_budget_bits);
    unsigned char keybytes[16];
    stream_key.to_bytes(keybytes);
    out.insert(out.end(), keybytes, keybytes + 16);
    out.insert(out.end(), source_hash.begin(), source_hash.end());
    put_u32(out, static_cast<std::uint32_t>(payload.size()));
    out.insert(out.end(), payload.begin(), payload.end());
    return out;
}

Bitstream Bitstream::from_bytes(std::span<const unsigned char> bytes) {
    constexpr std::size_t kHeader = 4 + 1 + 1 + 2 + 2 + 4 + 16 + 32 + 4;
    if (bytes.size() < kHeader) throw FormatError("container too short for header");
    if (!(bytes[0] == 'D' && bytes[1] == 'I' && bytes[2] == 'F' && bytes[3] == 'C'))
        throw FormatError("bad magic");
    Bitstream bs;
    bs.version = bytes[4];
    if (bs.version != 1) throw FormatError("unsupported container version");
    bs.schedule_preset = bytes[5];
    bs.steps = get_u16(bytes, 6);
    bs.stop_step = get_u16(bytes, 8);
    bs.chunk_budget_bits = get_u32(bytes, 10);
    bs.stream_key = StreamKey::from_bytes(bytes.subspan<14, 16>());
    std::copy_n(bytes.begin() + 30, 32, bs.source_hash.begin());
    const std::uint32_t payload_len = get_u32(bytes, 62);
    if (bytes.size() != kHeader + payload_len)
        throw FormatError("payload length mismatch");
    bs.payload.assign(bytes.begin() + static_cast<std::ptrdiff_t>(kHeader), bytes.end());
    return bs;
}

double RateLedger::total_kl_bits() const {
    double s = prior_term_bits;
    for (double b : per_step_kl_bits) s += b;
    return s;
}

std::string RateLedger::to_csv() const {
    std::ostringstream out;
    out << "entry,bits\n";
    out << "prior_term," << format_sig(prior_term_bits) << '\n';
    for (std::size_t i = 0; i < per_step_kl_bits.size(); ++i)
        out << "step_" << (first_step - static_cast<int>(i)) << ','
            << format_sig(per_step_kl_bits[i]) << '\n';
    out << "total_kl," << format_sig(total_kl_bits()) << '\n';
    out << "bound," << format_sig(bound_bits) << '\n';
    return out.str();
}

std::array<unsigned char, 32> source_schedule_hash(const AnalyticSource& source,
                                                   const DiffusionSchedule& schedule) {
    std::vector<unsigned char> bytes = source.descriptor_bytes();
    bytes.push_back(static_cast<unsigned char>(schedule.preset));
    for (double s : schedule.sigma) {
        std::uint64_t bits;
        std::memcpy(&bits, &s, 8);
        for (int b = 0; b < 8; ++b) bytes.push_back(static_cast<unsigned char>(bits >> (8 * b)));
    }
    return sha256(bytes);
}

Eigen::ArrayXd forward_corrupt(const Eigen::ArrayXd& x, const DiffusionSchedule& schedule,
                               int t, const StreamKey& key, std::uint64_t stream_id,
                               std::uint64_t item) {
    const double sigma = schedule.sigma_at(t);
    const CounterStream stream(key, stream_id, StreamTag::forward_noise);
    Eigen::ArrayXd u(x.size());
    stream.fill_normals(item, {u.data(), static_cast<std::size_t>(u.size())});
    return std::sqrt(1.0 - sigma * sigma) * x + sigma * u;
}

EncodeResult encode(const Eigen::ArrayXd& x, const AnalyticSource& source,
                    const DiffusionSchedule& schedule, int t_stop,
                    std::uint32_t chunk_budget_bits, const StreamKey& key) {
    schedule.validate();
    const int T = schedule.steps();
    if (t_stop < 1 || t_stop > T) throw ConfigError("t_stop outside [1, T]");
    if (x.size() != source.dim()) throw std::invalid_argument("encode: dimension mismatch");
    if (chunk_budget_bits == 0) throw ConfigError("chunk budget must be positive");

    const AnalyticSource basis = source.without_rotation();
    const Eigen::ArrayXd s_vec = source.to_mixture_basis(x);
    const Eigen::Index M = basis.dim();

    EncodeResult result;
    result.bitstream.schedule_preset = static_cast<std::uint8_t>(schedule.preset);
    result.bitstream.steps = static_cast<std::uint16_t>(T);
    result.bitstream.stop_step = static_cast<std::uint16_t>(t_stop);
    result.bitstream.chunk_budget_bits = chunk_budget_bits;
    result.bitstream.stream_key = key;
    result.bitstream.source_hash = source_schedule_hash(source, schedule);

    BitWriter writer;
    ChunkPacker packer{static_cast<double>(chunk_budget_bits)};

    // Corruption endpoint: q(z_T | x) against the model's assumed marginal.
    const double aT = schedule.signal_at(T);
    const double sT = schedule.sigma_at(T);
    const DiagonalGaussian p_T = endpoint_prior(basis, schedule);
    const DiagonalGaussian q_T(aT * s_vec, Eigen::ArrayXd::Constant(M, sT * sT));
    const double prior_kl_bits = kl_divergence_nats(q_T, p_T) * kLog2E;

    RccChannel channel{&p_T, &q_T, gaussian_wmin(p_T, q_T), key,
                       static_cast<std::uint64_t>(T)};
    TransmissionRecord rec = rcc_encode(channel, prior_kl_bits);
    serialize_index(rec.selected_index, payload_lambda(prior_term_expected_kl_bits(basis, schedule)),
                    writer);
    Eigen::ArrayXd z = p_T.sample(key, static_cast<std::uint64_t>(T), rec.selected_index);

    result.ledger.prior_term_bits = prior_kl_bits;
    result.ledger.first_step = T - 1;
    packer.add(prior_kl_bits, "the corruption endpoint");

    // Refinement: s = T-1 down to t_stop, each conditional sample sent by
    // reverse channel coding against the model prior.
    for (int s = T - 1; s >= t_stop; --s) {
        const StepGeometry g = step_geometry(schedule, s);
        const DiagonalGaussian prior = step_prior(basis, schedule, s, z);
        const DiagonalGaussian target(g.c1 * z + g.c2 * s_vec,
                                      Eigen::ArrayXd::Constant(M, g.tau2));
        const double kl_bits = kl_divergence_nats(target, prior) * kLog2E;

        RccChannel step_channel{&prior, &target, gaussian_wmin(prior, target), key,
                                static_cast<std::uint64_t>(s)};
        rec = rcc_encode(step_channel, kl_bits);
        serialize_index(rec.selected_index,
                        payload_lambda(step_expected_kl_bits(prior, g.tau2)), writer);
        z = prior.sample(key, static_cast<std::uint64_t>(s), rec.selected_index);

        result.ledger.per_step_kl_bits.push_back(kl_bits);
        packer.add(kl_bits, "step " + std::to_string(s));
    }

    result.ledger.bound_bits = packer.finish();
    result.bitstream.payload = writer.bytes();
    result.z_stop = source.from_mixture_basis(z);
    return result;
}

Eigen::ArrayXd decode_to_z(const Bitstream& bitstream, const AnalyticSource& source,
                           const DiffusionSchedule& schedule) {
    schedule.validate();
    if (bitstream.version != 1) throw FormatError("unsupported container version");
    if (bitstream.schedule_preset != static_cast<std::uint8_t>(schedule.preset) ||
        bitstream.steps != static_cast<std::uint16_t>(schedule.steps()))
        throw FormatError("schedule descriptor mismatch");
    if (bitstream.source_hash != source_schedule_hash(source, schedule))
        throw FormatError("source descriptor mismatch");
    const int T = schedule.steps();
    const int t_stop = bitstream.stop_step;
    if (t_stop < 1 || t_stop > T) throw FormatError("stop step outside schedule");

    const AnalyticSource basis = source.without_rotation();
    const StreamKey& key = bitstream.stream_key;
    BitReader reader(bitstream.payload, bitstream.payload.size() * 8);

    const DiagonalGaussian p_T = endpoint_prior(basis, schedule);
    std::uint64_t index = deserialize_index(
        payload_lambda(prior_term_expected_kl_bits(basis, schedule)), reader);
    Eigen::ArrayXd z = rcc_decode(index, p_T, key, static_cast<std::uint64_t>(T));

    for (int s = T - 1; s >= t_stop; --s) {
        const StepGeometry g = step_geometry(schedule, s);
        const DiagonalGaussian prior = step_prior(basis, schedule, s, z);
        index = deserialize_index(payload_lambda(step_expected_kl_bits(prior, g.tau2)), reader);
        z = rcc_decode(index, prior, key, static_cast<std::uint64_t>(s));
    }
    return source.from_mixture_basis(z);
}

Eigen::ArrayXd reconstruct_ancestral(const Eigen::ArrayXd& z, double sigma,
                                     const AnalyticSource& source, const StreamKey& key,
                                     std::uint64_t stream_id, std::uint64_t item) {
    return source.posterior_sample(DiagChannel::vp(sigma, source.dim()), z, key, stream_id,
                                   item);
}

Eigen::ArrayXd reconstruct_ancestral(const Eigen::ArrayXd& z, const DiffusionSchedule& schedule,
                                     int t, const AnalyticSource& source, const StreamKey& key,
                                     std::uint64_t stream_id, std::uint64_t item) {
    return reconstruct_ancestral(z, schedule.sigma_at(t), source, key, stream_id, item);
}

Eigen::ArrayXd reconstruct_flow(const Eigen::ArrayXd& z, double sigma,
                                const AnalyticSource& source, int ode_steps) {
    if (ode_steps < 1) throw std::invalid_argument("reconstruct_flow: need ode_steps >= 1");
    if (!(sigma > 0.0) || !(sigma < 1.0))
        throw std::domain_error("reconstruct_flow: sigma must lie in (0,1)");
    const Eigen::Index M = source.dim();
    const double eta0 = sigma / std::sqrt(1.0 - sigma * sigma);

    // dy/deta = -eta * score(y; eta) in the variance-exploding view; the
    // drift vanishes at eta = 0, which is what keeps the endpoint tame.
    const auto drift = [&](double eta, const Eigen::ArrayXd& y) -> Eigen::ArrayXd {
        DiagChannel ch;
        ch.signal = Eigen::ArrayXd::Ones(M);
        ch.noise_var = Eigen::ArrayXd::Constant(M, eta * eta);
        Eigen::ArrayXd g = source.corrupted_score(ch, y);
        if (!g.allFinite())
            throw std::runtime_error("reconstruct_flow: non-finite score at eta=" +
                                     format_sig(eta) + ", |y|=" +
                                     format_sig(std::sqrt(y.square().sum())));
        return (-eta) * g;
    };

    Eigen::ArrayXd y = z / std::sqrt(1.0 - sigma * sigma);
    const double h = -eta0 / static_cast<double>(ode_steps);
    double eta = eta0;
    for (int k = 0; k < ode_steps; ++k) {
        const Eigen::ArrayXd k1 = drift(eta, y);
        const Eigen::ArrayXd k2 = drift(eta + 0.5 * h, y + 0.5 * h * k1);
        const Eigen::ArrayXd k3 = drift(eta + 0.5 * h, y + 0.5 * h * k2);
        const Eigen::ArrayXd k4 = drift(eta + h, y + h * k3);
        y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        eta += h;
    }
    return y;
}

Eigen::ArrayXd reconstruct_flow(const Eigen::ArrayXd& z, const DiffusionSchedule& schedule,
                                int t, const AnalyticSource& source, int ode_steps) {
    return reconstruct_flow(z, schedule.sigma_at(t), source, ode_steps);
}

double reconstruct_flow1(double z, double sigma, const AnalyticSource& source, int ode_steps) {
    if (source.dim() != 1) throw std::logic_error("reconstruct_flow1: 1-D sources only");
    if (ode_steps < 1) throw std::invalid_argument("reconstruct_flow1: need ode_steps >= 1");
    if (!(sigma > 0.0) || !(sigma < 1.0))
        throw std::domain_error("reconstruct_flow1: sigma must lie in (0,1)");
    const double eta0 = sigma / std::sqrt(1.0 - sigma * sigma);
    const auto drift = [&](double eta, double y) {
        return -eta * source.corrupted_score1(1.0, eta * eta, y);
    };
    double y = z / std::sqrt(1.0 - sigma * sigma);
    const double h = -eta0 / static_cast<double>(ode_steps);
    double eta = eta0;
    for (int k = 0; k < ode_steps; ++k) {
        const double k1 = drift(eta, y);
        const double k2 = drift(eta + 0.5 * h, y + 0.5 * h * k1);
        const double k3 = drift(eta + 0.5 * h, y + 0.5 * h * k2);
        const double k4 = drift(eta + h, y + h * k3);
        y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        eta += h;
    }
    return y;
}

double chunk_overhead(double total_kl_bits, double chunk_bits) {
    if (!(chunk_bits > 0.0)) throw std::domain_error("chunk_overhead: chunk size must be positive");
    if (!(total_kl_bits >= 0.0)) throw std::domain_error("chunk_overhead: negative information");
    return (total_kl_bits / chunk_bits) * (chunk_bits + std::log2(chunk_bits + 1.0) + 5.0);
}

Eigen::ArrayXd ScoreModel::score(const Eigen::ArrayXd& z, int t) const {
    return source->corrupted_score(DiagChannel::vp(schedule->sigma_at(t), source->dim()), z);
}

Eigen::ArrayXd ScoreModel::posterior_mean(const Eigen::ArrayXd& z, int t) const {
    return source->posterior_mean(DiagChannel::vp(schedule->sigma_at(t), source->dim()), z);
}

}  // namespace diffc
