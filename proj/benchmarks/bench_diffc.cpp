#include <benchmark/benchmark.h>

#include <cmath>

#include "diffc/codec.hpp"
#include "diffc/density.hpp"
#include "diffc/gaussian_rd.hpp"
#include "diffc/rcc.hpp"
#include "diffc/spectrum.hpp"
#include "diffc/zipf_codec.hpp"

namespace {

using namespace diffc;

Spectrum power_law(int m) {
    Spectrum s;
    for (int i = 1; i <= m; ++i) s.lambdas.push_back(std::pow(i, -2.0));
    return s;
}

void BM_Waterfill(benchmark::State& state) {
    const Spectrum spec = power_law(static_cast<int>(state.range(0)));
    const double d = 0.3 * spec.total();
    for (auto _ : state) benchmark::DoNotOptimize(waterfill(spec, d));
}
BENCHMARK(BM_Waterfill)->Arg(256)->Arg(4096);

void BM_CurveSweep(benchmark::State& state) {
    const Spectrum spec = power_law(256);
    const auto grid = log_grid(1e-3, 0.999, 64);
    for (auto _ : state) benchmark::DoNotOptimize(sweep_curve(spec, Variant::diffc_f, grid));
}
BENCHMARK(BM_CurveSweep);

void BM_RccEncode(benchmark::State& state) {
    const double kl_bits = static_cast<double>(state.range(0));
    const double var = 0.25;
    const double mu =
        std::sqrt(2.0 * kl_bits / 1.4426950408889634 - var + 1.0 + std::log(var));
    Eigen::ArrayXd m0(1), v0(1), mq(1), vq(1);
    m0 << 0.0;
    v0 << 1.0;
    mq << mu;
    vq << var;
    const DiagonalGaussian prior(m0, v0), target(mq, vq);
    const double w = gaussian_wmin(prior, target);
    const StreamKey key = StreamKey::from_seed(1);
    std::uint64_t step = 0;
    for (auto _ : state) {
        RccChannel ch{&prior, &target, w, key, step++};
        benchmark::DoNotOptimize(rcc_encode(ch, kl_bits));
    }
}
BENCHMARK(BM_RccEncode)->Arg(1)->Arg(3)->Arg(5);

void BM_ZipfSerialize(benchmark::State& state) {
    const double lambda = 1.1;
    const std::uint64_t n = static_cast<std::uint64_t>(state.range(0));
    for (auto _ : state) {
        BitWriter w;
        serialize_index(n, lambda, w);
        benchmark::DoNotOptimize(w.bytes());
    }
}
BENCHMARK(BM_ZipfSerialize)->Arg(3)->Arg(100000)->Arg(1ll << 40);

void BM_ZipfRoundTrip(benchmark::State& state) {
    const double lambda = 1.1;
    const std::uint64_t n = static_cast<std::uint64_t>(state.range(0));
    for (auto _ : state) {
        BitWriter w;
        serialize_index(n, lambda, w);
        BitReader r(w.bytes(), w.bit_size());
        benchmark::DoNotOptimize(deserialize_index(lambda, r));
    }
}
BENCHMARK(BM_ZipfRoundTrip)->Arg(3)->Arg(100000);

void BM_CodecEncode(benchmark::State& state) {
    const AnalyticSource src = AnalyticSource::gmm1d({0.5, 0.5}, {-2.0, 2.0}, {0.25, 0.25});
    const DiffusionSchedule sch = DiffusionSchedule::cosine(static_cast<int>(state.range(0)));
    const StreamKey key = StreamKey::from_seed(2);
    std::uint64_t i = 0;
    for (auto _ : state) {
        const Eigen::ArrayXd x = src.sample(key, 1, i);
        benchmark::DoNotOptimize(
            encode(x, src, sch, sch.steps() / 3, 64, StreamKey::from_seed(100 + i)));
        ++i;
    }
}
BENCHMARK(BM_CodecEncode)->Arg(50)->Arg(100);

void BM_FlowReconstruction(benchmark::State& state) {
    const AnalyticSource src = AnalyticSource::gmm1d({0.5, 0.5}, {-2.0, 2.0}, {0.25, 0.25});
    for (auto _ : state)
        benchmark::DoNotOptimize(
            reconstruct_flow1(0.8, 0.5, src, static_cast<int>(state.range(0))));
}
BENCHMARK(BM_FlowReconstruction)->Arg(64)->Arg(256);

}  // namespace

BENCHMARK_MAIN();
