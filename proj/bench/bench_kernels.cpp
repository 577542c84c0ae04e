// Serial reference vs OpenMP kernels, plus per-clip embedding and batch generation.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "swg/gan.hpp"
#include "swg/kernels.hpp"
#include "swg/metrics.hpp"
#include "swg/train.hpp"

namespace {

std::vector<double> noise(std::size_t n, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> d;
    std::vector<double> v(n);
    for (auto& x : v) x = d(rng);
    return v;
}

swg::kernels::ConvShape conv_shape(const benchmark::State& st) {
    const auto ch = static_cast<std::size_t>(st.range(0));
    return {ch, ch, 9, static_cast<std::size_t>(st.range(1))};
}

template <bool Parallel>
void BM_ConvForward(benchmark::State& st) {
    const auto s = conv_shape(st);
    const auto x = noise(s.in_ch * s.len, 1), w = noise(s.out_ch * s.in_ch * s.taps, 2), b = noise(s.out_ch, 3);
    std::vector<double> y(s.out_ch * s.len);
    for (auto _ : st) {
        if constexpr (Parallel)
            swg::kernels::omp::conv1d_forward(s, x, w, b, y);
        else
            swg::kernels::serial::conv1d_forward(s, x, w, b, y);
        benchmark::DoNotOptimize(y.data());
    }
    st.SetItemsProcessed(st.iterations() * static_cast<long>(s.out_ch * s.in_ch * s.taps * s.len));
}

template <bool Parallel>
void BM_ConvBackwardParams(benchmark::State& st) {
    const auto s = conv_shape(st);
    const auto gy = noise(s.out_ch * s.len, 1), x = noise(s.in_ch * s.len, 2);
    std::vector<double> gw(s.out_ch * s.in_ch * s.taps), gb(s.out_ch);
    for (auto _ : st) {
        if constexpr (Parallel)
            swg::kernels::omp::conv1d_backward_params(s, gy, x, gw, gb);
        else
            swg::kernels::serial::conv1d_backward_params(s, gy, x, gw, gb);
        benchmark::DoNotOptimize(gw.data());
    }
    st.SetItemsProcessed(st.iterations() * static_cast<long>(s.out_ch * s.in_ch * s.taps * s.len));
}

template <bool Parallel>
void BM_EmbedClips(benchmark::State& st) {
    std::vector<swg::AudioClip> clips;
    for (int i = 0; i < st.range(0); ++i) clips.push_back({noise(4096, 10 + i), 16000});
    for (auto _ : st) {
        auto e = Parallel ? swg::kernels::omp::embed_clips(clips, {}) : swg::kernels::serial::embed_clips(clips, {});
        benchmark::DoNotOptimize(e.data.data());
    }
    st.SetItemsProcessed(st.iterations() * st.range(0));
}

template <bool Parallel>
void BM_GenerateBatch(benchmark::State& st) {
    swg::ModelConfig cfg;
    cfg.use_envelope = false;
    swg::Checkpoint ck;
    ck.model = cfg;
    ck.generator = swg::Generator(cfg, 1);
    ck.discriminator = swg::Discriminator(cfg, 2);
    std::vector<swg::ConditionVector> conds(static_cast<std::size_t>(st.range(0)));
    for (auto _ : st) {
        auto r = swg::generate_batch(ck, conds, 7, Parallel);
        benchmark::DoNotOptimize(r.clips.data());
    }
    st.SetItemsProcessed(st.iterations() * st.range(0));
}

}  // namespace

BENCHMARK(BM_ConvForward<false>)->Args({16, 4096})->Args({64, 256})->Args({64, 1024});
BENCHMARK(BM_ConvForward<true>)->Args({16, 4096})->Args({64, 256})->Args({64, 1024});
BENCHMARK(BM_ConvBackwardParams<false>)->Args({16, 4096})->Args({64, 1024});
BENCHMARK(BM_ConvBackwardParams<true>)->Args({16, 4096})->Args({64, 1024});
BENCHMARK(BM_EmbedClips<false>)->Arg(32);
BENCHMARK(BM_EmbedClips<true>)->Arg(32);
BENCHMARK(BM_GenerateBatch<false>)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GenerateBatch<true>)->Arg(8)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
