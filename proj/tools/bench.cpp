// Serial vs OpenMP kernel comparison: per-event regression fits and batch
// row prediction. Run with --benchmark_filter=... to narrow.

#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "lutpower/evaluate.hpp"
#include "lutpower/model.hpp"
#include "lutpower/rng.hpp"
#include "lutpower/stats.hpp"
#include "lutpower/trace.hpp"

namespace {

using namespace lutpower;

struct FitData {
    std::vector<std::vector<double>> series;
    std::vector<double> power;
    std::vector<SeriesRef> refs;

    FitData(std::size_t events, std::size_t samples) {
        Rng rng(7);
        power.resize(samples);
        for (double& v : power) v = rng.uniform(5.0, 30.0);
        series.resize(events);
        for (std::size_t e = 0; e < events; ++e) {
            series[e].resize(samples);
            const double mix = rng.uniform01();
            for (std::size_t i = 0; i < samples; ++i) {
                series[e][i] = mix * power[i] + (1.0 - mix) * rng.uniform(0.0, 30.0);
            }
        }
        for (std::size_t e = 0; e < events; ++e) {
            refs.push_back(SeriesRef{"ev" + std::to_string(e), series[e], power});
        }
    }
};

void BM_FitEventsSerial(benchmark::State& state) {
    const FitData data(static_cast<std::size_t>(state.range(0)),
                       static_cast<std::size_t>(state.range(1)));
    for (auto _ : state) {
        BatchFitResult r = fit_series_serial(data.refs);
        benchmark::DoNotOptimize(r.fits.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_FitEventsParallel(benchmark::State& state) {
    const FitData data(static_cast<std::size_t>(state.range(0)),
                       static_cast<std::size_t>(state.range(1)));
    for (auto _ : state) {
        BatchFitResult r = fit_series_parallel(data.refs);
        benchmark::DoNotOptimize(r.fits.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

struct PredictData {
    ModelLut lut;
    MergedTrace trace;

    explicit PredictData(std::size_t rows) {
        Rng rng(11);
        CpuModel m;
        m.frequency_hz = 1190000000;
        m.base = 4.0;
        m.gate_weights.assign(8, 0.7);
        for (int j = 0; j < 3; ++j) m.counters.push_back("ev" + std::to_string(j));
        m.activity_weights.assign(24, 0.0);
        for (double& w : m.activity_weights) w = rng.uniform(0.0, 0.05);
        lut.cpu.emplace(m.frequency_hz, m);

        trace.subsystem = Subsystem::Cpu;
        trace.frequency_hz = m.frequency_hz;
        trace.core_count = 8;
        trace.events = m.counters;
        trace.event_pass.assign(3, 0);
        trace.rows = rows;
        trace.rates.resize(rows * trace.stride());
        for (double& v : trace.rates) v = rng.uniform(0.0, 300.0);
        trace.gating.resize(rows * 8);
        for (double& v : trace.gating) v = rng.uniform01();
        trace.power.assign(rows, 0.0);
        trace.duration.assign(rows, 0.1);
        trace.pass_power[0] = trace.power;
    }
};

void BM_PredictRowsSerial(benchmark::State& state) {
    const PredictData data(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        std::vector<double> est = predict_rows_serial(data.lut, data.trace);
        benchmark::DoNotOptimize(est.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_PredictRowsParallel(benchmark::State& state) {
    const PredictData data(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        std::vector<double> est = predict_rows_parallel(data.lut, data.trace);
        benchmark::DoNotOptimize(est.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_SinglePrediction(benchmark::State& state) {
    const PredictData data(64);
    const SystemPredictor predictor(&data.lut.cpu.begin()->second, nullptr);
    const std::size_t stride = data.trace.stride();
    std::size_t r = 0;
    for (auto _ : state) {
        const SystemPower p = predictor.evaluate(data.trace.gating.data() + r * 8,
                                                 data.trace.rates.data() + r * stride, nullptr);
        benchmark::DoNotOptimize(p.total_w);
        r = (r + 1) % 64;
    }
}

}  // namespace

BENCHMARK(BM_FitEventsSerial)->Args({32, 2048})->Args({128, 8192});
BENCHMARK(BM_FitEventsParallel)->Args({32, 2048})->Args({128, 8192});
BENCHMARK(BM_PredictRowsSerial)->Arg(4096)->Arg(65536);
BENCHMARK(BM_PredictRowsParallel)->Arg(4096)->Arg(65536);
BENCHMARK(BM_SinglePrediction);

BENCHMARK_MAIN();
