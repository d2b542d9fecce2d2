#include <doctest.h>

#include <fstream>

#include "lutpower/csv.hpp"
#include "lutpower/rng.hpp"
#include "lutpower/train.hpp"
#include "support.hpp"

using namespace lutpower;
using testsupport::TempDir;

namespace {

// CPU merged trace generated from known nonnegative weights, zero noise.
struct CpuFixture {
    MergedTrace trace;
    CpuModel truth;
};

CpuFixture cpu_fixture(std::uint64_t seed, int cores, std::size_t rows,
                       const std::vector<double>& event_weights, double base, double gate_w) {
    Rng rng(seed);
    CpuFixture fx;
    MergedTrace& t = fx.trace;
    t.subsystem = Subsystem::Cpu;
    t.frequency_hz = 1190000000;
    t.workload = "fx";
    t.core_count = cores;
    for (std::size_t j = 0; j < event_weights.size(); ++j) {
        t.events.push_back("ev" + std::to_string(j));
    }
    t.event_pass.assign(t.events.size(), 0);
    t.rows = rows;
    t.rates.resize(rows * t.stride());
    t.gating.resize(rows * cores);
    t.power.resize(rows);
    t.duration.assign(rows, 0.1);

    CpuModel& m = fx.truth;
    m.frequency_hz = t.frequency_hz;
    m.base = base;
    m.gate_weights.assign(cores, gate_w);
    m.counters = t.events;
    for (int i = 0; i < cores; ++i) {
        for (double w : event_weights) m.activity_weights.push_back(w);
    }

    for (std::size_t r = 0; r < rows; ++r) {
        for (int i = 0; i < cores; ++i) {
            t.gating[r * cores + i] = rng.uniform01();
            for (std::size_t j = 0; j < t.events.size(); ++j) {
                t.rates[r * t.stride() + i * t.events.size() + j] = rng.uniform(0.0, 200.0);
            }
        }
        t.power[r] = predict_cpu(m, t.gating_row(r), t.row(r));
    }
    t.pass_power[0] = t.power;
    return fx;
}

MergedTrace gpu_trace_from(std::uint64_t seed, const GpuModel& truth, std::size_t rows) {
    Rng rng(seed);
    MergedTrace t;
    t.subsystem = Subsystem::Gpu;
    t.frequency_hz = truth.frequency_hz;
    t.workload = "fx";
    t.events = truth.counters;
    std::sort(t.events.begin(), t.events.end());
    t.event_pass.assign(t.events.size(), 0);
    t.rows = rows;
    t.rates.resize(rows * t.events.size());
    t.power.resize(rows);
    t.duration.assign(rows, 0.1);
    std::vector<double> row(truth.counters.size());
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t j = 0; j < t.events.size(); ++j) {
            t.rates[r * t.events.size() + j] = rng.uniform(0.0, 300.0);
        }
        for (std::size_t j = 0; j < truth.counters.size(); ++j) {
            row[j] = t.rates[r * t.events.size() + t.event_index(truth.counters[j])];
        }
        t.power[r] = predict_gpu(truth, row);
    }
    t.pass_power[0] = t.power;
    return t;
}

}  // namespace

TEST_CASE("design matrix layout: cpu 1 + C + C*J columns, gpu 1 + J") {
    const CpuFixture fx = cpu_fixture(1, 8, 50, {0.01, 0.02, 0.03}, 4.0, 0.7);
    CounterSet cpu_set{Subsystem::Cpu, fx.trace.frequency_hz, fx.trace.events};
    const DesignMatrix cpu_design = build_design(fx.trace, cpu_set);
    CHECK(cpu_design.values.cols() == 1 + 8 + 24);
    CHECK(cpu_design.values.rows() == 50);
    CHECK(cpu_design.column_names[0] == "const");
    CHECK(cpu_design.column_names[1] == "g.c0");
    CHECK(cpu_design.column_names[9] == "cpu.c0.ev0");
    CHECK((cpu_design.values.col(0).array() == 1.0).all());

    GpuModel gm;
    gm.frequency_hz = 829000000;
    gm.base = 2.0;
    for (int j = 0; j < 8; ++j) {
        gm.counters.push_back("g" + std::to_string(j));
        gm.weights.push_back(0.01);
    }
    const MergedTrace gt = gpu_trace_from(2, gm, 40);
    CounterSet gpu_set{Subsystem::Gpu, gm.frequency_hz, gm.counters};
    const DesignMatrix gpu_design = build_design(gt, gpu_set);
    CHECK(gpu_design.values.cols() == 9);

    // empty counter set degenerates to constant + gating
    CounterSet empty_set{Subsystem::Cpu, fx.trace.frequency_hz, {}};
    const DesignMatrix degenerate = build_design(fx.trace, empty_set);
    CHECK(degenerate.values.cols() == 1 + 8);
}

TEST_CASE("missing counters and absent gating are rejected") {
    const CpuFixture fx = cpu_fixture(3, 2, 30, {0.01}, 4.0, 0.7);
    CounterSet bad{Subsystem::Cpu, fx.trace.frequency_hz, {"nope"}};
    try {
        build_design(fx.trace, bad);
        FAIL("expected MissingKey");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::MissingKey);
        CHECK(std::string(e.what()).find("nope") != std::string::npos);
    }

    MergedTrace no_gating = fx.trace;
    no_gating.gating.clear();
    CounterSet good{Subsystem::Cpu, fx.trace.frequency_hz, fx.trace.events};
    CHECK_THROWS_AS(build_design(no_gating, good), Error);
}

TEST_CASE("zero-noise training recovers the generating weights") {
    const CpuFixture fx = cpu_fixture(5, 4, 400, {0.012, 0.03, 0.007}, 4.5, 0.8);
    CounterSet set{Subsystem::Cpu, fx.trace.frequency_hz, fx.trace.events};
    TrainDiagnostics diag;
    const CpuModel m = train_cpu_model(fx.trace, set, &diag);

    CHECK(diag.solution.converged);
    CHECK(std::abs(m.base - fx.truth.base) / fx.truth.base < 1e-6);
    for (int i = 0; i < 4; ++i) {
        CHECK(std::abs(m.gate_weights[i] - fx.truth.gate_weights[i]) /
                  fx.truth.gate_weights[i] <
              1e-6);
    }
    for (std::size_t i = 0; i < m.activity_weights.size(); ++i) {
        CHECK(std::abs(m.activity_weights[i] - fx.truth.activity_weights[i]) /
                  fx.truth.activity_weights[i] <
              1e-6);
    }

    GpuModel gm;
    gm.frequency_hz = 829000000;
    gm.base = 2.5;
    for (int j = 0; j < 5; ++j) {
        gm.counters.push_back("g" + std::to_string(j));
        gm.weights.push_back(0.004 * (j + 1));
    }
    const MergedTrace gt = gpu_trace_from(6, gm, 300);
    CounterSet gpu_set{Subsystem::Gpu, gm.frequency_hz, gm.counters};
    const GpuModel trained = train_gpu_model(gt, gpu_set);
    CHECK(std::abs(trained.base - gm.base) / gm.base < 1e-6);
    for (std::size_t j = 0; j < gm.weights.size(); ++j) {
        CHECK(std::abs(trained.weights[j] - gm.weights[j]) / gm.weights[j] < 1e-6);
    }
}

TEST_CASE("constant power fits into the base term") {
    CpuFixture fx = cpu_fixture(7, 2, 200, {0.01, 0.02}, 4.0, 0.5);
    std::fill(fx.trace.power.begin(), fx.trace.power.end(), 6.25);
    fx.trace.pass_power[0] = fx.trace.power;
    CounterSet set{Subsystem::Cpu, fx.trace.frequency_hz, fx.trace.events};
    const CpuModel m = train_cpu_model(fx.trace, set);
    CHECK(m.base == doctest::Approx(6.25).epsilon(1e-9));
    for (double g : m.gate_weights) CHECK(g == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
    for (double a : m.activity_weights) CHECK(a == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
}

TEST_CASE("duplicated predictors keep the single-column residual") {
    GpuModel gm;
    gm.frequency_hz = 829000000;
    gm.base = 2.0;
    gm.counters = {"a"};
    gm.weights = {0.01};
    MergedTrace t = gpu_trace_from(8, gm, 120);

    // clone event a into twin b
    MergedTrace twins = t;
    twins.events = {"a", "b"};
    twins.event_pass = {0, 0};
    twins.rates.resize(t.rows * 2);
    for (std::size_t r = 0; r < t.rows; ++r) {
        twins.rates[r * 2] = t.rates[r];
        twins.rates[r * 2 + 1] = t.rates[r];
    }
    // add measurement noise so the fit is not exact
    Rng rng(9);
    for (std::size_t r = 0; r < twins.rows; ++r) {
        twins.power[r] += rng.normal(0.05);
        if (twins.power[r] < 0) twins.power[r] = 0;
    }
    twins.pass_power[0] = twins.power;

    MergedTrace single = twins;
    single.events = {"a"};
    single.event_pass = {0};
    single.rates.resize(t.rows);
    for (std::size_t r = 0; r < t.rows; ++r) single.rates[r] = twins.rates[r * 2];

    TrainDiagnostics d_single, d_twins;
    CounterSet set1{Subsystem::Gpu, gm.frequency_hz, {"a"}};
    CounterSet set2{Subsystem::Gpu, gm.frequency_hz, {"a", "b"}};
    train_gpu_model(single, set1, &d_single);
    const GpuModel m = train_gpu_model(twins, set2, &d_twins);

    CHECK(d_twins.solution.converged);
    for (double w : m.weights) CHECK(w >= 0.0);
    CHECK(d_twins.solution.residual_norm ==
          doctest::Approx(d_single.solution.residual_norm).epsilon(1e-9));
}

TEST_CASE("train_lut covers every job and ignores corpus ordering") {
    const CpuFixture fx1 = cpu_fixture(11, 2, 60, {0.01, 0.02}, 4.0, 0.5);
    CpuFixture fx2 = cpu_fixture(12, 2, 60, {0.015, 0.025}, 5.0, 0.6);
    fx2.trace.frequency_hz = 730000000;

    GpuModel gm;
    gm.frequency_hz = 829000000;
    gm.base = 2.0;
    gm.counters = {"a", "b"};
    gm.weights = {0.01, 0.02};
    const MergedTrace gt = gpu_trace_from(13, gm, 80);

    auto make_jobs = [&](bool swap_traces) {
        std::map<CorpusKey, TrainingJob> jobs;
        MergedTrace w1 = fx1.trace;
        w1.workload = "alpha";
        MergedTrace w2 = fx1.trace;
        w2.workload = "beta";
        TrainingJob job1;
        job1.traces = swap_traces ? std::vector<MergedTrace>{w2, w1}
                                  : std::vector<MergedTrace>{w1, w2};
        job1.counters = CounterSet{Subsystem::Cpu, fx1.trace.frequency_hz, fx1.trace.events};
        job1.train_fraction = 0.7;
        jobs.emplace(CorpusKey{Subsystem::Cpu, fx1.trace.frequency_hz}, job1);

        TrainingJob job2;
        job2.traces = {fx2.trace};
        job2.counters = CounterSet{Subsystem::Cpu, fx2.trace.frequency_hz, fx2.trace.events};
        job2.train_fraction = 0.7;
        jobs.emplace(CorpusKey{Subsystem::Cpu, fx2.trace.frequency_hz}, job2);

        TrainingJob job3;
        job3.traces = {gt};
        job3.counters = CounterSet{Subsystem::Gpu, gm.frequency_hz, gm.counters};
        job3.train_fraction = 0.6;
        jobs.emplace(CorpusKey{Subsystem::Gpu, gm.frequency_hz}, job3);
        return jobs;
    };

    const ModelLut lut_a = train_lut(make_jobs(false), "demo");
    const ModelLut lut_b = train_lut(make_jobs(true), "demo");
    CHECK(lut_a.cpu.size() == 2);
    CHECK(lut_a.gpu.size() == 1);
    CHECK(lut_a == lut_b);  // permutation invariance, bit for bit

    const ModelLut lut_c = train_lut(make_jobs(false), "demo");
    CHECK(lut_a == lut_c);  // determinism
}

TEST_CASE("counter set files round trip") {
    TempDir tmp("train");
    std::map<CorpusKey, CounterSet> sets;
    sets[{Subsystem::Cpu, 730000000}] =
        CounterSet{Subsystem::Cpu, 730000000, {"instr", "fp", "l1d"}};
    sets[{Subsystem::Gpu, 829000000}] = CounterSet{Subsystem::Gpu, 829000000, {"sm", "l2"}};
    const auto path = tmp.path() / "counter_sets.json";
    save_counter_sets(sets, path);
    const auto back = load_counter_sets(path);
    CHECK(back.size() == 2);
    CHECK(back.at({Subsystem::Cpu, 730000000}).counters ==
          std::vector<std::string>{"instr", "fp", "l1d"});
    CHECK(back.at({Subsystem::Gpu, 829000000}).counters == std::vector<std::string>{"sm", "l2"});
}

TEST_CASE("manifest parsing resolves paths and fractions") {
    TempDir tmp("train");
    const auto counters = tmp.path() / "sets.json";
    std::map<CorpusKey, CounterSet> sets;
    sets[{Subsystem::Gpu, 829000000}] = CounterSet{Subsystem::Gpu, 829000000, {"a"}};
    save_counter_sets(sets, counters);

    const auto manifest_path = tmp.path() / "manifest.json";
    std::ofstream(manifest_path) << R"({
      "platform": "demo",
      "traces": {"gpu": {"829000000": ["traces/w_pass0.csv"]}},
      "train_fraction": {"cpu": 0.7, "gpu": 0.65},
      "counters": "sets.json"
    })";

    const TrainingManifest m = load_manifest(manifest_path);
    CHECK(m.platform == "demo");
    CHECK(m.gpu_train_fraction == 0.65);
    CHECK(m.cpu_train_fraction == 0.7);
    REQUIRE(m.trace_files.size() == 1);
    const auto& files = m.trace_files.at({Subsystem::Gpu, 829000000});
    REQUIRE(files.size() == 1);
    CHECK(files[0] == tmp.path() / "traces/w_pass0.csv");
    CHECK(m.counter_sets.at({Subsystem::Gpu, 829000000}).counters ==
          std::vector<std::string>{"a"});
}

TEST_CASE("underdetermined systems are flagged, not fatal") {
    const CpuFixture fx = cpu_fixture(21, 8, 20, {0.01, 0.02, 0.03}, 4.0, 0.7);  // p=33 > n=20
    CounterSet set{Subsystem::Cpu, fx.trace.frequency_hz, fx.trace.events};
    TrainDiagnostics diag;
    const CpuModel m = train_cpu_model(fx.trace, set, &diag);
    CHECK(diag.underdetermined);
    CHECK(m.base >= 0.0);
}
