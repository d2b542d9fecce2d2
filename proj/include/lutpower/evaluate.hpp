#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "lutpower/characterize.hpp"
#include "lutpower/model.hpp"
#include "lutpower/oracle.hpp"
#include "lutpower/trace.hpp"

namespace lutpower {

struct MapeResult {
    double mape_pct = 0.0;
    double std_pct = 0.0;      // stddev of per-sample absolute percentage error
    std::size_t included = 0;
    std::size_t excluded = 0;  // samples with measured power below the floor
};

// Samples with meas < floor_w are excluded (sensor-resolution noise); errors
// out if nothing remains.
MapeResult mape(std::span<const double> est, std::span<const double> meas, double floor_w);

double energy_error_pct(std::span<const double> est, std::span<const double> meas,
                        std::span<const double> durations);

struct PairReport {
    std::uint64_t f_cpu_hz = 0;
    std::uint64_t f_gpu_hz = 0;
    std::size_t n = 0;
    double power_mape_pct = 0.0;
    double power_err_std_pct = 0.0;
    double energy_true_j = 0.0;
    double energy_est_j = 0.0;
    double energy_err_pct = 0.0;
    std::size_t excluded = 0;
};

struct EvaluationReport {
    std::vector<PairReport> pairs;  // ordered by (f_cpu, f_gpu)
    double mean_power_mape_pct = 0.0;
    double max_power_mape_pct = 0.0;
    double mean_energy_err_pct = 0.0;
    double max_energy_err_pct = 0.0;
    std::size_t excluded_samples = 0;
};

void finalize_aggregates(EvaluationReport& report);

// One system-level evaluation: a CPU validation trace at f_cpu paired with a
// GPU trace at f_gpu, aligned by sample index. Measured system power is the
// row-wise sum; energies integrate each subsystem over its own durations.
PairReport evaluate_pair(const ModelLut& lut, const MergedTrace& cpu_validation,
                         const MergedTrace& gpu_validation, double floor_w);

// Full grid over every CPU frequency x every GPU frequency in the LUT.
// Validation traces are keyed by frequency; pairs run in parallel.
EvaluationReport evaluate_grid(const ModelLut& lut,
                               const std::map<std::uint64_t, MergedTrace>& cpu_validation,
                               const std::map<std::uint64_t, MergedTrace>& gpu_validation,
                               double floor_w);

// Batch per-row prediction for one subsystem trace; serial and OpenMP
// backends are bit-identical.
std::vector<double> predict_rows_serial(const ModelLut& lut, const MergedTrace& trace);
std::vector<double> predict_rows_parallel(const ModelLut& lut, const MergedTrace& trace);

struct SweepPoint {
    std::size_t k = 0;
    double mean_energy_err_pct = 0.0;
};

struct SweepResult {
    std::vector<SweepPoint> curve;
    std::size_t best_k = 0;  // argmin of the curve, smallest k on ties
};

// Per-k feedback curve: select k counters from the per-frequency rankings,
// train on the train split, report mean validation energy error over all
// frequencies of the subsystem.
SweepResult sweep_predictor_count(
    const std::map<std::uint64_t, Ranking>& rankings, const CompatibilityOracle& oracle,
    std::size_t k_max, const std::map<std::uint64_t, MergedTrace>& train,
    const std::map<std::uint64_t, MergedTrace>& validation);

struct LatencyStats {
    double mean_ns = 0.0;
    double p99_ns = 0.0;
    std::size_t repetitions = 0;
};

// Wall-clock per-evaluation cost of the combined predictor over prerecorded
// rows: batched steady_clock timing, single-threaded, no allocation in the
// measured loop.
LatencyStats measure_latency(const SystemPredictor& predictor,
                             std::span<const double> gating_rows,
                             std::span<const double> cpu_rate_rows,
                             std::span<const double> gpu_rate_rows, std::size_t row_count,
                             std::size_t repetitions);

// Report emission: CSV schema
// f_cpu_hz,f_gpu_hz,n,power_mape_pct,power_err_std_pct,energy_true_j,energy_est_j,energy_err_pct,excluded
std::string report_to_csv(const EvaluationReport& report);
EvaluationReport report_from_csv(const std::string& text, const std::string& origin);
std::string report_to_table(const EvaluationReport& report);

}  // namespace lutpower
