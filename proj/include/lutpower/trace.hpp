#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "lutpower/counters.hpp"

namespace lutpower {

// One sampling window. `counts` is aligned with the owning segment's counter
// list, `cycle_counts` with its cycle-core list.
struct Sample {
    double timestamp_s = 0.0;
    double duration_s = 0.0;
    double power_w = 0.0;
    std::vector<double> counts;
    std::vector<double> cycle_counts;

    bool operator==(const Sample&) const = default;
};

// Raw time series for one (subsystem, frequency, workload, pass), as stored
// on disk: a CSV plus a .meta.json sidecar.
struct TraceSegment {
    Subsystem subsystem = Subsystem::Cpu;
    std::uint64_t frequency_hz = 0;
    std::string workload;
    int pass_id = 0;
    double nominal_period_s = 0.0;
    int core_count = 0;  // 0 for GPU traces
    std::vector<CounterId> counters;  // column order of the file, cycles excluded
    std::vector<int> cycle_cores;     // cores with a cycles column, file order
    std::vector<Sample> samples;

    bool operator==(const TraceSegment&) const = default;

    void validate() const;  // throws Error{Validation} with a row number
};

TraceSegment load_trace(const std::filesystem::path& csv_path);
void write_trace(const TraceSegment& segment, const std::filesystem::path& csv_path);

// Sidecar path for a trace CSV: same basename with ".meta.json" appended in
// place of ".csv".
std::filesystem::path meta_path_for(const std::filesystem::path& csv_path);

struct MergeStats {
    std::size_t truncated_samples = 0;  // dropped from longer passes
    std::size_t gating_clamped = 0;     // g_i values clamped into [0,1]
    std::size_t divergent_passes = 0;   // mean power off by > 10% vs reference
};

// Pass-merged, period-normalized view of one workload at one (subsystem,
// frequency). Column-major per sample: rate(row, core, event) for CPU,
// rate(row, event) for GPU. Power in `power` comes from the reference pass
// (lowest pass_id); each event keeps the power series of its own pass in
// `pass_power` for characterization.
struct MergedTrace {
    Subsystem subsystem = Subsystem::Cpu;
    std::uint64_t frequency_hz = 0;
    std::string workload;
    int core_count = 0;
    std::vector<std::string> events;  // sorted event names (per-core for CPU)
    std::size_t rows = 0;
    std::vector<double> rates;     // rows x stride, stride = events (GPU) or cores*events (CPU)
    std::vector<double> gating;    // rows x core_count (CPU), empty for GPU
    std::vector<double> power;     // reference-pass power, watts
    std::vector<double> duration;  // reference-pass sampled durations, seconds
    std::vector<int> event_pass;   // per event: pass that recorded it
    std::map<int, std::vector<double>> pass_power;
    MergeStats stats;

    std::size_t stride() const {
        return subsystem == Subsystem::Cpu ? static_cast<std::size_t>(core_count) * events.size()
                                           : events.size();
    }
    std::span<const double> row(std::size_t r) const {
        return std::span<const double>(rates.data() + r * stride(), stride());
    }
    std::span<const double> gating_row(std::size_t r) const {
        return std::span<const double>(gating.data() + r * static_cast<std::size_t>(core_count),
                                       static_cast<std::size_t>(core_count));
    }
    double rate(std::size_t r, std::size_t core, std::size_t event) const {
        return rates[r * stride() + core * events.size() + event];
    }
    double rate(std::size_t r, std::size_t event) const { return rates[r * stride() + event]; }

    std::size_t event_index(const std::string& event) const;  // throws Error{MissingKey}

    // Rate of `event` summed across cores (CPU) or the plain series (GPU);
    // the series characterization regresses against power.
    std::vector<double> event_rate_series(std::size_t event) const;
};

// g = clamp(cycles / (frequency * duration), 0, 1). Sets *clamped when the
// raw value exceeded 1 (cycle-counter read skew).
double gating_metric(double cycle_count, double duration_s, double frequency_hz,
                     bool* clamped = nullptr);

// Period normalization of a single pass (counts -> events/second).
MergedTrace normalize(const TraceSegment& segment);

// Index-aligned union of the disjoint counter sets recorded by several passes
// of the same workload. Truncates to the shortest pass.
MergedTrace merge_passes(std::span<const TraceSegment> segments);

// Row-wise concatenation of merged traces (several workloads at the same
// (subsystem, frequency)); inputs must agree on events and pass assignment.
MergedTrace concat(std::span<const MergedTrace> traces);

// Temporal prefix split: floor(rows * train_fraction) rows to train.
std::pair<MergedTrace, MergedTrace> split(const MergedTrace& trace, double train_fraction);

}  // namespace lutpower
