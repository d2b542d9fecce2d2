#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "lutpower/model.hpp"
#include "lutpower/oracle.hpp"
#include "lutpower/trace.hpp"

namespace lutpower {

// Ground-truth description of one countable event. Rates follow a two-factor
// (compute/memory) latent model plus a per-event idiosyncratic component;
// decoys are idiosyncratic-only with zero weight.
struct EventTruth {
    std::string name;
    std::map<std::uint64_t, double> weight_per_freq;  // watts per (event/s); empty = decoy
    double scale = 100.0;          // events/s at full activity
    double compute_loading = 0.0;
    double memory_loading = 0.0;
    double idio_loading = 1.0;
    // Per-regime activity envelope; distinct profiles keep every informative
    // event individually identifiable (absent regimes default to 1).
    std::map<std::string, double> regime_gains;

    bool is_decoy() const { return weight_per_freq.empty(); }
    double regime_gain(const std::string& regime) const {
        const auto it = regime_gains.find(regime);
        return it == regime_gains.end() ? 1.0 : it->second;
    }
};

struct OracleSpec {
    std::size_t max_simultaneous = 10;
    std::vector<std::vector<std::string>> exclusive_groups;
};

struct WorkloadPhase {
    std::string regime;  // idle | compute | memory | mixed
    std::size_t samples = 0;
};

struct WorkloadSpec {
    std::string name;
    std::vector<WorkloadPhase> phases;
};

struct GatingProfile {
    double idle_duty_min = 0.05;
    double idle_duty_max = 0.25;
    double active_duty_min = 0.4;
    double active_duty_max = 1.0;
};

struct PlatformSpec {
    std::string platform = "synthetic";
    int core_count = 8;
    double nominal_period_s = 0.1;
    std::vector<std::uint64_t> cpu_frequencies_hz;
    std::vector<std::uint64_t> gpu_frequencies_hz;
    std::map<std::uint64_t, double> cpu_base_w;      // L per frequency
    std::map<std::uint64_t, double> cpu_gate_w;      // G per frequency (every core)
    std::map<std::uint64_t, double> gpu_base_w;      // K per frequency
    std::vector<EventTruth> cpu_events;              // informative events
    std::vector<EventTruth> gpu_events;
    int cpu_decoy_events = 0;
    int gpu_decoy_events = 0;
    double decoy_scale = 80.0;
    OracleSpec cpu_oracle;
    OracleSpec gpu_oracle;
    double noise_sigma = 0.01;     // fraction of mean power
    double quantization_w = 0.2;   // 0 disables
    GatingProfile gating;
    std::vector<WorkloadSpec> workloads;

    void validate() const;
};

// The 8-core, 3-CPU-frequency, 14-GPU-frequency demo platform the acceptance
// scenarios run on (8 informative GPU events + 20 decoys).
PlatformSpec default_platform_spec();

PlatformSpec load_platform_spec(const std::filesystem::path& path);
void save_platform_spec(const PlatformSpec& spec, const std::filesystem::path& path);

struct GroundTruth {
    ModelLut lut;               // exact generating model (informative events only)
    std::uint64_t seed = 0;
    std::map<std::string, std::uint64_t> trace_seeds;  // per generated file stem
};

struct GenerateResult {
    GroundTruth truth;
    std::vector<std::filesystem::path> files;  // CSVs, sorted
};

// Emits the corpus under <out_root>/<subsystem>/<freq_hz>/<workload>_pass<k>.csv
// (+ sidecars) and the generating model. Deterministic given (spec, seed).
GenerateResult generate_corpus(const PlatformSpec& spec, std::uint64_t seed,
                               const std::filesystem::path& out_root);

struct OracleCheckEntry {
    Subsystem subsystem = Subsystem::Cpu;
    std::uint64_t frequency_hz = 0;
    double energy_err_pct = 0.0;       // trained vs true model on the validation rows
    bool support_match = false;        // trained counters == truth counters
    double max_weight_abs_diff = 0.0;  // over base + matching counters
};

struct OracleCheckReport {
    std::vector<OracleCheckEntry> entries;
    double max_energy_err_pct = 0.0;
};

OracleCheckReport oracle_check(const ModelLut& truth, const ModelLut& trained,
                               const std::map<CorpusKey, MergedTrace>& validation);

}  // namespace lutpower
