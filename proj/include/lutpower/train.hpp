#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "lutpower/characterize.hpp"
#include "lutpower/model.hpp"
#include "lutpower/nnls.hpp"
#include "lutpower/trace.hpp"

namespace lutpower {

// Predictor layout, documented and deterministic:
//   CPU: [1, g_0..g_{C-1}, x_{0,0}..x_{0,J-1}, ..., x_{C-1,0}..x_{C-1,J-1}]
//   GPU: [1, x_0..x_{J-1}]
struct DesignMatrix {
    std::vector<std::string> column_names;
    Eigen::MatrixXd values;  // n x p, first column all ones
    Eigen::VectorXd target;  // watts
    bool underdetermined = false;  // n < p
};

DesignMatrix build_design(const MergedTrace& trace, const CounterSet& counters);

struct TrainDiagnostics {
    NnlsSolution solution;
    bool underdetermined = false;
};

CpuModel train_cpu_model(const MergedTrace& train, const CounterSet& counters,
                         TrainDiagnostics* diag = nullptr);
GpuModel train_gpu_model(const MergedTrace& train, const CounterSet& counters,
                         TrainDiagnostics* diag = nullptr);

using TrainedModel = std::variant<CpuModel, GpuModel>;
TrainedModel train_model(const MergedTrace& train, const CounterSet& counters,
                         TrainDiagnostics* diag = nullptr);

struct TrainingJob {
    std::vector<MergedTrace> traces;  // one per workload, same (subsystem, frequency)
    CounterSet counters;
    double train_fraction = 0.7;
};

// One NNLS fit per (subsystem, frequency); jobs are independent and run in
// parallel. Results do not depend on thread count or corpus ordering.
ModelLut train_lut(const std::map<CorpusKey, TrainingJob>& jobs, const std::string& platform);

// Training manifest: trace files per (subsystem, frequency), split fractions,
// and the counter-set source (path or inline sets).
struct TrainingManifest {
    std::string platform;
    std::map<CorpusKey, std::vector<std::filesystem::path>> trace_files;
    double cpu_train_fraction = 0.7;
    double gpu_train_fraction = 0.6;
    std::map<CorpusKey, CounterSet> counter_sets;
};

TrainingManifest load_manifest(const std::filesystem::path& path);

// counter_sets.json: {"cpu": {"<freq_hz>": ["ev", ...]}, "gpu": {...}}.
std::map<CorpusKey, CounterSet> load_counter_sets(const std::filesystem::path& path);
void save_counter_sets(const std::map<CorpusKey, CounterSet>& sets,
                       const std::filesystem::path& path);

}  // namespace lutpower
