#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lutpower/characterize.hpp"
#include "lutpower/counters.hpp"

namespace lutpower {

// P = base + sum_i (g_i * gate_weights_i + sum_j rate_ij * activity_weights_ij).
// All weights nonnegative (NNLS); activity weights are core-major.
struct CpuModel {
    std::uint64_t frequency_hz = 0;
    double base = 0.0;                      // watts
    std::vector<double> gate_weights;       // per core
    std::vector<double> activity_weights;   // core_count x counters.size()
    std::vector<std::string> counters;

    int core_count() const { return static_cast<int>(gate_weights.size()); }

    bool operator==(const CpuModel&) const = default;
};

// P = base + sum_j rate_j * weights_j.
struct GpuModel {
    std::uint64_t frequency_hz = 0;
    double base = 0.0;
    std::vector<double> weights;
    std::vector<std::string> counters;

    bool operator==(const GpuModel&) const = default;
};

struct ModelLut {
    std::string platform;
    std::map<std::uint64_t, CpuModel> cpu;
    std::map<std::uint64_t, GpuModel> gpu;
    nlohmann::json provenance;  // free-form, deterministic content only

    bool operator==(const ModelLut& other) const {
        return platform == other.platform && cpu == other.cpu && gpu == other.gpu &&
               provenance == other.provenance;
    }
};

// Fixed left-to-right summation; gating.size() must equal core count and
// rates must be core-major core_count x counters.
double predict_cpu(const CpuModel& model, std::span<const double> gating,
                   std::span<const double> rates);
double predict_gpu(const GpuModel& model, std::span<const double> rates);

const CpuModel& lut_lookup_cpu(const ModelLut& lut, std::uint64_t frequency_hz);
const GpuModel& lut_lookup_gpu(const ModelLut& lut, std::uint64_t frequency_hz);

struct SystemPower {
    double total_w = 0.0;
    double cpu_w = 0.0;
    double gpu_w = 0.0;
};

SystemPower predict_system(const ModelLut& lut, std::uint64_t f_cpu, std::uint64_t f_gpu,
                           std::span<const double> cpu_gating, std::span<const double> cpu_rates,
                           std::span<const double> gpu_rates);

// Rectangular-rule energy, fixed summation order.
double energy_joules(std::span<const double> power_w, std::span<const double> duration_s);

// Model file round trip (schema documented in README). Weight values are
// written in shortest-round-trip decimal and reload bit-exactly.
nlohmann::json model_to_json(const ModelLut& lut);
ModelLut model_from_json(const nlohmann::json& doc, const std::string& origin);
void save_model(const ModelLut& lut, const std::filesystem::path& path);
ModelLut load_model(const std::filesystem::path& path);

// Flattened system predictor for the latency-critical path: construction may
// allocate, evaluate() never does.
class SystemPredictor {
  public:
    SystemPredictor(const CpuModel* cpu, const GpuModel* gpu);

    std::size_t cpu_cores() const { return cores_; }
    std::size_t cpu_counters() const { return cpu_counters_; }
    std::size_t gpu_counters() const { return gpu_weights_.size(); }

    // gating: cores values; cpu_rates: core-major cores x cpu_counters;
    // gpu_rates: gpu_counters values.
    SystemPower evaluate(const double* gating, const double* cpu_rates,
                         const double* gpu_rates) const noexcept;

  private:
    std::size_t cores_ = 0;
    std::size_t cpu_counters_ = 0;
    double cpu_base_ = 0.0;
    double gpu_base_ = 0.0;
    std::vector<double> gate_weights_;
    std::vector<double> activity_weights_;
    std::vector<double> gpu_weights_;
    bool has_cpu_ = false;
    bool has_gpu_ = false;
};

}  // namespace lutpower
