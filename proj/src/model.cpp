#include "lutpower/model.hpp"

#include <cmath>

#include "lutpower/csv.hpp"
#include "lutpower/errors.hpp"

namespace lutpower {

namespace {

void validate_cpu_model(const CpuModel& m, const std::string& origin) {
    if (m.activity_weights.size() != m.gate_weights.size() * m.counters.size()) {
        throw Error(ErrorKind::Validation,
                    origin + ": activity weight tensor is not core_count x counters");
    }
    if (m.base < 0.0) throw Error(ErrorKind::Validation, origin + ": negative base power");
    for (double w : m.gate_weights) {
        if (w < 0.0 || !std::isfinite(w)) {
            throw Error(ErrorKind::Validation, origin + ": bad gate weight");
        }
    }
    for (double w : m.activity_weights) {
        if (w < 0.0 || !std::isfinite(w)) {
            throw Error(ErrorKind::Validation, origin + ": bad activity weight");
        }
    }
}

void validate_gpu_model(const GpuModel& m, const std::string& origin) {
    if (m.weights.size() != m.counters.size()) {
        throw Error(ErrorKind::Validation, origin + ": |weights| != |counters|");
    }
    if (m.base < 0.0) throw Error(ErrorKind::Validation, origin + ": negative base power");
    for (double w : m.weights) {
        if (w < 0.0 || !std::isfinite(w)) {
            throw Error(ErrorKind::Validation, origin + ": bad weight");
        }
    }
}

}  // namespace

double predict_cpu(const CpuModel& model, std::span<const double> gating,
                   std::span<const double> rates) {
    const std::size_t cores = model.gate_weights.size();
    const std::size_t counters = model.counters.size();
    if (gating.size() != cores) {
        throw Error(ErrorKind::MissingKey, "predict_cpu: expected gating for " +
                                               std::to_string(cores) + " cores, got " +
                                               std::to_string(gating.size()));
    }
    if (rates.size() != cores * counters) {
        throw Error(ErrorKind::MissingKey, "predict_cpu: expected " +
                                               std::to_string(cores * counters) +
                                               " rate values, got " + std::to_string(rates.size()));
    }
    double total = model.base;
    for (std::size_t i = 0; i < cores; ++i) {
        total += gating[i] * model.gate_weights[i];
        const double* w = model.activity_weights.data() + i * counters;
        const double* x = rates.data() + i * counters;
        for (std::size_t j = 0; j < counters; ++j) {
            total += x[j] * w[j];
        }
    }
    return total;
}

double predict_gpu(const GpuModel& model, std::span<const double> rates) {
    if (rates.size() != model.weights.size()) {
        throw Error(ErrorKind::MissingKey, "predict_gpu: expected " +
                                               std::to_string(model.weights.size()) +
                                               " rate values, got " + std::to_string(rates.size()));
    }
    double total = model.base;
    for (std::size_t j = 0; j < model.weights.size(); ++j) {
        total += rates[j] * model.weights[j];
    }
    return total;
}

const CpuModel& lut_lookup_cpu(const ModelLut& lut, std::uint64_t frequency_hz) {
    const auto it = lut.cpu.find(frequency_hz);
    if (it == lut.cpu.end()) {
        throw Error(ErrorKind::UnknownFrequency,
                    "no CPU model at " + std::to_string(frequency_hz) + " Hz");
    }
    return it->second;
}

const GpuModel& lut_lookup_gpu(const ModelLut& lut, std::uint64_t frequency_hz) {
    const auto it = lut.gpu.find(frequency_hz);
    if (it == lut.gpu.end()) {
        throw Error(ErrorKind::UnknownFrequency,
                    "no GPU model at " + std::to_string(frequency_hz) + " Hz");
    }
    return it->second;
}

SystemPower predict_system(const ModelLut& lut, std::uint64_t f_cpu, std::uint64_t f_gpu,
                           std::span<const double> cpu_gating, std::span<const double> cpu_rates,
                           std::span<const double> gpu_rates) {
    SystemPower out;
    out.cpu_w = predict_cpu(lut_lookup_cpu(lut, f_cpu), cpu_gating, cpu_rates);
    out.gpu_w = predict_gpu(lut_lookup_gpu(lut, f_gpu), gpu_rates);
    out.total_w = out.cpu_w + out.gpu_w;
    return out;
}

double energy_joules(std::span<const double> power_w, std::span<const double> duration_s) {
    if (power_w.size() != duration_s.size()) {
        throw Error(ErrorKind::LengthMismatch, "energy: series lengths differ");
    }
    double joules = 0.0;
    for (std::size_t i = 0; i < power_w.size(); ++i) {
        joules += power_w[i] * duration_s[i];
    }
    return joules;
}

nlohmann::json model_to_json(const ModelLut& lut) {
    using nlohmann::json;
    json cpu = json::object();
    for (const auto& [freq, m] : lut.cpu) {
        json entry;
        entry["base"] = m.base;
        entry["gate_weights"] = m.gate_weights;
        json aw = json::array();
        const std::size_t counters = m.counters.size();
        for (std::size_t core = 0; core < m.gate_weights.size(); ++core) {
            aw.push_back(std::vector<double>(m.activity_weights.begin() + core * counters,
                                             m.activity_weights.begin() + (core + 1) * counters));
        }
        entry["activity_weights"] = std::move(aw);
        entry["counters"] = m.counters;
        cpu[std::to_string(freq)] = std::move(entry);
    }
    json gpu = json::object();
    for (const auto& [freq, m] : lut.gpu) {
        json entry;
        entry["base"] = m.base;
        entry["weights"] = m.weights;
        entry["counters"] = m.counters;
        gpu[std::to_string(freq)] = std::move(entry);
    }
    return json{{"platform", lut.platform},
                {"subsystems", json{{"cpu", std::move(cpu)}, {"gpu", std::move(gpu)}}},
                {"provenance", lut.provenance}};
}

ModelLut model_from_json(const nlohmann::json& doc, const std::string& origin) {
    ModelLut lut;
    try {
        lut.platform = doc.at("platform").get<std::string>();
        lut.provenance = doc.value("provenance", nlohmann::json::object());
        const auto& subsystems = doc.at("subsystems");
        for (const auto& [freq_str, entry] : subsystems.at("cpu").items()) {
            CpuModel m;
            m.frequency_hz = std::stoull(freq_str);
            m.base = entry.at("base").get<double>();
            m.gate_weights = entry.at("gate_weights").get<std::vector<double>>();
            m.counters = entry.at("counters").get<std::vector<std::string>>();
            const auto rows = entry.at("activity_weights").get<std::vector<std::vector<double>>>();
            if (rows.size() != m.gate_weights.size()) {
                throw Error(ErrorKind::Validation,
                            origin + ": activity_weights row count != core count");
            }
            for (const auto& row : rows) {
                if (row.size() != m.counters.size()) {
                    throw Error(ErrorKind::Validation,
                                origin + ": activity_weights column count != |counters|");
                }
                m.activity_weights.insert(m.activity_weights.end(), row.begin(), row.end());
            }
            validate_cpu_model(m, origin);
            lut.cpu.emplace(m.frequency_hz, std::move(m));
        }
        for (const auto& [freq_str, entry] : subsystems.at("gpu").items()) {
            GpuModel m;
            m.frequency_hz = std::stoull(freq_str);
            m.base = entry.at("base").get<double>();
            m.weights = entry.at("weights").get<std::vector<double>>();
            m.counters = entry.at("counters").get<std::vector<std::string>>();
            validate_gpu_model(m, origin);
            lut.gpu.emplace(m.frequency_hz, std::move(m));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Parse, origin + ": " + e.what());
    } catch (const std::invalid_argument&) {
        throw Error(ErrorKind::Parse, origin + ": non-numeric frequency key");
    } catch (const std::out_of_range&) {
        throw Error(ErrorKind::Parse, origin + ": frequency key out of range");
    }
    return lut;
}

void save_model(const ModelLut& lut, const std::filesystem::path& path) {
    csv::write_file_atomic(path, model_to_json(lut).dump(2) + "\n");
}

ModelLut load_model(const std::filesystem::path& path) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(csv::read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Parse, path.string() + ": " + e.what());
    }
    return model_from_json(doc, path.string());
}

SystemPredictor::SystemPredictor(const CpuModel* cpu, const GpuModel* gpu) {
    if (cpu) {
        has_cpu_ = true;
        cores_ = cpu->gate_weights.size();
        cpu_counters_ = cpu->counters.size();
        cpu_base_ = cpu->base;
        gate_weights_ = cpu->gate_weights;
        activity_weights_ = cpu->activity_weights;
    }
    if (gpu) {
        has_gpu_ = true;
        gpu_base_ = gpu->base;
        gpu_weights_ = gpu->weights;
    }
}

SystemPower SystemPredictor::evaluate(const double* gating, const double* cpu_rates,
                                      const double* gpu_rates) const noexcept {
    SystemPower out;
    if (has_cpu_) {
        double cpu = cpu_base_;
        const double* w = activity_weights_.data();
        for (std::size_t i = 0; i < cores_; ++i) {
            cpu += gating[i] * gate_weights_[i];
            const double* x = cpu_rates + i * cpu_counters_;
            for (std::size_t j = 0; j < cpu_counters_; ++j) {
                cpu += x[j] * w[i * cpu_counters_ + j];
            }
        }
        out.cpu_w = cpu;
    }
    if (has_gpu_) {
        double gpu = gpu_base_;
        for (std::size_t j = 0; j < gpu_weights_.size(); ++j) {
            gpu += gpu_rates[j] * gpu_weights_[j];
        }
        out.gpu_w = gpu;
    }
    out.total_w = out.cpu_w + out.gpu_w;
    return out;
}

}  // namespace lutpower
