#include "lutpower/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <set>

#include <nlohmann/json.hpp>

#include "lutpower/csv.hpp"
#include "lutpower/errors.hpp"
#include "lutpower/evaluate.hpp"
#include "lutpower/rng.hpp"

namespace lutpower {

namespace {

using nlohmann::json;

struct RegimeRanges {
    double u_lo, u_hi;  // compute factor
    double v_lo, v_hi;  // memory factor
    bool active;        // cores busy (gating duty range)
};

RegimeRanges regime_ranges(const std::string& regime) {
    if (regime == "idle") return {0.00, 0.10, 0.00, 0.10, false};
    if (regime == "compute") return {0.55, 1.00, 0.05, 0.30, true};
    if (regime == "memory") return {0.15, 0.45, 0.55, 1.00, true};
    if (regime == "mixed") return {0.10, 1.00, 0.10, 1.00, true};
    throw Error(ErrorKind::Validation, "unknown workload regime '" + regime + "'");
}

double event_activity(const EventTruth& e, const std::string& regime, double u, double v,
                      double z) {
    const double den = e.compute_loading + e.memory_loading + e.idio_loading;
    if (den <= 0.0) return 0.0;
    return e.scale * e.regime_gain(regime) *
           (e.compute_loading * u + e.memory_loading * v + e.idio_loading * z) / den;
}

std::unique_ptr<CompatibilityOracle> build_oracle(const OracleSpec& spec) {
    if (spec.exclusive_groups.empty()) {
        return std::make_unique<CapacityOracle>(spec.max_simultaneous);
    }
    return std::make_unique<GroupOracle>(spec.max_simultaneous, spec.exclusive_groups);
}

// First-fit partition of the full event list into single-pass-schedulable
// groups.
std::vector<std::vector<std::string>> partition_passes(const std::vector<EventTruth>& events,
                                                       const CompatibilityOracle& oracle) {
    std::vector<std::vector<std::string>> passes;
    for (const EventTruth& e : events) {
        bool placed = false;
        for (std::vector<std::string>& pass : passes) {
            pass.push_back(e.name);
            if (oracle.can_schedule(pass)) {
                placed = true;
                break;
            }
            pass.pop_back();
        }
        if (!placed) {
            std::vector<std::string> fresh{e.name};
            if (!oracle.can_schedule(fresh)) {
                throw Error(ErrorKind::Validation,
                            "event '" + e.name + "' is unschedulable even alone");
            }
            passes.push_back(std::move(fresh));
        }
    }
    return passes;
}

std::vector<EventTruth> with_decoys(const std::vector<EventTruth>& informative, int decoy_count,
                                    double decoy_scale) {
    std::vector<EventTruth> all = informative;
    for (int d = 0; d < decoy_count; ++d) {
        EventTruth decoy;
        char name[32];
        std::snprintf(name, sizeof(name), "decoy_%02d", d);
        decoy.name = name;
        decoy.scale = decoy_scale;
        decoy.compute_loading = 0.0;
        decoy.memory_loading = 0.0;
        decoy.idio_loading = 1.0;
        all.push_back(std::move(decoy));
    }
    return all;
}

}  // namespace

void PlatformSpec::validate() const {
    if (core_count < 1) throw Error(ErrorKind::Validation, "core_count must be >= 1");
    if (nominal_period_s <= 0.0) {
        throw Error(ErrorKind::Validation, "nominal_period_s must be positive");
    }
    if (noise_sigma < 0.0 || quantization_w < 0.0) {
        throw Error(ErrorKind::Validation, "noise_sigma/quantization_w must be nonnegative");
    }
    if (cpu_decoy_events < 0 || gpu_decoy_events < 0) {
        throw Error(ErrorKind::Validation, "decoy_events must be nonnegative");
    }
    if (workloads.empty()) throw Error(ErrorKind::Validation, "no workloads declared");
    for (const WorkloadSpec& w : workloads) {
        if (w.phases.empty()) {
            throw Error(ErrorKind::Validation, "workload '" + w.name + "' has no phases");
        }
        for (const WorkloadPhase& p : w.phases) {
            regime_ranges(p.regime);
            if (p.samples == 0) {
                throw Error(ErrorKind::Validation, "workload '" + w.name + "' has an empty phase");
            }
        }
    }
    auto check_subsystem = [this](const std::vector<std::uint64_t>& freqs,
                                  const std::map<std::uint64_t, double>& base,
                                  const std::vector<EventTruth>& events, const char* label) {
        if (std::set<std::uint64_t>(freqs.begin(), freqs.end()).size() != freqs.size()) {
            throw Error(ErrorKind::Validation, std::string(label) + ": duplicate frequencies");
        }
        for (std::uint64_t f : freqs) {
            if (f == 0) throw Error(ErrorKind::Validation, std::string(label) + ": zero frequency");
            if (!base.contains(f)) {
                throw Error(ErrorKind::Validation, std::string(label) + ": no base power at " +
                                                       std::to_string(f) + " Hz");
            }
            for (const EventTruth& e : events) {
                const auto it = e.weight_per_freq.find(f);
                if (it == e.weight_per_freq.end()) {
                    throw Error(ErrorKind::Validation, std::string(label) + ": event '" + e.name +
                                                           "' has no weight at " +
                                                           std::to_string(f) + " Hz");
                }
                if (it->second < 0.0) {
                    throw Error(ErrorKind::Validation,
                                std::string(label) + ": negative weight for '" + e.name + "'");
                }
            }
        }
    };
    check_subsystem(cpu_frequencies_hz, cpu_base_w, cpu_events, "cpu");
    check_subsystem(gpu_frequencies_hz, gpu_base_w, gpu_events, "gpu");
    for (std::uint64_t f : cpu_frequencies_hz) {
        if (!cpu_gate_w.contains(f)) {
            throw Error(ErrorKind::Validation,
                        "cpu: no gate weight at " + std::to_string(f) + " Hz");
        }
    }
}

PlatformSpec default_platform_spec() {
    PlatformSpec spec;
    spec.platform = "hetero-demo";
    spec.core_count = 8;
    spec.nominal_period_s = 0.1;
    spec.noise_sigma = 0.01;
    spec.quantization_w = 0.2;
    spec.decoy_scale = 80.0;
    spec.cpu_decoy_events = 9;
    spec.gpu_decoy_events = 20;

    const std::uint64_t mhz = 1000000ull;
    spec.cpu_frequencies_hz = {730 * mhz, 1190 * mhz, 2266 * mhz};
    spec.gpu_frequencies_hz = {115 * mhz,  216 * mhz,  319 * mhz,  421 * mhz, 523 * mhz,
                               625 * mhz,  675 * mhz,  829 * mhz,  905 * mhz, 1033 * mhz,
                               1198 * mhz, 1237 * mhz, 1339 * mhz, 1377 * mhz};

    const double f_cpu_max = 2266e6;
    for (std::uint64_t f : spec.cpu_frequencies_hz) {
        const double ratio = static_cast<double>(f) / f_cpu_max;
        spec.cpu_base_w[f] = 3.0 + 2.0 * ratio;
        spec.cpu_gate_w[f] = 0.5 + 0.5 * ratio;
    }
    const double f_gpu_max = 1377e6;
    for (std::uint64_t f : spec.gpu_frequencies_hz) {
        const double ratio = static_cast<double>(f) / f_gpu_max;
        spec.gpu_base_w[f] = 2.0 + 3.0 * ratio;
    }

    struct Proto {
        const char* name;
        double scale, compute, memory, idio, weight;
        double idle_g, compute_g, memory_g, mixed_g;
    };
    auto make_event = [](const Proto& p) {
        EventTruth e;
        e.name = p.name;
        e.scale = p.scale;
        e.compute_loading = p.compute;
        e.memory_loading = p.memory;
        e.idio_loading = p.idio;
        e.regime_gains = {{"idle", p.idle_g},
                          {"compute", p.compute_g},
                          {"memory", p.memory_g},
                          {"mixed", p.mixed_g}};
        return e;
    };
    const Proto cpu_protos[] = {
        {"instr_retired", 120.0, 0.70, 0.30, 0.35, 0.018, 0.15, 1.00, 0.55, 0.80},
        {"fp_ops", 60.0, 0.90, 0.05, 0.30, 0.030, 0.05, 1.00, 0.25, 0.70},
        {"l1d_access", 90.0, 0.30, 0.60, 0.35, 0.012, 0.10, 0.45, 1.00, 0.85},
    };
    for (const Proto& p : cpu_protos) {
        EventTruth e = make_event(p);
        for (std::uint64_t f : spec.cpu_frequencies_hz) {
            const double ratio = static_cast<double>(f) / f_cpu_max;
            e.weight_per_freq[f] = p.weight * (0.5 + 0.5 * ratio);
        }
        spec.cpu_events.push_back(std::move(e));
    }

    const Proto gpu_protos[] = {
        {"sm_active_cycles", 220.0, 0.90, 0.10, 0.40, 0.016, 0.10, 1.00, 0.45, 0.80},
        {"warps_issued", 180.0, 0.80, 0.20, 0.45, 0.012, 0.10, 0.95, 0.35, 0.70},
        {"inst_executed", 200.0, 0.85, 0.15, 0.35, 0.014, 0.15, 1.00, 0.50, 0.75},
        {"l2_reads_s0", 150.0, 0.30, 0.70, 0.40, 0.013, 0.10, 0.50, 1.00, 0.80},
        {"l2_reads_s1", 150.0, 0.28, 0.72, 0.42, 0.012, 0.10, 0.45, 0.95, 0.85},
        {"dram_reads", 120.0, 0.15, 0.85, 0.50, 0.018, 0.20, 0.30, 1.00, 0.70},
        {"tex_requests", 100.0, 0.40, 0.60, 0.55, 0.011, 0.05, 0.55, 0.90, 1.00},
        {"alu_pipe_active", 240.0, 0.95, 0.05, 0.30, 0.009, 0.10, 1.00, 0.30, 0.90},
    };
    for (const Proto& p : gpu_protos) {
        EventTruth e = make_event(p);
        for (std::uint64_t f : spec.gpu_frequencies_hz) {
            const double ratio = static_cast<double>(f) / f_gpu_max;
            e.weight_per_freq[f] = p.weight * (0.5 + 0.5 * ratio);
        }
        spec.gpu_events.push_back(std::move(e));
    }

    spec.cpu_oracle.max_simultaneous = 3;
    spec.gpu_oracle.max_simultaneous = 10;
    spec.gpu_oracle.exclusive_groups = {
        {"decoy_00", "decoy_01", "decoy_02", "decoy_03"},
        {"decoy_04", "decoy_05"},
        {"sm_active_cycles", "decoy_06"},
    };

    spec.workloads = {
        {"ramp", {{"idle", 60}, {"compute", 80}, {"memory", 80}, {"mixed", 80}}},
        {"burst", {{"compute", 70}, {"idle", 50}, {"mixed", 90}, {"memory", 90}}},
    };
    return spec;
}

namespace {

json oracle_to_json(const OracleSpec& o) {
    return json{{"max_simultaneous", o.max_simultaneous}, {"exclusive_groups", o.exclusive_groups}};
}

OracleSpec oracle_from_json(const json& doc) {
    OracleSpec o;
    o.max_simultaneous = doc.at("max_simultaneous").get<std::size_t>();
    if (doc.contains("exclusive_groups")) {
        o.exclusive_groups = doc.at("exclusive_groups").get<std::vector<std::vector<std::string>>>();
    }
    return o;
}

json events_to_json(const std::vector<EventTruth>& events) {
    json arr = json::array();
    for (const EventTruth& e : events) {
        json weights = json::object();
        for (const auto& [f, w] : e.weight_per_freq) weights[std::to_string(f)] = w;
        json entry{{"name", e.name},
                   {"scale", e.scale},
                   {"loadings",
                    json{{"compute", e.compute_loading},
                         {"memory", e.memory_loading},
                         {"idio", e.idio_loading}}},
                   {"weight_w_per_rate", std::move(weights)}};
        if (!e.regime_gains.empty()) entry["regime_gains"] = e.regime_gains;
        arr.push_back(std::move(entry));
    }
    return arr;
}

std::vector<EventTruth> events_from_json(const json& arr) {
    std::vector<EventTruth> events;
    for (const json& doc : arr) {
        EventTruth e;
        e.name = doc.at("name").get<std::string>();
        e.scale = doc.at("scale").get<double>();
        const json& l = doc.at("loadings");
        e.compute_loading = l.at("compute").get<double>();
        e.memory_loading = l.at("memory").get<double>();
        e.idio_loading = l.at("idio").get<double>();
        for (const auto& [f, w] : doc.at("weight_w_per_rate").items()) {
            e.weight_per_freq[std::stoull(f)] = w.get<double>();
        }
        if (doc.contains("regime_gains")) {
            e.regime_gains = doc.at("regime_gains").get<std::map<std::string, double>>();
        }
        events.push_back(std::move(e));
    }
    return events;
}

json freq_map_to_json(const std::map<std::uint64_t, double>& m) {
    json out = json::object();
    for (const auto& [f, v] : m) out[std::to_string(f)] = v;
    return out;
}

std::map<std::uint64_t, double> freq_map_from_json(const json& doc) {
    std::map<std::uint64_t, double> out;
    for (const auto& [f, v] : doc.items()) out[std::stoull(f)] = v.get<double>();
    return out;
}

}  // namespace

void save_platform_spec(const PlatformSpec& spec, const std::filesystem::path& path) {
    json doc{
        {"platform", spec.platform},
        {"core_count", spec.core_count},
        {"nominal_period_s", spec.nominal_period_s},
        {"noise_sigma", spec.noise_sigma},
        {"quantization_w", spec.quantization_w},
        {"decoy_scale", spec.decoy_scale},
        {"gating_profile",
         json{{"idle_duty", {spec.gating.idle_duty_min, spec.gating.idle_duty_max}},
              {"active_duty", {spec.gating.active_duty_min, spec.gating.active_duty_max}}}},
        {"cpu",
         json{{"frequencies_hz", spec.cpu_frequencies_hz},
              {"base_w", freq_map_to_json(spec.cpu_base_w)},
              {"gate_w", freq_map_to_json(spec.cpu_gate_w)},
              {"decoy_events", spec.cpu_decoy_events},
              {"oracle", oracle_to_json(spec.cpu_oracle)},
              {"events", events_to_json(spec.cpu_events)}}},
        {"gpu",
         json{{"frequencies_hz", spec.gpu_frequencies_hz},
              {"base_w", freq_map_to_json(spec.gpu_base_w)},
              {"decoy_events", spec.gpu_decoy_events},
              {"oracle", oracle_to_json(spec.gpu_oracle)},
              {"events", events_to_json(spec.gpu_events)}}},
    };
    json workloads = json::array();
    for (const WorkloadSpec& w : spec.workloads) {
        json phases = json::array();
        for (const WorkloadPhase& p : w.phases) {
            phases.push_back(json{{"regime", p.regime}, {"samples", p.samples}});
        }
        workloads.push_back(json{{"name", w.name}, {"phases", std::move(phases)}});
    }
    doc["workloads"] = std::move(workloads);
    csv::write_file_atomic(path, doc.dump(2) + "\n");
}

PlatformSpec load_platform_spec(const std::filesystem::path& path) {
    json doc;
    try {
        doc = json::parse(csv::read_file(path));
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Parse, path.string() + ": " + e.what());
    }
    PlatformSpec spec;
    try {
        spec.platform = doc.value("platform", std::string("synthetic"));
        spec.core_count = doc.at("core_count").get<int>();
        spec.nominal_period_s = doc.at("nominal_period_s").get<double>();
        spec.noise_sigma = doc.value("noise_sigma", 0.0);
        spec.quantization_w = doc.value("quantization_w", 0.0);
        spec.decoy_scale = doc.value("decoy_scale", 80.0);
        if (doc.contains("gating_profile")) {
            const json& g = doc.at("gating_profile");
            spec.gating.idle_duty_min = g.at("idle_duty")[0].get<double>();
            spec.gating.idle_duty_max = g.at("idle_duty")[1].get<double>();
            spec.gating.active_duty_min = g.at("active_duty")[0].get<double>();
            spec.gating.active_duty_max = g.at("active_duty")[1].get<double>();
        }
        const json& cpu = doc.at("cpu");
        spec.cpu_frequencies_hz = cpu.at("frequencies_hz").get<std::vector<std::uint64_t>>();
        spec.cpu_base_w = freq_map_from_json(cpu.at("base_w"));
        spec.cpu_gate_w = freq_map_from_json(cpu.at("gate_w"));
        spec.cpu_decoy_events = cpu.value("decoy_events", 0);
        spec.cpu_oracle = oracle_from_json(cpu.at("oracle"));
        spec.cpu_events = events_from_json(cpu.at("events"));
        const json& gpu = doc.at("gpu");
        spec.gpu_frequencies_hz = gpu.at("frequencies_hz").get<std::vector<std::uint64_t>>();
        spec.gpu_base_w = freq_map_from_json(gpu.at("base_w"));
        spec.gpu_decoy_events = gpu.value("decoy_events", 0);
        spec.gpu_oracle = oracle_from_json(gpu.at("oracle"));
        spec.gpu_events = events_from_json(gpu.at("events"));
        for (const json& w : doc.at("workloads")) {
            WorkloadSpec workload;
            workload.name = w.at("name").get<std::string>();
            for (const json& p : w.at("phases")) {
                workload.phases.push_back(
                    {p.at("regime").get<std::string>(), p.at("samples").get<std::size_t>()});
            }
            spec.workloads.push_back(std::move(workload));
        }
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Parse, path.string() + ": " + e.what());
    } catch (const std::invalid_argument&) {
        throw Error(ErrorKind::Parse, path.string() + ": non-numeric frequency key");
    }
    spec.validate();
    return spec;
}

namespace {

// Ground-truth models over the informative events only (decoys weigh zero).
ModelLut build_truth_lut(const PlatformSpec& spec, std::uint64_t seed) {
    ModelLut lut;
    lut.platform = spec.platform;
    for (std::uint64_t f : spec.cpu_frequencies_hz) {
        CpuModel m;
        m.frequency_hz = f;
        m.base = spec.cpu_base_w.at(f);
        m.gate_weights.assign(static_cast<std::size_t>(spec.core_count), spec.cpu_gate_w.at(f));
        for (const EventTruth& e : spec.cpu_events) m.counters.push_back(e.name);
        m.activity_weights.resize(static_cast<std::size_t>(spec.core_count) * m.counters.size());
        for (int core = 0; core < spec.core_count; ++core) {
            for (std::size_t j = 0; j < m.counters.size(); ++j) {
                m.activity_weights[static_cast<std::size_t>(core) * m.counters.size() + j] =
                    spec.cpu_events[j].weight_per_freq.at(f);
            }
        }
        lut.cpu.emplace(f, std::move(m));
    }
    for (std::uint64_t f : spec.gpu_frequencies_hz) {
        GpuModel m;
        m.frequency_hz = f;
        m.base = spec.gpu_base_w.at(f);
        for (const EventTruth& e : spec.gpu_events) {
            m.counters.push_back(e.name);
            m.weights.push_back(e.weight_per_freq.at(f));
        }
        lut.gpu.emplace(f, std::move(m));
    }
    lut.provenance = json{{"generator", json{{"seed", seed}, {"platform", spec.platform}}}};
    return lut;
}

struct Unit {
    Subsystem subsystem;
    std::uint64_t frequency_hz;
    const WorkloadSpec* workload;
};

double quantize_power(double p, double quantum) {
    if (quantum > 0.0) p = std::round(p / quantum) * quantum;
    return p < 0.0 ? 0.0 : p;
}

// Generates every pass of one (subsystem, frequency, workload) from a single
// underlying execution, so replayed passes share the same power profile.
std::vector<TraceSegment> generate_unit(const PlatformSpec& spec, const ModelLut& truth,
                                        const Unit& unit,
                                        const std::vector<EventTruth>& events,
                                        const std::vector<std::vector<std::string>>& passes,
                                        std::uint64_t unit_seed) {
    Rng rng(unit_seed);
    const bool is_cpu = unit.subsystem == Subsystem::Cpu;
    const std::size_t cores = is_cpu ? static_cast<std::size_t>(spec.core_count) : 1;
    const double freq = static_cast<double>(unit.frequency_hz);

    std::size_t total = 0;
    for (const WorkloadPhase& p : unit.workload->phases) total += p.samples;

    std::vector<const WorkloadPhase*> phase_of(total);
    {
        std::size_t t = 0;
        for (const WorkloadPhase& p : unit.workload->phases) {
            for (std::size_t i = 0; i < p.samples; ++i) phase_of[t++] = &p;
        }
    }

    // Fixed draw order: factors, gating, idiosyncratic components, per-pass
    // duration jitter, then measurement noise.
    std::vector<double> u(total), v(total);
    for (std::size_t t = 0; t < total; ++t) {
        const RegimeRanges r = regime_ranges(phase_of[t]->regime);
        u[t] = rng.uniform(r.u_lo, r.u_hi);
        v[t] = rng.uniform(r.v_lo, r.v_hi);
    }
    std::vector<double> g;
    if (is_cpu) {
        g.resize(cores * total);
        for (std::size_t i = 0; i < cores; ++i) {
            for (std::size_t t = 0; t < total; ++t) {
                const bool active = regime_ranges(phase_of[t]->regime).active;
                g[i * total + t] = active
                                       ? rng.uniform(spec.gating.active_duty_min,
                                                     spec.gating.active_duty_max)
                                       : rng.uniform(spec.gating.idle_duty_min,
                                                     spec.gating.idle_duty_max);
            }
        }
    }
    // Decoys are independent of power but not stationary: each gets a
    // per-workload activity level, so a spuriously selected decoy does not
    // generalize across the train/validation split.
    std::vector<double> decoy_level(events.size(), 1.0);
    for (std::size_t e = 0; e < events.size(); ++e) {
        if (events[e].is_decoy()) decoy_level[e] = rng.uniform(0.5, 1.5);
    }
    // True rates per (event, core, sample). Informative CPU events scale with
    // the core's duty; decoys stay independent noise by construction.
    std::vector<double> rates(events.size() * cores * total);
    for (std::size_t e = 0; e < events.size(); ++e) {
        for (std::size_t i = 0; i < cores; ++i) {
            for (std::size_t t = 0; t < total; ++t) {
                const double z = rng.uniform01();
                double rate = event_activity(events[e], phase_of[t]->regime, u[t], v[t], z);
                if (is_cpu && !events[e].is_decoy()) rate *= g[i * total + t];
                rates[(e * cores + i) * total + t] = rate * decoy_level[e];
            }
        }
    }
    std::vector<std::vector<double>> durations(passes.size(), std::vector<double>(total));
    for (std::size_t p = 0; p < passes.size(); ++p) {
        for (std::size_t t = 0; t < total; ++t) {
            durations[p][t] = spec.nominal_period_s * (1.0 + rng.uniform(-0.05, 0.05));
        }
    }

    // Event -> pass index.
    std::map<std::string, std::size_t> pass_of_event;
    for (std::size_t p = 0; p < passes.size(); ++p) {
        for (const std::string& name : passes[p]) pass_of_event[name] = p;
    }
    std::map<std::string, std::size_t> event_index;
    for (std::size_t e = 0; e < events.size(); ++e) event_index[events[e].name] = e;

    // Achieved values: exactly what a loader reconstructs from the stored
    // counts of the recording pass. Power is the truth model applied to them.
    std::vector<double> truth_power(total);
    {
        std::vector<double> g_ach(is_cpu ? cores * total : 0);
        if (is_cpu) {
            for (std::size_t i = 0; i < cores; ++i) {
                for (std::size_t t = 0; t < total; ++t) {
                    const double cyc = g[i * total + t] * freq * durations[0][t];
                    g_ach[i * total + t] = gating_metric(cyc, durations[0][t], freq);
                }
            }
        }
        const std::size_t informative =
            is_cpu ? truth.cpu.at(unit.frequency_hz).counters.size()
                   : truth.gpu.at(unit.frequency_hz).counters.size();
        std::vector<double> row(informative * cores);
        std::vector<double> g_row(cores);
        for (std::size_t t = 0; t < total; ++t) {
            for (std::size_t j = 0; j < informative; ++j) {
                const std::size_t e = j;  // informative events lead the list
                const std::size_t p = pass_of_event[events[e].name];
                for (std::size_t i = 0; i < cores; ++i) {
                    const double true_rate = rates[(e * cores + i) * total + t];
                    const double count = true_rate * durations[p][t];
                    row[i * informative + j] = count / durations[p][t];
                }
            }
            if (is_cpu) {
                for (std::size_t i = 0; i < cores; ++i) g_row[i] = g_ach[i * total + t];
                truth_power[t] = predict_cpu(truth.cpu.at(unit.frequency_hz), g_row, row);
            } else {
                truth_power[t] = predict_gpu(
                    truth.gpu.at(unit.frequency_hz),
                    std::span<const double>(row.data(), informative));
            }
        }
    }

    double mean_power = 0.0;
    for (double p : truth_power) mean_power += p;
    mean_power /= static_cast<double>(total);
    const double sigma_w = spec.noise_sigma * mean_power;

    std::vector<TraceSegment> segments;
    for (std::size_t p = 0; p < passes.size(); ++p) {
        TraceSegment seg;
        seg.subsystem = unit.subsystem;
        seg.frequency_hz = unit.frequency_hz;
        seg.workload = unit.workload->name;
        seg.pass_id = static_cast<int>(p);
        seg.nominal_period_s = spec.nominal_period_s;
        seg.core_count = is_cpu ? spec.core_count : 0;
        if (is_cpu) {
            for (std::size_t i = 0; i < cores; ++i) {
                for (const std::string& name : passes[p]) {
                    seg.counters.push_back(
                        CounterId{Subsystem::Cpu, static_cast<int>(i), name});
                }
            }
            for (std::size_t i = 0; i < cores; ++i) seg.cycle_cores.push_back(static_cast<int>(i));
        } else {
            for (const std::string& name : passes[p]) {
                seg.counters.push_back(CounterId{Subsystem::Gpu, -1, name});
            }
        }

        seg.samples.resize(total);
        double ts = 0.0;
        for (std::size_t t = 0; t < total; ++t) {
            Sample& s = seg.samples[t];
            s.timestamp_s = ts;
            s.duration_s = durations[p][t];
            ts += durations[p][t];
            s.counts.resize(seg.counters.size());
            std::size_t col = 0;
            if (is_cpu) {
                for (std::size_t i = 0; i < cores; ++i) {
                    for (const std::string& name : passes[p]) {
                        const std::size_t e = event_index[name];
                        s.counts[col++] = rates[(e * cores + i) * total + t] * durations[p][t];
                    }
                }
                s.cycle_counts.resize(cores);
                for (std::size_t i = 0; i < cores; ++i) {
                    s.cycle_counts[i] = g[i * total + t] * freq * durations[p][t];
                }
            } else {
                for (const std::string& name : passes[p]) {
                    const std::size_t e = event_index[name];
                    s.counts[col++] = rates[e * total + t] * durations[p][t];
                }
            }
        }
        segments.push_back(std::move(seg));
    }
    // Measurement noise per pass (identical power profile, independent reads).
    for (std::size_t p = 0; p < passes.size(); ++p) {
        for (std::size_t t = 0; t < total; ++t) {
            const double noise = sigma_w > 0.0 ? rng.normal(sigma_w) : 0.0;
            segments[p].samples[t].power_w =
                quantize_power(truth_power[t] + noise, spec.quantization_w);
        }
    }
    return segments;
}

}  // namespace

GenerateResult generate_corpus(const PlatformSpec& spec, std::uint64_t seed,
                               const std::filesystem::path& out_root) {
    spec.validate();

    GenerateResult result;
    result.truth.seed = seed;
    result.truth.lut = build_truth_lut(spec, seed);

    const std::vector<EventTruth> cpu_all =
        with_decoys(spec.cpu_events, spec.cpu_decoy_events, spec.decoy_scale);
    const std::vector<EventTruth> gpu_all =
        with_decoys(spec.gpu_events, spec.gpu_decoy_events, spec.decoy_scale);
    const auto cpu_oracle = build_oracle(spec.cpu_oracle);
    const auto gpu_oracle = build_oracle(spec.gpu_oracle);
    const std::vector<std::vector<std::string>> cpu_passes = partition_passes(cpu_all, *cpu_oracle);
    const std::vector<std::vector<std::string>> gpu_passes = partition_passes(gpu_all, *gpu_oracle);

    std::vector<Unit> units;
    for (std::uint64_t f : spec.cpu_frequencies_hz) {
        for (const WorkloadSpec& w : spec.workloads) {
            units.push_back(Unit{Subsystem::Cpu, f, &w});
        }
    }
    for (std::uint64_t f : spec.gpu_frequencies_hz) {
        for (const WorkloadSpec& w : spec.workloads) {
            units.push_back(Unit{Subsystem::Gpu, f, &w});
        }
    }

    std::vector<std::vector<std::filesystem::path>> files(units.size());
    std::vector<std::exception_ptr> errors(units.size());

    const std::ptrdiff_t count = static_cast<std::ptrdiff_t>(units.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t idx = 0; idx < count; ++idx) {
        try {
            const Unit& unit = units[idx];
            const bool is_cpu = unit.subsystem == Subsystem::Cpu;
            const std::uint64_t unit_seed = hash_name(
                mix_seed(mix_seed(seed, is_cpu ? 1 : 2), unit.frequency_hz), unit.workload->name);
            const std::vector<TraceSegment> segments =
                generate_unit(spec, result.truth.lut, unit, is_cpu ? cpu_all : gpu_all,
                              is_cpu ? cpu_passes : gpu_passes, unit_seed);
            const std::filesystem::path dir = out_root / to_string(unit.subsystem) /
                                              std::to_string(unit.frequency_hz);
            for (const TraceSegment& seg : segments) {
                const std::filesystem::path csv_path =
                    dir / (unit.workload->name + "_pass" + std::to_string(seg.pass_id) + ".csv");
                write_trace(seg, csv_path);
                files[idx].push_back(csv_path);
            }
        } catch (...) {
            errors[idx] = std::current_exception();
        }
    }
    for (const std::exception_ptr& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    for (std::size_t i = 0; i < units.size(); ++i) {
        const Unit& unit = units[i];
        const bool is_cpu = unit.subsystem == Subsystem::Cpu;
        const std::string key = std::string(to_string(unit.subsystem)) + "/" +
                                std::to_string(unit.frequency_hz) + "/" + unit.workload->name;
        result.truth.trace_seeds[key] = hash_name(
            mix_seed(mix_seed(seed, is_cpu ? 1 : 2), unit.frequency_hz), unit.workload->name);
        for (const std::filesystem::path& f : files[i]) result.files.push_back(f);
    }
    std::sort(result.files.begin(), result.files.end());
    return result;
}

OracleCheckReport oracle_check(const ModelLut& truth, const ModelLut& trained,
                               const std::map<CorpusKey, MergedTrace>& validation) {
    OracleCheckReport report;

    auto check_entry = [&](Subsystem d, std::uint64_t f) {
        OracleCheckEntry entry;
        entry.subsystem = d;
        entry.frequency_hz = f;

        const auto val_it = validation.find(CorpusKey{d, f});
        if (val_it == validation.end()) {
            throw Error(ErrorKind::MissingCoverage,
                        "oracle_check: no validation trace at " + std::to_string(f) + " Hz");
        }
        const MergedTrace& trace = val_it->second;
        const std::vector<double> est_true = predict_rows_serial(truth, trace);
        const std::vector<double> est_trained = predict_rows_serial(trained, trace);
        const double e_true = energy_joules(est_true, trace.duration);
        const double e_trained = energy_joules(est_trained, trace.duration);
        if (e_true == 0.0) {
            throw Error(ErrorKind::Validation, "oracle_check: zero true energy");
        }
        entry.energy_err_pct = std::abs(e_trained - e_true) / e_true * 100.0;

        if (d == Subsystem::Cpu) {
            const CpuModel& t = truth.cpu.at(f);
            const CpuModel& m = lut_lookup_cpu(trained, f);
            std::vector<std::string> ts = t.counters, ms = m.counters;
            std::sort(ts.begin(), ts.end());
            std::sort(ms.begin(), ms.end());
            entry.support_match = ts == ms && t.gate_weights.size() == m.gate_weights.size();
            if (entry.support_match) {
                double worst = std::abs(t.base - m.base);
                for (std::size_t i = 0; i < t.gate_weights.size(); ++i) {
                    worst = std::max(worst, std::abs(t.gate_weights[i] - m.gate_weights[i]));
                }
                for (std::size_t i = 0; i < t.gate_weights.size(); ++i) {
                    for (std::size_t j = 0; j < t.counters.size(); ++j) {
                        const auto mj = std::find(m.counters.begin(), m.counters.end(),
                                                  t.counters[j]) -
                                        m.counters.begin();
                        worst = std::max(
                            worst,
                            std::abs(t.activity_weights[i * t.counters.size() + j] -
                                     m.activity_weights[i * m.counters.size() +
                                                        static_cast<std::size_t>(mj)]));
                    }
                }
                entry.max_weight_abs_diff = worst;
            }
        } else {
            const GpuModel& t = truth.gpu.at(f);
            const GpuModel& m = lut_lookup_gpu(trained, f);
            std::vector<std::string> ts = t.counters, ms = m.counters;
            std::sort(ts.begin(), ts.end());
            std::sort(ms.begin(), ms.end());
            entry.support_match = ts == ms;
            if (entry.support_match) {
                double worst = std::abs(t.base - m.base);
                for (std::size_t j = 0; j < t.counters.size(); ++j) {
                    const auto mj = std::find(m.counters.begin(), m.counters.end(), t.counters[j]) -
                                    m.counters.begin();
                    worst = std::max(worst, std::abs(t.weights[j] -
                                                     m.weights[static_cast<std::size_t>(mj)]));
                }
                entry.max_weight_abs_diff = worst;
            }
        }
        report.entries.push_back(entry);
        report.max_energy_err_pct = std::max(report.max_energy_err_pct, entry.energy_err_pct);
    };

    for (const auto& [f, model] : truth.cpu) check_entry(Subsystem::Cpu, f);
    for (const auto& [f, model] : truth.gpu) check_entry(Subsystem::Gpu, f);
    return report;
}

}  // namespace lutpower
