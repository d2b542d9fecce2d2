#include "lutpower/train.hpp"

#include <algorithm>
#include <cmath>
#include <exception>

#include <nlohmann/json.hpp>

#include "lutpower/csv.hpp"
#include "lutpower/errors.hpp"

namespace lutpower {

DesignMatrix build_design(const MergedTrace& trace, const CounterSet& counters) {
    if (counters.subsystem != trace.subsystem) {
        throw Error(ErrorKind::Validation, "build_design: counter set subsystem mismatch");
    }
    if (trace.rows == 0) {
        throw Error(ErrorKind::Validation, "build_design: empty trace");
    }

    DesignMatrix design;
    const std::size_t n = trace.rows;
    const std::size_t j_count = counters.counters.size();

    std::vector<std::size_t> event_cols(j_count);
    for (std::size_t j = 0; j < j_count; ++j) {
        event_cols[j] = trace.event_index(counters.counters[j]);
    }

    if (trace.subsystem == Subsystem::Cpu) {
        const std::size_t cores = static_cast<std::size_t>(trace.core_count);
        if (trace.gating.empty()) {
            throw Error(ErrorKind::MissingKey,
                        "build_design: CPU trace has no gating (cycles columns missing)");
        }
        const std::size_t p = 1 + cores + cores * j_count;
        design.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
        design.column_names.reserve(p);
        design.column_names.push_back("const");
        for (std::size_t i = 0; i < cores; ++i) {
            design.column_names.push_back("g.c" + std::to_string(i));
        }
        for (std::size_t i = 0; i < cores; ++i) {
            for (std::size_t j = 0; j < j_count; ++j) {
                design.column_names.push_back("cpu.c" + std::to_string(i) + "." +
                                              counters.counters[j]);
            }
        }
        for (std::size_t r = 0; r < n; ++r) {
            design.values(static_cast<Eigen::Index>(r), 0) = 1.0;
            for (std::size_t i = 0; i < cores; ++i) {
                design.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(1 + i)) =
                    trace.gating[r * cores + i];
            }
            std::size_t col = 1 + cores;
            for (std::size_t i = 0; i < cores; ++i) {
                for (std::size_t j = 0; j < j_count; ++j) {
                    design.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(col++)) =
                        trace.rate(r, i, event_cols[j]);
                }
            }
        }
    } else {
        const std::size_t p = 1 + j_count;
        design.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
        design.column_names.reserve(p);
        design.column_names.push_back("const");
        for (std::size_t j = 0; j < j_count; ++j) {
            design.column_names.push_back("gpu." + counters.counters[j]);
        }
        for (std::size_t r = 0; r < n; ++r) {
            design.values(static_cast<Eigen::Index>(r), 0) = 1.0;
            for (std::size_t j = 0; j < j_count; ++j) {
                design.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(1 + j)) =
                    trace.rate(r, event_cols[j]);
            }
        }
    }

    design.target.resize(static_cast<Eigen::Index>(n));
    for (std::size_t r = 0; r < n; ++r) {
        design.target[static_cast<Eigen::Index>(r)] = trace.power[r];
    }
    if (!design.values.allFinite() || !design.target.allFinite()) {
        throw Error(ErrorKind::Validation, "build_design: non-finite value in predictors/target");
    }
    design.underdetermined = design.values.rows() < design.values.cols();
    return design;
}

namespace {

NnlsSolution fit(const DesignMatrix& design, TrainDiagnostics* diag) {
    NnlsSolution solution = nnls(design.values, design.target);
    if (diag) {
        diag->solution = solution;
        diag->underdetermined = design.underdetermined;
    }
    return solution;
}

}  // namespace

CpuModel train_cpu_model(const MergedTrace& train, const CounterSet& counters,
                         TrainDiagnostics* diag) {
    if (train.subsystem != Subsystem::Cpu) {
        throw Error(ErrorKind::Validation, "train_cpu_model: not a CPU trace");
    }
    const DesignMatrix design = build_design(train, counters);
    const NnlsSolution solution = fit(design, diag);

    CpuModel model;
    model.frequency_hz = train.frequency_hz;
    model.counters = counters.counters;
    const std::size_t cores = static_cast<std::size_t>(train.core_count);
    const std::size_t j_count = counters.counters.size();
    model.base = solution.weights[0];
    model.gate_weights.resize(cores);
    for (std::size_t i = 0; i < cores; ++i) {
        model.gate_weights[i] = solution.weights[static_cast<Eigen::Index>(1 + i)];
    }
    model.activity_weights.resize(cores * j_count);
    for (std::size_t i = 0; i < cores * j_count; ++i) {
        model.activity_weights[i] = solution.weights[static_cast<Eigen::Index>(1 + cores + i)];
    }
    return model;
}

GpuModel train_gpu_model(const MergedTrace& train, const CounterSet& counters,
                         TrainDiagnostics* diag) {
    if (train.subsystem != Subsystem::Gpu) {
        throw Error(ErrorKind::Validation, "train_gpu_model: not a GPU trace");
    }
    const DesignMatrix design = build_design(train, counters);
    const NnlsSolution solution = fit(design, diag);

    GpuModel model;
    model.frequency_hz = train.frequency_hz;
    model.counters = counters.counters;
    model.base = solution.weights[0];
    model.weights.resize(counters.counters.size());
    for (std::size_t j = 0; j < model.weights.size(); ++j) {
        model.weights[j] = solution.weights[static_cast<Eigen::Index>(1 + j)];
    }
    return model;
}

TrainedModel train_model(const MergedTrace& train, const CounterSet& counters,
                         TrainDiagnostics* diag) {
    if (train.subsystem == Subsystem::Cpu) {
        return train_cpu_model(train, counters, diag);
    }
    return train_gpu_model(train, counters, diag);
}

ModelLut train_lut(const std::map<CorpusKey, TrainingJob>& jobs, const std::string& platform) {
    ModelLut lut;
    lut.platform = platform;

    std::vector<const std::pair<const CorpusKey, TrainingJob>*> items;
    items.reserve(jobs.size());
    for (const auto& entry : jobs) items.push_back(&entry);

    std::vector<TrainedModel> models(items.size());
    std::vector<std::exception_ptr> errors(items.size());

    const std::ptrdiff_t count = static_cast<std::ptrdiff_t>(items.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t idx = 0; idx < count; ++idx) {
        try {
            const TrainingJob& job = items[idx]->second;
            std::vector<MergedTrace> ordered = job.traces;
            std::sort(ordered.begin(), ordered.end(),
                      [](const MergedTrace& a, const MergedTrace& b) {
                          return a.workload < b.workload;
                      });
            const MergedTrace all = concat(ordered);
            const MergedTrace train_part = split(all, job.train_fraction).first;
            models[idx] = train_model(train_part, job.counters);
        } catch (...) {
            errors[idx] = std::current_exception();
        }
    }
    for (std::size_t i = 0; i < errors.size(); ++i) {
        if (errors[i]) std::rethrow_exception(errors[i]);
    }

    for (std::size_t i = 0; i < models.size(); ++i) {
        if (auto* cpu = std::get_if<CpuModel>(&models[i])) {
            lut.cpu.emplace(cpu->frequency_hz, std::move(*cpu));
        } else {
            GpuModel& gpu = std::get<GpuModel>(models[i]);
            lut.gpu.emplace(gpu.frequency_hz, std::move(gpu));
        }
    }
    return lut;
}

namespace {

using nlohmann::json;

std::map<CorpusKey, CounterSet> counter_sets_from_json(const json& doc, const std::string& origin) {
    std::map<CorpusKey, CounterSet> out;
    try {
        for (const std::string sub : {"cpu", "gpu"}) {
            if (!doc.contains(sub)) continue;
            const Subsystem subsystem = subsystem_from_string(sub);
            for (const auto& [freq_str, events] : doc.at(sub).items()) {
                CounterSet set;
                set.subsystem = subsystem;
                set.frequency_hz = std::stoull(freq_str);
                set.counters = events.get<std::vector<std::string>>();
                out.emplace(CorpusKey{subsystem, set.frequency_hz}, std::move(set));
            }
        }
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Parse, origin + ": " + e.what());
    } catch (const std::invalid_argument&) {
        throw Error(ErrorKind::Parse, origin + ": non-numeric frequency key");
    }
    return out;
}

}  // namespace

std::map<CorpusKey, CounterSet> load_counter_sets(const std::filesystem::path& path) {
    json doc;
    try {
        doc = json::parse(csv::read_file(path));
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Parse, path.string() + ": " + e.what());
    }
    return counter_sets_from_json(doc, path.string());
}

void save_counter_sets(const std::map<CorpusKey, CounterSet>& sets,
                       const std::filesystem::path& path) {
    json doc{{"cpu", json::object()}, {"gpu", json::object()}};
    for (const auto& [key, set] : sets) {
        doc[to_string(key.first)][std::to_string(key.second)] = set.counters;
    }
    csv::write_file_atomic(path, doc.dump(2) + "\n");
}

TrainingManifest load_manifest(const std::filesystem::path& path) {
    json doc;
    try {
        doc = json::parse(csv::read_file(path));
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Parse, path.string() + ": " + e.what());
    }

    TrainingManifest manifest;
    const std::filesystem::path base = path.has_parent_path()
                                           ? path.parent_path()
                                           : std::filesystem::path(".");
    try {
        manifest.platform = doc.value("platform", std::string("unnamed"));

        for (const std::string sub : {"cpu", "gpu"}) {
            if (!doc.at("traces").contains(sub)) continue;
            const Subsystem subsystem = subsystem_from_string(sub);
            for (const auto& [freq_str, files] : doc.at("traces").at(sub).items()) {
                const std::uint64_t freq = std::stoull(freq_str);
                std::vector<std::filesystem::path>& out =
                    manifest.trace_files[CorpusKey{subsystem, freq}];
                for (const auto& f : files) {
                    std::filesystem::path p = f.get<std::string>();
                    out.push_back(p.is_absolute() ? p : base / p);
                }
            }
        }

        if (doc.contains("train_fraction")) {
            const auto& tf = doc.at("train_fraction");
            if (tf.is_number()) {
                manifest.cpu_train_fraction = manifest.gpu_train_fraction = tf.get<double>();
            } else {
                manifest.cpu_train_fraction = tf.value("cpu", manifest.cpu_train_fraction);
                manifest.gpu_train_fraction = tf.value("gpu", manifest.gpu_train_fraction);
            }
        }

        if (doc.contains("counters")) {
            const auto& c = doc.at("counters");
            if (c.is_string()) {
                std::filesystem::path p = c.get<std::string>();
                manifest.counter_sets = load_counter_sets(p.is_absolute() ? p : base / p);
            } else {
                manifest.counter_sets = counter_sets_from_json(c, path.string());
            }
        }
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Parse, path.string() + ": " + e.what());
    } catch (const std::invalid_argument&) {
        throw Error(ErrorKind::Parse, path.string() + ": non-numeric frequency key");
    }
    return manifest;
}

}  // namespace lutpower
