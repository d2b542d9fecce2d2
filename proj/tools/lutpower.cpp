// Command-line front end wiring the pipeline stages into reproducible
// commands: synth -> characterize -> train -> eval / predict / sweep.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "lutpower/characterize.hpp"
#include "lutpower/corpus.hpp"
#include "lutpower/csv.hpp"
#include "lutpower/errors.hpp"
#include "lutpower/evaluate.hpp"
#include "lutpower/model.hpp"
#include "lutpower/oracle.hpp"
#include "lutpower/synthetic.hpp"
#include "lutpower/train.hpp"

namespace {

using namespace lutpower;
namespace fs = std::filesystem;

struct Options {
    std::string root;
    std::string out;
    std::uint64_t seed = 0;
    int jobs = 0;
    double alpha = 0.05;
    int k = 0;        // 0: per-subsystem defaults
    int k_cpu = 3;    // paper-shaped defaults: 3 events/core + cycles, 8 GPU events
    int k_gpu = 8;
    double train_frac = 0.0;  // 0: per-subsystem defaults (cpu 0.7, gpu 0.6)
    std::string oracle;
    std::string cpu_oracle;
    std::string gpu_oracle;
    bool quiet = false;
};

void apply_jobs(int jobs) {
#ifdef _OPENMP
    if (jobs > 0) omp_set_num_threads(jobs);
#else
    (void)jobs;
#endif
}

void print_trace_warnings(const std::map<CorpusKey, std::vector<MergedTrace>>& corpus,
                          bool quiet) {
    if (quiet) return;
    for (const auto& [key, traces] : corpus) {
        for (const MergedTrace& t : traces) {
            const MergeStats& s = t.stats;
            if (s.truncated_samples > 0) {
                std::fprintf(stderr, "warning: %s/%llu/%s: %zu samples dropped (pass length mismatch)\n",
                             to_string(key.first), (unsigned long long)key.second,
                             t.workload.c_str(), s.truncated_samples);
            }
            if (s.gating_clamped > 0) {
                std::fprintf(stderr, "warning: %s/%llu/%s: %zu gating values clamped to 1\n",
                             to_string(key.first), (unsigned long long)key.second,
                             t.workload.c_str(), s.gating_clamped);
            }
            if (s.divergent_passes > 0) {
                std::fprintf(stderr,
                             "warning: %s/%llu/%s: %zu passes diverge >10%% in mean power\n",
                             to_string(key.first), (unsigned long long)key.second,
                             t.workload.c_str(), s.divergent_passes);
            }
        }
    }
}

std::unique_ptr<CompatibilityOracle> oracle_for(const Options& opt, Subsystem subsystem,
                                                std::size_t k) {
    const std::string& specific = subsystem == Subsystem::Cpu ? opt.cpu_oracle : opt.gpu_oracle;
    if (!specific.empty()) return load_oracle(specific);
    if (!opt.oracle.empty()) return load_oracle(opt.oracle);
    return std::make_unique<CapacityOracle>(k);
}

std::size_t k_for(const Options& opt, Subsystem subsystem) {
    if (opt.k > 0) return static_cast<std::size_t>(opt.k);
    return static_cast<std::size_t>(subsystem == Subsystem::Cpu ? opt.k_cpu : opt.k_gpu);
}

double train_frac_for(const Options& opt, Subsystem subsystem) {
    if (opt.train_frac > 0.0) return opt.train_frac;
    return subsystem == Subsystem::Cpu ? 0.7 : 0.6;
}

int cmd_synth(const Options& opt, const std::string& spec_path, bool zero_noise,
              const std::string& write_spec) {
    PlatformSpec spec = spec_path.empty() ? default_platform_spec()
                                          : load_platform_spec(spec_path);
    if (zero_noise) {
        spec.noise_sigma = 0.0;
        spec.quantization_w = 0.0;
    }
    if (!write_spec.empty()) save_platform_spec(spec, write_spec);

    const fs::path out = opt.out;
    const GenerateResult result = generate_corpus(spec, opt.seed, out);
    save_model(result.truth.lut, out / "ground_truth.json");

    nlohmann::json cpu_oracle{{"max_simultaneous", spec.cpu_oracle.max_simultaneous},
                              {"exclusive_groups", spec.cpu_oracle.exclusive_groups}};
    nlohmann::json gpu_oracle{{"max_simultaneous", spec.gpu_oracle.max_simultaneous},
                              {"exclusive_groups", spec.gpu_oracle.exclusive_groups}};
    csv::write_file_atomic(out / "cpu_oracle.json", cpu_oracle.dump(2) + "\n");
    csv::write_file_atomic(out / "gpu_oracle.json", gpu_oracle.dump(2) + "\n");

    std::printf("wrote %zu trace files, ground_truth.json and oracle files under %s\n",
                result.files.size(), out.string().c_str());
    return 0;
}

int cmd_characterize(const Options& opt) {
    const auto corpus = load_corpus(opt.root);
    print_trace_warnings(corpus, opt.quiet);

    const fs::path out = opt.out;
    fs::create_directories(out);
    std::map<CorpusKey, CounterSet> sets;
    for (const auto& [key, traces] : corpus) {
        const auto oracle = oracle_for(opt, key.first, k_for(opt, key.first));
        const Ranking ranking = characterize(traces, opt.alpha);
        const SelectionResult selection = select_counters(ranking, *oracle, k_for(opt, key.first));
        const fs::path csv_path = out / ("ranking_" + std::string(to_string(key.first)) + "_" +
                                         std::to_string(key.second) + ".csv");
        csv::write_file_atomic(csv_path, ranking_to_csv(ranking, selection));
        sets.emplace(key, selection.set);
    }
    save_counter_sets(sets, out / "counter_sets.json");
    std::printf("characterized %zu (subsystem, frequency) combinations -> %s\n", sets.size(),
                out.string().c_str());
    return 0;
}

int cmd_train(const Options& opt, const std::string& counters_path,
              const std::string& manifest_path, const std::string& platform) {
    std::map<CorpusKey, TrainingJob> jobs;
    std::string platform_name = platform;
    double cpu_frac = train_frac_for(opt, Subsystem::Cpu);
    double gpu_frac = train_frac_for(opt, Subsystem::Gpu);
    std::string counter_source;

    if (!manifest_path.empty()) {
        const TrainingManifest manifest = load_manifest(manifest_path);
        if (platform_name.empty()) platform_name = manifest.platform;
        if (opt.train_frac <= 0.0) {
            cpu_frac = manifest.cpu_train_fraction;
            gpu_frac = manifest.gpu_train_fraction;
        }
        counter_source = manifest_path;
        for (const auto& [key, files] : manifest.trace_files) {
            const auto set_it = manifest.counter_sets.find(key);
            if (set_it == manifest.counter_sets.end()) {
                throw Error(ErrorKind::MissingCoverage,
                            "manifest has traces but no counter set at " +
                                std::string(to_string(key.first)) + "/" +
                                std::to_string(key.second));
            }
            std::map<std::string, std::vector<TraceSegment>> by_workload;
            for (const fs::path& f : files) {
                TraceSegment seg = load_trace(f);
                by_workload[seg.workload].push_back(std::move(seg));
            }
            TrainingJob job;
            for (auto& [workload, segments] : by_workload) {
                job.traces.push_back(merge_passes(segments));
            }
            job.counters = set_it->second;
            job.train_fraction = key.first == Subsystem::Cpu ? cpu_frac : gpu_frac;
            jobs.emplace(key, std::move(job));
        }
    } else {
        if (counters_path.empty()) {
            throw Error(ErrorKind::InvalidArgument, "train needs --counters or --manifest");
        }
        counter_source = counters_path;
        const auto corpus = load_corpus(opt.root);
        print_trace_warnings(corpus, opt.quiet);
        const auto sets = load_counter_sets(counters_path);
        if (sets.empty()) {
            throw Error(ErrorKind::Parse, counters_path + ": no counter sets");
        }
        for (const auto& [key, set] : sets) {
            const auto corpus_it = corpus.find(key);
            if (corpus_it == corpus.end()) {
                throw Error(ErrorKind::MissingCoverage,
                            "no traces for " + std::string(to_string(key.first)) + " at " +
                                std::to_string(key.second) + " Hz under " + opt.root);
            }
            TrainingJob job;
            job.traces = corpus_it->second;
            job.counters = set;
            job.train_fraction = key.first == Subsystem::Cpu ? cpu_frac : gpu_frac;
            jobs.emplace(key, std::move(job));
        }
    }
    if (platform_name.empty()) platform_name = "unnamed";

    ModelLut lut = train_lut(jobs, platform_name);
    lut.provenance = nlohmann::json{
        {"tool", "lutpower"},
        {"train_fraction", nlohmann::json{{"cpu", cpu_frac}, {"gpu", gpu_frac}}},
        {"counter_source", counter_source},
        {"corpus_root", manifest_path.empty() ? opt.root : std::string()},
    };
    save_model(lut, opt.out);
    std::printf("trained %zu CPU + %zu GPU models -> %s\n", lut.cpu.size(), lut.gpu.size(),
                opt.out.c_str());
    return 0;
}

std::pair<std::map<std::uint64_t, MergedTrace>, std::map<std::uint64_t, MergedTrace>>
validation_split_for_lut(const ModelLut& lut,
                         const std::map<CorpusKey, std::vector<MergedTrace>>& corpus,
                         double cpu_frac, double gpu_frac) {
    std::map<std::uint64_t, MergedTrace> cpu_val, gpu_val;
    for (const auto& [f, model] : lut.cpu) {
        const auto it = corpus.find(CorpusKey{Subsystem::Cpu, f});
        if (it == corpus.end()) {
            throw Error(ErrorKind::MissingCoverage,
                        "no CPU traces at " + std::to_string(f) + " Hz");
        }
        cpu_val.emplace(f, split(corpus_concat(it->second), cpu_frac).second);
    }
    for (const auto& [f, model] : lut.gpu) {
        const auto it = corpus.find(CorpusKey{Subsystem::Gpu, f});
        if (it == corpus.end()) {
            throw Error(ErrorKind::MissingCoverage,
                        "no GPU traces at " + std::to_string(f) + " Hz");
        }
        gpu_val.emplace(f, split(corpus_concat(it->second), gpu_frac).second);
    }
    return {std::move(cpu_val), std::move(gpu_val)};
}

int cmd_eval(const Options& opt, const std::string& model_path, double floor_w,
             bool dump_estimates) {
    const ModelLut lut = load_model(model_path);
    const auto corpus = load_corpus(opt.root);
    print_trace_warnings(corpus, opt.quiet);

    double cpu_frac = train_frac_for(opt, Subsystem::Cpu);
    double gpu_frac = train_frac_for(opt, Subsystem::Gpu);
    if (opt.train_frac <= 0.0 && lut.provenance.contains("train_fraction")) {
        const auto& tf = lut.provenance.at("train_fraction");
        cpu_frac = tf.value("cpu", cpu_frac);
        gpu_frac = tf.value("gpu", gpu_frac);
    }

    auto [cpu_val, gpu_val] = validation_split_for_lut(lut, corpus, cpu_frac, gpu_frac);
    const EvaluationReport report = evaluate_grid(lut, cpu_val, gpu_val, floor_w);

    const fs::path out = opt.out;
    fs::create_directories(out);
    csv::write_file_atomic(out / "report.csv", report_to_csv(report));
    const std::string table = report_to_table(report);
    csv::write_file_atomic(out / "report.txt", table);
    std::fputs(table.c_str(), stdout);

    if (dump_estimates) {
        std::map<std::uint64_t, std::vector<double>> cpu_est, gpu_est;
        for (const auto& [f, trace] : cpu_val) cpu_est[f] = predict_rows_parallel(lut, trace);
        for (const auto& [f, trace] : gpu_val) gpu_est[f] = predict_rows_parallel(lut, trace);
        for (const auto& [fc, cpu_trace] : cpu_val) {
            for (const auto& [fg, gpu_trace] : gpu_val) {
                const std::size_t n = std::min(cpu_trace.rows, gpu_trace.rows);
                std::string body = "index,est_total_w,est_cpu_w,est_gpu_w,meas_total_w\n";
                for (std::size_t i = 0; i < n; ++i) {
                    body += std::to_string(i);
                    body += ',';
                    body += csv::format_double(cpu_est[fc][i] + gpu_est[fg][i]);
                    body += ',';
                    body += csv::format_double(cpu_est[fc][i]);
                    body += ',';
                    body += csv::format_double(gpu_est[fg][i]);
                    body += ',';
                    body += csv::format_double(cpu_trace.power[i] + gpu_trace.power[i]);
                    body += '\n';
                }
                csv::write_file_atomic(out / ("estimates_" + std::to_string(fc) + "_" +
                                              std::to_string(fg) + ".csv"),
                                       body);
            }
        }
    }
    return 0;
}

// Column layout of a prediction input row, resolved once from the header.
struct PredictLayout {
    int ts_col = -1;
    int dur_col = -1;
    std::vector<int> cycles_col;             // per core
    std::vector<int> cpu_rate_col;           // core-major cores x counters
    std::vector<int> gpu_rate_col;           // per counter
};

PredictLayout bind_predict_header(const std::vector<std::string>& header, const CpuModel* cpu,
                                  const GpuModel* gpu) {
    PredictLayout layout;
    auto find_col = [&header](const std::string& name) {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) return static_cast<int>(i);
        }
        return -1;
    };
    layout.ts_col = find_col("timestamp_s");
    layout.dur_col = find_col("duration_s");
    if (layout.ts_col < 0 || layout.dur_col < 0) {
        throw Error(ErrorKind::Parse, "input header needs timestamp_s and duration_s columns");
    }
    if (cpu) {
        for (int core = 0; core < cpu->core_count(); ++core) {
            const std::string col = "cpu.c" + std::to_string(core) + ".cycles";
            const int idx = find_col(col);
            if (idx < 0) throw Error(ErrorKind::MissingKey, "input lacks column '" + col + "'");
            layout.cycles_col.push_back(idx);
        }
        for (int core = 0; core < cpu->core_count(); ++core) {
            for (const std::string& counter : cpu->counters) {
                const std::string col = "cpu.c" + std::to_string(core) + "." + counter;
                const int idx = find_col(col);
                if (idx < 0) throw Error(ErrorKind::MissingKey, "input lacks column '" + col + "'");
                layout.cpu_rate_col.push_back(idx);
            }
        }
    }
    if (gpu) {
        for (const std::string& counter : gpu->counters) {
            const std::string col = "gpu." + counter;
            const int idx = find_col(col);
            if (idx < 0) throw Error(ErrorKind::MissingKey, "input lacks column '" + col + "'");
            layout.gpu_rate_col.push_back(idx);
        }
    }
    return layout;
}

int cmd_predict(const Options& opt, const std::string& model_path, const std::string& input,
                std::uint64_t f_cpu, std::uint64_t f_gpu, bool bench, std::size_t repetitions) {
    const ModelLut lut = load_model(model_path);
    if (f_cpu == 0 && f_gpu == 0) {
        throw Error(ErrorKind::InvalidArgument, "predict needs --f-cpu and/or --f-gpu");
    }
    const CpuModel* cpu = f_cpu ? &lut_lookup_cpu(lut, f_cpu) : nullptr;
    const GpuModel* gpu = f_gpu ? &lut_lookup_gpu(lut, f_gpu) : nullptr;
    const SystemPredictor predictor(cpu, gpu);

    std::ifstream file;
    std::istream* in = &std::cin;
    if (!input.empty() && input != "-") {
        file.open(input);
        if (!file) throw Error(ErrorKind::Io, "cannot open '" + input + "'");
        in = &file;
    }

    std::string line;
    if (!std::getline(*in, line)) {
        throw Error(ErrorKind::Parse, "empty prediction input");
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::vector<std::string> header = csv::split_line(line);
    const PredictLayout layout = bind_predict_header(header, cpu, gpu);

    const std::size_t cores = cpu ? static_cast<std::size_t>(cpu->core_count()) : 0;
    const std::size_t cpu_stride = cpu ? cores * cpu->counters.size() : 0;
    const std::size_t gpu_stride = gpu ? gpu->counters.size() : 0;

    std::vector<double> gating(cores), cpu_rates(cpu_stride), gpu_rates(gpu_stride);
    std::vector<double> bench_gating, bench_cpu, bench_gpu;

    std::string out_text = "timestamp_s,total_w,cpu_w,gpu_w\n";
    bool any_bad = false;
    std::size_t row_no = 0;
    std::size_t rows_ok = 0;
    while (std::getline(*in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        ++row_no;
        try {
            const std::vector<std::string> fields = csv::split_line(line);
            if (fields.size() != header.size()) {
                throw Error(ErrorKind::Parse, "expected " + std::to_string(header.size()) +
                                                  " fields, got " + std::to_string(fields.size()));
            }
            const std::string ctx = "row " + std::to_string(row_no);
            const double ts = csv::parse_double(fields[layout.ts_col], ctx);
            const double dur = csv::parse_double(fields[layout.dur_col], ctx);
            if (dur <= 0.0) throw Error(ErrorKind::Validation, ctx + ": duration must be positive");
            if (cpu) {
                for (std::size_t i = 0; i < cores; ++i) {
                    const double cycles = csv::parse_double(fields[layout.cycles_col[i]], ctx);
                    gating[i] = gating_metric(cycles, dur, static_cast<double>(f_cpu));
                }
                for (std::size_t i = 0; i < cpu_stride; ++i) {
                    cpu_rates[i] = csv::parse_double(fields[layout.cpu_rate_col[i]], ctx) / dur;
                }
            }
            if (gpu) {
                for (std::size_t i = 0; i < gpu_stride; ++i) {
                    gpu_rates[i] = csv::parse_double(fields[layout.gpu_rate_col[i]], ctx) / dur;
                }
            }
            const SystemPower p =
                predictor.evaluate(gating.data(), cpu_rates.data(), gpu_rates.data());
            out_text += csv::format_double(ts);
            out_text += ',';
            out_text += csv::format_double(p.total_w);
            out_text += ',';
            out_text += csv::format_double(p.cpu_w);
            out_text += ',';
            out_text += csv::format_double(p.gpu_w);
            out_text += '\n';
            ++rows_ok;
            if (bench) {
                bench_gating.insert(bench_gating.end(), gating.begin(), gating.end());
                bench_cpu.insert(bench_cpu.end(), cpu_rates.begin(), cpu_rates.end());
                bench_gpu.insert(bench_gpu.end(), gpu_rates.begin(), gpu_rates.end());
            }
        } catch (const Error& e) {
            any_bad = true;
            if (!opt.quiet) std::fprintf(stderr, "row %zu skipped: %s\n", row_no, e.what());
        }
    }

    if (bench) {
        if (rows_ok == 0) throw Error(ErrorKind::Validation, "no usable rows for --bench");
        const LatencyStats stats =
            measure_latency(predictor, bench_gating, bench_cpu, bench_gpu, rows_ok, repetitions);
        std::printf("evaluations: %zu\nmean_ns: %.1f\np99_ns: %.1f\n", stats.repetitions,
                    stats.mean_ns, stats.p99_ns);
    } else if (!opt.out.empty()) {
        csv::write_file_atomic(opt.out, out_text);
    } else {
        std::fputs(out_text.c_str(), stdout);
    }
    return any_bad ? 2 : 0;
}

int cmd_sweep(const Options& opt, const std::string& subsystem_name, std::size_t k_max) {
    const Subsystem subsystem = subsystem_from_string(subsystem_name);
    const auto corpus = load_corpus(opt.root, subsystem);
    print_trace_warnings(corpus, opt.quiet);
    const double frac = train_frac_for(opt, subsystem);

    std::map<std::uint64_t, Ranking> rankings;
    std::map<std::uint64_t, MergedTrace> train_map, val_map;
    for (const auto& [key, traces] : corpus) {
        if (key.first != subsystem) continue;
        auto [train_part, val_part] = split(corpus_concat(traces), frac);
        rankings.emplace(key.second, characterize(train_part, opt.alpha));
        train_map.emplace(key.second, std::move(train_part));
        val_map.emplace(key.second, std::move(val_part));
    }
    if (rankings.empty()) {
        throw Error(ErrorKind::MissingCoverage,
                    "no " + subsystem_name + " traces under " + opt.root);
    }

    const auto oracle = oracle_for(opt, subsystem, k_max);
    const SweepResult result = sweep_predictor_count(rankings, *oracle, k_max, train_map, val_map);

    std::string body = "k,mean_energy_err_pct\n";
    for (const SweepPoint& point : result.curve) {
        body += std::to_string(point.k);
        body += ',';
        body += csv::format_double(point.mean_energy_err_pct);
        body += '\n';
    }
    if (!opt.out.empty()) {
        csv::write_file_atomic(opt.out, body);
    } else {
        std::fputs(body.c_str(), stdout);
    }
    std::printf("best k: %zu\n", result.best_k);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"LUT-based, DVFS-aware performance-counter power modeling toolkit"};
    app.require_subcommand(1);
    app.fallthrough();

    Options opt;
    app.add_option("--root", opt.root, "corpus root directory");
    app.add_option("--out", opt.out, "output file or directory");
    app.add_option("--seed", opt.seed, "RNG seed (all randomness derives from it)");
    app.add_option("--jobs", opt.jobs, "worker thread count (0 = hardware default)");
    app.add_option("--alpha", opt.alpha, "p-value significance threshold")->check(CLI::Range(0.0, 1.0));
    app.add_option("--k", opt.k, "counter budget for both subsystems");
    app.add_option("--k-cpu", opt.k_cpu, "CPU counter budget (default 3)");
    app.add_option("--k-gpu", opt.k_gpu, "GPU counter budget (default 8)");
    app.add_option("--train-frac", opt.train_frac,
                   "training fraction for both subsystems (defaults: cpu 0.7, gpu 0.6)");
    app.add_option("--oracle", opt.oracle, "PMU compatibility oracle JSON (both subsystems)");
    app.add_option("--cpu-oracle", opt.cpu_oracle, "CPU-specific oracle JSON");
    app.add_option("--gpu-oracle", opt.gpu_oracle, "GPU-specific oracle JSON");
    app.add_flag("--quiet", opt.quiet, "suppress data-quality warnings");

    // synth
    auto* synth = app.add_subcommand("synth", "generate a ground-truth-known synthetic corpus");
    std::string spec_path, write_spec;
    bool zero_noise = false;
    synth->add_option("--spec", spec_path, "platform spec JSON (default: built-in demo platform)");
    synth->add_flag("--zero-noise", zero_noise, "disable measurement noise and quantization");
    synth->add_option("--write-spec", write_spec, "also write the effective spec JSON here");

    auto* characterize_cmd =
        app.add_subcommand("characterize", "rank events by PCC and select counter sets");

    std::string counters_path, manifest_path, platform_name;
    auto* train = app.add_subcommand("train", "fit NNLS models and assemble the model LUT");
    train->add_option("--counters", counters_path, "counter_sets.json from characterize");
    train->add_option("--manifest", manifest_path, "training manifest JSON");
    train->add_option("--platform", platform_name, "platform name stored in the model file");

    std::string model_path;
    double floor_w = 0.2;
    bool dump_estimates = false;
    auto* eval = app.add_subcommand("eval", "evaluate a model LUT on held-out data");
    eval->add_option("--model", model_path, "model JSON")->required();
    eval->add_option("--floor", floor_w, "power floor in watts for MAPE exclusion (default 0.2)");
    eval->add_flag("--dump-estimates", dump_estimates, "write per-sample estimate CSVs");

    std::string predict_model, predict_input;
    std::uint64_t f_cpu = 0, f_gpu = 0;
    bool bench = false;
    std::size_t repetitions = 1000000;
    auto* predict = app.add_subcommand("predict", "stream power estimates for counter rows");
    predict->add_option("--model", predict_model, "model JSON")->required();
    predict->add_option("--input", predict_input, "input CSV ('-' or empty: stdin)");
    predict->add_option("--f-cpu", f_cpu, "CPU DVFS state in Hz");
    predict->add_option("--f-gpu", f_gpu, "GPU DVFS state in Hz");
    predict->add_flag("--bench", bench, "measure evaluation latency instead of streaming");
    predict->add_option("--reps", repetitions, "latency benchmark repetitions (default 1e6)");

    std::string sweep_subsystem = "gpu";
    std::size_t k_max = 10;
    auto* sweep = app.add_subcommand("sweep", "energy error vs number of model predictors");
    sweep->add_option("--subsystem", sweep_subsystem, "cpu or gpu (default gpu)");
    sweep->add_option("--k-max", k_max, "largest counter budget to try");

    CLI11_PARSE(app, argc, argv);
    apply_jobs(opt.jobs);

    try {
        if (synth->parsed()) {
            if (opt.out.empty()) throw Error(ErrorKind::InvalidArgument, "synth needs --out");
            return cmd_synth(opt, spec_path, zero_noise, write_spec);
        }
        if (characterize_cmd->parsed()) {
            if (opt.root.empty() || opt.out.empty()) {
                throw Error(ErrorKind::InvalidArgument, "characterize needs --root and --out");
            }
            return cmd_characterize(opt);
        }
        if (train->parsed()) {
            if (opt.out.empty()) throw Error(ErrorKind::InvalidArgument, "train needs --out");
            return cmd_train(opt, counters_path, manifest_path, platform_name);
        }
        if (eval->parsed()) {
            if (opt.root.empty() || opt.out.empty()) {
                throw Error(ErrorKind::InvalidArgument, "eval needs --root and --out");
            }
            return cmd_eval(opt, model_path, floor_w, dump_estimates);
        }
        if (predict->parsed()) {
            return cmd_predict(opt, predict_model, predict_input, f_cpu, f_gpu, bench, repetitions);
        }
        if (sweep->parsed()) {
            if (opt.root.empty()) throw Error(ErrorKind::InvalidArgument, "sweep needs --root");
            return cmd_sweep(opt, sweep_subsystem, k_max);
        }
    } catch (const Error& e) {
        std::fprintf(stderr, "error (%s): %s\n", to_string(e.kind()), e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return 1;
    }
    return 1;
}
