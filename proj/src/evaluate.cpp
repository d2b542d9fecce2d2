#include "lutpower/evaluate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <numeric>
#include <sstream>

#include "lutpower/csv.hpp"
#include "lutpower/errors.hpp"
#include "lutpower/train.hpp"

namespace lutpower {

MapeResult mape(std::span<const double> est, std::span<const double> meas, double floor_w) {
    if (est.size() != meas.size()) {
        throw Error(ErrorKind::LengthMismatch, "mape: series lengths differ");
    }
    MapeResult result;
    double sum = 0.0;
    double sum_sq = 0.0;
    for (std::size_t i = 0; i < est.size(); ++i) {
        if (meas[i] < floor_w) {
            ++result.excluded;
            continue;
        }
        const double ape = std::abs(est[i] - meas[i]) / meas[i] * 100.0;
        sum += ape;
        sum_sq += ape * ape;
        ++result.included;
    }
    if (result.included == 0) {
        throw Error(ErrorKind::Validation, "mape: every sample below the power floor");
    }
    const double n = static_cast<double>(result.included);
    result.mape_pct = sum / n;
    const double var = sum_sq / n - result.mape_pct * result.mape_pct;
    result.std_pct = var > 0.0 ? std::sqrt(var) : 0.0;
    return result;
}

double energy_error_pct(std::span<const double> est, std::span<const double> meas,
                        std::span<const double> durations) {
    const double e_est = energy_joules(est, durations);
    const double e_meas = energy_joules(meas, durations);
    if (e_meas == 0.0) {
        throw Error(ErrorKind::Validation, "energy_error: measured energy is zero");
    }
    return std::abs(e_est - e_meas) / e_meas * 100.0;
}

namespace {

// Rates of one row in model-counter order; the index map is resolved once.
struct RowBinder {
    const MergedTrace* trace = nullptr;
    std::vector<std::size_t> event_cols;
    std::size_t cores = 0;

    static RowBinder for_cpu(const MergedTrace& trace, const CpuModel& model) {
        if (trace.gating.empty()) {
            throw Error(ErrorKind::MissingKey, "CPU trace has no gating (cycles columns missing)");
        }
        if (static_cast<int>(model.gate_weights.size()) != trace.core_count) {
            throw Error(ErrorKind::MissingKey,
                        "model expects " + std::to_string(model.gate_weights.size()) +
                            " cores, trace has " + std::to_string(trace.core_count));
        }
        RowBinder b;
        b.trace = &trace;
        b.cores = model.gate_weights.size();
        for (const std::string& counter : model.counters) {
            b.event_cols.push_back(trace.event_index(counter));
        }
        return b;
    }

    static RowBinder for_gpu(const MergedTrace& trace, const GpuModel& model) {
        RowBinder b;
        b.trace = &trace;
        for (const std::string& counter : model.counters) {
            b.event_cols.push_back(trace.event_index(counter));
        }
        return b;
    }

    void fill_cpu(std::size_t row, std::vector<double>& rates) const {
        const std::size_t j_count = event_cols.size();
        for (std::size_t i = 0; i < cores; ++i) {
            for (std::size_t j = 0; j < j_count; ++j) {
                rates[i * j_count + j] = trace->rate(row, i, event_cols[j]);
            }
        }
    }

    void fill_gpu(std::size_t row, std::vector<double>& rates) const {
        for (std::size_t j = 0; j < event_cols.size(); ++j) {
            rates[j] = trace->rate(row, event_cols[j]);
        }
    }
};

std::vector<double> predict_rows_impl(const ModelLut& lut, const MergedTrace& trace,
                                      bool parallel) {
    std::vector<double> out(trace.rows, 0.0);
    if (trace.subsystem == Subsystem::Cpu) {
        const CpuModel& model = lut_lookup_cpu(lut, trace.frequency_hz);
        const RowBinder binder = RowBinder::for_cpu(trace, model);
        const std::size_t j_count = model.counters.size();
        const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(trace.rows);
#pragma omp parallel if (parallel)
        {
            std::vector<double> rates(binder.cores * j_count);  // per-thread scratch
#pragma omp for schedule(static)
            for (std::ptrdiff_t r = 0; r < n; ++r) {
                binder.fill_cpu(static_cast<std::size_t>(r), rates);
                out[static_cast<std::size_t>(r)] =
                    predict_cpu(model, trace.gating_row(static_cast<std::size_t>(r)), rates);
            }
        }
    } else {
        const GpuModel& model = lut_lookup_gpu(lut, trace.frequency_hz);
        const RowBinder binder = RowBinder::for_gpu(trace, model);
        const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(trace.rows);
#pragma omp parallel if (parallel)
        {
            std::vector<double> rates(binder.event_cols.size());
#pragma omp for schedule(static)
            for (std::ptrdiff_t r = 0; r < n; ++r) {
                binder.fill_gpu(static_cast<std::size_t>(r), rates);
                out[static_cast<std::size_t>(r)] = predict_gpu(model, rates);
            }
        }
    }
    return out;
}

}  // namespace

std::vector<double> predict_rows_serial(const ModelLut& lut, const MergedTrace& trace) {
    return predict_rows_impl(lut, trace, false);
}

std::vector<double> predict_rows_parallel(const ModelLut& lut, const MergedTrace& trace) {
    return predict_rows_impl(lut, trace, true);
}

PairReport evaluate_pair(const ModelLut& lut, const MergedTrace& cpu_validation,
                         const MergedTrace& gpu_validation, double floor_w) {
    if (cpu_validation.subsystem != Subsystem::Cpu || gpu_validation.subsystem != Subsystem::Gpu) {
        throw Error(ErrorKind::Validation, "evaluate_pair: expects one CPU and one GPU trace");
    }
    const std::size_t n = std::min(cpu_validation.rows, gpu_validation.rows);
    if (n == 0) {
        throw Error(ErrorKind::Validation, "evaluate_pair: empty validation trace");
    }

    const std::vector<double> est_cpu = predict_rows_serial(lut, cpu_validation);
    const std::vector<double> est_gpu = predict_rows_serial(lut, gpu_validation);

    std::vector<double> est_sys(n), meas_sys(n);
    for (std::size_t i = 0; i < n; ++i) {
        est_sys[i] = est_cpu[i] + est_gpu[i];
        meas_sys[i] = cpu_validation.power[i] + gpu_validation.power[i];
    }

    PairReport report;
    report.f_cpu_hz = cpu_validation.frequency_hz;
    report.f_gpu_hz = gpu_validation.frequency_hz;
    report.n = n;

    const MapeResult m = mape(est_sys, meas_sys, floor_w);
    report.power_mape_pct = m.mape_pct;
    report.power_err_std_pct = m.std_pct;
    report.excluded = m.excluded;

    auto head = [n](const std::vector<double>& v) {
        return std::span<const double>(v.data(), n);
    };
    report.energy_true_j =
        energy_joules(head(cpu_validation.power), head(cpu_validation.duration)) +
        energy_joules(head(gpu_validation.power), head(gpu_validation.duration));
    report.energy_est_j = energy_joules(head(est_cpu), head(cpu_validation.duration)) +
                          energy_joules(head(est_gpu), head(gpu_validation.duration));
    if (report.energy_true_j == 0.0) {
        throw Error(ErrorKind::Validation, "evaluate_pair: measured energy is zero");
    }
    report.energy_err_pct =
        std::abs(report.energy_est_j - report.energy_true_j) / report.energy_true_j * 100.0;
    return report;
}

void finalize_aggregates(EvaluationReport& report) {
    report.mean_power_mape_pct = 0.0;
    report.max_power_mape_pct = 0.0;
    report.mean_energy_err_pct = 0.0;
    report.max_energy_err_pct = 0.0;
    report.excluded_samples = 0;
    if (report.pairs.empty()) return;
    for (const PairReport& p : report.pairs) {
        report.mean_power_mape_pct += p.power_mape_pct;
        report.mean_energy_err_pct += p.energy_err_pct;
        report.max_power_mape_pct = std::max(report.max_power_mape_pct, p.power_mape_pct);
        report.max_energy_err_pct = std::max(report.max_energy_err_pct, p.energy_err_pct);
        report.excluded_samples += p.excluded;
    }
    report.mean_power_mape_pct /= static_cast<double>(report.pairs.size());
    report.mean_energy_err_pct /= static_cast<double>(report.pairs.size());
}

EvaluationReport evaluate_grid(const ModelLut& lut,
                               const std::map<std::uint64_t, MergedTrace>& cpu_validation,
                               const std::map<std::uint64_t, MergedTrace>& gpu_validation,
                               double floor_w) {
    std::vector<std::pair<std::uint64_t, std::uint64_t>> grid;
    for (const auto& [f_cpu, cpu_model] : lut.cpu) {
        if (!cpu_validation.contains(f_cpu)) {
            throw Error(ErrorKind::MissingCoverage,
                        "no CPU validation trace at " + std::to_string(f_cpu) + " Hz");
        }
        for (const auto& [f_gpu, gpu_model] : lut.gpu) {
            if (!gpu_validation.contains(f_gpu)) {
                throw Error(ErrorKind::MissingCoverage,
                            "no GPU validation trace at " + std::to_string(f_gpu) + " Hz");
            }
            grid.emplace_back(f_cpu, f_gpu);
        }
    }

    EvaluationReport report;
    report.pairs.resize(grid.size());
    std::vector<std::exception_ptr> errors(grid.size());
    const std::ptrdiff_t count = static_cast<std::ptrdiff_t>(grid.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < count; ++i) {
        try {
            report.pairs[i] = evaluate_pair(lut, cpu_validation.at(grid[i].first),
                                            gpu_validation.at(grid[i].second), floor_w);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    }
    for (const std::exception_ptr& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    finalize_aggregates(report);
    return report;
}

SweepResult sweep_predictor_count(
    const std::map<std::uint64_t, Ranking>& rankings, const CompatibilityOracle& oracle,
    std::size_t k_max, const std::map<std::uint64_t, MergedTrace>& train,
    const std::map<std::uint64_t, MergedTrace>& validation) {
    if (k_max < 1) {
        throw Error(ErrorKind::InvalidArgument, "sweep: k_max must be >= 1");
    }
    for (const auto& [freq, ranking] : rankings) {
        if (!train.contains(freq) || !validation.contains(freq)) {
            throw Error(ErrorKind::MissingCoverage,
                        "sweep: missing train/validation trace at " + std::to_string(freq) + " Hz");
        }
    }

    SweepResult result;
    result.curve.resize(k_max);
    std::vector<std::exception_ptr> errors(k_max);
    const std::ptrdiff_t count = static_cast<std::ptrdiff_t>(k_max);
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t ki = 0; ki < count; ++ki) {
        try {
            const std::size_t k = static_cast<std::size_t>(ki) + 1;
            double err_sum = 0.0;
            for (const auto& [freq, ranking] : rankings) {
                const SelectionResult selection = select_counters(ranking, oracle, k);
                const MergedTrace& train_trace = train.at(freq);
                CounterSet counters = selection.set;
                ModelLut lut;
                if (train_trace.subsystem == Subsystem::Cpu) {
                    CpuModel m = train_cpu_model(train_trace, counters);
                    lut.cpu.emplace(freq, std::move(m));
                } else {
                    GpuModel m = train_gpu_model(train_trace, counters);
                    lut.gpu.emplace(freq, std::move(m));
                }
                const MergedTrace& val = validation.at(freq);
                const std::vector<double> est = predict_rows_serial(lut, val);
                err_sum += energy_error_pct(est, val.power, val.duration);
            }
            result.curve[ki] = SweepPoint{k, err_sum / static_cast<double>(rankings.size())};
        } catch (...) {
            errors[ki] = std::current_exception();
        }
    }
    for (const std::exception_ptr& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    result.best_k = 1;
    double best = result.curve[0].mean_energy_err_pct;
    for (const SweepPoint& point : result.curve) {
        if (point.mean_energy_err_pct < best) {
            best = point.mean_energy_err_pct;
            result.best_k = point.k;
        }
    }
    return result;
}

LatencyStats measure_latency(const SystemPredictor& predictor,
                             std::span<const double> gating_rows,
                             std::span<const double> cpu_rate_rows,
                             std::span<const double> gpu_rate_rows, std::size_t row_count,
                             std::size_t repetitions) {
    if (repetitions == 0) {
        throw Error(ErrorKind::InvalidArgument, "measure_latency: repetitions must be positive");
    }
    if (row_count == 0) {
        throw Error(ErrorKind::InvalidArgument, "measure_latency: no input rows");
    }
    const std::size_t g_stride = predictor.cpu_cores();
    const std::size_t c_stride = predictor.cpu_cores() * predictor.cpu_counters();
    const std::size_t u_stride = predictor.gpu_counters();

    using clock = std::chrono::steady_clock;
    constexpr std::size_t kBatch = 256;
    const std::size_t batches = (repetitions + kBatch - 1) / kBatch;

    std::vector<double> batch_ns;
    batch_ns.reserve(batches);

    double sink = 0.0;
    std::size_t row = 0;
    auto run_batch = [&]() {
        const auto t0 = clock::now();
        for (std::size_t i = 0; i < kBatch; ++i) {
            const SystemPower p = predictor.evaluate(gating_rows.data() + row * g_stride,
                                                     cpu_rate_rows.data() + row * c_stride,
                                                     gpu_rate_rows.data() + row * u_stride);
            sink += p.total_w;
            if (++row == row_count) row = 0;
        }
        const auto t1 = clock::now();
        return std::chrono::duration<double, std::nano>(t1 - t0).count() / double(kBatch);
    };

    // Warm-up (not recorded).
    const std::size_t warmup = std::max<std::size_t>(4, batches / 100);
    for (std::size_t i = 0; i < warmup; ++i) (void)run_batch();

    double total_ns = 0.0;
    for (std::size_t i = 0; i < batches; ++i) {
        const double ns = run_batch();
        batch_ns.push_back(ns);
        total_ns += ns * kBatch;
    }
    // Keep the accumulated estimate alive so the loop cannot be elided.
    volatile double guard = sink;
    (void)guard;

    LatencyStats stats;
    stats.repetitions = batches * kBatch;
    stats.mean_ns = total_ns / static_cast<double>(stats.repetitions);
    std::sort(batch_ns.begin(), batch_ns.end());
    const std::size_t idx =
        std::min(batch_ns.size() - 1,
                 static_cast<std::size_t>(std::ceil(0.99 * static_cast<double>(batch_ns.size()))) -
                     1);
    stats.p99_ns = batch_ns[idx];
    return stats;
}

std::string report_to_csv(const EvaluationReport& report) {
    std::string out =
        "f_cpu_hz,f_gpu_hz,n,power_mape_pct,power_err_std_pct,energy_true_j,energy_est_j,"
        "energy_err_pct,excluded\n";
    for (const PairReport& p : report.pairs) {
        out += std::to_string(p.f_cpu_hz);
        out += ',';
        out += std::to_string(p.f_gpu_hz);
        out += ',';
        out += std::to_string(p.n);
        out += ',';
        out += csv::format_double(p.power_mape_pct);
        out += ',';
        out += csv::format_double(p.power_err_std_pct);
        out += ',';
        out += csv::format_double(p.energy_true_j);
        out += ',';
        out += csv::format_double(p.energy_est_j);
        out += ',';
        out += csv::format_double(p.energy_err_pct);
        out += ',';
        out += std::to_string(p.excluded);
        out += '\n';
    }
    return out;
}

EvaluationReport report_from_csv(const std::string& text, const std::string& origin) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) {
        throw Error(ErrorKind::Parse, origin + ": empty report");
    }
    EvaluationReport report;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        ++row;
        const std::vector<std::string> f = csv::split_line(line);
        if (f.size() != 9) {
            throw Error(ErrorKind::Parse, origin + ": row " + std::to_string(row) +
                                              ": expected 9 fields, got " +
                                              std::to_string(f.size()));
        }
        const std::string ctx = origin + ": row " + std::to_string(row);
        PairReport p;
        p.f_cpu_hz = static_cast<std::uint64_t>(std::stoull(f[0]));
        p.f_gpu_hz = static_cast<std::uint64_t>(std::stoull(f[1]));
        p.n = static_cast<std::size_t>(std::stoull(f[2]));
        p.power_mape_pct = csv::parse_double(f[3], ctx);
        p.power_err_std_pct = csv::parse_double(f[4], ctx);
        p.energy_true_j = csv::parse_double(f[5], ctx);
        p.energy_est_j = csv::parse_double(f[6], ctx);
        p.energy_err_pct = csv::parse_double(f[7], ctx);
        p.excluded = static_cast<std::size_t>(std::stoull(f[8]));
        report.pairs.push_back(p);
    }
    finalize_aggregates(report);
    return report;
}

namespace {

std::string mhz_label(std::uint64_t hz) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", static_cast<double>(hz) / 1e6);
    return buf;
}

std::string grid_table(const EvaluationReport& report, bool energy) {
    std::vector<std::uint64_t> cpu_freqs, gpu_freqs;
    for (const PairReport& p : report.pairs) {
        if (std::find(cpu_freqs.begin(), cpu_freqs.end(), p.f_cpu_hz) == cpu_freqs.end()) {
            cpu_freqs.push_back(p.f_cpu_hz);
        }
        if (std::find(gpu_freqs.begin(), gpu_freqs.end(), p.f_gpu_hz) == gpu_freqs.end()) {
            gpu_freqs.push_back(p.f_gpu_hz);
        }
    }
    std::sort(cpu_freqs.begin(), cpu_freqs.end());
    std::sort(gpu_freqs.begin(), gpu_freqs.end());

    std::ostringstream out;
    out << (energy ? "energy estimation error [%]" : "instantaneous power MAPE [%]") << "\n";
    out << "  f_gpu \\ f_cpu [MHz]";
    for (std::uint64_t f : cpu_freqs) {
        char cell[32];
        std::snprintf(cell, sizeof(cell), "%10s", mhz_label(f).c_str());
        out << cell;
    }
    out << "\n";
    for (std::uint64_t fg : gpu_freqs) {
        char head[32];
        std::snprintf(head, sizeof(head), "  %-19s", mhz_label(fg).c_str());
        out << head;
        for (std::uint64_t fc : cpu_freqs) {
            const auto it = std::find_if(report.pairs.begin(), report.pairs.end(),
                                         [&](const PairReport& p) {
                                             return p.f_cpu_hz == fc && p.f_gpu_hz == fg;
                                         });
            char cell[32];
            if (it == report.pairs.end()) {
                std::snprintf(cell, sizeof(cell), "%10s", "-");
            } else {
                std::snprintf(cell, sizeof(cell), "%10.2f",
                              energy ? it->energy_err_pct : it->power_mape_pct);
            }
            out << cell;
        }
        out << "\n";
    }
    return out.str();
}

}  // namespace

std::string report_to_table(const EvaluationReport& report) {
    std::ostringstream out;
    out << grid_table(report, true) << "\n" << grid_table(report, false) << "\n";
    char line[160];
    std::snprintf(line, sizeof(line),
                  "energy error: mean %.2f%%  max %.2f%%\n"
                  "power MAPE:   mean %.2f%%  max %.2f%%\n"
                  "excluded samples (below power floor): %zu\n",
                  report.mean_energy_err_pct, report.max_energy_err_pct,
                  report.mean_power_mape_pct, report.max_power_mape_pct,
                  report.excluded_samples);
    out << line;
    return out.str();
}

}  // namespace lutpower
