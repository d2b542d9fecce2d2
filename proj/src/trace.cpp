#include "lutpower/trace.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lutpower/csv.hpp"

namespace lutpower {

namespace {

using nlohmann::json;

std::string row_context(const std::filesystem::path& path, std::size_t data_row) {
    return path.string() + ": row " + std::to_string(data_row);
}

}  // namespace

void TraceSegment::validate() const {
    if (frequency_hz == 0) {
        throw Error(ErrorKind::Validation, "trace frequency must be positive");
    }
    if (nominal_period_s <= 0.0) {
        throw Error(ErrorKind::Validation, "nominal_period_s must be positive");
    }
    if (subsystem == Subsystem::Gpu && core_count != 0) {
        throw Error(ErrorKind::Validation, "GPU trace with nonzero core_count");
    }
    std::set<CounterId> seen;
    for (const CounterId& id : counters) {
        if (id.subsystem != subsystem) {
            throw Error(ErrorKind::Validation,
                        "counter '" + id.column_name() + "' does not belong to a " +
                            std::string(to_string(subsystem)) + " trace");
        }
        validate_counter(id, core_count);
        if (!seen.insert(id).second) {
            throw Error(ErrorKind::Validation, "duplicate column '" + id.column_name() + "'");
        }
    }
    for (int core : cycle_cores) {
        if (subsystem != Subsystem::Cpu) {
            throw Error(ErrorKind::Validation, "cycles column in a GPU trace");
        }
        if (core < 0 || core >= core_count) {
            throw Error(ErrorKind::Validation,
                        "cycles column for core " + std::to_string(core) + " out of range");
        }
    }
    if (std::set<int>(cycle_cores.begin(), cycle_cores.end()).size() != cycle_cores.size()) {
        throw Error(ErrorKind::Validation, "duplicate cycles column");
    }

    double prev_ts = -std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < samples.size(); ++r) {
        const Sample& s = samples[r];
        const std::string where = "row " + std::to_string(r + 1);
        if (!(s.timestamp_s > prev_ts)) {
            throw Error(ErrorKind::Validation,
                        where + ": timestamp " + csv::format_double(s.timestamp_s) +
                            " not strictly increasing");
        }
        prev_ts = s.timestamp_s;
        if (!(s.duration_s > 0.0)) {
            throw Error(ErrorKind::Validation, where + ": duration must be positive");
        }
        if (s.power_w < 0.0 || !std::isfinite(s.power_w)) {
            throw Error(ErrorKind::Validation, where + ": power must be nonnegative");
        }
        if (s.counts.size() != counters.size() || s.cycle_counts.size() != cycle_cores.size()) {
            throw Error(ErrorKind::Validation, where + ": field count does not match header");
        }
        for (double c : s.counts) {
            if (c < 0.0 || !std::isfinite(c)) {
                throw Error(ErrorKind::Validation, where + ": negative or non-finite count");
            }
        }
        for (double c : s.cycle_counts) {
            if (c < 0.0 || !std::isfinite(c)) {
                throw Error(ErrorKind::Validation, where + ": negative or non-finite cycle count");
            }
        }
    }
}

std::filesystem::path meta_path_for(const std::filesystem::path& csv_path) {
    std::filesystem::path p = csv_path;
    p.replace_extension();
    p += ".meta.json";
    return p;
}

TraceSegment load_trace(const std::filesystem::path& csv_path) {
    TraceSegment seg;

    const std::filesystem::path meta_path = meta_path_for(csv_path);
    json meta;
    try {
        meta = json::parse(csv::read_file(meta_path));
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Parse, meta_path.string() + ": " + e.what());
    }
    try {
        seg.subsystem = subsystem_from_string(meta.at("subsystem").get<std::string>());
        seg.frequency_hz = meta.at("frequency_hz").get<std::uint64_t>();
        seg.workload = meta.at("workload").get<std::string>();
        seg.pass_id = meta.at("pass_id").get<int>();
        seg.nominal_period_s = meta.at("nominal_period_s").get<double>();
        seg.core_count = meta.value("core_count", 0);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Parse, meta_path.string() + ": " + e.what());
    }

    const std::string content = csv::read_file(csv_path);
    std::istringstream in(content);
    std::string line;
    if (!std::getline(in, line)) {
        throw Error(ErrorKind::Parse, csv_path.string() + ": empty file");
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();

    const std::vector<std::string> header = csv::split_line(line);
    if (header.size() < 3 || header[0] != "timestamp_s" || header[1] != "duration_s" ||
        header[2] != "power_w") {
        throw Error(ErrorKind::Parse,
                    csv_path.string() +
                        ": malformed header (expected timestamp_s,duration_s,power_w,...)");
    }

    // Column index -> either a counter slot or a cycles slot.
    struct Slot {
        bool cycles = false;
        std::size_t index = 0;
    };
    std::vector<Slot> slots;
    for (std::size_t c = 3; c < header.size(); ++c) {
        CounterId id = CounterId::parse_column(header[c]);
        if (id.subsystem != seg.subsystem) {
            throw Error(ErrorKind::Parse, csv_path.string() + ": column '" + header[c] +
                                              "' does not match metadata subsystem '" +
                                              to_string(seg.subsystem) + "'");
        }
        if (id.subsystem == Subsystem::Cpu && id.core >= seg.core_count) {
            throw Error(ErrorKind::Parse, csv_path.string() + ": column '" + header[c] +
                                              "' exceeds metadata core_count " +
                                              std::to_string(seg.core_count));
        }
        if (id.is_cycles()) {
            slots.push_back({true, seg.cycle_cores.size()});
            seg.cycle_cores.push_back(id.core);
        } else {
            slots.push_back({false, seg.counters.size()});
            seg.counters.push_back(std::move(id));
        }
    }

    std::size_t data_row = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        ++data_row;
        const std::vector<std::string> fields = csv::split_line(line);
        if (fields.size() != header.size()) {
            throw Error(ErrorKind::Parse, row_context(csv_path, data_row) + ": expected " +
                                              std::to_string(header.size()) + " fields, got " +
                                              std::to_string(fields.size()));
        }
        Sample s;
        const std::string ctx = row_context(csv_path, data_row);
        s.timestamp_s = csv::parse_double(fields[0], ctx);
        s.duration_s = csv::parse_double(fields[1], ctx);
        s.power_w = csv::parse_double(fields[2], ctx);
        s.counts.resize(seg.counters.size());
        s.cycle_counts.resize(seg.cycle_cores.size());
        for (std::size_t c = 3; c < fields.size(); ++c) {
            const double v = csv::parse_double(fields[c], ctx);
            const Slot& slot = slots[c - 3];
            (slot.cycles ? s.cycle_counts : s.counts)[slot.index] = v;
        }
        seg.samples.push_back(std::move(s));
    }

    try {
        seg.validate();
    } catch (const Error& e) {
        throw Error(e.kind(), csv_path.string() + ": " + e.what());
    }
    return seg;
}

void write_trace(const TraceSegment& segment, const std::filesystem::path& csv_path) {
    segment.validate();

    std::string out = "timestamp_s,duration_s,power_w";
    for (const CounterId& id : segment.counters) {
        out += ',';
        out += id.column_name();
    }
    for (int core : segment.cycle_cores) {
        out += ",cpu.c" + std::to_string(core) + "." + CounterId::kCyclesEvent;
    }
    out += '\n';
    for (const Sample& s : segment.samples) {
        out += csv::format_double(s.timestamp_s);
        out += ',';
        out += csv::format_double(s.duration_s);
        out += ',';
        out += csv::format_double(s.power_w);
        for (double c : s.counts) {
            out += ',';
            out += csv::format_double(c);
        }
        for (double c : s.cycle_counts) {
            out += ',';
            out += csv::format_double(c);
        }
        out += '\n';
    }
    csv::write_file_atomic(csv_path, out);

    nlohmann::json meta{
        {"subsystem", to_string(segment.subsystem)},
        {"frequency_hz", segment.frequency_hz},
        {"workload", segment.workload},
        {"pass_id", segment.pass_id},
        {"nominal_period_s", segment.nominal_period_s},
        {"core_count", segment.core_count},
    };
    csv::write_file_atomic(meta_path_for(csv_path), meta.dump(2) + "\n");
}

double gating_metric(double cycle_count, double duration_s, double frequency_hz, bool* clamped) {
    if (duration_s <= 0.0 || frequency_hz <= 0.0) {
        throw Error(ErrorKind::InvalidArgument, "gating_metric requires positive duration and frequency");
    }
    const double g = cycle_count / (frequency_hz * duration_s);
    if (g > 1.0) {
        if (clamped) *clamped = true;
        return 1.0;
    }
    if (g < 0.0) return 0.0;
    return g;
}

std::size_t MergedTrace::event_index(const std::string& event) const {
    const auto it = std::lower_bound(events.begin(), events.end(), event);
    if (it == events.end() || *it != event) {
        throw Error(ErrorKind::MissingKey, "event '" + event + "' not present in trace");
    }
    return static_cast<std::size_t>(it - events.begin());
}

std::vector<double> MergedTrace::event_rate_series(std::size_t event) const {
    std::vector<double> series(rows, 0.0);
    if (subsystem == Subsystem::Gpu) {
        for (std::size_t r = 0; r < rows; ++r) series[r] = rate(r, event);
        return series;
    }
    for (std::size_t r = 0; r < rows; ++r) {
        double sum = 0.0;
        for (int core = 0; core < core_count; ++core) {
            sum += rate(r, static_cast<std::size_t>(core), event);
        }
        series[r] = sum;
    }
    return series;
}

MergedTrace normalize(const TraceSegment& segment) {
    return merge_passes(std::span<const TraceSegment>(&segment, 1));
}

MergedTrace merge_passes(std::span<const TraceSegment> segments) {
    if (segments.empty()) {
        throw Error(ErrorKind::InvalidArgument, "merge_passes: no segments");
    }
    const TraceSegment& first = segments.front();
    for (const TraceSegment& seg : segments) {
        seg.validate();
        if (seg.subsystem != first.subsystem || seg.frequency_hz != first.frequency_hz ||
            seg.workload != first.workload || seg.core_count != first.core_count) {
            throw Error(ErrorKind::Validation,
                        "merge_passes: segments disagree on subsystem/frequency/workload");
        }
    }

    MergedTrace merged;
    merged.subsystem = first.subsystem;
    merged.frequency_hz = first.frequency_hz;
    merged.workload = first.workload;
    merged.core_count = first.core_count;

    // Passes sorted by id; the lowest is the reference for power/durations.
    std::vector<const TraceSegment*> passes;
    for (const TraceSegment& seg : segments) passes.push_back(&seg);
    std::sort(passes.begin(), passes.end(),
              [](const TraceSegment* a, const TraceSegment* b) { return a->pass_id < b->pass_id; });
    for (std::size_t i = 1; i < passes.size(); ++i) {
        if (passes[i]->pass_id == passes[i - 1]->pass_id) {
            throw Error(ErrorKind::Validation, "merge_passes: duplicate pass_id " +
                                                   std::to_string(passes[i]->pass_id));
        }
    }

    // Event -> recording pass, with CPU events required on every core.
    std::map<std::string, int> event_to_pass;
    for (const TraceSegment* seg : passes) {
        std::map<std::string, std::set<int>> cores_per_event;
        for (const CounterId& id : seg->counters) {
            if (merged.subsystem == Subsystem::Cpu) {
                cores_per_event[id.event].insert(id.core);
            } else {
                cores_per_event[id.event];
            }
        }
        for (const auto& [event, cores] : cores_per_event) {
            if (merged.subsystem == Subsystem::Cpu &&
                cores.size() != static_cast<std::size_t>(merged.core_count)) {
                throw Error(ErrorKind::Validation,
                            "merge_passes: event '" + event + "' in pass " +
                                std::to_string(seg->pass_id) + " covers " +
                                std::to_string(cores.size()) + " of " +
                                std::to_string(merged.core_count) + " cores");
            }
            if (!event_to_pass.emplace(event, seg->pass_id).second) {
                throw Error(ErrorKind::DuplicateEvent,
                            "event '" + event + "' recorded by more than one pass");
            }
        }
    }

    merged.events.reserve(event_to_pass.size());
    for (const auto& [event, pass] : event_to_pass) merged.events.push_back(event);
    merged.event_pass.reserve(merged.events.size());
    for (const std::string& event : merged.events) merged.event_pass.push_back(event_to_pass[event]);

    std::size_t min_rows = std::numeric_limits<std::size_t>::max();
    std::size_t total_rows = 0;
    for (const TraceSegment* seg : passes) {
        min_rows = std::min(min_rows, seg->samples.size());
        total_rows += seg->samples.size();
    }
    merged.rows = min_rows;
    merged.stats.truncated_samples = total_rows - min_rows * passes.size();

    const std::size_t stride = merged.stride();
    merged.rates.assign(merged.rows * stride, 0.0);
    merged.power.resize(merged.rows);
    merged.duration.resize(merged.rows);

    const TraceSegment* reference = passes.front();
    for (std::size_t r = 0; r < merged.rows; ++r) {
        merged.power[r] = reference->samples[r].power_w;
        merged.duration[r] = reference->samples[r].duration_s;
    }
    for (const TraceSegment* seg : passes) {
        std::vector<double>& pp = merged.pass_power[seg->pass_id];
        pp.resize(merged.rows);
        for (std::size_t r = 0; r < merged.rows; ++r) pp[r] = seg->samples[r].power_w;
    }

    // Cross-pass power divergence (> 10% mean vs reference) is a data-quality
    // flag, not an error.
    if (merged.rows > 0) {
        const std::vector<double>& ref_power = merged.pass_power[reference->pass_id];
        const double ref_mean =
            std::accumulate(ref_power.begin(), ref_power.end(), 0.0) / double(merged.rows);
        for (const TraceSegment* seg : passes) {
            if (seg == reference || ref_mean <= 0.0) continue;
            const std::vector<double>& pp = merged.pass_power[seg->pass_id];
            const double mean = std::accumulate(pp.begin(), pp.end(), 0.0) / double(merged.rows);
            if (std::abs(mean - ref_mean) / ref_mean > 0.10) ++merged.stats.divergent_passes;
        }
    }

    for (const TraceSegment* seg : passes) {
        for (std::size_t c = 0; c < seg->counters.size(); ++c) {
            const CounterId& id = seg->counters[c];
            const std::size_t e = merged.event_index(id.event);
            const std::size_t col = merged.subsystem == Subsystem::Cpu
                                        ? static_cast<std::size_t>(id.core) * merged.events.size() + e
                                        : e;
            for (std::size_t r = 0; r < merged.rows; ++r) {
                const Sample& s = seg->samples[r];
                merged.rates[r * stride + col] = s.counts[c] / s.duration_s;
            }
        }
    }

    if (merged.subsystem == Subsystem::Cpu) {
        // Gating comes from the lowest-pass-id segment carrying cycles for
        // every core.
        const TraceSegment* cycles_pass = nullptr;
        for (const TraceSegment* seg : passes) {
            if (std::set<int>(seg->cycle_cores.begin(), seg->cycle_cores.end()).size() ==
                    static_cast<std::size_t>(merged.core_count) &&
                merged.core_count > 0) {
                cycles_pass = seg;
                break;
            }
        }
        if (cycles_pass) {
            merged.gating.assign(merged.rows * static_cast<std::size_t>(merged.core_count), 0.0);
            const double freq = static_cast<double>(merged.frequency_hz);
            for (std::size_t slot = 0; slot < cycles_pass->cycle_cores.size(); ++slot) {
                const int core = cycles_pass->cycle_cores[slot];
                for (std::size_t r = 0; r < merged.rows; ++r) {
                    const Sample& s = cycles_pass->samples[r];
                    bool clamped = false;
                    merged.gating[r * merged.core_count + core] =
                        gating_metric(s.cycle_counts[slot], s.duration_s, freq, &clamped);
                    if (clamped) ++merged.stats.gating_clamped;
                }
            }
        }
    }
    return merged;
}

MergedTrace concat(std::span<const MergedTrace> traces) {
    if (traces.empty()) {
        throw Error(ErrorKind::InvalidArgument, "concat: no traces");
    }
    MergedTrace out = traces.front();
    for (std::size_t i = 1; i < traces.size(); ++i) {
        const MergedTrace& t = traces[i];
        if (t.subsystem != out.subsystem || t.frequency_hz != out.frequency_hz ||
            t.core_count != out.core_count || t.events != out.events ||
            t.event_pass != out.event_pass || t.pass_power.size() != out.pass_power.size()) {
            throw Error(ErrorKind::Validation,
                        "concat: traces disagree on events or pass assignment");
        }
        out.rates.insert(out.rates.end(), t.rates.begin(), t.rates.end());
        out.gating.insert(out.gating.end(), t.gating.begin(), t.gating.end());
        out.power.insert(out.power.end(), t.power.begin(), t.power.end());
        out.duration.insert(out.duration.end(), t.duration.begin(), t.duration.end());
        for (auto& [pass, pp] : out.pass_power) {
            const auto it = t.pass_power.find(pass);
            if (it == t.pass_power.end()) {
                throw Error(ErrorKind::Validation, "concat: pass sets differ");
            }
            pp.insert(pp.end(), it->second.begin(), it->second.end());
        }
        out.rows += t.rows;
        out.stats.truncated_samples += t.stats.truncated_samples;
        out.stats.gating_clamped += t.stats.gating_clamped;
        out.stats.divergent_passes += t.stats.divergent_passes;
        if (!t.workload.empty() && t.workload != out.workload) {
            out.workload += "+" + t.workload;
        }
    }
    return out;
}

std::pair<MergedTrace, MergedTrace> split(const MergedTrace& trace, double train_fraction) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw Error(ErrorKind::InvalidArgument, "train_fraction must be in (0,1)");
    }
    if (trace.rows < 2) {
        throw Error(ErrorKind::Validation, "split requires at least 2 rows");
    }
    const std::size_t n_train =
        static_cast<std::size_t>(std::floor(static_cast<double>(trace.rows) * train_fraction));

    auto take = [&](std::size_t begin, std::size_t end) {
        MergedTrace part;
        part.subsystem = trace.subsystem;
        part.frequency_hz = trace.frequency_hz;
        part.workload = trace.workload;
        part.core_count = trace.core_count;
        part.events = trace.events;
        part.event_pass = trace.event_pass;
        part.rows = end - begin;
        const std::size_t stride = trace.stride();
        part.rates.assign(trace.rates.begin() + begin * stride, trace.rates.begin() + end * stride);
        if (!trace.gating.empty()) {
            part.gating.assign(trace.gating.begin() + begin * trace.core_count,
                               trace.gating.begin() + end * trace.core_count);
        }
        part.power.assign(trace.power.begin() + begin, trace.power.begin() + end);
        part.duration.assign(trace.duration.begin() + begin, trace.duration.begin() + end);
        for (const auto& [pass, pp] : trace.pass_power) {
            part.pass_power[pass] = std::vector<double>(pp.begin() + begin, pp.begin() + end);
        }
        return part;
    };
    return {take(0, n_train), take(n_train, trace.rows)};
}

}  // namespace lutpower
