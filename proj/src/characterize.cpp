#include "lutpower/characterize.hpp"

#include <algorithm>

#include "lutpower/csv.hpp"
#include "lutpower/errors.hpp"

namespace lutpower {

const char* to_string(SelectionStatus s) {
    switch (s) {
        case SelectionStatus::Selected: return "selected";
        case SelectionStatus::Incompatible: return "incompatible";
        case SelectionStatus::Discarded: return "discarded";
    }
    return "unknown";
}

Ranking characterize(const MergedTrace& trace, double alpha) {
    return characterize(std::span<const MergedTrace>(&trace, 1), alpha);
}

Ranking characterize(std::span<const MergedTrace> traces, double alpha) {
    if (traces.empty()) {
        throw Error(ErrorKind::InvalidArgument, "characterize: no traces");
    }
    const MergedTrace merged = traces.size() == 1 ? traces.front() : concat(traces);
    if (merged.rows < 3) {
        throw Error(ErrorKind::Validation, "characterize: need at least 3 samples, have " +
                                               std::to_string(merged.rows));
    }

    Ranking ranking;
    ranking.subsystem = merged.subsystem;
    ranking.frequency_hz = merged.frequency_hz;
    ranking.alpha = alpha;

    // Each event against the power of its own pass; series are materialized
    // first so the fits can run in parallel.
    std::vector<std::vector<double>> series(merged.events.size());
    std::vector<SeriesRef> refs(merged.events.size());
    for (std::size_t e = 0; e < merged.events.size(); ++e) {
        series[e] = merged.event_rate_series(e);
        const auto pass_it = merged.pass_power.find(merged.event_pass[e]);
        if (pass_it == merged.pass_power.end()) {
            throw Error(ErrorKind::Validation,
                        "characterize: no power series for pass " +
                            std::to_string(merged.event_pass[e]));
        }
        refs[e] = SeriesRef{merged.events[e], series[e], pass_it->second};
    }
    const BatchFitResult fits = fit_series_parallel(refs);

    for (std::size_t e = 0; e < refs.size(); ++e) {
        if (fits.zero_variance[e]) {
            ranking.zero_variance.push_back(merged.events[e]);
        } else if (fits.fits[e].p_value <= alpha) {
            ranking.entries.push_back(fits.fits[e]);
        } else {
            ranking.rejected.push_back(fits.fits[e]);
        }
    }

    auto by_pcc_desc = [](const FitStats& a, const FitStats& b) {
        if (a.pcc != b.pcc) return a.pcc > b.pcc;
        return a.event < b.event;
    };
    std::sort(ranking.entries.begin(), ranking.entries.end(), by_pcc_desc);
    std::sort(ranking.rejected.begin(), ranking.rejected.end(), by_pcc_desc);
    return ranking;
}

SelectionResult select_counters(const Ranking& ranking, const CompatibilityOracle& oracle,
                                std::size_t k) {
    if (k < 1) {
        throw Error(ErrorKind::InvalidArgument, "select_counters: k must be >= 1");
    }
    SelectionResult result;
    result.set.subsystem = ranking.subsystem;
    result.set.frequency_hz = ranking.frequency_hz;

    std::vector<std::string>& chosen = result.set.counters;
    for (const FitStats& entry : ranking.entries) {
        if (chosen.size() >= k) {
            result.labels.emplace_back(entry.event, SelectionStatus::Discarded);
            continue;
        }
        chosen.push_back(entry.event);
        if (oracle.can_schedule(chosen)) {
            result.labels.emplace_back(entry.event, SelectionStatus::Selected);
        } else {
            chosen.pop_back();
            result.labels.emplace_back(entry.event, SelectionStatus::Incompatible);
        }
    }
    if (chosen.empty()) {
        throw Error(ErrorKind::EmptySelection,
                    "select_counters: no schedulable event (ranking of " +
                        std::to_string(ranking.entries.size()) + " entries)");
    }
    return result;
}

std::map<CorpusKey, SelectionResult> characterize_all(
    const std::map<CorpusKey, std::vector<MergedTrace>>& corpus, const CompatibilityOracle& oracle,
    std::size_t k, double alpha) {
    std::map<CorpusKey, SelectionResult> out;
    for (const auto& [key, traces] : corpus) {
        const Ranking ranking = characterize(traces, alpha);
        out.emplace(key, select_counters(ranking, oracle, k));
    }
    return out;
}

std::string ranking_to_csv(const Ranking& ranking, const SelectionResult& selection) {
    std::string out = "event,pcc,p_value,slope,intercept,status\n";
    auto row = [&out](const FitStats& f, SelectionStatus status) {
        out += f.event;
        out += ',';
        out += csv::format_double(f.pcc);
        out += ',';
        out += csv::format_double(f.p_value);
        out += ',';
        out += csv::format_double(f.slope);
        out += ',';
        out += csv::format_double(f.intercept);
        out += ',';
        out += to_string(status);
        out += '\n';
    };
    for (std::size_t i = 0; i < ranking.entries.size(); ++i) {
        row(ranking.entries[i], selection.labels[i].second);
    }
    for (const FitStats& f : ranking.rejected) {
        row(f, SelectionStatus::Discarded);
    }
    return out;
}

}  // namespace lutpower
