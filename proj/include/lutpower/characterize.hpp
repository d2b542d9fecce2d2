#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "lutpower/oracle.hpp"
#include "lutpower/stats.hpp"
#include "lutpower/trace.hpp"

namespace lutpower {

// Events surviving the significance filter, sorted by descending PCC (ties
// broken lexicographically). `rejected` keeps the insignificant fits and
// `zero_variance` the constant events, both for the ranking export.
struct Ranking {
    Subsystem subsystem = Subsystem::Cpu;
    std::uint64_t frequency_hz = 0;
    double alpha = 0.05;
    std::vector<FitStats> entries;
    std::vector<FitStats> rejected;
    std::vector<std::string> zero_variance;
};

enum class SelectionStatus { Selected, Incompatible, Discarded };

const char* to_string(SelectionStatus s);

// The single-pass counter set X for one (subsystem, frequency). CPU sets hold
// per-core event names (the same set is programmed on every core).
struct CounterSet {
    Subsystem subsystem = Subsystem::Cpu;
    std::uint64_t frequency_hz = 0;
    std::vector<std::string> counters;

    bool operator==(const CounterSet&) const = default;
};

struct SelectionResult {
    CounterSet set;
    // One label per significant ranking entry, in ranking order.
    std::vector<std::pair<std::string, SelectionStatus>> labels;
};

// Regresses every event against the power of the pass that recorded it, drops
// p-values above alpha and constant series, sorts the rest. Several merged
// traces (one per workload, same (subsystem, frequency)) are concatenated.
Ranking characterize(std::span<const MergedTrace> traces, double alpha = 0.05);
Ranking characterize(const MergedTrace& trace, double alpha = 0.05);

// Greedy scan of the ranking: append iff the oracle accepts the grown set,
// stop at k. Tried-but-rejected significant events are labeled incompatible,
// everything else left over is discarded.
SelectionResult select_counters(const Ranking& ranking, const CompatibilityOracle& oracle,
                                std::size_t k);

using CorpusKey = std::pair<Subsystem, std::uint64_t>;

std::map<CorpusKey, SelectionResult> characterize_all(
    const std::map<CorpusKey, std::vector<MergedTrace>>& corpus, const CompatibilityOracle& oracle,
    std::size_t k, double alpha = 0.05);

// CSV export, one row per event: event,pcc,p_value,slope,intercept,status.
std::string ranking_to_csv(const Ranking& ranking, const SelectionResult& selection);

}  // namespace lutpower
