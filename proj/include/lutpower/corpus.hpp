#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <vector>

#include "lutpower/characterize.hpp"
#include "lutpower/trace.hpp"

namespace lutpower {

// Corpus directory layout: <root>/<subsystem>/<freq_hz>/<workload>_pass<k>.csv
// plus .meta.json sidecars. Loading merges passes per workload; traces per
// (subsystem, frequency) come back sorted by workload name.
std::map<CorpusKey, std::vector<MergedTrace>> load_corpus(
    const std::filesystem::path& root, std::optional<Subsystem> only = std::nullopt);

// Workload-sorted concatenation of one (subsystem, frequency) slot.
MergedTrace corpus_concat(std::vector<MergedTrace> traces);

}  // namespace lutpower
