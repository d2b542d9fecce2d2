#include "lutpower/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

#include "lutpower/errors.hpp"

namespace lutpower {

namespace fs = std::filesystem;

namespace {

std::optional<std::uint64_t> parse_freq_dir(const std::string& name) {
    std::uint64_t value = 0;
    const char* first = name.data();
    const char* last = name.data() + name.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last || value == 0) return std::nullopt;
    return value;
}

// "<workload>_pass<k>" -> workload; files without the suffix are treated as a
// single-pass workload named by the whole stem.
std::string workload_of(const std::string& stem) {
    const std::size_t pos = stem.rfind("_pass");
    if (pos == std::string::npos) return stem;
    const std::string tail = stem.substr(pos + 5);
    if (tail.empty() || !std::all_of(tail.begin(), tail.end(),
                                     [](unsigned char c) { return std::isdigit(c); })) {
        return stem;
    }
    return stem.substr(0, pos);
}

}  // namespace

std::map<CorpusKey, std::vector<MergedTrace>> load_corpus(const fs::path& root,
                                                          std::optional<Subsystem> only) {
    if (!fs::is_directory(root)) {
        throw Error(ErrorKind::Io,
                    "corpus root '" + root.string() +
                        "' is not a directory (expected <root>/<cpu|gpu>/<freq_hz>/"
                        "<workload>_pass<k>.csv)");
    }

    std::map<CorpusKey, std::vector<MergedTrace>> corpus;
    for (const Subsystem subsystem : {Subsystem::Cpu, Subsystem::Gpu}) {
        if (only && *only != subsystem) continue;
        const fs::path sub_dir = root / to_string(subsystem);
        if (!fs::is_directory(sub_dir)) continue;

        std::vector<fs::path> freq_dirs;
        for (const auto& entry : fs::directory_iterator(sub_dir)) {
            if (entry.is_directory()) freq_dirs.push_back(entry.path());
        }
        std::sort(freq_dirs.begin(), freq_dirs.end());

        for (const fs::path& freq_dir : freq_dirs) {
            const auto freq = parse_freq_dir(freq_dir.filename().string());
            if (!freq) {
                throw Error(ErrorKind::Parse, "corpus directory '" + freq_dir.string() +
                                                  "' is not a frequency in Hz");
            }
            std::vector<fs::path> csvs;
            for (const auto& entry : fs::directory_iterator(freq_dir)) {
                if (entry.is_regular_file() && entry.path().extension() == ".csv") {
                    csvs.push_back(entry.path());
                }
            }
            std::sort(csvs.begin(), csvs.end());
            if (csvs.empty()) continue;

            std::map<std::string, std::vector<TraceSegment>> by_workload;
            for (const fs::path& csv : csvs) {
                TraceSegment seg = load_trace(csv);
                if (seg.subsystem != subsystem || seg.frequency_hz != *freq) {
                    throw Error(ErrorKind::Validation,
                                csv.string() + ": metadata disagrees with corpus location");
                }
                by_workload[workload_of(csv.stem().string())].push_back(std::move(seg));
            }
            std::vector<MergedTrace>& slot = corpus[CorpusKey{subsystem, *freq}];
            for (auto& [workload, segments] : by_workload) {
                slot.push_back(merge_passes(segments));
            }
        }
    }
    if (corpus.empty()) {
        throw Error(ErrorKind::Io,
                    "no traces found under '" + root.string() +
                        "' (expected <root>/<cpu|gpu>/<freq_hz>/<workload>_pass<k>.csv "
                        "with .meta.json sidecars)");
    }
    return corpus;
}

MergedTrace corpus_concat(std::vector<MergedTrace> traces) {
    std::sort(traces.begin(), traces.end(), [](const MergedTrace& a, const MergedTrace& b) {
        return a.workload < b.workload;
    });
    return concat(traces);
}

}  // namespace lutpower
