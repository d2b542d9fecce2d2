// Reduced synthetic platforms for fast tests.
#pragma once

#include "lutpower/synthetic.hpp"

namespace testsupport {

// Two CPU + three GPU frequencies, short workloads: the full pipeline runs in
// well under a second.
inline lutpower::PlatformSpec small_spec() {
    using namespace lutpower;
    PlatformSpec spec = default_platform_spec();
    spec.platform = "small-demo";
    spec.core_count = 2;
    spec.cpu_frequencies_hz = {730000000, 1190000000};
    spec.gpu_frequencies_hz = {319000000, 829000000, 1377000000};
    for (auto it = spec.cpu_base_w.begin(); it != spec.cpu_base_w.end();) {
        it = std::find(spec.cpu_frequencies_hz.begin(), spec.cpu_frequencies_hz.end(), it->first) ==
                     spec.cpu_frequencies_hz.end()
                 ? spec.cpu_base_w.erase(it)
                 : std::next(it);
    }
    for (auto it = spec.cpu_gate_w.begin(); it != spec.cpu_gate_w.end();) {
        it = std::find(spec.cpu_frequencies_hz.begin(), spec.cpu_frequencies_hz.end(), it->first) ==
                     spec.cpu_frequencies_hz.end()
                 ? spec.cpu_gate_w.erase(it)
                 : std::next(it);
    }
    for (auto it = spec.gpu_base_w.begin(); it != spec.gpu_base_w.end();) {
        it = std::find(spec.gpu_frequencies_hz.begin(), spec.gpu_frequencies_hz.end(), it->first) ==
                     spec.gpu_frequencies_hz.end()
                 ? spec.gpu_base_w.erase(it)
                 : std::next(it);
    }
    for (EventTruth& e : spec.cpu_events) {
        std::map<std::uint64_t, double> kept;
        for (std::uint64_t f : spec.cpu_frequencies_hz) kept[f] = e.weight_per_freq.at(f);
        e.weight_per_freq = std::move(kept);
    }
    for (EventTruth& e : spec.gpu_events) {
        std::map<std::uint64_t, double> kept;
        for (std::uint64_t f : spec.gpu_frequencies_hz) kept[f] = e.weight_per_freq.at(f);
        e.weight_per_freq = std::move(kept);
    }
    spec.cpu_decoy_events = 4;
    spec.gpu_decoy_events = 6;
    spec.workloads = {
        {"ramp", {{"idle", 20}, {"compute", 30}, {"memory", 30}, {"mixed", 30}}},
        {"burst", {{"compute", 25}, {"idle", 15}, {"mixed", 35}, {"memory", 35}}},
    };
    return spec;
}

}  // namespace testsupport
