#pragma once

#include <cstdint>
#include <string>

#include "lutpower/errors.hpp"

namespace lutpower {

enum class Subsystem { Cpu, Gpu };

inline const char* to_string(Subsystem s) { return s == Subsystem::Cpu ? "cpu" : "gpu"; }

Subsystem subsystem_from_string(const std::string& s);

// Identity of one performance-counter column. CPU counters are core-qualified
// ("cpu.c3.instr_retired"); GPU counters are not ("gpu.l2_reads"). The per-core
// cycle counter is a reserved event name, consumed as the gating input rather
// than as a model predictor.
struct CounterId {
    Subsystem subsystem = Subsystem::Cpu;
    int core = -1;  // >= 0 iff subsystem == Cpu
    std::string event;

    bool operator==(const CounterId&) const = default;
    auto operator<=>(const CounterId&) const = default;

    bool is_cycles() const { return event == kCyclesEvent; }

    std::string column_name() const;

    static constexpr const char* kCyclesEvent = "cycles";

    // Parses a trace CSV column header; throws Error{Parse} on anything that
    // is not "cpu.c<core>.<event>" or "gpu.<event>".
    static CounterId parse_column(const std::string& column);
};

void validate_counter(const CounterId& id, int core_count);

}  // namespace lutpower
