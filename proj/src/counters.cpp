#include "lutpower/counters.hpp"

#include <charconv>

namespace lutpower {

Subsystem subsystem_from_string(const std::string& s) {
    if (s == "cpu") return Subsystem::Cpu;
    if (s == "gpu") return Subsystem::Gpu;
    throw Error(ErrorKind::Parse, "unknown subsystem '" + s + "' (expected 'cpu' or 'gpu')");
}

std::string CounterId::column_name() const {
    if (subsystem == Subsystem::Cpu) {
        return "cpu.c" + std::to_string(core) + "." + event;
    }
    return "gpu." + event;
}

CounterId CounterId::parse_column(const std::string& column) {
    if (column.rfind("gpu.", 0) == 0) {
        std::string event = column.substr(4);
        if (event.empty()) {
            throw Error(ErrorKind::Parse, "empty GPU event name in column '" + column + "'");
        }
        return CounterId{Subsystem::Gpu, -1, std::move(event)};
    }
    if (column.rfind("cpu.c", 0) == 0) {
        const std::size_t dot = column.find('.', 5);
        if (dot == std::string::npos || dot == 5 || dot + 1 >= column.size()) {
            throw Error(ErrorKind::Parse, "malformed CPU column '" + column +
                                              "' (expected cpu.c<core>.<event>)");
        }
        int core = -1;
        const char* first = column.data() + 5;
        const char* last = column.data() + dot;
        auto [ptr, ec] = std::from_chars(first, last, core);
        if (ec != std::errc{} || ptr != last || core < 0) {
            throw Error(ErrorKind::Parse, "bad core index in column '" + column + "'");
        }
        return CounterId{Subsystem::Cpu, core, column.substr(dot + 1)};
    }
    throw Error(ErrorKind::Parse, "unrecognized counter column '" + column +
                                      "' (expected cpu.c<core>.<event> or gpu.<event>)");
}

void validate_counter(const CounterId& id, int core_count) {
    if (id.event.empty()) {
        throw Error(ErrorKind::Validation, "counter with empty event name");
    }
    if (id.subsystem == Subsystem::Cpu) {
        if (id.core < 0) {
            throw Error(ErrorKind::Validation, "CPU counter '" + id.event + "' without core index");
        }
        if (id.core >= core_count) {
            throw Error(ErrorKind::Validation,
                        "counter '" + id.column_name() + "' references core " +
                            std::to_string(id.core) + " but platform has " +
                            std::to_string(core_count) + " cores");
        }
    } else if (id.core >= 0) {
        throw Error(ErrorKind::Validation, "GPU counter '" + id.event + "' with a core index");
    }
}

}  // namespace lutpower
