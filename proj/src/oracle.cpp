#include "lutpower/oracle.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

#include "lutpower/csv.hpp"
#include "lutpower/errors.hpp"

namespace lutpower {

GroupOracle::GroupOracle(std::size_t max_simultaneous,
                         std::vector<std::vector<std::string>> exclusive_groups)
    : max_(max_simultaneous), groups_(std::move(exclusive_groups)) {}

bool GroupOracle::can_schedule(std::span<const std::string> events) const {
    if (events.size() > max_) return false;
    for (const std::vector<std::string>& group : groups_) {
        std::size_t hits = 0;
        for (const std::string& event : events) {
            if (std::find(group.begin(), group.end(), event) != group.end()) {
                if (++hits > 1) return false;
            }
        }
    }
    return true;
}

std::unique_ptr<CompatibilityOracle> oracle_from_json_text(const std::string& text,
                                                           const std::string& origin) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Parse, origin + ": " + e.what());
    }
    if (!doc.contains("max_simultaneous") || !doc["max_simultaneous"].is_number_unsigned()) {
        throw Error(ErrorKind::Parse, origin + ": missing integer 'max_simultaneous'");
    }
    const std::size_t max = doc["max_simultaneous"].get<std::size_t>();
    std::vector<std::vector<std::string>> groups;
    if (doc.contains("exclusive_groups")) {
        try {
            groups = doc["exclusive_groups"].get<std::vector<std::vector<std::string>>>();
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorKind::Parse, origin + ": bad 'exclusive_groups': " + e.what());
        }
    }
    if (groups.empty()) {
        return std::make_unique<CapacityOracle>(max);
    }
    return std::make_unique<GroupOracle>(max, std::move(groups));
}

std::unique_ptr<CompatibilityOracle> load_oracle(const std::filesystem::path& path) {
    return oracle_from_json_text(csv::read_file(path), path.string());
}

}  // namespace lutpower
