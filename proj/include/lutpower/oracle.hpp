#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace lutpower {

// PMU feasibility predicate: can this event set be counted in a single pass?
// Implementations must be monotone (subsets of a schedulable set are
// schedulable) and accept the empty set.
class CompatibilityOracle {
  public:
    virtual ~CompatibilityOracle() = default;
    virtual bool can_schedule(std::span<const std::string> events) const = 0;
};

// At most N events per PMU, no exclusivity constraints.
class CapacityOracle final : public CompatibilityOracle {
  public:
    explicit CapacityOracle(std::size_t max_simultaneous) : max_(max_simultaneous) {}
    bool can_schedule(std::span<const std::string> events) const override {
        return events.size() <= max_;
    }
    std::size_t max_simultaneous() const { return max_; }

  private:
    std::size_t max_;
};

// Capacity plus declared mutually-exclusive groups: at most one event of each
// group can be scheduled at a time.
class GroupOracle final : public CompatibilityOracle {
  public:
    GroupOracle(std::size_t max_simultaneous, std::vector<std::vector<std::string>> exclusive_groups);
    bool can_schedule(std::span<const std::string> events) const override;

    std::size_t max_simultaneous() const { return max_; }
    const std::vector<std::vector<std::string>>& exclusive_groups() const { return groups_; }

  private:
    std::size_t max_;
    std::vector<std::vector<std::string>> groups_;
};

// JSON description: {"max_simultaneous": N, "exclusive_groups": [[...], ...]}.
std::unique_ptr<CompatibilityOracle> load_oracle(const std::filesystem::path& path);
std::unique_ptr<CompatibilityOracle> oracle_from_json_text(const std::string& text,
                                                           const std::string& origin);

}  // namespace lutpower
