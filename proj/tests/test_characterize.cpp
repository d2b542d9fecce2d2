#include <doctest.h>

#include <algorithm>
#include <set>

#include "lutpower/characterize.hpp"
#include "lutpower/rng.hpp"
#include "support.hpp"

using namespace lutpower;

namespace {

// GPU merged trace straight from event series (single pass 0).
MergedTrace trace_from_series(const std::vector<std::string>& events,
                              const std::vector<std::vector<double>>& series,
                              const std::vector<double>& power) {
    MergedTrace t;
    t.subsystem = Subsystem::Gpu;
    t.frequency_hz = 829000000;
    t.workload = "w";
    t.rows = power.size();
    std::vector<std::size_t> order(events.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return events[a] < events[b]; });
    for (std::size_t i : order) t.events.push_back(events[i]);
    t.event_pass.assign(events.size(), 0);
    t.rates.resize(t.rows * events.size());
    for (std::size_t r = 0; r < t.rows; ++r) {
        for (std::size_t e = 0; e < order.size(); ++e) {
            t.rates[r * events.size() + e] = series[order[e]][r];
        }
    }
    t.power = power;
    t.duration.assign(t.rows, 0.1);
    t.pass_power[0] = power;
    return t;
}

Ranking ranking_of(const std::vector<std::pair<std::string, double>>& entries) {
    Ranking r;
    r.subsystem = Subsystem::Gpu;
    r.frequency_hz = 829000000;
    for (const auto& [name, pcc] : entries) {
        FitStats f;
        f.event = name;
        f.pcc = pcc;
        f.p_value = 0.001;
        f.n = 100;
        r.entries.push_back(f);
    }
    std::sort(r.entries.begin(), r.entries.end(), [](const FitStats& a, const FitStats& b) {
        if (a.pcc != b.pcc) return a.pcc > b.pcc;
        return a.event < b.event;
    });
    return r;
}

}  // namespace

TEST_CASE("characterize orders events by planted correlation strength") {
    Rng rng(7);
    const std::size_t n = 400;
    std::vector<double> power(n), strong(n), weak(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double base = rng.uniform(5.0, 25.0);
        power[i] = base;
        strong[i] = 10.0 * base + rng.normal(8.0);   // pcc ~ 0.9
        weak[i] = 0.8 * base + rng.normal(20.0);     // pcc ~ 0.2
    }
    const MergedTrace t = trace_from_series({"a_strong", "b_weak"}, {strong, weak}, power);
    const Ranking r = characterize(t, 0.05);
    REQUIRE(r.entries.size() == 2);
    CHECK(r.entries[0].event == "a_strong");
    CHECK(r.entries[1].event == "b_weak");
    CHECK(r.entries[0].pcc > 0.8);
    CHECK(r.entries[1].pcc < 0.4);
}

TEST_CASE("white-noise events are excluded in at least 90 of 100 seeds") {
    int excluded = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Rng rng(seed * 13 + 5);
        const std::size_t n = 120;
        std::vector<double> power(n), noise(n);
        for (std::size_t i = 0; i < n; ++i) {
            power[i] = rng.uniform(5.0, 25.0);
            noise[i] = rng.normal(1.0);
        }
        const MergedTrace t = trace_from_series({"noise"}, {noise}, power);
        const Ranking r = characterize(t, 0.05);
        if (r.entries.empty()) ++excluded;
    }
    CHECK(excluded >= 90);
}

TEST_CASE("identical series tie-break lexicographically") {
    Rng rng(21);
    const std::size_t n = 60;
    std::vector<double> power(n), x(n);
    for (std::size_t i = 0; i < n; ++i) {
        power[i] = rng.uniform(5.0, 25.0);
        x[i] = 2.0 * power[i] + rng.normal(1.0);
    }
    const MergedTrace t = trace_from_series({"zeta", "alpha"}, {x, x}, power);
    const Ranking r = characterize(t, 0.05);
    REQUIRE(r.entries.size() == 2);
    CHECK(r.entries[0].pcc == r.entries[1].pcc);
    CHECK(r.entries[0].event == "alpha");
    CHECK(r.entries[1].event == "zeta");
}

TEST_CASE("each event is regressed against the power of its own pass") {
    Rng rng(55);
    const std::size_t n = 300;
    // pass 0 power is flat noise, pass 1 power carries the signal
    std::vector<double> p0(n), p1(n), x(n);
    for (std::size_t i = 0; i < n; ++i) {
        p0[i] = 10.0 + rng.normal(1.0);
        p1[i] = rng.uniform(5.0, 25.0);
        x[i] = 3.0 * p1[i] + rng.normal(1.0);
    }
    MergedTrace t;
    t.subsystem = Subsystem::Gpu;
    t.frequency_hz = 829000000;
    t.workload = "w";
    t.rows = n;
    t.events = {"sig"};
    t.event_pass = {1};
    t.rates = x;
    t.power = p0;  // reference pass power would show ~no correlation
    t.duration.assign(n, 0.1);
    t.pass_power[0] = p0;
    t.pass_power[1] = p1;

    const Ranking r = characterize(t, 0.05);
    REQUIRE(r.entries.size() == 1);
    CHECK(r.entries[0].pcc > 0.9);  // only true if regressed against pass 1
}

TEST_CASE("oracle JSON parsing") {
    const auto good = oracle_from_json_text(
        R"({"max_simultaneous": 3, "exclusive_groups": [["a","b"]]})", "inline");
    std::vector<std::string> ab{"a", "b"};
    std::vector<std::string> ac{"a", "c"};
    CHECK_FALSE(good->can_schedule(ab));
    CHECK(good->can_schedule(ac));
    CHECK(good->can_schedule({}));

    CHECK_THROWS_AS(oracle_from_json_text("{", "inline"), Error);
    CHECK_THROWS_AS(oracle_from_json_text(R"({"exclusive_groups": []})", "inline"), Error);
    CHECK_THROWS_AS(
        oracle_from_json_text(R"({"max_simultaneous": 2, "exclusive_groups": "no"})", "inline"),
        Error);
}

TEST_CASE("characterize needs 3 samples and a nonempty input") {
    CHECK_THROWS_AS(characterize(std::span<const MergedTrace>{}), Error);
    const MergedTrace t = trace_from_series({"e"}, {{1.0, 2.0}}, {1.0, 2.0});
    CHECK_THROWS_AS(characterize(t), Error);
}

TEST_CASE("greedy selection: capacity prefix") {
    const Ranking r = ranking_of({{"a", 0.9}, {"b", 0.8}, {"c", 0.7}, {"d", 0.6}, {"e", 0.5}});
    const CapacityOracle oracle(3);
    const SelectionResult s = select_counters(r, oracle, 5);
    CHECK(s.set.counters == std::vector<std::string>{"a", "b", "c"});
    CHECK(s.labels[3].second == SelectionStatus::Incompatible);  // capacity-blocked
    CHECK(s.labels[4].second == SelectionStatus::Incompatible);
}

TEST_CASE("greedy selection: mutually exclusive pair is skipped") {
    const Ranking r = ranking_of({{"ev1", 0.9}, {"ev2", 0.8}, {"ev3", 0.7}});
    const GroupOracle oracle(4, {{"ev1", "ev2"}});
    const SelectionResult s = select_counters(r, oracle, 2);
    CHECK(s.set.counters == std::vector<std::string>{"ev1", "ev3"});
    REQUIRE(s.labels.size() == 3);
    CHECK(s.labels[0] == std::pair<std::string, SelectionStatus>{"ev1", SelectionStatus::Selected});
    CHECK(s.labels[1] ==
          std::pair<std::string, SelectionStatus>{"ev2", SelectionStatus::Incompatible});
    CHECK(s.labels[2] == std::pair<std::string, SelectionStatus>{"ev3", SelectionStatus::Selected});
}

TEST_CASE("greedy selection stops at k and discards the tail") {
    const Ranking r = ranking_of({{"a", 0.9}, {"b", 0.8}, {"c", 0.7}});
    const CapacityOracle oracle(8);
    const SelectionResult s = select_counters(r, oracle, 2);
    CHECK(s.set.counters == std::vector<std::string>{"a", "b"});
    CHECK(s.labels[2].second == SelectionStatus::Discarded);
}

TEST_CASE("empty selection raises") {
    const Ranking r = ranking_of({{"a", 0.9}});
    const GroupOracle oracle(0, {});
    try {
        select_counters(r, oracle, 2);
        FAIL("expected EmptySelection");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::EmptySelection);
    }
    CHECK_THROWS_AS(select_counters(r, CapacityOracle(3), 0), Error);
}

namespace {

GroupOracle random_group_oracle(Rng& rng, const std::vector<std::string>& events) {
    const std::size_t cap = 1 + static_cast<std::size_t>(rng.uniform(0.0, 6.0));
    std::vector<std::vector<std::string>> groups;
    const int n_groups = static_cast<int>(rng.uniform(0.0, 3.0));
    for (int g = 0; g < n_groups; ++g) {
        std::vector<std::string> group;
        for (const std::string& e : events) {
            if (rng.uniform01() < 0.3) group.push_back(e);
        }
        if (group.size() >= 2) groups.push_back(std::move(group));
    }
    return GroupOracle(cap, std::move(groups));
}

}  // namespace

TEST_CASE("greedy equals an independent reimplementation on randomized oracles") {
    Rng rng(501);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t n_events = 2 + static_cast<std::size_t>(rng.uniform(0.0, 10.0));
        std::vector<std::pair<std::string, double>> entries;
        std::vector<double> used;
        for (std::size_t e = 0; e < n_events; ++e) {
            double pcc;
            do {
                pcc = rng.uniform(0.01, 0.99);
            } while (std::any_of(used.begin(), used.end(),
                                 [&](double u) { return std::abs(u - pcc) < 1e-9; }));
            used.push_back(pcc);
            entries.emplace_back("ev" + std::to_string(e), pcc);
        }
        const Ranking ranking = ranking_of(entries);
        std::vector<std::string> ranked;
        for (const FitStats& f : ranking.entries) ranked.push_back(f.event);
        const GroupOracle oracle = random_group_oracle(rng, ranked);
        const std::size_t k = 1 + static_cast<std::size_t>(rng.uniform(0.0, 5.0));

        const std::vector<std::string> reference = testsupport::greedy_reference(
            ranked,
            [&](const std::vector<std::string>& set) { return oracle.can_schedule(set); }, k);

        SelectionResult actual;
        bool empty_selection = false;
        try {
            actual = select_counters(ranking, oracle, k);
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::EmptySelection);
            empty_selection = true;
        }
        if (empty_selection) {
            CHECK(reference.empty());
            continue;
        }
        CHECK(actual.set.counters == reference);
        CHECK(oracle.can_schedule(actual.set.counters));

        // labels partition the ranked events exactly
        CHECK(actual.labels.size() == ranking.entries.size());
        std::set<std::string> seen;
        std::size_t selected = 0;
        for (const auto& [event, status] : actual.labels) {
            CHECK(seen.insert(event).second);
            if (status == SelectionStatus::Selected) ++selected;
        }
        CHECK(selected == actual.set.counters.size());

        // prefix semantics: an incompatible event was blocked by the selected
        // events ranked before it
        for (std::size_t i = 0; i < actual.labels.size(); ++i) {
            if (actual.labels[i].second != SelectionStatus::Incompatible) continue;
            std::vector<std::string> prefix;
            for (std::size_t j = 0; j < i; ++j) {
                if (actual.labels[j].second == SelectionStatus::Selected) {
                    prefix.push_back(actual.labels[j].first);
                }
            }
            prefix.push_back(actual.labels[i].first);
            const bool over_budget = prefix.size() > k;
            CHECK((over_budget || !oracle.can_schedule(prefix)));
        }

        // monotonicity of the oracle itself: drop one element of a schedulable set
        if (actual.set.counters.size() >= 2) {
            std::vector<std::string> subset(actual.set.counters.begin() + 1,
                                            actual.set.counters.end());
            CHECK(oracle.can_schedule(subset));
        }
    }
}

TEST_CASE("removing a late non-selected event does not change the selection") {
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<std::pair<std::string, double>> entries;
        for (int e = 0; e < 8; ++e) {
            entries.emplace_back("ev" + std::to_string(e), 0.9 - 0.1 * e);
        }
        const Ranking ranking = ranking_of(entries);
        const GroupOracle oracle(3, {{"ev1", "ev2"}});
        const SelectionResult base = select_counters(ranking, oracle, 3);

        // find an event ranked after the last selected one that was not selected
        const std::string last = base.set.counters.back();
        std::size_t last_idx = 0;
        for (std::size_t i = 0; i < ranking.entries.size(); ++i) {
            if (ranking.entries[i].event == last) last_idx = i;
        }
        for (std::size_t i = last_idx + 1; i < ranking.entries.size(); ++i) {
            Ranking pruned = ranking;
            pruned.entries.erase(pruned.entries.begin() + static_cast<std::ptrdiff_t>(i));
            const SelectionResult again = select_counters(pruned, oracle, 3);
            CHECK(again.set.counters == base.set.counters);
        }
    }
}

TEST_CASE("characterize_all is per-frequency compositional and deterministic") {
    Rng rng(99);
    const std::size_t n = 200;
    std::vector<double> power(n), a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
        power[i] = rng.uniform(5.0, 25.0);
        a[i] = 3.0 * power[i] + rng.normal(2.0);
        b[i] = rng.uniform(0.0, 10.0);
    }
    MergedTrace t1 = trace_from_series({"a", "b"}, {a, b}, power);
    MergedTrace t2 = t1;
    t2.frequency_hz = 1377000000;

    std::map<CorpusKey, std::vector<MergedTrace>> corpus;
    corpus[{Subsystem::Gpu, t1.frequency_hz}] = {t1};
    corpus[{Subsystem::Gpu, t2.frequency_hz}] = {t2};

    const CapacityOracle oracle(4);
    const auto all = characterize_all(corpus, oracle, 2, 0.05);
    REQUIRE(all.size() == 2);
    // identical data replicated per frequency -> identical sets
    CHECK(all.at({Subsystem::Gpu, t1.frequency_hz}).set.counters ==
          all.at({Subsystem::Gpu, t2.frequency_hz}).set.counters);
    // compositionality
    const SelectionResult direct = select_counters(characterize(t1, 0.05), oracle, 2);
    CHECK(all.at({Subsystem::Gpu, t1.frequency_hz}).set.counters == direct.set.counters);
    // determinism
    const auto again = characterize_all(corpus, oracle, 2, 0.05);
    CHECK(again.at({Subsystem::Gpu, t1.frequency_hz}).set.counters ==
          all.at({Subsystem::Gpu, t1.frequency_hz}).set.counters);
}

TEST_CASE("ranking CSV covers every fittable event exactly once with its status") {
    Rng rng(123);
    const std::size_t n = 150;
    std::vector<double> power(n), a(n), b(n), c(n), flat(n, 5.0);
    for (std::size_t i = 0; i < n; ++i) {
        power[i] = rng.uniform(5.0, 25.0);
        a[i] = 2.0 * power[i] + rng.normal(2.0);
        b[i] = power[i] + rng.normal(4.0);
        c[i] = rng.normal(1.0);
    }
    const MergedTrace t = trace_from_series({"a", "b", "noise", "flat"}, {a, b, c, flat}, power);
    const Ranking r = characterize(t, 0.05);
    const SelectionResult s = select_counters(r, CapacityOracle(1), 1);
    const std::string csv = ranking_to_csv(r, s);

    CHECK(csv.rfind("event,pcc,p_value,slope,intercept,status\n", 0) == 0);
    CHECK(csv.find("a,") != std::string::npos);
    CHECK(csv.find("selected") != std::string::npos);
    // zero-variance events carry no stats row
    CHECK(csv.find("flat,") == std::string::npos);
    CHECK(std::count(csv.begin(), csv.end(), '\n') ==
          1 + static_cast<std::ptrdiff_t>(r.entries.size() + r.rejected.size()));
    CHECK(r.zero_variance == std::vector<std::string>{"flat"});
}
