#pragma once

// Seeded random instances shared by the unit tests and the acceptance suite.

#include <cstdint>
#include <random>
#include <vector>

#include "mapek/allocation.hpp"
#include "mapek/core.hpp"
#include "mapek/oracle.hpp"
#include "mapek/scenario.hpp"

namespace mapek::testing {

struct SmallInstance {
    std::vector<MachineState> machines;
    std::vector<PowerProfile> profiles;
    Query query;
};

inline std::uint64_t pick(std::mt19937_64& rng, std::uint64_t lo, std::uint64_t hi) {
    return std::uniform_int_distribution<std::uint64_t>(lo, hi)(rng);
}

/// 1..5 machines, 0..7 hosted VMs, one new query. Hosted VMs are dropped onto
/// random machines wherever they fit, so instances range from empty to tightly
/// fragmented; the query is sized so that a fair share of instances need
/// reallocation or are infeasible.
inline SmallInstance random_instance(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    SmallInstance inst;
    const auto m = pick(rng, 1, kOracleMaxMachines);
    for (std::uint32_t i = 0; i < m; ++i) {
        MachineState ms;
        ms.id = PmId{i + 1};
        ms.capacity = {pick(rng, 2, 8) * 2, pick(rng, 2, 8) * 2048, pick(rng, 2, 8) * 50};
        ms.powered_on = pick(rng, 0, 1) == 1;
        inst.machines.push_back(ms);
        const double idle = static_cast<double>(pick(rng, 60, 200));
        inst.profiles.push_back({idle, idle * (1.5 + static_cast<double>(pick(rng, 0, 10)) / 10.0)});
    }
    const auto vms = pick(rng, 0, kOracleMaxVms - 1);
    for (std::uint64_t v = 0; v < vms; ++v) {
        const ResourceVector d{pick(rng, 1, 6), pick(rng, 1, 6) * 1024, pick(rng, 1, 6) * 25};
        const auto start = pick(rng, 0, m - 1);
        for (std::uint64_t k = 0; k < m; ++k) {
            auto& ms = inst.machines[(start + k) % m];
            if (fits(d, ms.free())) {
                ms.hosted.push_back({VmId{100 + v}, d});
                ms.powered_on = true;
                break;
            }
        }
    }
    auto& q = inst.query;
    q.id = QueryId{1};
    q.user_id = "user-1";
    q.requested = {pick(rng, 1, 10), pick(rng, 1, 10) * 1024, pick(rng, 1, 10) * 25};
    const auto pct = pick(rng, 40, 100);
    q.qos.min_capacity = {q.requested.cpu * pct / 100, q.requested.ram * pct / 100, q.requested.disk * pct / 100};
    q.qos.max_latency = 1000;
    q.qos.max_price = 1e9;
    q.lifetime_s = 60;
    return inst;
}

/// A valid scenario with a small fleet and a generated workload, used by the
/// conservation sweep. Some runs mute a controller for part of the horizon.
inline Scenario random_scenario(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Scenario s;
    s.seed = seed;
    s.horizon_ms = static_cast<SimTime>(pick(rng, 5, 20)) * 60000;
    s.hop_latency_ms = static_cast<SimTime>(pick(rng, 0, 5));
    s.allocator = static_cast<AllocatorKind>(pick(rng, 0, 2));
    s.prices = {0.03, 0.00001, 0.001};
    const auto m = pick(rng, 1, 6);
    for (std::uint32_t i = 0; i < m; ++i) {
        const double idle = static_cast<double>(pick(rng, 80, 250));
        s.machines.push_back({PmId{i + 1},
                              {pick(rng, 4, 32), pick(rng, 4, 64) * 1024, pick(rng, 2, 20) * 100},
                              idle,
                              idle * 2.0});
    }
    GeneratorSpec g;
    g.arrivals = {0};
    g.mean_interarrival_ms = static_cast<double>(pick(rng, 2, 40)) * 1000.0;
    g.cpu = {1, pick(rng, 2, 12)};
    g.ram = {256, pick(rng, 1, 16) * 1024};
    g.disk = {5, pick(rng, 20, 400)};
    g.min_percent = {pick(rng, 20, 100), 100};
    g.lifetime_s = {30, pick(rng, 60, 900)};
    s.generator = g;
    if (pick(rng, 0, 3) == 0) {
        const auto pm = PmId{static_cast<std::uint32_t>(pick(rng, 1, m))};
        const auto from = static_cast<SimTime>(pick(rng, 0, static_cast<std::uint64_t>(s.horizon_ms / 2)));
        s.mutes.push_back({pm, from, from + static_cast<SimTime>(pick(rng, 1000, 120000))});
    }
    return s;
}

}  // namespace mapek::testing
