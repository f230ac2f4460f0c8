#pragma once

// Exhaustive reference allocator for small instances. Verification only: it
// shares data types with the heuristics but none of their search code.

#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "mapek/allocation.hpp"
#include "mapek/core.hpp"
#include "mapek/energy.hpp"

namespace mapek {

inline constexpr std::size_t kOracleMaxMachines = 5;
inline constexpr std::size_t kOracleMaxVms = 8;

struct PowerProfile {
    double idle = 0.0;
    double max = 0.0;
};

struct OracleSolution {
    Placement placement;
    std::size_t machines_on = 0;
    double total_power = 0.0;  // watts at the resulting utilization
};

/// Tries every assignment of every VM (hosted ones plus the new request) to
/// every machine and keeps the feasible one with the fewest powered-on
/// machines, then the lowest total power. nullopt means infeasible.
/// profiles[i] belongs to machines[i].
[[nodiscard]] inline std::optional<OracleSolution> oracle_allocate(std::span<const MachineState> machines,
                                                                   std::span<const PowerProfile> profiles,
                                                                   const Query& q) {
    if (profiles.size() != machines.size()) throw std::invalid_argument("oracle: one power profile per machine");

    struct Item {
        VmId id;
        ResourceVector demand;
        std::optional<std::size_t> origin;
    };
    std::vector<Item> items;
    for (std::size_t i = 0; i < machines.size(); ++i) {
        for (const auto& vm : machines[i].hosted) items.push_back({vm.id, vm.granted, i});
    }
    items.push_back({VmId{q.id.value}, q.requested, std::nullopt});
    if (machines.size() > kOracleMaxMachines || items.size() > kOracleMaxVms) {
        throw std::invalid_argument("oracle: instance too large for exhaustive search");
    }

    const std::size_t m = machines.size();
    std::vector<ResourceVector> used(m);
    std::vector<std::size_t> count(m, 0);
    std::vector<std::size_t> assignment(items.size(), 0);

    std::optional<std::vector<std::size_t>> best;
    std::size_t best_on = 0;
    double best_power = 0.0;

    auto evaluate = [&] {
        std::size_t on = 0;
        double watts = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            if (count[i] == 0) continue;
            ++on;
            PhysicalMachine pm;
            pm.id = machines[i].id;
            pm.capacity = machines[i].capacity;
            pm.power_idle = profiles[i].idle;
            pm.power_max = profiles[i].max;
            pm.powered_on = true;
            watts += power(pm, utilization(used[i], machines[i].capacity));
        }
        if (!best || on < best_on || (on == best_on && watts < best_power)) {
            best = assignment;
            best_on = on;
            best_power = watts;
        }
    };

    auto machines_in_use = [&] {
        std::size_t on = 0;
        for (auto c : count) on += c > 0 ? 1 : 0;
        return on;
    };

    auto search = [&](auto&& self, std::size_t k) -> void {
        if (best && machines_in_use() > best_on) return;
        if (k == items.size()) {
            evaluate();
            return;
        }
        for (std::size_t i = 0; i < m; ++i) {
            const ResourceVector next = used[i] + items[k].demand;
            if (!all_le(next, machines[i].capacity)) continue;
            const ResourceVector before = used[i];
            used[i] = next;
            ++count[i];
            assignment[k] = i;
            self(self, k + 1);
            --count[i];
            used[i] = before;
        }
    };
    search(search, 0);

    if (!best) return std::nullopt;

    OracleSolution sol;
    sol.machines_on = best_on;
    sol.total_power = best_power;
    auto& p = sol.placement;
    const auto& assign = *best;
    p.vm = VMInstance{VmId{q.id.value}, q.id, q.requested, machines[assign.back()].id, 0};
    std::vector<bool> in_use(m, false);
    for (std::size_t k = 0; k < items.size(); ++k) {
        in_use[assign[k]] = true;
        if (items[k].origin && *items[k].origin != assign[k]) {
            p.migrations.push_back({items[k].id, machines[*items[k].origin].id, machines[assign[k]].id});
        }
    }
    for (std::size_t i = 0; i < m; ++i) {
        if (in_use[i] && !machines[i].powered_on) p.machines_powered_on.push_back(machines[i].id);
        if (!in_use[i] && machines[i].powered_on) p.machines_powered_off.push_back(machines[i].id);
    }
    return sol;
}

}  // namespace mapek
