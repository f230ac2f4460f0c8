#pragma once

// Builds the availability matrix and places new VMs: energy-aware best-fit
// consolidation, reduced-capacity replacement, and full-repack reallocation.
// Two non-adaptive baselines (first-fit, spread) share the same interface.

#include <algorithm>
#include <array>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "mapek/core.hpp"

namespace mapek {

enum class AllocatorKind { SelfAdaptive, FirstFit, Spread };

inline std::string_view to_string(AllocatorKind k) {
    switch (k) {
        case AllocatorKind::SelfAdaptive: return "selfadaptive";
        case AllocatorKind::FirstFit: return "firstfit";
        case AllocatorKind::Spread: return "spread";
    }
    return "?";
}

inline std::optional<AllocatorKind> parse_allocator(std::string_view s) {
    if (s == "selfadaptive") return AllocatorKind::SelfAdaptive;
    if (s == "firstfit") return AllocatorKind::FirstFit;
    if (s == "spread") return AllocatorKind::Spread;
    return std::nullopt;
}

/// Whether the policy switches empty machines off. Baselines keep every
/// machine on for the whole run.
[[nodiscard]] constexpr bool powers_off_idle(AllocatorKind k) { return k == AllocatorKind::SelfAdaptive; }

/// Mean normalized free space; lower means a tighter fit.
[[nodiscard]] inline double residual_score(const ResourceVector& free, const ResourceVector& capacity) {
    auto ratio = [](std::uint64_t f, std::uint64_t c) {
        return c == 0 ? 0.0 : static_cast<double>(f) / static_cast<double>(c);
    };
    return (ratio(free.cpu, capacity.cpu) + ratio(free.ram, capacity.ram) + ratio(free.disk, capacity.disk)) / 3.0;
}

namespace detail {
inline bool capacity_less(const ResourceVector& a, const ResourceVector& b) {
    return std::tie(a.cpu, a.ram, a.disk) < std::tie(b.cpu, b.ram, b.disk);
}
}  // namespace detail

// ---------------------------------------------------------------------------
// Machine snapshots
// ---------------------------------------------------------------------------

/// Full view of one machine, enough to repack it.
struct MachineState {
    PmId id;
    ResourceVector capacity;
    bool powered_on = true;
    std::vector<HostedVm> hosted;  // ordered by vm id

    friend bool operator==(const MachineState&, const MachineState&) = default;

    [[nodiscard]] ResourceVector used() const {
        ResourceVector sum;
        for (const auto& vm : hosted) sum += vm.granted;
        return sum;
    }
    [[nodiscard]] ResourceVector free() const { return vec_sub(capacity, used()); }

    [[nodiscard]] static MachineState from_report(const MachineReport& r) {
        return {r.pm_id, r.capacity(), r.powered_on, r.hosted};
    }
    [[nodiscard]] MachineReport to_report(SimTime t) const { return {id, hosted, free(), t, powered_on}; }
};

/// One row per report, ascending by pm id; snapshot time is the newest report.
[[nodiscard]] inline AvailabilityMatrix build_availability(std::span<const MachineReport> reports) {
    AvailabilityMatrix a;
    for (const auto& r : reports) {
        a.rows.push_back({r.pm_id, r.free, r.powered_on, r.capacity()});
        a.snapshot_time = std::max(a.snapshot_time, r.report_time);
    }
    std::sort(a.rows.begin(), a.rows.end(), [](const auto& x, const auto& y) { return x.pm_id < y.pm_id; });
    for (std::size_t i = 1; i < a.rows.size(); ++i) {
        if (a.rows[i].pm_id == a.rows[i - 1].pm_id) {
            throw AccountingError("duplicate report for pm " + std::to_string(a.rows[i].pm_id.value));
        }
    }
    return a;
}

[[nodiscard]] inline AvailabilityMatrix availability_of(std::span<const MachineState> machines, SimTime t) {
    std::vector<MachineReport> reports;
    reports.reserve(machines.size());
    for (const auto& m : machines) reports.push_back(m.to_report(t));
    return build_availability(reports);
}

// ---------------------------------------------------------------------------
// place
// ---------------------------------------------------------------------------

struct PlaceResult {
    PmId pm;
    bool powers_on = false;

    friend bool operator==(const PlaceResult&, const PlaceResult&) = default;
};

/// Picks a host for demand, or nullopt when nothing fits.
///
/// SelfAdaptive: the powered-on machine with the lowest residual score after
/// placement; failing that, the smallest powered-off machine that fits.
/// FirstFit: lowest pm id that fits. Spread: highest residual score after
/// placement. Ties always go to the lowest pm id.
[[nodiscard]] inline std::optional<PlaceResult> place(const AvailabilityMatrix& a, const ResourceVector& demand,
                                                      AllocatorKind kind = AllocatorKind::SelfAdaptive) {
    const AvailabilityRow* chosen = nullptr;
    switch (kind) {
        case AllocatorKind::SelfAdaptive: {
            double best = 0.0;
            for (const auto& row : a.rows) {
                if (!row.powered_on || !fits(demand, row.free)) continue;
                const double s = residual_score(vec_sub(row.free, demand), row.capacity);
                if (chosen == nullptr || s < best) {
                    chosen = &row;
                    best = s;
                }
            }
            if (chosen == nullptr) {
                for (const auto& row : a.rows) {
                    if (row.powered_on || !fits(demand, row.free)) continue;
                    if (chosen == nullptr || detail::capacity_less(row.capacity, chosen->capacity)) chosen = &row;
                }
            }
            break;
        }
        case AllocatorKind::FirstFit:
            for (const auto& row : a.rows) {
                if (fits(demand, row.free)) {
                    chosen = &row;
                    break;
                }
            }
            break;
        case AllocatorKind::Spread: {
            double best = 0.0;
            for (const auto& row : a.rows) {
                if (!fits(demand, row.free)) continue;
                const double s = residual_score(vec_sub(row.free, demand), row.capacity);
                if (chosen == nullptr || s > best) {
                    chosen = &row;
                    best = s;
                }
            }
            break;
        }
    }
    if (chosen == nullptr) return std::nullopt;
    return PlaceResult{chosen->pm_id, !chosen->powered_on};
}

// ---------------------------------------------------------------------------
// replace
// ---------------------------------------------------------------------------

inline constexpr std::uint64_t kReplacementSteps = 4;

/// Level k of the range [lo, hi] split into kReplacementSteps equal steps.
[[nodiscard]] constexpr std::uint64_t grid_value(std::uint64_t lo, std::uint64_t hi, std::uint64_t k) {
    return lo + (hi - lo) * k / kReplacementSteps;
}

[[nodiscard]] constexpr ResourceVector grid_offer(const Query& q, std::uint64_t kc, std::uint64_t kr,
                                                  std::uint64_t kd) {
    const auto& lo = q.qos.min_capacity;
    const auto& hi = q.requested;
    return {grid_value(lo.cpu, hi.cpu, kc), grid_value(lo.ram, hi.ram, kr), grid_value(lo.disk, hi.disk, kd)};
}

struct ReplaceResult {
    PmId pm;
    ResourceVector offered;
    bool powers_on = false;

    friend bool operator==(const ReplaceResult&, const ReplaceResult&) = default;
};

/// Largest reduced offer inside [min_capacity, requested] that place() can
/// host. Candidates lie on a 5-level grid per component; preference is the
/// highest total level, then cpu, ram, disk levels. Callers only invoke this
/// after the full request failed to place.
[[nodiscard]] inline std::optional<ReplaceResult> replace(const Query& q, const AvailabilityMatrix& a,
                                                          AllocatorKind kind = AllocatorKind::SelfAdaptive) {
    if (place(a, q.requested, kind)) {
        throw std::logic_error("replace: requested capacity already fits");
    }
    constexpr auto S = kReplacementSteps;
    for (std::uint64_t total = 3 * S; total-- > 0;) {
        for (std::uint64_t kc = S + 1; kc-- > 0;) {
            for (std::uint64_t kr = S + 1; kr-- > 0;) {
                if (kc + kr > total || total - kc - kr > S) continue;
                const std::uint64_t kd = total - kc - kr;
                const ResourceVector offer = grid_offer(q, kc, kr, kd);
                if (auto p = place(a, offer, kind)) return ReplaceResult{p->pm, offer, p->powers_on};
            }
        }
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Placement and reallocate
// ---------------------------------------------------------------------------

struct Migration {
    VmId vm;
    PmId from;
    PmId to;

    friend bool operator==(const Migration&, const Migration&) = default;
};

/// Allocator output. vm.expires is left at 0 here and stamped by the
/// scheduler at commit time.
struct Placement {
    VMInstance vm;
    std::vector<Migration> migrations;
    std::vector<PmId> machines_powered_on;
    std::vector<PmId> machines_powered_off;

    friend bool operator==(const Placement&, const Placement&) = default;
};

[[nodiscard]] inline Placement simple_placement(const Query& q, PmId host, const ResourceVector& granted,
                                                bool powers_on) {
    Placement p;
    p.vm = VMInstance{VmId{q.id.value}, q.id, granted, host, 0};
    if (powers_on) p.machines_powered_on.push_back(host);
    return p;
}

/// How reallocate sizes items when sorting them largest first. Demands are
/// normalized by the biggest machine per component; Mean averages the three
/// ratios, Dominant takes the largest.
enum class RepackKey { Mean, Dominant };

namespace detail {

[[nodiscard]] inline std::optional<Placement> repack(std::span<const MachineState> machines, const Query& q,
                                                     RepackKey key) {
    struct Item {
        VmId id;
        ResourceVector demand;
        std::optional<std::size_t> origin;  // index into machines
        double size = 0.0;
    };

    const VmId new_id{q.id.value};
    ResourceVector scale;
    std::vector<Item> items;
    for (std::size_t i = 0; i < machines.size(); ++i) {
        const auto& m = machines[i];
        scale.cpu = std::max(scale.cpu, m.capacity.cpu);
        scale.ram = std::max(scale.ram, m.capacity.ram);
        scale.disk = std::max(scale.disk, m.capacity.disk);
        for (const auto& vm : m.hosted) {
            if (vm.id == new_id) throw std::logic_error("reallocate: new vm id already hosted");
            items.push_back({vm.id, vm.granted, i});
        }
    }
    items.push_back({new_id, q.requested, std::nullopt});
    for (auto& it : items) {
        if (key == RepackKey::Mean) {
            it.size = residual_score(it.demand, scale);
        } else {
            auto r = [](std::uint64_t d, std::uint64_t c) { return c == 0 ? 0.0 : static_cast<double>(d) / static_cast<double>(c); };
            it.size = std::max({r(it.demand.cpu, scale.cpu), r(it.demand.ram, scale.ram), r(it.demand.disk, scale.disk)});
        }
    }
    std::stable_sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
        if (a.size != b.size) return a.size > b.size;
        return a.id < b.id;
    });

    // Order in which unopened machines are tried: powered-on machines, largest
    // first, then powered-off machines, smallest first.
    std::vector<std::size_t> open_order(machines.size());
    for (std::size_t i = 0; i < machines.size(); ++i) open_order[i] = i;
    std::stable_sort(open_order.begin(), open_order.end(), [&](std::size_t a, std::size_t b) {
        const auto& x = machines[a];
        const auto& y = machines[b];
        if (x.powered_on != y.powered_on) return x.powered_on;
        if (x.capacity != y.capacity) {
            return x.powered_on ? detail::capacity_less(y.capacity, x.capacity)
                                : detail::capacity_less(x.capacity, y.capacity);
        }
        return x.id < y.id;
    });

    std::vector<ResourceVector> free(machines.size());
    std::vector<bool> opened(machines.size(), false);
    for (std::size_t i = 0; i < machines.size(); ++i) free[i] = machines[i].capacity;

    std::map<VmId, std::size_t> assigned;
    for (const auto& it : items) {
        std::optional<std::size_t> target;
        double best = 0.0;
        for (std::size_t i = 0; i < machines.size(); ++i) {
            if (!opened[i] || !fits(it.demand, free[i])) continue;
            const double s = residual_score(vec_sub(free[i], it.demand), machines[i].capacity);
            const bool better = !target || s < best || (s == best && it.origin == i && *target != i);
            if (better) {
                target = i;
                best = s;
            }
        }
        if (!target) {
            if (it.origin && !opened[*it.origin] && fits(it.demand, free[*it.origin])) {
                target = *it.origin;
            } else {
                for (std::size_t i : open_order) {
                    if (!opened[i] && fits(it.demand, free[i])) {
                        target = i;
                        break;
                    }
                }
            }
            if (!target) return std::nullopt;
            opened[*target] = true;
        }
        free[*target] = vec_sub(free[*target], it.demand);
        assigned[it.id] = *target;
    }

    Placement p;
    p.vm = VMInstance{new_id, q.id, q.requested, machines[assigned.at(new_id)].id, 0};
    for (const auto& it : items) {
        if (it.origin && assigned.at(it.id) != *it.origin) {
            p.migrations.push_back({it.id, machines[*it.origin].id, machines[assigned.at(it.id)].id});
        }
    }
    std::sort(p.migrations.begin(), p.migrations.end(), [](const auto& a, const auto& b) { return a.vm < b.vm; });
    for (std::size_t i = 0; i < machines.size(); ++i) {
        if (opened[i] && !machines[i].powered_on) p.machines_powered_on.push_back(machines[i].id);
        if (!opened[i] && machines[i].powered_on) p.machines_powered_off.push_back(machines[i].id);
    }
    std::sort(p.machines_powered_on.begin(), p.machines_powered_on.end());
    std::sort(p.machines_powered_off.begin(), p.machines_powered_off.end());
    return p;
}

}  // namespace detail

/// Repacks every hosted VM plus the new one from scratch with best-fit
/// decreasing: items go to the open machine with the lowest residual score,
/// ties to the VM's current host; a new machine is opened only when none of
/// the open ones fits. When the mean-sized pass fails, a second pass sorts by
/// dominant component. Only VMs that change host are listed as migrations;
/// machines left empty are powered off.
[[nodiscard]] inline std::optional<Placement> reallocate(std::span<const MachineState> machines, const Query& q) {
    if (auto p = detail::repack(machines, q, RepackKey::Mean)) return p;
    return detail::repack(machines, q, RepackKey::Dominant);
}

/// Applies a placement to snapshots: power-ons, migrations, the new VM, then
/// power-offs. Throws AccountingError on any capacity or consistency breach.
[[nodiscard]] inline std::vector<MachineState> apply_placement(std::span<const MachineState> machines,
                                                               const Placement& p) {
    std::vector<MachineState> out(machines.begin(), machines.end());
    auto find = [&out](PmId id) -> MachineState& {
        for (auto& m : out) {
            if (m.id == id) return m;
        }
        throw AccountingError("placement references unknown pm " + std::to_string(id.value));
    };
    auto insert_sorted = [](MachineState& m, HostedVm vm) {
        auto pos = std::lower_bound(m.hosted.begin(), m.hosted.end(), vm.id,
                                    [](const HostedVm& h, VmId id) { return h.id < id; });
        m.hosted.insert(pos, vm);
    };

    for (PmId id : p.machines_powered_on) find(id).powered_on = true;

    std::vector<HostedVm> moving;
    for (const auto& mig : p.migrations) {
        auto& src = find(mig.from);
        auto it = std::find_if(src.hosted.begin(), src.hosted.end(), [&](const HostedVm& h) { return h.id == mig.vm; });
        if (it == src.hosted.end()) {
            throw AccountingError("migration of vm " + std::to_string(mig.vm.value) + " absent from source");
        }
        moving.push_back(*it);
        src.hosted.erase(it);
    }
    for (std::size_t i = 0; i < p.migrations.size(); ++i) insert_sorted(find(p.migrations[i].to), moving[i]);

    auto& host = find(p.vm.host);
    for (const auto& m : out) {
        for (const auto& h : m.hosted) {
            if (h.id == p.vm.id) throw AccountingError("vm " + std::to_string(p.vm.id.value) + " already hosted");
        }
    }
    insert_sorted(host, HostedVm{p.vm.id, p.vm.granted});

    for (PmId id : p.machines_powered_off) {
        auto& m = find(id);
        if (!m.hosted.empty()) throw AccountingError("powering off non-empty pm " + std::to_string(id.value));
        m.powered_on = false;
    }
    for (const auto& m : out) {
        if (!all_le(m.used(), m.capacity)) {
            throw AccountingError("capacity exceeded on pm " + std::to_string(m.id.value));
        }
        if (!m.hosted.empty() && !m.powered_on) {
            throw AccountingError("pm " + std::to_string(m.id.value) + " hosts vms while powered off");
        }
    }
    return out;
}

}  // namespace mapek
