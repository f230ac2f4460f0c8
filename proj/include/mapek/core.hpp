#pragma once

// Domain types and the capacity/QoS algebra shared by every other header.

#include <compare>
#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mapek {

/// Bookkeeping diverged from the physical model: capacity underflow, an
/// over-committed machine, a malformed report. Always a bug, never user input.
class AccountingError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Invalid configuration: scenario content, unknown agents, bad flags.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

template <typename Tag, typename Rep = std::uint64_t>
struct StrongId {
    Rep value{};

    constexpr StrongId() = default;
    constexpr explicit StrongId(Rep v) : value(v) {}

    friend constexpr auto operator<=>(const StrongId&, const StrongId&) = default;
};

using PmId = StrongId<struct PmIdTag, std::uint32_t>;
using QueryId = StrongId<struct QueryIdTag>;
using VmId = StrongId<struct VmIdTag>;

/// Virtual time in milliseconds.
using SimTime = std::int64_t;

inline constexpr SimTime kMsPerSecond = 1000;

// ---------------------------------------------------------------------------
// ResourceVector
// ---------------------------------------------------------------------------

/// CPU cores, RAM in MiB, disk in GiB. Unsigned, so non-negativity holds by
/// construction; subtraction goes through vec_sub.
struct ResourceVector {
    std::uint64_t cpu = 0;
    std::uint64_t ram = 0;
    std::uint64_t disk = 0;

    friend constexpr bool operator==(const ResourceVector&, const ResourceVector&) = default;

    [[nodiscard]] constexpr bool any_positive() const { return cpu > 0 || ram > 0 || disk > 0; }
    [[nodiscard]] constexpr bool is_zero() const { return !any_positive(); }
};

/// Component-wise partial order: a <= b in every component.
[[nodiscard]] constexpr bool all_le(const ResourceVector& a, const ResourceVector& b) {
    return a.cpu <= b.cpu && a.ram <= b.ram && a.disk <= b.disk;
}

[[nodiscard]] constexpr ResourceVector operator+(const ResourceVector& a, const ResourceVector& b) {
    return {a.cpu + b.cpu, a.ram + b.ram, a.disk + b.disk};
}

constexpr ResourceVector& operator+=(ResourceVector& a, const ResourceVector& b) {
    a = a + b;
    return a;
}

/// Sufficiency test: demand fits into free iff demand <= free component-wise.
[[nodiscard]] constexpr bool fits(const ResourceVector& demand, const ResourceVector& free) {
    return all_le(demand, free);
}

/// Component-wise a - b. Throws AccountingError when b exceeds a anywhere.
[[nodiscard]] inline ResourceVector vec_sub(const ResourceVector& a, const ResourceVector& b) {
    if (!all_le(b, a)) {
        throw AccountingError("resource underflow: subtrahend exceeds minuend");
    }
    return {a.cpu - b.cpu, a.ram - b.ram, a.disk - b.disk};
}

inline std::string to_string(const ResourceVector& v) {
    return "(" + std::to_string(v.cpu) + "," + std::to_string(v.ram) + "," + std::to_string(v.disk) + ")";
}

// ---------------------------------------------------------------------------
// Pricing and QoS
// ---------------------------------------------------------------------------

/// Linear price per virtual hour.
struct PriceModel {
    double per_core = 0.0;
    double per_mib = 0.0;
    double per_gib = 0.0;

    friend bool operator==(const PriceModel&, const PriceModel&) = default;

    [[nodiscard]] double price(const ResourceVector& v) const {
        return per_core * static_cast<double>(v.cpu) + per_mib * static_cast<double>(v.ram) +
               per_gib * static_cast<double>(v.disk);
    }
};

struct QoSSpec {
    ResourceVector min_capacity;  // lower edge of the acceptable range
    SimTime max_latency = 0;      // allocation must complete within this delay of arrival
    double max_price = 0.0;       // currency units per virtual hour

    friend bool operator==(const QoSSpec&, const QoSSpec&) = default;
};

/// A user request: demanded capacity plus QoS bounds.
struct Query {
    QueryId id;
    std::string user_id;
    ResourceVector requested;
    QoSSpec qos;
    SimTime arrival = 0;
    std::uint64_t lifetime_s = 0;

    friend bool operator==(const Query&, const Query&) = default;
};

/// Returns a description of the first violated invariant, or nullopt.
[[nodiscard]] inline std::optional<std::string> validate(const Query& q) {
    if (!q.requested.any_positive()) {
        return "requested capacity must have a positive component";
    }
    if (!all_le(q.qos.min_capacity, q.requested)) {
        return "min capacity exceeds requested capacity";
    }
    if (q.qos.max_latency <= 0) {
        return "max latency must be positive";
    }
    if (!(q.qos.max_price >= 0.0)) {
        return "max price must be non-negative";
    }
    if (q.lifetime_s == 0) {
        return "lifetime must be positive";
    }
    return std::nullopt;
}

struct VMInstance {
    VmId id;
    QueryId query_id;
    ResourceVector granted;  // below requested when the allocation is degraded
    PmId host;
    SimTime expires = 0;

    friend bool operator==(const VMInstance&, const VMInstance&) = default;
};

struct PhysicalMachine {
    PmId id;
    ResourceVector capacity;
    double power_idle = 0.0;  // watts
    double power_max = 0.0;   // watts
    std::set<VmId> hosted;
    bool powered_on = true;
};

struct HostedVm {
    VmId id;
    ResourceVector granted;

    friend bool operator==(const HostedVm&, const HostedVm&) = default;
};

/// What a controller tells the scheduler about its machine. free plus the sum
/// of hosted grants always equals the machine capacity.
struct MachineReport {
    PmId pm_id;
    std::vector<HostedVm> hosted;  // ordered by vm id
    ResourceVector free;
    SimTime report_time = 0;
    bool powered_on = true;

    friend bool operator==(const MachineReport&, const MachineReport&) = default;

    [[nodiscard]] ResourceVector used() const {
        ResourceVector sum;
        for (const auto& vm : hosted) sum += vm.granted;
        return sum;
    }
    [[nodiscard]] ResourceVector capacity() const { return free + used(); }

    /// Equality ignoring report_time.
    [[nodiscard]] bool same_content(const MachineReport& o) const {
        return pm_id == o.pm_id && hosted == o.hosted && free == o.free && powered_on == o.powered_on;
    }
};

struct AvailabilityRow {
    PmId pm_id;
    ResourceVector free;
    bool powered_on = true;
    ResourceVector capacity;

    friend bool operator==(const AvailabilityRow&, const AvailabilityRow&) = default;
};

/// Global snapshot of free resources, one row per reporting machine, rows
/// ascending by pm id.
struct AvailabilityMatrix {
    SimTime snapshot_time = 0;
    std::vector<AvailabilityRow> rows;

    friend bool operator==(const AvailabilityMatrix&, const AvailabilityMatrix&) = default;
};

enum class SystemState { Normal, Degraded, Broken };
enum class SlaVerdict { Acceptable, DegradedAcceptable, Unacceptable };

inline std::string_view to_string(SystemState s) {
    switch (s) {
        case SystemState::Normal: return "Normal";
        case SystemState::Degraded: return "Degraded";
        case SystemState::Broken: return "Broken";
    }
    return "?";
}

inline std::string_view to_string(SlaVerdict v) {
    switch (v) {
        case SlaVerdict::Acceptable: return "Acceptable";
        case SlaVerdict::DegradedAcceptable: return "DegradedAcceptable";
        case SlaVerdict::Unacceptable: return "Unacceptable";
    }
    return "?";
}

[[nodiscard]] constexpr bool is_satisfied(SlaVerdict v) { return v != SlaVerdict::Unacceptable; }

/// Classifies an offer against a query's QoS. The offer must not exceed the
/// requested capacity.
[[nodiscard]] inline SlaVerdict evaluate_sla(const Query& query, const ResourceVector& offered,
                                             SimTime allocation_latency, double price) {
    if (!all_le(offered, query.requested)) {
        throw std::invalid_argument("evaluate_sla: offer exceeds requested capacity");
    }
    const bool bounds_ok = allocation_latency <= query.qos.max_latency && price <= query.qos.max_price;
    if (!bounds_ok) return SlaVerdict::Unacceptable;
    if (offered == query.requested) return SlaVerdict::Acceptable;
    if (all_le(query.qos.min_capacity, offered)) return SlaVerdict::DegradedAcceptable;
    return SlaVerdict::Unacceptable;
}

}  // namespace mapek
