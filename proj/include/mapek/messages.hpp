#pragma once

// Inter-agent message protocol. The message kind is derived from the body
// alternative, so every kind has exactly one body shape.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "mapek/core.hpp"

namespace mapek {

struct AgentId {
    std::string value;

    friend auto operator<=>(const AgentId&, const AgentId&) = default;
};

namespace agent {
inline AgentId analyzer() { return {"analyzer"}; }
inline AgentId scheduler() { return {"scheduler"}; }
inline AgentId coordinator() { return {"coordinator"}; }
inline AgentId user() { return {"user"}; }
inline AgentId controller(PmId pm) { return {"controller-" + std::to_string(pm.value)}; }
}  // namespace agent

enum class AdaptationOption { None, Retry, Replacement, Reallocation };

inline std::string_view to_string(AdaptationOption o) {
    switch (o) {
        case AdaptationOption::None: return "none";
        case AdaptationOption::Retry: return "retry";
        case AdaptationOption::Replacement: return "replacement";
        case AdaptationOption::Reallocation: return "reallocation";
    }
    return "?";
}

/// One resource line of a service description, e.g. {"cpu", 4, 2}.
struct ResourceItem {
    std::string kind;
    std::optional<std::uint64_t> capacity;
    std::optional<std::uint64_t> minimum;

    friend bool operator==(const ResourceItem&, const ResourceItem&) = default;
};

/// What the user layer submits to the analyzer.
struct ServiceDescription {
    QueryId request_id;
    std::string user_id;
    std::vector<ResourceItem> resources;
    std::optional<SimTime> max_latency;
    std::optional<double> max_price;
    std::optional<std::uint64_t> lifetime_s;
    SimTime submitted = 0;

    friend bool operator==(const ServiceDescription&, const ServiceDescription&) = default;
};

/// Outcome of one query as seen by the user layer; one row of allocations.csv.
struct AllocationRecord {
    SimTime time = 0;
    QueryId query_id;
    SlaVerdict verdict = SlaVerdict::Unacceptable;
    std::optional<PmId> pm;
    ResourceVector offered;
    AdaptationOption option_used = AdaptationOption::None;
    std::size_t migrations = 0;
    std::string reason;

    friend bool operator==(const AllocationRecord&, const AllocationRecord&) = default;
};

struct SupervisionEntry {
    AllocationRecord record;
    SystemState state_at_decision = SystemState::Normal;

    friend bool operator==(const SupervisionEntry&, const SupervisionEntry&) = default;
};

struct UserRequest {
    ServiceDescription description;
};
struct ResourceRequest {
    Query query;
};
struct StatusRequest {
    std::uint64_t round = 0;
};
/// round == 0 marks an unsolicited push from a controller.
struct StatusReport {
    std::uint64_t round = 0;
    MachineReport report;
};
struct AllocationResult {
    AllocationRecord record;
};
struct SupervisionReport {
    SupervisionEntry entry;
};

enum class MessageKind { UserRequest, ResourceRequest, StatusRequest, StatusReport, AllocationResult, SupervisionReport };

using MessageBody =
    std::variant<UserRequest, ResourceRequest, StatusRequest, StatusReport, AllocationResult, SupervisionReport>;

struct Message {
    AgentId from;
    AgentId to;
    MessageBody body;

    [[nodiscard]] MessageKind kind() const { return static_cast<MessageKind>(body.index()); }
};

inline std::string_view to_string(MessageKind k) {
    switch (k) {
        case MessageKind::UserRequest: return "UserRequest";
        case MessageKind::ResourceRequest: return "ResourceRequest";
        case MessageKind::StatusRequest: return "StatusRequest";
        case MessageKind::StatusReport: return "StatusReport";
        case MessageKind::AllocationResult: return "AllocationResult";
        case MessageKind::SupervisionReport: return "SupervisionReport";
    }
    return "?";
}

enum class TimerTag { Monitor, CollectReports, RetryBackoff };

inline std::string_view to_string(TimerTag t) {
    switch (t) {
        case TimerTag::Monitor: return "monitor";
        case TimerTag::CollectReports: return "collect-reports";
        case TimerTag::RetryBackoff: return "retry-backoff";
    }
    return "?";
}

/// Timer an agent asks the kernel to arm, relative to the current instant.
struct TimerRequest {
    AgentId agent;
    TimerTag tag = TimerTag::Monitor;
    std::uint64_t cookie = 0;
    SimTime delay = 0;
};

/// Side effects of one agent step, handed back to the kernel.
struct Outbox {
    std::vector<Message> messages;
    std::vector<TimerRequest> timers;
};

}  // namespace mapek
