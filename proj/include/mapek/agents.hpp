#pragma once

// The four agents as pure step functions: (state, input) -> (state', outbox).
// None of them touches another agent's state; the kernel carries messages.

#include <algorithm>
#include <cctype>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "mapek/allocation.hpp"
#include "mapek/core.hpp"
#include "mapek/messages.hpp"

namespace mapek {

namespace detail {
inline Message make_message(AgentId from, AgentId to, MessageBody body) {
    return Message{std::move(from), std::move(to), std::move(body)};
}
}  // namespace detail

// ===========================================================================
// Analyzer
// ===========================================================================

/// Requests forwarded to the scheduler and not yet answered.
struct AnalyzerState {
    std::map<QueryId, ServiceDescription> pending;
};

struct AnalyzerStep {
    AnalyzerState state;
    Outbox out;
};

/// Turns a service description into a query, or explains why it cannot.
/// Recognised resource kinds are cpu, ram and disk (case-insensitive); a
/// missing minimum defaults to the demanded capacity.
[[nodiscard]] inline std::variant<Query, std::string> analyze_description(const ServiceDescription& d) {
    if (d.resources.empty()) return std::string("no resources requested");
    Query q;
    q.id = d.request_id;
    q.user_id = d.user_id;
    q.arrival = d.submitted;
    std::set<std::string> seen;
    for (const auto& item : d.resources) {
        std::string kind = item.kind;
        std::transform(kind.begin(), kind.end(), kind.begin(), [](unsigned char c) { return std::tolower(c); });
        if (!seen.insert(kind).second) return "resource listed twice: " + kind;
        if (!item.capacity) return "missing capacity for resource " + kind;
        const std::uint64_t minimum = item.minimum.value_or(*item.capacity);
        if (minimum > *item.capacity) return "minimum exceeds capacity for resource " + kind;
        if (kind == "cpu") {
            q.requested.cpu = *item.capacity;
            q.qos.min_capacity.cpu = minimum;
        } else if (kind == "ram") {
            q.requested.ram = *item.capacity;
            q.qos.min_capacity.ram = minimum;
        } else if (kind == "disk") {
            q.requested.disk = *item.capacity;
            q.qos.min_capacity.disk = minimum;
        } else {
            return "unknown resource kind " + kind;
        }
    }
    if (!d.max_latency) return std::string("missing max latency");
    if (!d.max_price) return std::string("missing max price");
    if (!d.lifetime_s) return std::string("missing lifetime");
    q.qos.max_latency = *d.max_latency;
    q.qos.max_price = *d.max_price;
    q.lifetime_s = *d.lifetime_s;
    if (auto problem = validate(q)) return *problem;
    return q;
}

/// The user-facing description of a query, as the web layer would submit it.
[[nodiscard]] inline ServiceDescription describe_query(const Query& q) {
    ServiceDescription d;
    d.request_id = q.id;
    d.user_id = q.user_id;
    d.resources = {{"cpu", q.requested.cpu, q.qos.min_capacity.cpu},
                   {"ram", q.requested.ram, q.qos.min_capacity.ram},
                   {"disk", q.requested.disk, q.qos.min_capacity.disk}};
    d.max_latency = q.qos.max_latency;
    d.max_price = q.qos.max_price;
    d.lifetime_s = q.lifetime_s;
    d.submitted = q.arrival;
    return d;
}

inline void emit_rejection(Outbox& out, const AgentId& from, const AgentId& result_to, QueryId id, SimTime now,
                           SystemState state, std::string reason) {
    AllocationRecord rec;
    rec.time = now;
    rec.query_id = id;
    rec.verdict = SlaVerdict::Unacceptable;
    rec.reason = std::move(reason);
    out.messages.push_back(detail::make_message(from, result_to, AllocationResult{rec}));
    out.messages.push_back(detail::make_message(from, agent::coordinator(), SupervisionReport{{rec, state}}));
}

/// Input interface: analyze the description and forward a ResourceRequest to
/// the scheduler, or reject it straight back to the user layer.
[[nodiscard]] inline AnalyzerStep analyzer_step(const AnalyzerState& state, const ServiceDescription& request,
                                                SimTime now) {
    AnalyzerStep step{state, {}};
    if (state.pending.contains(request.request_id)) {
        emit_rejection(step.out, agent::analyzer(), agent::user(), request.request_id, now, SystemState::Normal,
                       "rejected by analyzer: duplicate request id");
        return step;
    }
    auto analyzed = analyze_description(request);
    if (auto* why = std::get_if<std::string>(&analyzed)) {
        emit_rejection(step.out, agent::analyzer(), agent::user(), request.request_id, now, SystemState::Normal,
                       "rejected by analyzer: " + *why);
        return step;
    }
    step.state.pending.emplace(request.request_id, request);
    step.out.messages.push_back(
        detail::make_message(agent::analyzer(), agent::scheduler(), ResourceRequest{std::get<Query>(analyzed)}));
    return step;
}

/// Output interface: relay the scheduler's answer to the user layer.
[[nodiscard]] inline AnalyzerStep analyzer_on_result(const AnalyzerState& state, const AllocationResult& result) {
    AnalyzerStep step{state, {}};
    step.state.pending.erase(result.record.query_id);
    step.out.messages.push_back(detail::make_message(agent::analyzer(), agent::user(), result));
    return step;
}

// ===========================================================================
// Scheduler
// ===========================================================================

struct AttemptCounts {
    unsigned retry = 0;
    unsigned replacement = 0;
    unsigned reallocation = 0;

    friend bool operator==(const AttemptCounts&, const AttemptCounts&) = default;
};

struct OptionCaps {
    unsigned retry = 1;
    unsigned replacement = 1;
    unsigned reallocation = 1;
};

struct PendingQuery {
    Query query;
    SimTime received = 0;
    AttemptCounts attempts;
};

struct PollRound {
    std::uint64_t id = 0;
    SimTime started = 0;
    std::map<PmId, MachineReport> collected;
};

struct SchedulerConfig {
    std::vector<PmId> machines;
    AllocatorKind allocator = AllocatorKind::SelfAdaptive;
    OptionCaps caps;
    PriceModel prices;
    SimTime hop_latency = 1;
    SimTime monitor_period = 1000;
    SimTime retry_backoff = 100;
    double high_watermark = 0.9;

    /// Must exceed a request/reply round trip; never zero so replies sent at
    /// zero latency still beat the timer.
    [[nodiscard]] SimTime collection_timeout() const { return std::max<SimTime>(10 * hop_latency, 1); }
    [[nodiscard]] SimTime staleness_bound() const { return 2 * monitor_period; }
};

/// Self-adaptive scheduling walks all three options; the baselines only retry.
[[nodiscard]] inline std::vector<AdaptationOption> default_options(AllocatorKind k) {
    if (k == AllocatorKind::SelfAdaptive) {
        return {AdaptationOption::Retry, AdaptationOption::Replacement, AdaptationOption::Reallocation};
    }
    return {AdaptationOption::Retry};
}

struct SchedulerKnowledge {
    std::map<PmId, MachineReport> latest_reports;
    std::deque<PendingQuery> pending_requests;
    SystemState system_state = SystemState::Normal;
    std::vector<AdaptationOption> options;
    std::optional<PollRound> round;
    std::uint64_t rounds_started = 0;
    bool backoff_armed = false;
    std::set<QueryId> seen;
};

[[nodiscard]] inline SchedulerKnowledge make_scheduler(const SchedulerConfig& cfg) {
    SchedulerKnowledge k;
    k.options = default_options(cfg.allocator);
    return k;
}

struct AllocationOutcome {
    enum class Kind { Commit, Retry, Reject };

    Kind kind = Kind::Reject;
    std::optional<Placement> placement;
    SlaVerdict verdict = SlaVerdict::Unacceptable;
    AdaptationOption option = AdaptationOption::None;
    SystemState state_at_decision = SystemState::Normal;
    AttemptCounts attempts;
    std::string reason;
};

struct SchedulerStep {
    SchedulerKnowledge state;
    Outbox out;
    std::optional<Placement> commit;  // to be executed on the machines
    std::optional<AllocationOutcome> outcome;
};

/// Mean over cpu/ram/disk of (sum used / sum capacity) across the reports.
[[nodiscard]] inline double aggregate_utilization(std::span<const MachineReport> reports) {
    ResourceVector used;
    ResourceVector cap;
    for (const auto& r : reports) {
        used += r.used();
        cap += r.capacity();
    }
    auto ratio = [](std::uint64_t u, std::uint64_t c) {
        return c == 0 ? 0.0 : static_cast<double>(u) / static_cast<double>(c);
    };
    return (ratio(used.cpu, cap.cpu) + ratio(used.ram, cap.ram) + ratio(used.disk, cap.disk)) / 3.0;
}

inline constexpr double kDefaultHighWatermark = 0.9;

/// Broken when no machine answered; Degraded when some are missing or the
/// reporting fleet runs above the high watermark; Normal otherwise.
[[nodiscard]] inline SystemState classify_system_state(std::span<const MachineReport> reports, std::size_t missing,
                                                       double aggregate_util,
                                                       double high_watermark = kDefaultHighWatermark) {
    if (reports.empty()) return SystemState::Broken;
    if (missing > 0 || aggregate_util > high_watermark) return SystemState::Degraded;
    return SystemState::Normal;
}

/// Commits allowed by the state verification: Normal needs a fully acceptable
/// SLA, Degraded also takes an offer inside the allowed range.
[[nodiscard]] constexpr bool admissible(SystemState s, SlaVerdict v) {
    switch (s) {
        case SystemState::Normal: return v == SlaVerdict::Acceptable;
        case SystemState::Degraded: return v != SlaVerdict::Unacceptable;
        case SystemState::Broken: return false;
    }
    return false;
}

/// Highest grid offer in [min_capacity, requested) satisfying accept() that
/// place() can host. Unlike replace(), no precondition on the full request.
template <typename Accept>
[[nodiscard]] std::optional<ReplaceResult> reduced_offer(const Query& q, const AvailabilityMatrix& a,
                                                         AllocatorKind kind, Accept&& accept) {
    constexpr auto S = kReplacementSteps;
    for (std::uint64_t total = 3 * S; total-- > 0;) {
        for (std::uint64_t kc = S + 1; kc-- > 0;) {
            for (std::uint64_t kr = S + 1; kr-- > 0;) {
                if (kc + kr > total || total - kc - kr > S) continue;
                const ResourceVector offer = grid_offer(q, kc, kr, total - kc - kr);
                if (offer == q.requested || !accept(offer)) continue;
                if (auto p = place(a, offer, kind)) return ReplaceResult{p->pm, offer, p->powers_on};
            }
        }
    }
    return std::nullopt;
}

/// State verification for the head query against a fresh snapshot. machines
/// is the full view the matrix was built from (needed for reallocation).
[[nodiscard]] inline AllocationOutcome scheduler_verify_and_allocate(const SchedulerKnowledge& state,
                                                                     const PendingQuery& pq,
                                                                     const AvailabilityMatrix& a,
                                                                     std::span<const MachineState> machines,
                                                                     const SchedulerConfig& cfg, SimTime now) {
    using Kind = AllocationOutcome::Kind;
    const Query& q = pq.query;
    AllocationOutcome out;
    out.attempts = pq.attempts;
    out.state_at_decision = state.system_state;

    if (state.system_state == SystemState::Broken) {
        out.reason = "system broken";
        return out;
    }
    if (now - a.snapshot_time > cfg.staleness_bound()) {
        if (out.attempts.retry < cfg.caps.retry) {
            ++out.attempts.retry;
            out.kind = Kind::Retry;
            out.option = AdaptationOption::Retry;
        }
        out.reason = "stale availability";
        return out;
    }

    const SimTime latency = now - q.arrival;
    auto sla = [&](const ResourceVector& offer) { return evaluate_sla(q, offer, latency, cfg.prices.price(offer)); };
    auto commit = [&](Placement p, SlaVerdict v, AdaptationOption opt, SystemState s) {
        out.kind = Kind::Commit;
        out.placement = std::move(p);
        out.verdict = v;
        out.option = opt;
        out.state_at_decision = s;
        return out;
    };
    // Options used on an earlier round of this query still count as used.
    const AdaptationOption earlier = pq.attempts.retry > 0 ? AdaptationOption::Retry : AdaptationOption::None;

    if (auto primary = place(a, q.requested, cfg.allocator)) {
        const SlaVerdict v = sla(q.requested);
        if (admissible(state.system_state, v)) {
            return commit(simple_placement(q, primary->pm, q.requested, primary->powers_on), v, earlier,
                          state.system_state);
        }
    }

    for (AdaptationOption opt : state.options) {
        switch (opt) {
            case AdaptationOption::Retry:
                if (out.attempts.retry < cfg.caps.retry) {
                    ++out.attempts.retry;
                    out.kind = Kind::Retry;
                    out.option = AdaptationOption::Retry;
                    out.reason = "retry after backoff";
                    return out;
                }
                break;
            case AdaptationOption::Replacement:
                if (out.attempts.replacement < cfg.caps.replacement) {
                    ++out.attempts.replacement;
                    auto r = reduced_offer(q, a, cfg.allocator, [&](const ResourceVector& offer) {
                        return sla(offer) == SlaVerdict::DegradedAcceptable;
                    });
                    if (r) {
                        // A reduced allocation inside the allowed range puts the
                        // system in the degraded state.
                        return commit(simple_placement(q, r->pm, r->offered, r->powers_on), sla(r->offered),
                                      AdaptationOption::Replacement, SystemState::Degraded);
                    }
                }
                break;
            case AdaptationOption::Reallocation:
                if (out.attempts.reallocation < cfg.caps.reallocation) {
                    ++out.attempts.reallocation;
                    if (auto p = reallocate(machines, q)) {
                        const SlaVerdict v = sla(q.requested);
                        if (admissible(state.system_state, v)) {
                            return commit(std::move(*p), v, AdaptationOption::Reallocation, state.system_state);
                        }
                    }
                }
                break;
            case AdaptationOption::None:
                break;
        }
    }
    out.kind = Kind::Reject;
    out.reason = "options exhausted";
    return out;
}

namespace detail {

inline void start_round(SchedulerKnowledge& s, const SchedulerConfig& cfg, SimTime now, Outbox& out) {
    PollRound r;
    r.id = ++s.rounds_started;
    r.started = now;
    s.round = std::move(r);
    for (PmId pm : cfg.machines) {
        out.messages.push_back(make_message(agent::scheduler(), agent::controller(pm), StatusRequest{s.round->id}));
    }
    out.timers.push_back({agent::scheduler(), TimerTag::CollectReports, s.round->id, cfg.collection_timeout()});
}

inline void emit_outcome(Outbox& out, const Query& q, const AllocationOutcome& o, SimTime now) {
    AllocationRecord rec;
    rec.time = now;
    rec.query_id = q.id;
    rec.verdict = o.kind == AllocationOutcome::Kind::Commit ? o.verdict : SlaVerdict::Unacceptable;
    rec.option_used = o.option;
    rec.reason = o.reason;
    if (o.placement) {
        rec.pm = o.placement->vm.host;
        rec.offered = o.placement->vm.granted;
        rec.migrations = o.placement->migrations.size();
    }
    out.messages.push_back(make_message(agent::scheduler(), agent::analyzer(), AllocationResult{rec}));
    out.messages.push_back(
        make_message(agent::scheduler(), agent::coordinator(), SupervisionReport{{rec, o.state_at_decision}}));
}

inline void reject(Outbox& out, const Query& q, SystemState state, std::string reason, SimTime now) {
    AllocationOutcome o;
    o.state_at_decision = state;
    o.reason = std::move(reason);
    emit_outcome(out, q, o, now);
}

}  // namespace detail

/// A ResourceRequest arrived: queue it and poll every controller unless a
/// round (or a retry backoff) is already under way.
[[nodiscard]] inline SchedulerStep scheduler_on_request(const SchedulerKnowledge& state, const Query& q,
                                                        const SchedulerConfig& cfg, SimTime now) {
    SchedulerStep step{state, {}, std::nullopt, std::nullopt};
    auto& s = step.state;
    if (s.seen.contains(q.id)) {
        detail::reject(step.out, q, s.system_state, "duplicate query id", now);
        return step;
    }
    s.seen.insert(q.id);
    if (s.system_state == SystemState::Broken) {
        detail::reject(step.out, q, s.system_state, "system broken", now);
        return step;
    }
    if (auto problem = validate(q)) {
        detail::reject(step.out, q, s.system_state, "invalid query: " + *problem, now);
        return step;
    }
    s.pending_requests.push_back({q, now, {}});
    if (!s.round && !s.backoff_armed) detail::start_round(s, cfg, now, step.out);
    return step;
}

/// A polling round closed with the given reports (one per answering machine).
/// Classifies the system, runs state verification for the head query and
/// emits its outcome.
[[nodiscard]] inline SchedulerStep scheduler_on_reports(const SchedulerKnowledge& state,
                                                        std::span<const MachineReport> reports,
                                                        const SchedulerConfig& cfg, SimTime now) {
    SchedulerStep step{state, {}, std::nullopt, std::nullopt};
    auto& s = step.state;
    s.round.reset();
    for (const auto& r : reports) {
        auto it = s.latest_reports.find(r.pm_id);
        if (it == s.latest_reports.end() || it->second.report_time <= r.report_time) s.latest_reports[r.pm_id] = r;
    }

    const std::size_t missing = cfg.machines.size() - std::min(cfg.machines.size(), reports.size());
    const AvailabilityMatrix a = build_availability(reports);
    s.system_state = classify_system_state(reports, missing, aggregate_utilization(reports), cfg.high_watermark);

    if (s.system_state == SystemState::Broken) {
        while (!s.pending_requests.empty()) {
            detail::reject(step.out, s.pending_requests.front().query, s.system_state,
                           "system broken: no controller responded", now);
            s.pending_requests.pop_front();
        }
        return step;
    }
    if (s.pending_requests.empty()) return step;

    std::vector<MachineState> machines;
    machines.reserve(reports.size());
    for (const auto& r : reports) machines.push_back(MachineState::from_report(r));
    std::sort(machines.begin(), machines.end(), [](const auto& x, const auto& y) { return x.id < y.id; });

    PendingQuery& head = s.pending_requests.front();
    AllocationOutcome o = scheduler_verify_and_allocate(s, head, a, machines, cfg, now);
    switch (o.kind) {
        case AllocationOutcome::Kind::Commit: {
            o.placement->vm.expires = now + static_cast<SimTime>(head.query.lifetime_s) * kMsPerSecond;
            const auto after = apply_placement(machines, *o.placement);
            auto touched = [&](PmId id) {
                const auto& p = *o.placement;
                if (p.vm.host == id) return true;
                for (const auto& m : p.migrations) {
                    if (m.from == id || m.to == id) return true;
                }
                return std::find(p.machines_powered_on.begin(), p.machines_powered_on.end(), id) !=
                           p.machines_powered_on.end() ||
                       std::find(p.machines_powered_off.begin(), p.machines_powered_off.end(), id) !=
                           p.machines_powered_off.end();
            };
            for (const auto& m : after) {
                if (touched(m.id)) s.latest_reports[m.id] = m.to_report(now);
            }
            s.system_state = o.state_at_decision;
            detail::emit_outcome(step.out, head.query, o, now);
            step.commit = o.placement;
            s.pending_requests.pop_front();
            break;
        }
        case AllocationOutcome::Kind::Retry:
            head.attempts = o.attempts;
            s.backoff_armed = true;
            step.out.timers.push_back({agent::scheduler(), TimerTag::RetryBackoff, head.query.id.value, cfg.retry_backoff});
            break;
        case AllocationOutcome::Kind::Reject:
            detail::emit_outcome(step.out, head.query, o, now);
            s.pending_requests.pop_front();
            break;
    }
    step.outcome = std::move(o);
    if (!s.pending_requests.empty() && !s.backoff_armed) detail::start_round(s, cfg, now, step.out);
    return step;
}

/// Stores a controller report in the knowledge base (newest report_time wins)
/// and closes the current round once every machine has answered.
[[nodiscard]] inline SchedulerStep scheduler_on_status_report(const SchedulerKnowledge& state, const StatusReport& msg,
                                                              const SchedulerConfig& cfg, SimTime now) {
    if (std::find(cfg.machines.begin(), cfg.machines.end(), msg.report.pm_id) == cfg.machines.end()) {
        throw AccountingError("report from unknown pm " + std::to_string(msg.report.pm_id.value));
    }
    SchedulerStep step{state, {}, std::nullopt, std::nullopt};
    auto& s = step.state;
    auto it = s.latest_reports.find(msg.report.pm_id);
    if (it == s.latest_reports.end() || it->second.report_time <= msg.report.report_time) {
        s.latest_reports[msg.report.pm_id] = msg.report;
    }
    if (msg.round == 0 || !s.round || s.round->id != msg.round) return step;
    s.round->collected[msg.report.pm_id] = msg.report;
    if (s.round->collected.size() < cfg.machines.size()) return step;

    std::vector<MachineReport> reports;
    for (const auto& [pm, r] : s.round->collected) reports.push_back(r);
    return scheduler_on_reports(s, reports, cfg, now);
}

[[nodiscard]] inline SchedulerStep scheduler_on_timer(const SchedulerKnowledge& state, TimerTag tag,
                                                      std::uint64_t cookie, const SchedulerConfig& cfg, SimTime now) {
    SchedulerStep step{state, {}, std::nullopt, std::nullopt};
    auto& s = step.state;
    if (tag == TimerTag::CollectReports) {
        if (!s.round || s.round->id != cookie) return step;
        std::vector<MachineReport> reports;
        for (const auto& [pm, r] : s.round->collected) reports.push_back(r);
        return scheduler_on_reports(s, reports, cfg, now);
    }
    if (tag == TimerTag::RetryBackoff) {
        s.backoff_armed = false;
        if (!s.pending_requests.empty() && !s.round) detail::start_round(s, cfg, now, step.out);
    }
    return step;
}

/// True while the scheduler still owes an answer to some query.
[[nodiscard]] inline bool scheduler_busy(const SchedulerKnowledge& s) {
    return !s.pending_requests.empty() || s.round.has_value() || s.backoff_armed;
}

// ===========================================================================
// Controller
// ===========================================================================

struct ControllerState {
    PmId pm_id;
    MachineReport current;
    bool unreported = false;  // changed since the scheduler last heard from us
};

[[nodiscard]] inline ControllerState make_controller(const PhysicalMachine& pm) {
    ControllerState c;
    c.pm_id = pm.id;
    c.current = MachineReport{pm.id, {}, pm.capacity, 0, pm.powered_on};
    return c;
}

/// Fresh reading of the machine (the monitor phase).
struct MonitorTick {
    MachineReport observed;
};
struct VmCommit {
    HostedVm vm;
};
struct VmRelease {
    VmId vm;
};
struct PowerChange {
    bool on = true;
};

using ControllerEvent = std::variant<StatusRequest, MonitorTick, VmCommit, VmRelease, PowerChange>;

struct ControllerStep {
    ControllerState state;
    Outbox out;
};

[[nodiscard]] inline ControllerStep controller_step(const ControllerState& state, const ControllerEvent& event,
                                                    SimTime now) {
    ControllerStep step{state, {}};
    auto& s = step.state;
    auto& cur = s.current;
    auto send_report = [&](std::uint64_t round) {
        cur.report_time = now;
        step.out.messages.push_back(
            detail::make_message(agent::controller(s.pm_id), agent::scheduler(), StatusReport{round, cur}));
        s.unreported = false;
    };
    const std::string where = " on pm " + std::to_string(s.pm_id.value);

    std::visit(
        [&](const auto& ev) {
            using T = std::decay_t<decltype(ev)>;
            if constexpr (std::is_same_v<T, StatusRequest>) {
                send_report(ev.round);
            } else if constexpr (std::is_same_v<T, MonitorTick>) {
                if (ev.observed.pm_id != s.pm_id) throw AccountingError("monitor reading for another pm" + where);
                if (ev.observed.capacity() != cur.capacity()) throw AccountingError("capacity drift" + where);
                const bool changed = !ev.observed.same_content(cur);
                cur = ev.observed;
                cur.report_time = now;
                if (changed || s.unreported) send_report(0);
            } else if constexpr (std::is_same_v<T, VmCommit>) {
                if (!cur.powered_on) throw AccountingError("commit to powered-off machine" + where);
                if (!fits(ev.vm.granted, cur.free)) {
                    throw AccountingError("commit of " + to_string(ev.vm.granted) + " exceeds free " +
                                          to_string(cur.free) + where);
                }
                auto pos = std::lower_bound(cur.hosted.begin(), cur.hosted.end(), ev.vm.id,
                                            [](const HostedVm& h, VmId id) { return h.id < id; });
                if (pos != cur.hosted.end() && pos->id == ev.vm.id) throw AccountingError("vm committed twice" + where);
                cur.hosted.insert(pos, ev.vm);
                cur.free = vec_sub(cur.free, ev.vm.granted);
                s.unreported = true;
            } else if constexpr (std::is_same_v<T, VmRelease>) {
                auto it = std::find_if(cur.hosted.begin(), cur.hosted.end(),
                                       [&](const HostedVm& h) { return h.id == ev.vm; });
                if (it == cur.hosted.end()) throw AccountingError("release of unknown vm" + where);
                cur.free += it->granted;
                cur.hosted.erase(it);
                s.unreported = true;
            } else {
                if (!ev.on && !cur.hosted.empty()) throw AccountingError("powering off a busy machine" + where);
                cur.powered_on = ev.on;
                s.unreported = true;
            }
        },
        event);
    return step;
}

// ===========================================================================
// Coordinator
// ===========================================================================

struct CoordinatorCounters {
    std::size_t accepted = 0;
    std::size_t degraded = 0;
    std::size_t rejected = 0;
    std::size_t migrations = 0;
    std::map<AdaptationOption, std::size_t> option_usage;

    friend bool operator==(const CoordinatorCounters&, const CoordinatorCounters&) = default;
};

/// Append-only supervision record. Observes decisions, never vetoes them.
struct CoordinatorLog {
    std::vector<SupervisionEntry> entries;
    CoordinatorCounters counters;
};

[[nodiscard]] inline CoordinatorLog coordinator_record(CoordinatorLog log, const SupervisionEntry& entry) {
    if (!log.entries.empty() && entry.record.time < log.entries.back().record.time) {
        throw AccountingError("supervision reports out of time order");
    }
    log.entries.push_back(entry);
    auto& c = log.counters;
    switch (entry.record.verdict) {
        case SlaVerdict::Acceptable: ++c.accepted; break;
        case SlaVerdict::DegradedAcceptable: ++c.degraded; break;
        case SlaVerdict::Unacceptable: ++c.rejected; break;
    }
    ++c.option_usage[entry.record.option_used];
    c.migrations += entry.record.migrations;
    return log;
}

}  // namespace mapek
