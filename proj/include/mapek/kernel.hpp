#pragma once

// Deterministic discrete-event engine: virtual time, a (fire_at, seq) ordered
// queue, message delivery with latency, timers and named random streams.

#include <cstdint>
#include <functional>
#include <queue>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "mapek/core.hpp"
#include "mapek/messages.hpp"

namespace mapek {

/// Scheduling into the past, or a negative latency.
class SchedulingError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

struct MessageDelivery {
    Message message;
};
struct TimerFired {
    AgentId agent;
    TimerTag tag = TimerTag::Monitor;
    std::uint64_t cookie = 0;
};
struct QueryArrival {
    Query query;
};
struct VmExpiry {
    VmId vm;
};

using EventPayload = std::variant<MessageDelivery, TimerFired, QueryArrival, VmExpiry>;

struct Event {
    SimTime fire_at = 0;
    std::uint64_t seq = 0;
    EventPayload payload;
};

inline std::string describe(const EventPayload& payload) {
    std::ostringstream os;
    std::visit(
        [&os](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, MessageDelivery>) {
                const auto& m = p.message;
                os << "deliver " << to_string(m.kind()) << ' ' << m.from.value << " -> " << m.to.value;
                std::visit(
                    [&os](const auto& b) {
                        using B = std::decay_t<decltype(b)>;
                        if constexpr (std::is_same_v<B, UserRequest>) {
                            os << " request=" << b.description.request_id.value;
                        } else if constexpr (std::is_same_v<B, ResourceRequest>) {
                            os << " query=" << b.query.id.value << " demand=" << to_string(b.query.requested);
                        } else if constexpr (std::is_same_v<B, StatusRequest>) {
                            os << " round=" << b.round;
                        } else if constexpr (std::is_same_v<B, StatusReport>) {
                            os << " round=" << b.round << " pm=" << b.report.pm_id.value
                               << " free=" << to_string(b.report.free) << " vms=" << b.report.hosted.size();
                        } else if constexpr (std::is_same_v<B, AllocationResult>) {
                            os << " query=" << b.record.query_id.value << " verdict=" << to_string(b.record.verdict);
                        } else {
                            os << " query=" << b.entry.record.query_id.value
                               << " state=" << to_string(b.entry.state_at_decision);
                        }
                    },
                    m.body);
            } else if constexpr (std::is_same_v<T, TimerFired>) {
                os << "timer " << p.agent.value << ' ' << to_string(p.tag) << " cookie=" << p.cookie;
            } else if constexpr (std::is_same_v<T, QueryArrival>) {
                os << "arrival query=" << p.query.id.value << " user=" << p.query.user_id
                   << " demand=" << to_string(p.query.requested);
            } else {
                os << "expiry vm=" << p.vm.value;
            }
        },
        payload);
    return os.str();
}

struct TraceEntry {
    SimTime time = 0;
    std::uint64_t seq = 0;
    std::string text;

    friend bool operator==(const TraceEntry&, const TraceEntry&) = default;
};

struct KernelTrace {
    std::vector<TraceEntry> entries;
    SimTime final_time = 0;
    std::size_t processed = 0;
};

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

/// Independent generator for one consumer ("workload", "failures", ...). The
/// same (seed, name) pair always yields the same sequence, and adding a new
/// consumer never shifts an existing one.
inline std::mt19937_64 named_stream(std::uint64_t seed, std::string_view name) {
    const std::uint64_t h = fnv1a(name);
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
    return std::mt19937_64(seq);
}

class Kernel {
public:
    explicit Kernel(std::uint64_t seed = 0, SimTime hop_latency = 1) : seed_(seed), hop_latency_(hop_latency) {
        if (hop_latency < 0) throw SchedulingError("hop latency must be non-negative");
    }

    [[nodiscard]] SimTime now() const { return now_; }
    [[nodiscard]] std::uint64_t seed() const { return seed_; }
    [[nodiscard]] SimTime hop_latency() const { return hop_latency_; }
    [[nodiscard]] std::size_t pending() const { return queue_.size(); }
    [[nodiscard]] std::size_t messages_in_flight() const { return messages_in_flight_; }

    void set_recording(bool on) { recording_ = on; }

    [[nodiscard]] std::mt19937_64 stream(std::string_view name) const { return named_stream(seed_, name); }

    void register_agent(AgentId id) { agents_.insert(std::move(id)); }
    [[nodiscard]] bool has_agent(const AgentId& id) const { return agents_.contains(id); }

    /// Enqueues a payload; returns its sequence number.
    std::uint64_t schedule(SimTime fire_at, EventPayload payload) {
        if (fire_at < now_) {
            throw SchedulingError("cannot schedule at " + std::to_string(fire_at) + " ms, now is " +
                                  std::to_string(now_) + " ms");
        }
        if (std::holds_alternative<MessageDelivery>(payload)) ++messages_in_flight_;
        const std::uint64_t seq = next_seq_++;
        queue_.push(Event{fire_at, seq, std::move(payload)});
        return seq;
    }

    void send(Message msg, SimTime latency) {
        if (latency < 0) throw SchedulingError("negative message latency");
        if (!has_agent(msg.to)) throw ConfigError("unknown recipient: " + msg.to.value);
        schedule(now_ + latency, MessageDelivery{std::move(msg)});
    }

    void send(Message msg) { send(std::move(msg), hop_latency_); }

    void set_timer(const TimerRequest& t) {
        if (t.delay < 0) throw SchedulingError("negative timer delay");
        if (!has_agent(t.agent)) throw ConfigError("timer for unknown agent: " + t.agent.value);
        schedule(now_ + t.delay, TimerFired{t.agent, t.tag, t.cookie});
    }

    /// Sends every message with the default hop latency and arms every timer.
    void post(Outbox out) {
        for (auto& m : out.messages) send(std::move(m));
        for (const auto& t : out.timers) set_timer(t);
    }

    /// Processes events in (fire_at, seq) order until the queue is empty or the
    /// next event lies beyond t_end.
    template <typename Handler>
    KernelTrace run_until(SimTime t_end, Handler&& handler) {
        KernelTrace trace;
        while (!queue_.empty() && queue_.top().fire_at <= t_end) {
            process_next(trace, handler);
        }
        trace.final_time = now_;
        return trace;
    }

    /// Keeps processing while keep_going() holds. Events rejected by accept()
    /// are dropped unprocessed. Used to finish in-flight protocol exchanges
    /// after the horizon.
    template <typename Handler, typename KeepGoing, typename Accept>
    KernelTrace drain(Handler&& handler, KeepGoing&& keep_going, Accept&& accept) {
        KernelTrace trace;
        while (!queue_.empty() && keep_going()) {
            if (!accept(queue_.top())) {
                if (std::holds_alternative<MessageDelivery>(queue_.top().payload)) --messages_in_flight_;
                queue_.pop();
                continue;
            }
            process_next(trace, handler);
        }
        trace.final_time = now_;
        return trace;
    }

private:
    struct Later {
        bool operator()(const Event& a, const Event& b) const {
            if (a.fire_at != b.fire_at) return a.fire_at > b.fire_at;
            return a.seq > b.seq;
        }
    };

    template <typename Handler>
    void process_next(KernelTrace& trace, Handler& handler) {
        Event ev = queue_.top();
        queue_.pop();
        if (std::holds_alternative<MessageDelivery>(ev.payload)) --messages_in_flight_;
        now_ = ev.fire_at;
        if (recording_) trace.entries.push_back({ev.fire_at, ev.seq, describe(ev.payload)});
        ++trace.processed;
        handler(ev);
    }

    std::uint64_t seed_ = 0;
    SimTime hop_latency_ = 1;
    SimTime now_ = 0;
    std::uint64_t next_seq_ = 0;
    std::size_t messages_in_flight_ = 0;
    bool recording_ = true;
    std::set<AgentId> agents_;
    std::priority_queue<Event, std::vector<Event>, Later> queue_;
};

}  // namespace mapek
