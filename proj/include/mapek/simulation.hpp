#pragma once

// Wires the kernel, the four agents and the physical datacenter into one
// deterministic run. Agents only ever see their own state and the messages
// the kernel hands them.

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mapek/agents.hpp"
#include "mapek/allocation.hpp"
#include "mapek/core.hpp"
#include "mapek/datacenter.hpp"
#include "mapek/energy.hpp"
#include "mapek/format.hpp"
#include "mapek/kernel.hpp"
#include "mapek/messages.hpp"

namespace mapek {

/// A controller whose link is down over [from, until): its incoming messages
/// and outgoing reports are lost.
struct MuteWindow {
    PmId pm;
    SimTime from = 0;
    std::optional<SimTime> until;

    [[nodiscard]] bool covers(SimTime t) const { return t >= from && (!until || t < *until); }
};

struct SimulationConfig {
    std::vector<PhysicalMachine> machines;
    std::vector<Query> workload;
    AllocatorKind allocator = AllocatorKind::SelfAdaptive;
    PriceModel prices;
    std::uint64_t seed = 0;
    SimTime hop_latency = 1;
    SimTime monitor_period = 1000;
    double high_watermark = kDefaultHighWatermark;
    std::vector<MuteWindow> mutes;
    bool check_invariants = false;
    bool record_events = true;
};

struct StateSample {
    SimTime time = 0;
    SystemState state = SystemState::Normal;
};

struct SimulationTrace {
    SimTime horizon = 0;
    SimTime final_time = 0;
    std::vector<TraceEntry> events;
    std::vector<std::pair<SimTime, QueryId>> arrivals;
    std::vector<AllocationRecord> allocations;  // as delivered to the user layer
    std::vector<PowerSample> power;             // per-machine changes, time-ordered, up to the horizon
    CoordinatorLog supervision;
    std::vector<StateSample> states;  // scheduler state after every change
    std::size_t query_count = 0;
    std::size_t invariant_violations = 0;
    std::vector<std::string> violation_details;
    bool consistent_at_end = true;

    [[nodiscard]] std::size_t allocation_results() const { return allocations.size(); }
    [[nodiscard]] std::size_t supervision_reports() const { return supervision.entries.size(); }
};

class Simulation {
public:
    explicit Simulation(SimulationConfig cfg)
        : cfg_(std::move(cfg)), kernel_(cfg_.seed, cfg_.hop_latency), dc_(initial_machines(cfg_)) {
        if (cfg_.machines.empty()) throw ConfigError("machines: must be non-empty");
        if (cfg_.monitor_period <= 0) throw ConfigError("monitor period must be positive");
        for (const auto& m : cfg_.machines) {
            if (!(m.power_idle > 0.0) || m.power_idle > m.power_max) {
                throw ConfigError("pm " + std::to_string(m.id.value) + ": need 0 < power_idle <= power_max");
            }
        }
        kernel_.set_recording(cfg_.record_events);
        for (AgentId id : {agent::analyzer(), agent::scheduler(), agent::coordinator(), agent::user()}) {
            kernel_.register_agent(id);
        }
        for (const auto& [id, pm] : dc_.machines()) {
            kernel_.register_agent(agent::controller(id));
            controllers_.emplace(id, make_controller(pm));
            sched_cfg_.machines.push_back(id);
        }
        for (const auto& m : cfg_.mutes) {
            if (!kernel_.has_agent(agent::controller(m.pm))) {
                throw ConfigError("unknown recipient: " + agent::controller(m.pm).value);
            }
        }
        sched_cfg_.allocator = cfg_.allocator;
        sched_cfg_.prices = cfg_.prices;
        sched_cfg_.hop_latency = cfg_.hop_latency;
        sched_cfg_.monitor_period = cfg_.monitor_period;
        sched_cfg_.high_watermark = cfg_.high_watermark;
        scheduler_ = make_scheduler(sched_cfg_);
    }

    [[nodiscard]] const Datacenter& datacenter() const { return dc_; }
    [[nodiscard]] const SchedulerKnowledge& scheduler() const { return scheduler_; }
    [[nodiscard]] const ControllerState& controller(PmId pm) const { return controllers_.at(pm); }

    /// Runs to the horizon, then lets in-flight protocol exchanges finish so
    /// every admitted query gets its answer. The physical world is frozen after
    /// the horizon: no expiries, no monitor ticks, no power samples.
    SimulationTrace run(SimTime horizon) {
        if (horizon <= 0) throw ConfigError("horizon must be positive");
        trace_ = SimulationTrace{};
        trace_.horizon = horizon;
        horizon_ = horizon;

        for (const auto& q : cfg_.workload) {
            if (q.arrival < 0) throw ConfigError("query " + std::to_string(q.id.value) + " arrives before time 0");
            if (q.arrival > horizon) continue;
            kernel_.schedule(q.arrival, QueryArrival{q});
            ++trace_.query_count;
        }
        for (const auto& [id, c] : controllers_) {
            kernel_.set_timer({agent::controller(id), TimerTag::Monitor, 0, cfg_.monitor_period});
            sample_power(id);
        }
        trace_.states.push_back({0, scheduler_.system_state});
        if (cfg_.check_invariants) check();

        auto handler = [this](const Event& ev) {
            handle(ev);
            if (cfg_.check_invariants) check();
        };
        auto main = kernel_.run_until(horizon, handler);
        for (const auto& [id, pm] : dc_.machines()) {
            auto last = std::find_if(trace_.power.rbegin(), trace_.power.rend(),
                                     [&](const PowerSample& s) { return s.pm == id; });
            if (last == trace_.power.rend() || last->time != horizon) {
                trace_.power.push_back({horizon, id, quantize(dc_.power(id))});
            }
        }
        draining_ = true;
        auto tail = kernel_.drain(
            handler, [this] { return scheduler_busy(scheduler_) || kernel_.messages_in_flight() > 0; },
            [](const Event& ev) {
                if (std::holds_alternative<MessageDelivery>(ev.payload)) return true;
                if (const auto* t = std::get_if<TimerFired>(&ev.payload)) return t->agent == agent::scheduler();
                return false;
            });
        draining_ = false;

        trace_.events = std::move(main.entries);
        trace_.events.insert(trace_.events.end(), std::make_move_iterator(tail.entries.begin()),
                             std::make_move_iterator(tail.entries.end()));
        trace_.final_time = kernel_.now();
        trace_.supervision = coordinator_;
        trace_.consistent_at_end = knowledge_consistent();
        return std::move(trace_);
    }

    /// Scheduler knowledge agrees with every reachable controller (report
    /// times aside). Meaningful once no messages are in flight.
    [[nodiscard]] bool knowledge_consistent() const {
        for (const auto& [id, c] : controllers_) {
            if (muted(id, kernel_.now())) continue;
            auto it = scheduler_.latest_reports.find(id);
            if (it == scheduler_.latest_reports.end()) {
                if (c.unreported) return false;
                continue;
            }
            if (!it->second.same_content(c.current)) return false;
        }
        return true;
    }

private:
    static std::vector<PhysicalMachine> initial_machines(const SimulationConfig& cfg) {
        auto machines = cfg.machines;
        for (auto& m : machines) {
            m.hosted.clear();
            m.powered_on = !powers_off_idle(cfg.allocator);
        }
        return machines;
    }

    [[nodiscard]] bool muted(PmId pm, SimTime t) const {
        return std::any_of(cfg_.mutes.begin(), cfg_.mutes.end(),
                           [&](const MuteWindow& m) { return m.pm == pm && m.covers(t); });
    }

    [[nodiscard]] static std::optional<PmId> controller_pm(const AgentId& id) {
        constexpr std::string_view prefix = "controller-";
        if (id.value.rfind(prefix, 0) != 0) return std::nullopt;
        return PmId{static_cast<std::uint32_t>(std::stoul(id.value.substr(prefix.size())))};
    }

    void handle(const Event& ev) {
        std::visit(
            [this](const auto& p) {
                using T = std::decay_t<decltype(p)>;
                if constexpr (std::is_same_v<T, QueryArrival>) {
                    trace_.arrivals.emplace_back(kernel_.now(), p.query.id);
                    auto step = analyzer_step(analyzer_, describe_query(p.query), kernel_.now());
                    analyzer_ = std::move(step.state);
                    kernel_.post(std::move(step.out));
                } else if constexpr (std::is_same_v<T, MessageDelivery>) {
                    on_message(p.message);
                } else if constexpr (std::is_same_v<T, TimerFired>) {
                    on_timer(p);
                } else {
                    on_expiry(p.vm);
                }
            },
            ev.payload);
    }

    void on_message(const Message& msg) {
        const SimTime now = kernel_.now();
        if (msg.to == agent::user()) {
            if (const auto* r = std::get_if<AllocationResult>(&msg.body)) trace_.allocations.push_back(r->record);
            return;
        }
        if (msg.to == agent::coordinator()) {
            if (const auto* s = std::get_if<SupervisionReport>(&msg.body)) {
                coordinator_ = coordinator_record(std::move(coordinator_), s->entry);
            }
            return;
        }
        if (msg.to == agent::analyzer()) {
            AnalyzerStep step{analyzer_, {}};
            if (const auto* r = std::get_if<AllocationResult>(&msg.body)) {
                step = analyzer_on_result(analyzer_, *r);
            } else if (const auto* u = std::get_if<UserRequest>(&msg.body)) {
                step = analyzer_step(analyzer_, u->description, now);
            }
            analyzer_ = std::move(step.state);
            kernel_.post(std::move(step.out));
            return;
        }
        if (msg.to == agent::scheduler()) {
            if (const auto* r = std::get_if<ResourceRequest>(&msg.body)) {
                apply(scheduler_on_request(scheduler_, r->query, sched_cfg_, now));
            } else if (const auto* s = std::get_if<StatusReport>(&msg.body)) {
                apply(scheduler_on_status_report(scheduler_, *s, sched_cfg_, now));
            }
            return;
        }
        if (auto pm = controller_pm(msg.to)) {
            if (muted(*pm, now)) return;
            if (const auto* req = std::get_if<StatusRequest>(&msg.body)) step_controller(*pm, *req);
        }
    }

    void on_timer(const TimerFired& t) {
        if (t.agent == agent::scheduler()) {
            apply(scheduler_on_timer(scheduler_, t.tag, t.cookie, sched_cfg_, kernel_.now()));
            return;
        }
        if (auto pm = controller_pm(t.agent); pm && t.tag == TimerTag::Monitor) {
            observe(*pm);
            kernel_.set_timer({t.agent, TimerTag::Monitor, t.cookie + 1, cfg_.monitor_period});
        }
    }

    void on_expiry(VmId id) {
        if (!dc_.hosts(id)) return;
        const PmId host = dc_.release(id).host;
        step_controller(host, VmRelease{id});
        if (powers_off_idle(cfg_.allocator) && dc_.machine(host).hosted.empty() && dc_.machine(host).powered_on) {
            dc_.set_power(host, false);
            step_controller(host, PowerChange{false});
        }
        observe(host);
        sample_power(host);
    }

    void apply(SchedulerStep step) {
        scheduler_ = std::move(step.state);
        kernel_.post(std::move(step.out));
        if (trace_.states.empty() || trace_.states.back().state != scheduler_.system_state) {
            trace_.states.push_back({kernel_.now(), scheduler_.system_state});
        }
        if (step.commit) execute(*step.commit);
    }

    /// Carries out a committed placement on the machines and their controllers.
    /// Migrations of VMs that expired since the snapshot are skipped.
    void execute(const Placement& p) {
        std::set<PmId> touched{p.vm.host};
        for (PmId id : p.machines_powered_on) {
            dc_.set_power(id, true);
            step_controller(id, PowerChange{true});
            touched.insert(id);
        }
        std::vector<VMInstance> moving;
        for (const auto& mig : p.migrations) {
            auto it = dc_.vms().find(mig.vm);
            if (it == dc_.vms().end() || it->second.host != mig.from) continue;
            moving.push_back(dc_.release(mig.vm));
            moving.back().host = mig.to;
            step_controller(mig.from, VmRelease{mig.vm});
            touched.insert(mig.from);
            touched.insert(mig.to);
        }
        for (const auto& vm : moving) {
            dc_.commit(vm);
            step_controller(vm.host, VmCommit{{vm.id, vm.granted}});
        }
        dc_.commit(p.vm);
        step_controller(p.vm.host, VmCommit{{p.vm.id, p.vm.granted}});
        kernel_.schedule(std::max(p.vm.expires, kernel_.now()), VmExpiry{p.vm.id});
        for (PmId id : p.machines_powered_off) {
            if (!dc_.machine(id).hosted.empty()) continue;
            dc_.set_power(id, false);
            step_controller(id, PowerChange{false});
            touched.insert(id);
        }
        for (PmId id : touched) {
            observe(id);
            sample_power(id);
        }
    }

    void step_controller(PmId pm, const ControllerEvent& ev) {
        auto step = controller_step(controllers_.at(pm), ev, kernel_.now());
        controllers_.at(pm) = std::move(step.state);
        if (!muted(pm, kernel_.now())) {
            kernel_.post(std::move(step.out));
        } else if (!step.out.messages.empty()) {
            // lost on the wire; push again once the link is back
            controllers_.at(pm).unreported = true;
        }
    }

    void observe(PmId pm) { step_controller(pm, MonitorTick{dc_.report(pm, kernel_.now())}); }

    void sample_power(PmId pm) {
        if (draining_ || kernel_.now() > horizon_) return;
        const double w = quantize(dc_.power(pm));
        auto last = last_watts_.find(pm);
        if (last != last_watts_.end() && last->second == w) return;
        last_watts_[pm] = w;
        trace_.power.push_back({kernel_.now(), pm, w});
    }

    void check() {
        auto note = [this](std::string what) {
            ++trace_.invariant_violations;
            if (trace_.violation_details.size() < 20) {
                trace_.violation_details.push_back("t=" + std::to_string(kernel_.now()) + ": " + std::move(what));
            }
        };
        if (auto n = dc_.count_violations(); n > 0) note(std::to_string(n) + " machine capacity violations");
        for (const auto& [id, c] : controllers_) {
            const auto& pm = dc_.machine(id);
            if (c.current.capacity() != pm.capacity) note("report exactness broken on pm " + std::to_string(id.value));
            if (!c.current.same_content(dc_.report(id, 0))) {
                note("controller view diverged from pm " + std::to_string(id.value));
            }
        }
    }

    SimulationConfig cfg_;
    Kernel kernel_;
    Datacenter dc_;
    SchedulerConfig sched_cfg_;
    AnalyzerState analyzer_;
    SchedulerKnowledge scheduler_;
    std::map<PmId, ControllerState> controllers_;
    CoordinatorLog coordinator_;
    SimulationTrace trace_;
    std::map<PmId, double> last_watts_;
    SimTime horizon_ = 0;
    bool draining_ = false;
};

}  // namespace mapek
