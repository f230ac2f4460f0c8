#pragma once

// The simulated physical layer: machines, the VMs they host, power state.
// Controllers observe it; the scheduler's commits are executed against it.

#include <map>
#include <string>
#include <vector>

#include "mapek/core.hpp"
#include "mapek/energy.hpp"

namespace mapek {

class Datacenter {
public:
    explicit Datacenter(const std::vector<PhysicalMachine>& machines) {
        for (const auto& m : machines) {
            if (!machines_.emplace(m.id, m).second) {
                throw ConfigError("duplicate machine id " + std::to_string(m.id.value));
            }
        }
    }

    [[nodiscard]] const std::map<PmId, PhysicalMachine>& machines() const { return machines_; }
    [[nodiscard]] const std::map<VmId, VMInstance>& vms() const { return vms_; }
    [[nodiscard]] bool contains(PmId id) const { return machines_.contains(id); }
    [[nodiscard]] bool hosts(VmId id) const { return vms_.contains(id); }

    [[nodiscard]] const PhysicalMachine& machine(PmId id) const {
        auto it = machines_.find(id);
        if (it == machines_.end()) throw AccountingError("unknown pm " + std::to_string(id.value));
        return it->second;
    }

    [[nodiscard]] ResourceVector allocated(PmId id) const {
        ResourceVector sum;
        for (VmId vm : machine(id).hosted) sum += vms_.at(vm).granted;
        return sum;
    }

    [[nodiscard]] double utilization(PmId id) const { return mapek::utilization(allocated(id), machine(id).capacity); }
    [[nodiscard]] double power(PmId id) const { return mapek::power(machine(id), utilization(id)); }

    [[nodiscard]] MachineReport report(PmId id, SimTime now) const {
        const auto& pm = machine(id);
        MachineReport r;
        r.pm_id = id;
        for (VmId vm : pm.hosted) r.hosted.push_back({vm, vms_.at(vm).granted});
        r.free = vec_sub(pm.capacity, allocated(id));
        r.report_time = now;
        r.powered_on = pm.powered_on;
        return r;
    }

    void set_power(PmId id, bool on) {
        auto& pm = mut(id);
        if (!on && !pm.hosted.empty()) {
            throw AccountingError("cannot power off pm " + std::to_string(id.value) + " while it hosts vms");
        }
        pm.powered_on = on;
    }

    void commit(const VMInstance& vm) {
        auto& pm = mut(vm.host);
        if (vms_.contains(vm.id)) throw AccountingError("vm " + std::to_string(vm.id.value) + " already exists");
        if (!pm.powered_on) throw AccountingError("commit to powered-off pm " + std::to_string(vm.host.value));
        if (!fits(vm.granted, vec_sub(pm.capacity, allocated(vm.host)))) {
            throw AccountingError("commit of " + to_string(vm.granted) + " overflows pm " +
                                  std::to_string(vm.host.value));
        }
        vms_.emplace(vm.id, vm);
        pm.hosted.insert(vm.id);
    }

    VMInstance release(VmId id) {
        auto it = vms_.find(id);
        if (it == vms_.end()) throw AccountingError("release of unknown vm " + std::to_string(id.value));
        VMInstance vm = it->second;
        mut(vm.host).hosted.erase(id);
        vms_.erase(it);
        return vm;
    }

    /// Number of machines whose hosted grants exceed capacity, or that host VMs
    /// while powered off, plus VMs whose host does not list them.
    [[nodiscard]] std::size_t count_violations() const {
        std::size_t n = 0;
        for (const auto& [id, pm] : machines_) {
            ResourceVector sum;
            for (VmId vm : pm.hosted) {
                auto it = vms_.find(vm);
                if (it == vms_.end() || it->second.host != id) {
                    ++n;
                    continue;
                }
                sum += it->second.granted;
            }
            if (!all_le(sum, pm.capacity)) ++n;
            if (!pm.hosted.empty() && !pm.powered_on) ++n;
        }
        for (const auto& [id, vm] : vms_) {
            auto it = machines_.find(vm.host);
            if (it == machines_.end() || !it->second.hosted.contains(id)) ++n;
        }
        return n;
    }

private:
    PhysicalMachine& mut(PmId id) {
        auto it = machines_.find(id);
        if (it == machines_.end()) throw AccountingError("unknown pm " + std::to_string(id.value));
        return it->second;
    }

    std::map<PmId, PhysicalMachine> machines_;
    std::map<VmId, VMInstance> vms_;
};

}  // namespace mapek
