#pragma once

// Linear idle/peak server power model and exact integration of
// piecewise-constant power traces.

#include <algorithm>
#include <map>
#include <span>
#include <stdexcept>
#include <vector>

#include "mapek/core.hpp"

namespace mapek {

struct PowerSample {
    SimTime time = 0;
    PmId pm;
    double watts = 0.0;

    friend bool operator==(const PowerSample&, const PowerSample&) = default;
};

/// Mean of allocated/capacity over the three components. Components with zero
/// capacity contribute 0.
[[nodiscard]] inline double utilization(const ResourceVector& allocated, const ResourceVector& capacity) {
    auto ratio = [](std::uint64_t a, std::uint64_t c) {
        return c == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(c);
    };
    return (ratio(allocated.cpu, capacity.cpu) + ratio(allocated.ram, capacity.ram) +
            ratio(allocated.disk, capacity.disk)) /
           3.0;
}

/// Instantaneous draw: 0 when off, otherwise idle + (max - idle) * u.
[[nodiscard]] inline double power(const PhysicalMachine& pm, double util) {
    if (!(util >= 0.0 && util <= 1.0)) {
        throw AccountingError("utilization outside [0,1] on pm " + std::to_string(pm.id.value));
    }
    if (!pm.powered_on) return 0.0;
    return pm.power_idle + (pm.power_max - pm.power_idle) * util;
}

/// Energy in joules of one machine's trace up to the horizon. Each sample holds
/// until the next one; the last holds until the horizon. Samples after the
/// horizon are ignored.
[[nodiscard]] inline double integrate(std::span<const PowerSample> samples, SimTime horizon) {
    double joules = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (i > 0) {
            if (samples[i].time < samples[i - 1].time) throw AccountingError("power samples out of order");
            if (samples[i].pm != samples[0].pm) throw std::invalid_argument("integrate: samples from several machines");
        }
    }
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const SimTime start = samples[i].time;
        if (start >= horizon) break;
        const SimTime end = i + 1 < samples.size() ? std::min(samples[i + 1].time, horizon) : horizon;
        joules += samples[i].watts * static_cast<double>(end - start) / static_cast<double>(kMsPerSecond);
    }
    return joules;
}

/// Per-machine energy over a mixed trace; samples keep their relative order.
[[nodiscard]] inline std::map<PmId, double> energy_by_machine(std::span<const PowerSample> samples, SimTime horizon) {
    std::map<PmId, std::vector<PowerSample>> split;
    for (const auto& s : samples) split[s.pm].push_back(s);
    std::map<PmId, double> out;
    for (const auto& [pm, list] : split) out[pm] = integrate(list, horizon);
    return out;
}

[[nodiscard]] inline double total_energy(std::span<const PowerSample> samples, SimTime horizon) {
    double sum = 0.0;
    for (const auto& [pm, j] : energy_by_machine(samples, horizon)) sum += j;
    return sum;
}

}  // namespace mapek
