#pragma once

// CSV, summary and plot-script emission. Summaries are always computed from
// parsed CSV rows so the printed totals match what a reader of the files
// would recompute.

#include <array>
#include <cstdio>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "mapek/allocation.hpp"
#include "mapek/core.hpp"
#include "mapek/energy.hpp"
#include "mapek/format.hpp"
#include "mapek/messages.hpp"
#include "mapek/simulation.hpp"

namespace mapek {

inline constexpr std::string_view kPowerHeader = "time_ms,pm_id,watts";
inline constexpr std::string_view kAllocationsHeader =
    "time_ms,query_id,verdict,pm_id,offered_cpu,offered_ram,offered_disk,option_used,migrations";

[[nodiscard]] inline std::string power_csv(const std::vector<PowerSample>& samples, SimTime horizon) {
    std::string out(kPowerHeader);
    out += '\n';
    for (const auto& s : samples) {
        if (s.time > horizon) continue;
        out += std::to_string(s.time) + ',' + std::to_string(s.pm.value) + ',' + format_number(s.watts) + '\n';
    }
    return out;
}

[[nodiscard]] inline std::string allocations_csv(const std::vector<AllocationRecord>& records) {
    std::string out(kAllocationsHeader);
    out += '\n';
    for (const auto& r : records) {
        out += std::to_string(r.time) + ',' + std::to_string(r.query_id.value) + ',' +
               std::string(to_string(r.verdict)) + ',' + (r.pm ? std::to_string(r.pm->value) : std::string()) + ',' +
               std::to_string(r.offered.cpu) + ',' + std::to_string(r.offered.ram) + ',' +
               std::to_string(r.offered.disk) + ',' + std::string(to_string(r.option_used)) + ',' +
               std::to_string(r.migrations) + '\n';
    }
    return out;
}

namespace detail {

inline std::vector<std::vector<std::string>> csv_rows(std::string_view text, std::string_view header) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in{std::string(text)};
    std::string line;
    if (!std::getline(in, line) || line != header) throw ConfigError("csv: unexpected header '" + line + "'");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::size_t pos = 0;
        while (true) {
            auto comma = line.find(',', pos);
            cells.push_back(line.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos));
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
        rows.push_back(std::move(cells));
    }
    return rows;
}

inline std::optional<SlaVerdict> parse_verdict(std::string_view s) {
    for (auto v : {SlaVerdict::Acceptable, SlaVerdict::DegradedAcceptable, SlaVerdict::Unacceptable}) {
        if (to_string(v) == s) return v;
    }
    return std::nullopt;
}

inline std::optional<AdaptationOption> parse_option(std::string_view s) {
    for (auto o : {AdaptationOption::None, AdaptationOption::Retry, AdaptationOption::Replacement,
                   AdaptationOption::Reallocation}) {
        if (to_string(o) == s) return o;
    }
    return std::nullopt;
}

}  // namespace detail

[[nodiscard]] inline std::vector<PowerSample> parse_power_csv(std::string_view text) {
    std::vector<PowerSample> out;
    for (const auto& r : detail::csv_rows(text, kPowerHeader)) {
        if (r.size() != 3) throw ConfigError("power.csv: expected 3 columns");
        out.push_back({std::stoll(r[0]), PmId{static_cast<std::uint32_t>(std::stoul(r[1]))}, std::stod(r[2])});
    }
    return out;
}

[[nodiscard]] inline std::vector<AllocationRecord> parse_allocations_csv(std::string_view text) {
    std::vector<AllocationRecord> out;
    for (const auto& r : detail::csv_rows(text, kAllocationsHeader)) {
        if (r.size() != 9) throw ConfigError("allocations.csv: expected 9 columns");
        AllocationRecord a;
        a.time = std::stoll(r[0]);
        a.query_id = QueryId{std::stoull(r[1])};
        auto v = detail::parse_verdict(r[2]);
        if (!v) throw ConfigError("allocations.csv: bad verdict '" + r[2] + "'");
        a.verdict = *v;
        if (!r[3].empty()) a.pm = PmId{static_cast<std::uint32_t>(std::stoul(r[3]))};
        a.offered = {std::stoull(r[4]), std::stoull(r[5]), std::stoull(r[6])};
        auto o = detail::parse_option(r[7]);
        if (!o) throw ConfigError("allocations.csv: bad option '" + r[7] + "'");
        a.option_used = *o;
        a.migrations = std::stoull(r[8]);
        out.push_back(a);
    }
    return out;
}

struct RunSummary {
    AllocatorKind allocator = AllocatorKind::SelfAdaptive;
    std::uint64_t seed = 0;
    SimTime horizon = 0;
    std::size_t queries = 0;
    std::size_t accepted = 0;
    std::size_t degraded = 0;
    std::size_t rejected = 0;
    std::size_t migrations = 0;
    std::map<AdaptationOption, std::size_t> options;
    std::map<PmId, double> energy_j;
    double total_energy_j = 0.0;
    SystemState final_state = SystemState::Normal;
    std::size_t invariant_violations = 0;

    [[nodiscard]] std::size_t satisfied() const { return accepted + degraded; }
};

/// Aggregates the two CSV documents. `queries` is the workload size.
[[nodiscard]] inline RunSummary summarize(std::string_view power, std::string_view allocations, SimTime horizon,
                                          std::size_t queries) {
    RunSummary s;
    s.horizon = horizon;
    s.queries = queries;
    for (const auto& a : parse_allocations_csv(allocations)) {
        switch (a.verdict) {
            case SlaVerdict::Acceptable: ++s.accepted; break;
            case SlaVerdict::DegradedAcceptable: ++s.degraded; break;
            case SlaVerdict::Unacceptable: ++s.rejected; break;
        }
        ++s.options[a.option_used];
        s.migrations += a.migrations;
    }
    const auto samples = parse_power_csv(power);
    s.energy_j = energy_by_machine(samples, horizon);
    for (const auto& [pm, j] : s.energy_j) s.total_energy_j += j;
    return s;
}

[[nodiscard]] inline std::string format_fixed(double x, int decimals = 3) {
    std::array<char, 64> buf{};
    std::snprintf(buf.data(), buf.size(), "%.*f", decimals, x);
    return buf.data();
}

[[nodiscard]] inline std::string render_summary(const RunSummary& s) {
    std::ostringstream o;
    o << "allocator: " << to_string(s.allocator) << '\n'
      << "seed: " << s.seed << '\n'
      << "horizon_ms: " << s.horizon << '\n'
      << "queries: " << s.queries << '\n'
      << "accepted: " << s.accepted << '\n'
      << "degraded_accepted: " << s.degraded << '\n'
      << "rejected: " << s.rejected << '\n'
      << "satisfied_percent: "
      << format_fixed(s.queries ? 100.0 * static_cast<double>(s.satisfied()) / static_cast<double>(s.queries) : 100.0,
                      2)
      << '\n'
      << "migrations: " << s.migrations << '\n';
    for (auto opt : {AdaptationOption::None, AdaptationOption::Retry, AdaptationOption::Replacement,
                     AdaptationOption::Reallocation}) {
        auto it = s.options.find(opt);
        o << "option_" << to_string(opt) << ": " << (it == s.options.end() ? 0 : it->second) << '\n';
    }
    for (const auto& [pm, j] : s.energy_j) o << "energy_pm_" << pm.value << "_j: " << format_fixed(j) << '\n';
    o << "energy_total_j: " << format_fixed(s.total_energy_j) << '\n'
      << "energy_total_kwh: " << format_fixed(s.total_energy_j / 3.6e6, 6) << '\n'
      << "final_state: " << to_string(s.final_state) << '\n'
      << "invariant_violations: " << s.invariant_violations << '\n';
    return o.str();
}

/// Side-by-side energy of several allocators on one workload, with the
/// reduction factor of each against the spread baseline.
[[nodiscard]] inline std::string render_comparison(const std::vector<RunSummary>& runs) {
    std::ostringstream o;
    const RunSummary* spread = nullptr;
    for (const auto& r : runs) {
        if (r.allocator == AllocatorKind::Spread) spread = &r;
    }
    o << "allocator,energy_total_j,satisfied,rejected,migrations,spread_over_this\n";
    for (const auto& r : runs) {
        o << to_string(r.allocator) << ',' << format_fixed(r.total_energy_j) << ',' << r.satisfied() << ','
          << r.rejected << ',' << r.migrations << ',';
        if (spread && r.total_energy_j > 0.0) o << format_fixed(spread->total_energy_j / r.total_energy_j, 4);
        o << '\n';
    }
    return o.str();
}

/// gnuplot script drawing one step curve per machine from power.csv.
[[nodiscard]] inline std::string plot_script(const std::vector<PmId>& machines, std::string_view title) {
    std::ostringstream o;
    o << "# gnuplot -c plot.gp  (run inside the output directory)\n"
      << "set datafile separator ','\n"
      << "set terminal pngcairo size 1100,600\n"
      << "set output 'power.png'\n"
      << "set title '" << title << "'\n"
      << "set xlabel 'time (min)'\n"
      << "set ylabel 'power (W)'\n"
      << "set key outside right\n"
      << "plot ";
    for (std::size_t i = 0; i < machines.size(); ++i) {
        const auto id = machines[i].value;
        if (i) o << ", \\\n     ";
        o << "'< awk -F, \"NR>1 && \\$2==" << id << "\" power.csv' using ($1/60000.0):3 with steps lw 2 title 'pm "
          << id << "'";
    }
    o << '\n';
    return o.str();
}

}  // namespace mapek
