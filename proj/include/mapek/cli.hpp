#pragma once

// Command-line driver: reads a scenario, runs one or all allocators and writes
// power.csv, allocations.csv, summary.txt and plot.gp.
//
// Exit codes: 0 success, 1 scenario or usage error, 2 invariant violation.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <future>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "mapek/allocation.hpp"
#include "mapek/report.hpp"
#include "mapek/scenario.hpp"
#include "mapek/simulation.hpp"

namespace mapek {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitInvariant = 2;

struct RunArtifacts {
    std::string power_csv;
    std::string allocations_csv;
    std::string summary;
    std::string plot;
    std::string events;
    RunSummary totals;
    SimulationTrace trace;
};

/// Runs one allocator on a scenario and renders every output document.
[[nodiscard]] inline RunArtifacts run_scenario(const Scenario& scenario, bool record_events) {
    auto cfg = to_config(scenario);
    cfg.check_invariants = true;
    cfg.record_events = record_events;
    Simulation sim(cfg);
    RunArtifacts a;
    a.trace = sim.run(scenario.horizon_ms);
    a.power_csv = power_csv(a.trace.power, scenario.horizon_ms);
    a.allocations_csv = allocations_csv(a.trace.allocations);
    a.totals = summarize(a.power_csv, a.allocations_csv, scenario.horizon_ms, a.trace.query_count);
    a.totals.allocator = scenario.allocator;
    a.totals.seed = scenario.seed;
    a.totals.final_state = sim.scheduler().system_state;
    a.totals.invariant_violations = a.trace.invariant_violations;
    if (!a.trace.consistent_at_end) ++a.totals.invariant_violations;
    a.summary = render_summary(a.totals);
    std::vector<PmId> ids;
    for (const auto& m : scenario.machines) ids.push_back(m.id);
    a.plot = plot_script(ids, "power per machine (" + std::string(to_string(scenario.allocator)) + ")");
    if (record_events) {
        std::ostringstream o;
        for (const auto& e : a.trace.events) o << e.time << " #" << e.seq << ' ' << e.text << '\n';
        a.events = o.str();
    }
    return a;
}

namespace detail {

inline void write_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + p.string());
    f << text;
    if (!f) throw ConfigError("cannot write " + p.string());
}

inline void write_artifacts(const std::filesystem::path& dir, const RunArtifacts& a, bool trace) {
    std::filesystem::create_directories(dir);
    write_file(dir / "power.csv", a.power_csv);
    write_file(dir / "allocations.csv", a.allocations_csv);
    write_file(dir / "summary.txt", a.summary);
    write_file(dir / "plot.gp", a.plot);
    if (trace) write_file(dir / "events.log", a.events);
}

}  // namespace detail

inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Discrete-event simulator of a self-adaptive, agent-managed datacenter"};
    std::string scenario_path;
    std::optional<std::uint64_t> seed;
    std::string allocator_name;
    std::string out_dir = "out";
    bool trace = false;
    bool compare = false;
    app.add_option("--scenario", scenario_path, "scenario file")->required();
    app.add_option("--seed", seed, "overrides the scenario seed");
    app.add_option("--allocator", allocator_name, "selfadaptive, firstfit or spread (overrides the scenario)");
    app.add_option("--out", out_dir, "output directory")->capture_default_str();
    app.add_flag("--trace", trace, "also write the full event log to events.log");
    app.add_flag("--compare", compare, "run every allocator on the same workload");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kExitConfig;
    }

    Scenario scenario;
    try {
        std::ifstream f(scenario_path, std::ios::binary);
        if (!f) throw ConfigError("cannot open scenario file");
        std::ostringstream text;
        text << f.rdbuf();
        scenario = parse_scenario(text.str());
        if (seed) scenario.seed = *seed;
        if (!allocator_name.empty()) {
            auto k = parse_allocator(allocator_name);
            if (!k) throw ConfigError("--allocator: expected selfadaptive, firstfit or spread");
            scenario.allocator = *k;
        }
    } catch (const ConfigError& e) {
        err << "error: " << scenario_path << ": " << e.what() << '\n';
        return kExitConfig;
    }

    std::vector<Scenario> variants;
    if (compare) {
        for (auto k : {AllocatorKind::SelfAdaptive, AllocatorKind::FirstFit, AllocatorKind::Spread}) {
            variants.push_back(scenario);
            variants.back().allocator = k;
        }
    } else {
        variants.push_back(scenario);
    }

    std::vector<std::future<RunArtifacts>> jobs;
    for (const auto& v : variants) {
        jobs.push_back(std::async(std::launch::async, [&v, trace] { return run_scenario(v, trace); }));
    }

    int code = kExitOk;
    std::vector<RunSummary> totals;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        const auto name = std::string(to_string(variants[i].allocator));
        try {
            auto a = jobs[i].get();
            const auto dir = compare ? std::filesystem::path(out_dir) / name : std::filesystem::path(out_dir);
            detail::write_artifacts(dir, a, trace);
            if (a.totals.invariant_violations > 0) {
                err << "error: " << name << ": " << a.totals.invariant_violations << " invariant violations\n";
                for (const auto& d : a.trace.violation_details) err << "  " << d << '\n';
                if (!a.trace.consistent_at_end) err << "  scheduler knowledge diverged from controllers at the end\n";
                code = kExitInvariant;
            }
            if (!compare) out << a.summary;
            totals.push_back(a.totals);
        } catch (const AccountingError& e) {
            err << "error: " << name << ": invariant violation: " << e.what() << '\n';
            code = kExitInvariant;
        } catch (const SchedulingError& e) {
            err << "error: " << name << ": invariant violation: " << e.what() << '\n';
            code = kExitInvariant;
        } catch (const ConfigError& e) {
            err << "error: " << name << ": " << e.what() << '\n';
            if (code == kExitOk) code = kExitConfig;
        } catch (const std::filesystem::filesystem_error& e) {
            err << "error: " << e.what() << '\n';
            if (code == kExitOk) code = kExitConfig;
        }
    }
    if (compare && totals.size() == variants.size()) {
        const auto table = render_comparison(totals);
        try {
            std::filesystem::create_directories(out_dir);
            detail::write_file(std::filesystem::path(out_dir) / "comparison.csv", table);
        } catch (const std::exception& e) {
            err << "error: " << e.what() << '\n';
            if (code == kExitOk) code = kExitConfig;
        }
        out << table;
    }
    return code;
}

}  // namespace mapek
