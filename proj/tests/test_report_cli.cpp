#include <catch_amalgamated.hpp>

#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "mapek/cli.hpp"
#include "support/scenarios.hpp"

using namespace mapek;
using namespace mapek::testing;
namespace fs = std::filesystem;

namespace {

struct CliResult {
    int code = 0;
    std::string out;
    std::string err;
};

CliResult cli(std::vector<std::string> args) {
    args.insert(args.begin(), "mapek_sim");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out;
    std::ostringstream err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    auto p = fs::temp_directory_path() / ("mapek_test_" + name);
    fs::remove_all(p);
    return p;
}

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

}  // namespace

TEST_CASE("csv headers are fixed", "[report]") {
    CHECK(first_line(power_csv({}, 10)) == "time_ms,pm_id,watts");
    CHECK(first_line(allocations_csv({})) ==
          "time_ms,query_id,verdict,pm_id,offered_cpu,offered_ram,offered_disk,option_used,migrations");
}

TEST_CASE("numbers print exactly when integral", "[report]") {
    CHECK(format_number(150.0) == "150");
    CHECK(format_number(0.0) == "0");
    CHECK(format_number(162.5) == "162.5");
    CHECK(format_number(1.0 / 3.0) == "0.333333");
    CHECK(format_fixed(2.0 / 3.0) == "0.667");
}

TEST_CASE("allocation rows round trip through csv", "[report][property]") {
    std::vector<AllocationRecord> rows;
    rows.push_back({10, QueryId{1}, SlaVerdict::Acceptable, PmId{3}, {2, 1024, 20}, AdaptationOption::None, 0, {}});
    rows.push_back({11, QueryId{2}, SlaVerdict::DegradedAcceptable, PmId{1}, {1, 512, 10}, AdaptationOption::Replacement, 0, {}});
    rows.push_back({12, QueryId{3}, SlaVerdict::Unacceptable, std::nullopt, {}, AdaptationOption::Reallocation, 0, {}});
    rows.push_back({13, QueryId{4}, SlaVerdict::Acceptable, PmId{2}, {4, 4096, 40}, AdaptationOption::Reallocation, 3, {}});
    const auto text = allocations_csv(rows);
    CHECK(text.find("12,3,Unacceptable,,0,0,0,reallocation,0\n") != std::string::npos);
    CHECK(parse_allocations_csv(text) == rows);
}

TEST_CASE("summary matches a recomputation from the written files", "[report][cli]") {
    const auto dir = scratch("summary");
    const auto r = cli({"--scenario", scenario_path("explicit.scn"), "--out", dir.string()});
    REQUIRE(r.code == kExitOk);
    const auto power = read_file((dir / "power.csv").string());
    const auto allocs = read_file((dir / "allocations.csv").string());
    const auto summary = read_file((dir / "summary.txt").string());
    CHECK(summary == r.out);

    // independent tally straight from the csv text
    std::size_t accepted = 0, degraded = 0, rejected = 0;
    std::istringstream in(allocs);
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        if (line.find(",Acceptable,") != std::string::npos) ++accepted;
        if (line.find(",DegradedAcceptable,") != std::string::npos) ++degraded;
        if (line.find(",Unacceptable,") != std::string::npos) ++rejected;
    }
    CHECK(summary.find("accepted: " + std::to_string(accepted) + "\n") != std::string::npos);
    CHECK(summary.find("degraded_accepted: " + std::to_string(degraded) + "\n") != std::string::npos);
    CHECK(summary.find("rejected: " + std::to_string(rejected) + "\n") != std::string::npos);

    const auto s = load_scenario("explicit.scn");
    const double total = total_energy(parse_power_csv(power), s.horizon_ms);
    CHECK(summary.find("energy_total_j: " + format_fixed(total) + "\n") != std::string::npos);
    CHECK(summary.find("invariant_violations: 0\n") != std::string::npos);
    CHECK(fs::exists(dir / "plot.gp"));
    CHECK_FALSE(fs::exists(dir / "events.log"));
}

TEST_CASE("missing --scenario is a usage error", "[cli]") {
    const auto r = cli({});
    CHECK(r.code == kExitConfig);
    CHECK(r.err.find("--scenario") != std::string::npos);
}

TEST_CASE("unreadable and invalid scenarios exit with 1", "[cli]") {
    CHECK(cli({"--scenario", "/nonexistent/x.scn"}).code == kExitConfig);
    const auto bad = scratch("bad") ;
    fs::create_directories(bad);
    {
        std::ofstream f(bad / "bad.scn");
        f << "horizon_ms = 0\n";
    }
    const auto r = cli({"--scenario", (bad / "bad.scn").string(), "--out", (bad / "out").string()});
    CHECK(r.code == kExitConfig);
    CHECK(r.err.find("horizon_ms: must be positive") != std::string::npos);
    CHECK(cli({"--scenario", scenario_path("explicit.scn"), "--allocator", "greedy"}).code == kExitConfig);
}

TEST_CASE("--compare writes one directory per allocator", "[cli]") {
    const auto dir = scratch("compare");
    const auto r = cli({"--scenario", scenario_path("reference.scn"), "--compare", "--out", dir.string()});
    REQUIRE(r.code == kExitOk);
    for (const char* k : {"selfadaptive", "firstfit", "spread"}) {
        CHECK(fs::exists(dir / k / "power.csv"));
        CHECK(fs::exists(dir / k / "allocations.csv"));
        CHECK(fs::exists(dir / k / "summary.txt"));
    }
    CHECK(read_file((dir / "comparison.csv").string()) == r.out);
    const auto s = load_scenario("reference.scn");
    auto energy = [&](const char* k) {
        return total_energy(parse_power_csv(read_file((dir / k / "power.csv").string())), s.horizon_ms);
    };
    CHECK(energy("selfadaptive") < energy("spread"));
    CHECK(energy("selfadaptive") < energy("firstfit"));
}

TEST_CASE("the same flags produce byte-identical files", "[cli][property]") {
    const auto a = scratch("det_a");
    const auto b = scratch("det_b");
    REQUIRE(cli({"--scenario", scenario_path("reference.scn"), "--out", a.string(), "--trace"}).code == kExitOk);
    REQUIRE(cli({"--scenario", scenario_path("reference.scn"), "--out", b.string(), "--trace"}).code == kExitOk);
    for (const char* f : {"power.csv", "allocations.csv", "summary.txt", "events.log"}) {
        CHECK(read_file((a / f).string()) == read_file((b / f).string()));
    }
    CHECK_FALSE(read_file((a / "events.log").string()).empty());
}

TEST_CASE("--seed and --allocator override the scenario", "[cli]") {
    const auto dir = scratch("override");
    const auto r = cli({"--scenario", scenario_path("reference.scn"), "--seed", "5", "--allocator", "spread", "--out",
                        dir.string()});
    REQUIRE(r.code == kExitOk);
    CHECK(r.out.find("allocator: spread\n") != std::string::npos);
    CHECK(r.out.find("seed: 5\n") != std::string::npos);
}
