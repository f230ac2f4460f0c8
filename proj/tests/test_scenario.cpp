#include <catch_amalgamated.hpp>

#include <string>

#include "mapek/scenario.hpp"
#include "support/instances.hpp"
#include "support/scenarios.hpp"

using namespace mapek;
using namespace mapek::testing;

namespace {

std::string diagnostic(const std::string& text) {
    try {
        (void)parse_scenario(text);
    } catch (const ScenarioError& e) {
        return e.what();
    }
    return "";
}

const char* kMinimal =
    "horizon_ms = 1000\n"
    "[machine]\n"
    "id = 1\n"
    "cpu = 4\n"
    "ram = 4096\n"
    "disk = 100\n"
    "power_idle = 50\n"
    "power_max = 100\n";

}  // namespace

TEST_CASE("reference scenario loads", "[scenario]") {
    const auto s = load_scenario("reference.scn");
    CHECK(s.machines.size() == 5);
    CHECK(s.horizon_ms == 6'120'000);
    CHECK(s.seed == 2021);
    CHECK(s.allocator == AllocatorKind::SelfAdaptive);
    REQUIRE(s.generator);
    CHECK(s.generator->arrivals == std::vector<SimTime>{0, 500, 5000});
    CHECK(s.machines[3].capacity == ResourceVector{32, 131072, 2000});
    CHECK(s.machines[3].power_idle == 260.0);
}

TEST_CASE("minimal document takes the defaults", "[scenario]") {
    const auto s = parse_scenario(kMinimal);
    CHECK(s.seed == 0);
    CHECK(s.hop_latency_ms == 1);
    CHECK(s.monitor_period_ms == 1000);
    CHECK(s.allocator == AllocatorKind::SelfAdaptive);
    CHECK_FALSE(s.generator);
    CHECK(s.queries.empty());
    CHECK(s.mutes.empty());
}

TEST_CASE("diagnostics name the field and line", "[scenario]") {
    CHECK(diagnostic("horizon_ms = 1000\n") == "machines: must be non-empty");
    CHECK(diagnostic(std::string(kMinimal).replace(0, 17, "horizon_ms = 0\n")) == "line 1: horizon_ms: must be positive");
    CHECK(diagnostic(std::string(kMinimal) + "colour = red\n") == "line 9: machine.colour: unknown field");
    CHECK(diagnostic("horizon_ms = 5\n[machine]\nid = 1\ncpu = 1\nram = 1\ndisk = 1\npower_idle = 1\n") ==
          "line 2: machine.power_max: missing required field");
    CHECK(diagnostic(std::string(kMinimal) + "cpu = 8\n") == "line 9: machine.cpu: duplicate field");
    CHECK(diagnostic(std::string(kMinimal) + "[generator]\ncpu = 4..2\n") == "line 10: generator.cpu: range is empty (lo > hi)");
    CHECK(diagnostic(std::string(kMinimal) + "[turbine]\n") == "line 9: turbine: unknown section");
    CHECK(diagnostic(std::string(kMinimal) + "[mute]\npm = 7\n") == "mute.pm: unknown machine 7");
    CHECK(diagnostic(std::string(kMinimal) + "[machine]\nid = 1\ncpu = 1\nram = 1\ndisk = 1\npower_idle = 1\npower_max = 1\n")
              .starts_with("line 10: machine.id: duplicate machine id"));
    CHECK(diagnostic(std::string(kMinimal) + "allocator = best\n").find("unknown field") != std::string::npos);
    CHECK(diagnostic("allocator = best\n" + std::string(kMinimal)) ==
          "line 1: allocator: expected selfadaptive, firstfit or spread");
    CHECK(diagnostic(std::string(kMinimal) + "power_idle2 = x\n").find("line 9") == 0);
}

TEST_CASE("generator and explicit queries are exclusive", "[scenario]") {
    const auto text = std::string(kMinimal) +
                      "[generator]\n"
                      "[query]\nid = 1\narrival_ms = 0\ncpu = 1\nram = 1\ndisk = 1\nmax_latency_ms = 10\n"
                      "max_price = 1\nlifetime_s = 1\n";
    CHECK(diagnostic(text) == "workload: use either a generator or explicit queries, not both");
}

TEST_CASE("comments and blank lines are ignored", "[scenario]") {
    const auto a = parse_scenario(kMinimal);
    const auto b = parse_scenario("# header\n\n" + std::string(kMinimal) + "  # trailing\n");
    CHECK(a == b);
}

TEST_CASE("explicit queries are sorted by arrival and default their minimum", "[scenario]") {
    const auto s = parse_scenario(std::string(kMinimal) +
                                  "[query]\nid = 2\narrival_ms = 50\ncpu = 2\nram = 2\ndisk = 2\nmax_latency_ms = 10\n"
                                  "max_price = 1\nlifetime_s = 1\n"
                                  "[query]\nid = 1\nuser = alice\narrival_ms = 10\ncpu = 1\nram = 1\ndisk = 1\n"
                                  "min_cpu = 0\nmax_latency_ms = 10\nmax_price = 1\nlifetime_s = 1\n");
    REQUIRE(s.queries.size() == 2);
    CHECK(s.queries[0].id == QueryId{1});
    CHECK(s.queries[0].user_id == "alice");
    CHECK(s.queries[0].qos.min_capacity == ResourceVector{0, 1, 1});
    CHECK(s.queries[1].user_id == "user-2");
    CHECK(s.queries[1].qos.min_capacity == ResourceVector{2, 2, 2});
}

TEST_CASE("serialize then parse is the identity", "[scenario][property]") {
    CHECK(parse_scenario(serialize_scenario(load_scenario("reference.scn"))) == load_scenario("reference.scn"));
    CHECK(parse_scenario(serialize_scenario(load_scenario("explicit.scn"))) == load_scenario("explicit.scn"));
    for (std::uint64_t seed = 1; seed <= 300; ++seed) {
        CAPTURE(seed);
        auto s = random_scenario(seed);
        s.high_watermark = 0.5 + static_cast<double>(seed % 7) / 13.0;
        s.prices.per_core = 0.1 / static_cast<double>(seed);
        if (seed % 2 == 0) {
            s.queries = materialize(s);
            s.generator.reset();
        }
        CHECK(parse_scenario(serialize_scenario(s)) == s);
    }
}

TEST_CASE("generated workload is deterministic and seed dependent", "[scenario]") {
    const auto s = load_scenario("reference.scn");
    const auto a = generate_workload(*s.generator, s.prices, s.seed, s.horizon_ms);
    const auto b = generate_workload(*s.generator, s.prices, s.seed, s.horizon_ms);
    CHECK(a == b);
    CHECK(a != generate_workload(*s.generator, s.prices, s.seed + 1, s.horizon_ms));
    REQUIRE(a.size() >= 3);
    CHECK(a[0].arrival == 0);
    CHECK(a[1].arrival == 500);
    CHECK(a[2].arrival == 5000);
    // mean gap 60 s over 102 min puts the count near 100
    CHECK(a.size() >= 60);
    CHECK(a.size() <= 150);
    CHECK(a.size() == 116);
}

TEST_CASE("generated queries respect the generator ranges", "[scenario][property]") {
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        const auto s = random_scenario(seed);
        const auto& g = *s.generator;
        const auto qs = generate_workload(g, s.prices, seed, s.horizon_ms);
        SimTime last = 0;
        for (std::size_t i = 0; i < qs.size(); ++i) {
            const auto& q = qs[i];
            CHECK(q.id == QueryId{i + 1});
            CHECK(q.arrival >= last);
            CHECK(q.arrival <= s.horizon_ms);
            last = q.arrival;
            CHECK(q.requested.cpu >= g.cpu.lo);
            CHECK(q.requested.cpu <= g.cpu.hi);
            CHECK(q.requested.ram >= g.ram.lo);
            CHECK(q.requested.ram <= g.ram.hi);
            CHECK(q.requested.disk >= g.disk.lo);
            CHECK(q.requested.disk <= g.disk.hi);
            CHECK(all_le(q.qos.min_capacity, q.requested));
            CHECK(q.lifetime_s >= g.lifetime_s.lo);
            CHECK(q.lifetime_s <= g.lifetime_s.hi);
            CHECK(q.qos.max_price >= 0.0);
            CHECK_FALSE(validate(q).has_value());
        }
    }
}

TEST_CASE("explicit arrivals beyond the horizon are dropped", "[scenario]") {
    GeneratorSpec g;
    g.arrivals = {0, 100, 5000};
    g.mean_interarrival_ms = 1e12;
    const auto qs = generate_workload(g, PriceModel{}, 1, 1000);
    REQUIRE(qs.size() == 2);
    CHECK(qs[1].arrival == 100);
}

TEST_CASE("to_config carries every field", "[scenario]") {
    const auto s = load_scenario("muted_one.scn");
    const auto cfg = to_config(s);
    CHECK(cfg.machines.size() == 5);
    CHECK(cfg.seed == s.seed);
    CHECK(cfg.hop_latency == s.hop_latency_ms);
    CHECK(cfg.monitor_period == s.monitor_period_ms);
    CHECK(cfg.workload == materialize(s));
    REQUIRE(cfg.mutes.size() == 1);
    CHECK(cfg.mutes[0].pm == PmId{2});
    CHECK(cfg.mutes[0].covers(0));
}
