#include <catch_amalgamated.hpp>

#include <random>
#include <vector>

#include "mapek/energy.hpp"

using namespace mapek;

namespace {

PhysicalMachine machine(double idle, double max, bool on = true) {
    PhysicalMachine pm;
    pm.id = PmId{1};
    pm.capacity = {8, 16384, 200};
    pm.power_idle = idle;
    pm.power_max = max;
    pm.powered_on = on;
    return pm;
}

// Reference integrator: steps through every millisecond.
double joules_by_ms(const std::vector<PowerSample>& s, SimTime horizon) {
    double mj = 0.0;
    std::size_t i = 0;
    for (SimTime t = 0; t < horizon; ++t) {
        while (i + 1 < s.size() && s[i + 1].time <= t) ++i;
        if (s.empty() || s[0].time > t) continue;
        mj += s[i].watts;
    }
    return mj / 1000.0;
}

}  // namespace

TEST_CASE("linear power model", "[energy]") {
    CHECK(power(machine(100, 250, false), 0.0) == 0.0);
    CHECK(power(machine(100, 250), 0.0) == 100.0);
    CHECK(power(machine(100, 250), 0.5) == 175.0);
    CHECK(power(machine(100, 250), 1.0) == 250.0);
    CHECK_THROWS_AS(power(machine(100, 250), 1.01), AccountingError);
    CHECK_THROWS_AS(power(machine(100, 250), -0.01), AccountingError);
}

TEST_CASE("utilization averages the three components", "[energy]") {
    CHECK(utilization({}, {8, 16384, 200}) == 0.0);
    CHECK(utilization({8, 16384, 200}, {8, 16384, 200}) == 1.0);
    CHECK(utilization({4, 16384, 0}, {8, 16384, 200}) == Catch::Approx(0.5));
    CHECK(utilization({2, 4096, 50}, {8, 16384, 200}) == Catch::Approx(0.25));
}

TEST_CASE("power grows with utilization", "[energy][property]") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_real_distribution<double> w(1.0, 500.0);
    for (int i = 0; i < 1000; ++i) {
        const double idle = w(rng);
        const auto pm = machine(idle, idle + w(rng));
        double a = u(rng);
        double b = u(rng);
        if (a > b) std::swap(a, b);
        CHECK(power(pm, a) <= power(pm, b));
        CHECK(power(pm, a) >= pm.power_idle);
        CHECK(power(pm, b) <= pm.power_max);
    }
}

TEST_CASE("integration of step functions", "[energy]") {
    const PmId pm{1};
    std::vector<PowerSample> constant{{0, pm, 100.0}};
    CHECK(integrate(constant, 10'000) == 1000.0);
    CHECK(integrate({}, 10'000) == 0.0);
    std::vector<PowerSample> off_half{{0, pm, 100.0}, {5'000, pm, 0.0}};
    CHECK(integrate(off_half, 10'000) == 500.0);
    std::vector<PowerSample> late{{0, pm, 100.0}, {20'000, pm, 300.0}};
    CHECK(integrate(late, 10'000) == 1000.0);
}

TEST_CASE("unordered or mixed samples are refused", "[energy]") {
    std::vector<PowerSample> unordered{{10, PmId{1}, 1.0}, {5, PmId{1}, 1.0}};
    CHECK_THROWS_AS(integrate(unordered, 100), AccountingError);
    std::vector<PowerSample> mixed{{0, PmId{1}, 1.0}, {5, PmId{2}, 1.0}};
    CHECK_THROWS_AS(integrate(mixed, 100), std::invalid_argument);
}

TEST_CASE("integration matches a millisecond reference", "[energy][property]") {
    std::mt19937_64 rng(17);
    std::uniform_int_distribution<SimTime> gap(0, 400);
    std::uniform_int_distribution<int> watts(0, 400);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<PowerSample> s;
        SimTime t = gap(rng);
        for (int i = 0; i < 20; ++i) {
            s.push_back({t, PmId{1}, static_cast<double>(watts(rng))});
            t += gap(rng);
        }
        const SimTime horizon = t - gap(rng) / 2;
        CHECK(integrate(s, horizon) == Catch::Approx(joules_by_ms(s, horizon)).epsilon(1e-12));
    }
}

TEST_CASE("energy adds up across machines and windows", "[energy][property]") {
    std::vector<PowerSample> s{{0, PmId{1}, 100.0}, {0, PmId{2}, 50.0}, {4000, PmId{1}, 0.0}, {6000, PmId{2}, 80.0}};
    const auto by = energy_by_machine(s, 10'000);
    CHECK(by.at(PmId{1}) == 400.0);
    CHECK(by.at(PmId{2}) == 50.0 * 6 + 80.0 * 4);
    CHECK(total_energy(s, 10'000) == by.at(PmId{1}) + by.at(PmId{2}));

    const std::vector<PowerSample> one{{0, PmId{1}, 120.0}, {3000, PmId{1}, 60.0}, {7000, PmId{1}, 90.0}};
    const double whole = integrate(one, 10'000);
    const double first = integrate(one, 5000);
    std::vector<PowerSample> tail{{5000, PmId{1}, 60.0}, {7000, PmId{1}, 90.0}};
    CHECK(whole == Catch::Approx(first + integrate(tail, 10'000)));
    CHECK(whole >= 0.0);
}
