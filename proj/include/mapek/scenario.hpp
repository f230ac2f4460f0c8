#pragma once

// Scenario documents: a line-oriented key = value format with repeated
// [machine], [query] and [mute] stanzas and at most one [generator] stanza.
//
//   seed = 2021
//   horizon_ms = 6120000
//
//   [machine]
//   id = 1
//   cpu = 16
//   ...
//
// '#' starts a comment. Ranges are written "lo..hi".

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "mapek/allocation.hpp"
#include "mapek/core.hpp"
#include "mapek/format.hpp"
#include "mapek/kernel.hpp"
#include "mapek/simulation.hpp"

namespace mapek {

class ScenarioError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

struct MachineSpec {
    PmId id;
    ResourceVector capacity;
    double power_idle = 0.0;
    double power_max = 0.0;

    friend bool operator==(const MachineSpec&, const MachineSpec&) = default;
};

template <typename T>
struct Range {
    T lo{};
    T hi{};

    friend bool operator==(const Range&, const Range&) = default;
};

struct GeneratorSpec {
    std::vector<SimTime> arrivals;  // explicit leading arrivals, passed through verbatim
    double mean_interarrival_ms = 60000.0;
    Range<std::uint64_t> cpu{1, 4};
    Range<std::uint64_t> ram{512, 4096};
    Range<std::uint64_t> disk{10, 80};
    Range<std::uint64_t> min_percent{50, 100};
    Range<SimTime> max_latency_ms{500, 2000};
    Range<double> price_margin{1.0, 3.0};  // max_price = margin * price(requested)
    Range<std::uint64_t> lifetime_s{60, 300};

    friend bool operator==(const GeneratorSpec&, const GeneratorSpec&) = default;
};

struct MuteSpec {
    PmId pm;
    SimTime from_ms = 0;
    std::optional<SimTime> until_ms;

    friend bool operator==(const MuteSpec&, const MuteSpec&) = default;
};

struct Scenario {
    std::vector<MachineSpec> machines;
    std::optional<GeneratorSpec> generator;
    std::vector<Query> queries;
    std::uint64_t seed = 0;
    SimTime horizon_ms = 0;
    SimTime hop_latency_ms = 1;
    SimTime monitor_period_ms = 1000;
    double high_watermark = kDefaultHighWatermark;
    AllocatorKind allocator = AllocatorKind::SelfAdaptive;
    PriceModel prices;
    std::vector<MuteSpec> mutes;

    friend bool operator==(const Scenario&, const Scenario&) = default;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

[[noreturn]] inline void fail(std::size_t line, std::string_view field, std::string_view msg) {
    std::string text;
    if (line > 0) text = "line " + std::to_string(line) + ": ";
    text += std::string(field) + ": " + std::string(msg);
    throw ScenarioError(text);
}

template <typename T>
T parse_int(std::string_view v, std::size_t line, std::string_view field) {
    T out{};
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size()) fail(line, field, "expected an integer, got '" + std::string(v) + "'");
    return out;
}

inline double parse_double(std::string_view v, std::size_t line, std::string_view field) {
    double out = 0.0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size() || !std::isfinite(out)) {
        fail(line, field, "expected a number, got '" + std::string(v) + "'");
    }
    return out;
}

template <typename T>
Range<T> parse_range(std::string_view v, std::size_t line, std::string_view field) {
    const auto dots = v.find("..");
    if (dots == std::string_view::npos) {
        fail(line, field, "expected a range lo..hi, got '" + std::string(v) + "'");
    }
    const auto lo = trim(v.substr(0, dots));
    const auto hi = trim(v.substr(dots + 2));
    Range<T> r;
    if constexpr (std::is_floating_point_v<T>) {
        r = {parse_double(lo, line, field), parse_double(hi, line, field)};
    } else {
        r = {parse_int<T>(lo, line, field), parse_int<T>(hi, line, field)};
    }
    if (r.lo > r.hi) fail(line, field, "range is empty (lo > hi)");
    return r;
}

/// Collects one stanza's key = value pairs and remembers where each came from.
struct Stanza {
    std::string name;  // empty for the top-level section
    std::size_t line = 0;
    std::map<std::string, std::pair<std::string, std::size_t>, std::less<>> fields;

    [[nodiscard]] std::string qualified(std::string_view key) const {
        return name.empty() ? std::string(key) : name + "." + std::string(key);
    }

    [[nodiscard]] std::optional<std::pair<std::string_view, std::size_t>> get(std::string_view key) const {
        auto it = fields.find(key);
        if (it == fields.end()) return std::nullopt;
        return std::pair<std::string_view, std::size_t>{it->second.first, it->second.second};
    }

    [[nodiscard]] std::pair<std::string_view, std::size_t> require(std::string_view key) const {
        auto v = get(key);
        if (!v) fail(line, qualified(key), "missing required field");
        return *v;
    }

    void allow_only(std::initializer_list<std::string_view> keys) const {
        for (const auto& [k, v] : fields) {
            if (std::find(keys.begin(), keys.end(), k) == keys.end()) fail(v.second, qualified(k), "unknown field");
        }
    }

    template <typename T>
    T req_int(std::string_view key) const {
        auto [v, l] = require(key);
        return parse_int<T>(v, l, qualified(key));
    }

    template <typename T>
    std::optional<T> opt_int(std::string_view key) const {
        auto v = get(key);
        if (!v) return std::nullopt;
        return parse_int<T>(v->first, v->second, qualified(key));
    }

    double req_double(std::string_view key) const {
        auto [v, l] = require(key);
        return parse_double(v, l, qualified(key));
    }

    std::optional<double> opt_double(std::string_view key) const {
        auto v = get(key);
        if (!v) return std::nullopt;
        return parse_double(v->first, v->second, qualified(key));
    }

    template <typename T>
    void opt_range(std::string_view key, Range<T>& out) const {
        if (auto v = get(key)) out = parse_range<T>(v->first, v->second, qualified(key));
    }
};

inline std::vector<Stanza> split_stanzas(std::string_view text) {
    std::vector<Stanza> out(1);
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        ++line_no;
        auto line = text.substr(pos, nl - pos);
        pos = nl + 1;
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') fail(line_no, "section", "unterminated section header");
            const auto name = std::string(trim(line.substr(1, line.size() - 2)));
            if (name != "machine" && name != "generator" && name != "query" && name != "mute") {
                fail(line_no, name, "unknown section");
            }
            out.push_back(Stanza{name, line_no, {}});
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) fail(line_no, std::string(line), "expected key = value");
        const auto key = std::string(trim(line.substr(0, eq)));
        const auto value = std::string(trim(line.substr(eq + 1)));
        auto& st = out.back();
        if (key.empty()) fail(line_no, "key", "empty field name");
        if (st.fields.contains(key)) fail(line_no, st.qualified(key), "duplicate field");
        st.fields.emplace(key, std::pair{value, line_no});
    }
    return out;
}

inline std::vector<SimTime> parse_list(std::string_view v, std::size_t line, std::string_view field) {
    std::vector<SimTime> out;
    if (trim(v).empty()) return out;
    std::size_t pos = 0;
    while (pos <= v.size()) {
        auto comma = v.find(',', pos);
        if (comma == std::string_view::npos) comma = v.size();
        out.push_back(parse_int<SimTime>(trim(v.substr(pos, comma - pos)), line, field));
        pos = comma + 1;
    }
    return out;
}

}  // namespace detail

/// Parses and validates a scenario document. Throws ScenarioError naming the
/// line and field at fault.
[[nodiscard]] inline Scenario parse_scenario(std::string_view text) {
    using detail::fail;
    const auto stanzas = detail::split_stanzas(text);
    Scenario s;

    const auto& top = stanzas.front();
    top.allow_only({"seed", "horizon_ms", "hop_latency_ms", "monitor_period_ms", "high_watermark", "allocator",
                    "price_per_core", "price_per_mib", "price_per_gib"});
    s.seed = top.opt_int<std::uint64_t>("seed").value_or(0);
    s.horizon_ms = top.req_int<SimTime>("horizon_ms");
    if (s.horizon_ms <= 0) fail(top.require("horizon_ms").second, "horizon_ms", "must be positive");
    s.hop_latency_ms = top.opt_int<SimTime>("hop_latency_ms").value_or(1);
    if (s.hop_latency_ms < 0) fail(top.require("hop_latency_ms").second, "hop_latency_ms", "must be non-negative");
    s.monitor_period_ms = top.opt_int<SimTime>("monitor_period_ms").value_or(1000);
    if (s.monitor_period_ms <= 0) {
        fail(top.require("monitor_period_ms").second, "monitor_period_ms", "must be positive");
    }
    s.high_watermark = top.opt_double("high_watermark").value_or(kDefaultHighWatermark);
    if (!(s.high_watermark > 0.0 && s.high_watermark <= 1.0)) {
        fail(top.require("high_watermark").second, "high_watermark", "must lie in (0, 1]");
    }
    if (auto a = top.get("allocator")) {
        auto k = parse_allocator(a->first);
        if (!k) fail(a->second, "allocator", "expected selfadaptive, firstfit or spread");
        s.allocator = *k;
    }
    s.prices.per_core = top.opt_double("price_per_core").value_or(0.0);
    s.prices.per_mib = top.opt_double("price_per_mib").value_or(0.0);
    s.prices.per_gib = top.opt_double("price_per_gib").value_or(0.0);
    for (auto [key, p] : {std::pair{"price_per_core", s.prices.per_core}, std::pair{"price_per_mib", s.prices.per_mib},
                          std::pair{"price_per_gib", s.prices.per_gib}}) {
        if (p < 0.0) fail(top.require(key).second, key, "must be non-negative");
    }

    std::set<PmId> ids;
    std::set<QueryId> query_ids;
    for (std::size_t i = 1; i < stanzas.size(); ++i) {
        const auto& st = stanzas[i];
        if (st.name == "machine") {
            st.allow_only({"id", "cpu", "ram", "disk", "power_idle", "power_max"});
            MachineSpec m;
            m.id = PmId{st.req_int<std::uint32_t>("id")};
            m.capacity = {st.req_int<std::uint64_t>("cpu"), st.req_int<std::uint64_t>("ram"),
                          st.req_int<std::uint64_t>("disk")};
            m.power_idle = st.req_double("power_idle");
            m.power_max = st.req_double("power_max");
            if (!ids.insert(m.id).second) fail(st.require("id").second, "machine.id", "duplicate machine id");
            if (!m.capacity.any_positive()) fail(st.line, "machine", "capacity must have a positive component");
            if (!(m.power_idle > 0.0)) fail(st.require("power_idle").second, "machine.power_idle", "must be positive");
            if (m.power_max < m.power_idle) {
                fail(st.require("power_max").second, "machine.power_max", "must be at least power_idle");
            }
            s.machines.push_back(m);
        } else if (st.name == "generator") {
            if (s.generator) fail(st.line, "generator", "at most one generator stanza");
            st.allow_only({"arrivals_ms", "mean_interarrival_ms", "cpu", "ram", "disk", "min_percent",
                           "max_latency_ms", "price_margin", "lifetime_s"});
            GeneratorSpec g;
            if (auto a = st.get("arrivals_ms")) {
                g.arrivals = detail::parse_list(a->first, a->second, "generator.arrivals_ms");
                if (!std::is_sorted(g.arrivals.begin(), g.arrivals.end())) {
                    fail(a->second, "generator.arrivals_ms", "must be non-decreasing");
                }
                if (!g.arrivals.empty() && g.arrivals.front() < 0) {
                    fail(a->second, "generator.arrivals_ms", "must be non-negative");
                }
            }
            g.mean_interarrival_ms = st.opt_double("mean_interarrival_ms").value_or(g.mean_interarrival_ms);
            if (!(g.mean_interarrival_ms > 0.0)) {
                fail(st.require("mean_interarrival_ms").second, "generator.mean_interarrival_ms", "must be positive");
            }
            st.opt_range("cpu", g.cpu);
            st.opt_range("ram", g.ram);
            st.opt_range("disk", g.disk);
            st.opt_range("min_percent", g.min_percent);
            st.opt_range("max_latency_ms", g.max_latency_ms);
            st.opt_range("price_margin", g.price_margin);
            st.opt_range("lifetime_s", g.lifetime_s);
            auto line_of = [&](std::string_view k) { return st.get(k) ? st.get(k)->second : st.line; };
            if (g.cpu.hi == 0 && g.ram.hi == 0 && g.disk.hi == 0) {
                fail(st.line, "generator", "demand ranges allow an all-zero request");
            }
            if (g.cpu.lo == 0 && g.ram.lo == 0 && g.disk.lo == 0) {
                fail(st.line, "generator", "demand ranges allow an all-zero request");
            }
            if (g.min_percent.hi > 100) fail(line_of("min_percent"), "generator.min_percent", "must not exceed 100");
            if (g.max_latency_ms.lo <= 0) fail(line_of("max_latency_ms"), "generator.max_latency_ms", "must be positive");
            if (g.price_margin.lo < 0.0) fail(line_of("price_margin"), "generator.price_margin", "must be non-negative");
            if (g.lifetime_s.lo == 0) fail(line_of("lifetime_s"), "generator.lifetime_s", "must be positive");
            s.generator = g;
        } else if (st.name == "query") {
            st.allow_only({"id", "user", "arrival_ms", "cpu", "ram", "disk", "min_cpu", "min_ram", "min_disk",
                           "max_latency_ms", "max_price", "lifetime_s"});
            Query q;
            q.id = QueryId{st.req_int<std::uint64_t>("id")};
            q.user_id = st.get("user") ? std::string(st.get("user")->first) : "user-" + std::to_string(q.id.value);
            q.arrival = st.req_int<SimTime>("arrival_ms");
            q.requested = {st.req_int<std::uint64_t>("cpu"), st.req_int<std::uint64_t>("ram"),
                           st.req_int<std::uint64_t>("disk")};
            q.qos.min_capacity = {st.opt_int<std::uint64_t>("min_cpu").value_or(q.requested.cpu),
                                  st.opt_int<std::uint64_t>("min_ram").value_or(q.requested.ram),
                                  st.opt_int<std::uint64_t>("min_disk").value_or(q.requested.disk)};
            q.qos.max_latency = st.req_int<SimTime>("max_latency_ms");
            q.qos.max_price = st.req_double("max_price");
            q.lifetime_s = st.req_int<std::uint64_t>("lifetime_s");
            if (q.arrival < 0) fail(st.require("arrival_ms").second, "query.arrival_ms", "must be non-negative");
            if (auto err = validate(q)) fail(st.line, "query", *err);
            if (!query_ids.insert(q.id).second) fail(st.require("id").second, "query.id", "duplicate query id");
            s.queries.push_back(std::move(q));
        } else {
            st.allow_only({"pm", "from_ms", "until_ms"});
            MuteSpec m;
            m.pm = PmId{st.req_int<std::uint32_t>("pm")};
            m.from_ms = st.opt_int<SimTime>("from_ms").value_or(0);
            m.until_ms = st.opt_int<SimTime>("until_ms");
            if (m.until_ms && *m.until_ms <= m.from_ms) {
                fail(st.require("until_ms").second, "mute.until_ms", "must be after from_ms");
            }
            s.mutes.push_back(m);
        }
    }
    if (s.machines.empty()) fail(0, "machines", "must be non-empty");
    if (s.generator && !s.queries.empty()) fail(0, "workload", "use either a generator or explicit queries, not both");
    for (const auto& m : s.mutes) {
        if (!ids.contains(m.pm)) fail(0, "mute.pm", "unknown machine " + std::to_string(m.pm.value));
    }
    std::stable_sort(s.queries.begin(), s.queries.end(),
                     [](const Query& a, const Query& b) { return a.arrival < b.arrival; });
    return s;
}

/// Writes a document that parse_scenario maps back to an equal Scenario.
[[nodiscard]] inline std::string serialize_scenario(const Scenario& s) {
    std::ostringstream o;
    auto num = [](double x) { return format_exact(x); };
    o << "seed = " << s.seed << '\n'
      << "horizon_ms = " << s.horizon_ms << '\n'
      << "hop_latency_ms = " << s.hop_latency_ms << '\n'
      << "monitor_period_ms = " << s.monitor_period_ms << '\n'
      << "high_watermark = " << num(s.high_watermark) << '\n'
      << "allocator = " << to_string(s.allocator) << '\n'
      << "price_per_core = " << num(s.prices.per_core) << '\n'
      << "price_per_mib = " << num(s.prices.per_mib) << '\n'
      << "price_per_gib = " << num(s.prices.per_gib) << '\n';
    for (const auto& m : s.machines) {
        o << "\n[machine]\n"
          << "id = " << m.id.value << '\n'
          << "cpu = " << m.capacity.cpu << '\n'
          << "ram = " << m.capacity.ram << '\n'
          << "disk = " << m.capacity.disk << '\n'
          << "power_idle = " << num(m.power_idle) << '\n'
          << "power_max = " << num(m.power_max) << '\n';
    }
    if (const auto& g = s.generator) {
        auto range = [&](const auto& r) {
            if constexpr (std::is_floating_point_v<std::decay_t<decltype(r.lo)>>) {
                return num(r.lo) + ".." + num(r.hi);
            } else {
                return std::to_string(r.lo) + ".." + std::to_string(r.hi);
            }
        };
        o << "\n[generator]\n";
        if (!g->arrivals.empty()) {
            o << "arrivals_ms = ";
            for (std::size_t i = 0; i < g->arrivals.size(); ++i) o << (i ? ", " : "") << g->arrivals[i];
            o << '\n';
        }
        o << "mean_interarrival_ms = " << num(g->mean_interarrival_ms) << '\n'
          << "cpu = " << range(g->cpu) << '\n'
          << "ram = " << range(g->ram) << '\n'
          << "disk = " << range(g->disk) << '\n'
          << "min_percent = " << range(g->min_percent) << '\n'
          << "max_latency_ms = " << range(g->max_latency_ms) << '\n'
          << "price_margin = " << range(g->price_margin) << '\n'
          << "lifetime_s = " << range(g->lifetime_s) << '\n';
    }
    for (const auto& q : s.queries) {
        o << "\n[query]\n"
          << "id = " << q.id.value << '\n'
          << "user = " << q.user_id << '\n'
          << "arrival_ms = " << q.arrival << '\n'
          << "cpu = " << q.requested.cpu << '\n'
          << "ram = " << q.requested.ram << '\n'
          << "disk = " << q.requested.disk << '\n'
          << "min_cpu = " << q.qos.min_capacity.cpu << '\n'
          << "min_ram = " << q.qos.min_capacity.ram << '\n'
          << "min_disk = " << q.qos.min_capacity.disk << '\n'
          << "max_latency_ms = " << q.qos.max_latency << '\n'
          << "max_price = " << num(q.qos.max_price) << '\n'
          << "lifetime_s = " << q.lifetime_s << '\n';
    }
    for (const auto& m : s.mutes) {
        o << "\n[mute]\n"
          << "pm = " << m.pm.value << '\n'
          << "from_ms = " << m.from_ms << '\n';
        if (m.until_ms) o << "until_ms = " << *m.until_ms << '\n';
    }
    return o.str();
}

/// Draws queries from the "workload" stream of the seed: the explicit
/// arrivals first, then exponential inter-arrival times until the horizon.
/// Ids start at 1 in arrival order.
[[nodiscard]] inline std::vector<Query> generate_workload(const GeneratorSpec& g, const PriceModel& prices,
                                                          std::uint64_t seed, SimTime horizon) {
    auto rng = named_stream(seed, "workload");
    auto uni = [&](auto r) {
        using T = decltype(r.lo);
        if constexpr (std::is_floating_point_v<T>) {
            return std::uniform_real_distribution<T>(r.lo, r.hi)(rng);
        } else {
            return std::uniform_int_distribution<T>(r.lo, r.hi)(rng);
        }
    };

    std::vector<SimTime> arrivals;
    for (SimTime t : g.arrivals) {
        if (t <= horizon) arrivals.push_back(t);
    }
    std::exponential_distribution<double> gap(1.0 / g.mean_interarrival_ms);
    double t = g.arrivals.empty() ? 0.0 : static_cast<double>(g.arrivals.back());
    while (true) {
        t += gap(rng);
        const auto at = static_cast<SimTime>(std::llround(t));
        if (at > horizon) break;
        arrivals.push_back(at);
    }

    std::vector<Query> out;
    out.reserve(arrivals.size());
    for (std::size_t i = 0; i < arrivals.size(); ++i) {
        Query q;
        q.id = QueryId{i + 1};
        q.user_id = "user-" + std::to_string(q.id.value);
        q.arrival = arrivals[i];
        do {
            q.requested = {uni(g.cpu), uni(g.ram), uni(g.disk)};
        } while (!q.requested.any_positive());
        const std::uint64_t pct = uni(g.min_percent);
        q.qos.min_capacity = {q.requested.cpu * pct / 100, q.requested.ram * pct / 100, q.requested.disk * pct / 100};
        q.qos.max_latency = uni(g.max_latency_ms);
        q.qos.max_price = quantize(uni(g.price_margin) * prices.price(q.requested));
        q.lifetime_s = uni(g.lifetime_s);
        out.push_back(std::move(q));
    }
    return out;
}

/// The scenario's workload: explicit queries, or the generator's output.
[[nodiscard]] inline std::vector<Query> materialize(const Scenario& s) {
    if (s.generator) return generate_workload(*s.generator, s.prices, s.seed, s.horizon_ms);
    return s.queries;
}

[[nodiscard]] inline SimulationConfig to_config(const Scenario& s) {
    SimulationConfig cfg;
    for (const auto& m : s.machines) {
        PhysicalMachine pm;
        pm.id = m.id;
        pm.capacity = m.capacity;
        pm.power_idle = m.power_idle;
        pm.power_max = m.power_max;
        cfg.machines.push_back(pm);
    }
    cfg.workload = materialize(s);
    cfg.allocator = s.allocator;
    cfg.prices = s.prices;
    cfg.seed = s.seed;
    cfg.hop_latency = s.hop_latency_ms;
    cfg.monitor_period = s.monitor_period_ms;
    cfg.high_watermark = s.high_watermark;
    for (const auto& m : s.mutes) cfg.mutes.push_back({m.pm, m.from_ms, m.until_ms});
    return cfg;
}

}  // namespace mapek
