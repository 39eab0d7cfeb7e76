#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "pguard/sim.hpp"

using namespace pguard;

namespace {

SimTopology chain_topology() {
    // 64500 provides transit to both leaf ASes
    SimTopology topo;
    topo.ases = {64500, 65001, 65002};
    topo.links = {{64500, 65001, false, 5.0}, {64500, 65002, false, 7.0}};
    topo.legitimate_origin = 65001;
    topo.hijacker = 65002;
    return topo;
}

void tap_all(SimTopology& topo, std::initializer_list<std::pair<const char*, double>> sources) {
    for (const auto& [id, delay] : sources)
        for (Asn as : topo.ases) topo.monitors.push_back({id, as, delay});
}

Scenario basic_scenario(SimTopology topo, const char* owned = "10.0.0.0/23") {
    Scenario s;
    s.topology = std::move(topo);
    s.owned_prefix = parse_prefix(owned);
    s.hijack_start = 30.0;
    s.controller_delay = 15.0;
    return s;
}

// Test-side longest-prefix match over a route table, independent of the
// library's space evaluation.
std::optional<Asn> lpm_origin(const std::map<IpPrefix, AsPath>& routes, std::uint32_t addr) {
    const IpPrefix* best = nullptr;
    Asn origin = 0;
    for (const auto& [prefix, path] : routes) {
        if (!prefix.contains_address(addr)) continue;
        if (!best || prefix.length > best->length) {
            best = &prefix;
            origin = path.back();
        }
    }
    if (!best) return std::nullopt;
    return origin;
}

Relationship relation_between(const SimTopology& topo, Asn from, Asn to) {
    // how `to` sees `from` is irrelevant here; returns the direction of the
    // advertisement from -> to
    for (const TopologyLink& l : topo.links) {
        if (l.a == from && l.b == to) return l.peer ? Relationship::Peer : Relationship::Customer;
        if (l.a == to && l.b == from) return l.peer ? Relationship::Peer : Relationship::Provider;
    }
    return Relationship::Self;  // not adjacent
}

}  // namespace

TEST_CASE("decision procedure orders by relationship, length, neighbor") {
    CandidateRoute customer{{64501, 64502, 64503, 65001}, Relationship::Customer, 64501};
    CandidateRoute peer{{64504, 65001}, Relationship::Peer, 64504};
    CandidateRoute provider{{64505, 65001}, Relationship::Provider, 64505};
    CandidateRoute self{{}, Relationship::Self, 64500};

    SUBCASE("customer beats shorter peer and provider routes") {
        std::vector<CandidateRoute> c{provider, peer, customer};
        CHECK(decide(c) == customer);
    }
    SUBCASE("self-originated routes beat everything") {
        std::vector<CandidateRoute> c{customer, self};
        CHECK(decide(c) == self);
    }
    SUBCASE("single candidate decides itself") {
        std::vector<CandidateRoute> c{provider};
        CHECK(decide(c) == provider);
    }
    SUBCASE("within a class the shorter path wins") {
        CandidateRoute longer{{64506, 64507, 65001}, Relationship::Peer, 64506};
        std::vector<CandidateRoute> c{longer, peer};
        CHECK(decide(c) == peer);
    }
    SUBCASE("full tie goes to the lowest neighbor") {
        CandidateRoute other{{64506, 65001}, Relationship::Peer, 64506};
        std::vector<CandidateRoute> c{other, peer};
        CHECK(decide(c) == peer);  // 64504 < 64506
    }
    SUBCASE("empty candidate set is an error") {
        std::vector<CandidateRoute> none;
        CHECK_THROWS_AS(decide(none), NoCandidates);
    }
    SUBCASE("exhaustive pairwise ordering is a strict weak order") {
        std::vector<CandidateRoute> all{customer, peer, provider, self};
        auto rank = [&](const CandidateRoute& r) {
            std::vector<CandidateRoute> pool = all;
            int wins = 0;
            for (const auto& other : pool) {
                std::vector<CandidateRoute> pair{r, other};
                if (decide(pair) == r && !(other == r)) ++wins;
            }
            return wins;
        };
        CHECK(rank(self) == 3);
        CHECK(rank(customer) == 2);
        CHECK(rank(peer) == 1);
        CHECK(rank(provider) == 0);
    }
}

TEST_CASE("the decision is independent of candidate order") {
    DetRng rng(0xdec1de);
    for (int round = 0; round < 200; ++round) {
        std::vector<CandidateRoute> candidates;
        int n = static_cast<int>(rng.range(1, 8));
        for (int i = 0; i < n; ++i) {
            CandidateRoute c;
            c.neighbor = 64500 + static_cast<Asn>(i);  // one candidate per neighbor
            int hops = static_cast<int>(rng.range(1, 5));
            c.path.push_back(c.neighbor);
            for (int h = 1; h < hops; ++h)
                c.path.push_back(65000 + rng.below(100));
            c.learned_from = static_cast<Relationship>(rng.below(3));
            candidates.push_back(std::move(c));
        }
        CandidateRoute first = decide(candidates);
        for (int shuffle = 0; shuffle < 5; ++shuffle) {
            for (std::size_t i = candidates.size(); i > 1; --i)
                std::swap(candidates[i - 1], candidates[rng.below(static_cast<std::uint32_t>(i))]);
            CHECK(decide(candidates) == first);
        }
    }
}

TEST_CASE("propagation through a provider chain") {
    // A(origin, customer of B) - B - C: C is another customer of B
    SimTopology topo;
    topo.ases = {1, 2, 3};
    topo.links = {{2, 1, false, 3.0}, {2, 3, false, 4.0}};
    topo.legitimate_origin = 1;
    topo.hijacker = 3;

    auto schedule = propagate(topo, 1, parse_prefix("10.0.0.0/23"), 0.0);
    REQUIRE(schedule.size() == 2);
    CHECK(schedule[0].at == 2);
    CHECK(schedule[0].time == 3.0);
    CHECK(schedule[0].path == AsPath{1});
    CHECK(schedule[1].at == 3);
    CHECK(schedule[1].time == 7.0);  // 3 + 4
    CHECK(schedule[1].path == AsPath{2, 1});
}

TEST_CASE("origination in a single-AS topology produces no deliveries") {
    SimTopology topo;
    topo.ases = {65001};
    topo.legitimate_origin = 65001;
    topo.hijacker = 65001;
    CHECK(propagate(topo, 65001, parse_prefix("10.0.0.0/23"), 0.0).empty());
    CHECK_THROWS_AS(propagate(topo, 64999, parse_prefix("10.0.0.0/23"), 0.0), UnknownOrigin);
}

TEST_CASE("peers do not provide transit") {
    // origin 1 -- peer 2 -- peer 3: 3 must not learn the route through 2
    SimTopology topo;
    topo.ases = {1, 2, 3};
    topo.links = {{1, 2, true, 1.0}, {2, 3, true, 1.0}};
    topo.legitimate_origin = 1;
    topo.hijacker = 3;
    auto schedule = propagate(topo, 1, parse_prefix("10.0.0.0/23"), 0.0);
    REQUIRE(schedule.size() == 1);
    CHECK(schedule[0].at == 2);
    // but a customer of the peer does learn it
    topo.links = {{1, 2, true, 1.0}, {2, 3, false, 1.0}};
    schedule = propagate(topo, 1, parse_prefix("10.0.0.0/23"), 0.0);
    REQUIRE(schedule.size() == 2);
    CHECK(schedule[1].at == 3);
    CHECK(schedule[1].path == AsPath{2, 1});
}

TEST_CASE("delivered paths are loop-free and valley-free on random topologies") {
    for (std::uint64_t seed = 1; seed <= 15; ++seed) {
        DetRng rng(seed);
        SimTopology topo = random_topology(static_cast<int>(rng.range(10, 60)), 0.08, rng);
        auto schedule = propagate(topo, topo.legitimate_origin, parse_prefix("10.0.0.0/23"), 0.0);
        CHECK(!schedule.empty());
        for (const DeliveryEvent& d : schedule) {
            // loop-free: no AS appears twice (the adopting AS included)
            AsPath full{d.at};
            full.insert(full.end(), d.path.begin(), d.path.end());
            std::set<Asn> unique(full.begin(), full.end());
            REQUIRE(unique.size() == full.size());

            // valley-free: climbing is only allowed before the first
            // downhill or peer step, and at most one peer step occurs
            int peers = 0;
            bool descended = false;
            for (std::size_t i = full.size(); i-- > 1;) {
                Relationship step = relation_between(topo, full[i], full[i - 1]);
                REQUIRE(step != Relationship::Self);  // consecutive hops are adjacent
                if (step == Relationship::Provider) {
                    REQUIRE(!descended);  // no climbing after going down or across
                    REQUIRE(peers == 0);
                } else if (step == Relationship::Peer) {
                    ++peers;
                    REQUIRE(peers <= 1);
                    REQUIRE(!descended);
                } else {
                    descended = true;
                }
            }
        }
    }
}

TEST_CASE("three-phase run on the two-customer topology") {
    SimTopology topo = chain_topology();
    tap_all(topo, {{"src45", 45.0}, {"src120", 120.0}, {"src900", 900.0}});
    Scenario scenario = basic_scenario(topo);

    Simulator sim(scenario);
    ScenarioResult r = sim.run();

    // setup: origin switch at 0, provider at 5, hijacker-as-yet-innocent at
    // 12; the slowest monitor inflates quiescence to 912
    CHECK(r.setup_converged_at == 912.0);
    CHECK(r.hijack_started_at == 942.0);
    CHECK(r.alert_raised);
    CHECK_FALSE(r.unmitigable);
    CHECK(r.t_detect == 45.0);  // the fastest monitor taps the hijacker itself
    CHECK(r.t_command == 15.0);  // the controller delay
    CHECK(r.t_complete == 12.0);  // provider hop (7) then down to the hijacker (5)
    CHECK(r.total == 72.0);
    CHECK(r.legit_fraction == 1.0);
    CHECK(std::isnan(r.detected_at) == false);

    // alert and plan ordering survives into the snapshots
    REQUIRE(r.alerts.size() == 1);
    REQUIRE(r.plans.size() == 1);
    CHECK(r.alerts[0].state == AlertState::Resolved);
    CHECK(r.plans[0].status == PlanStatus::Complete);
    CHECK(r.alerts[0].detected_at <= r.plans[0].commanded_at);
    CHECK(r.plans[0].commanded_at <= r.plans[0].completed_at);

    // quiescence is a decision fixed point and the sub-prefixes won everywhere
    CHECK(sim.decision_fixed_point());
    for (Asn as : sim.ases()) {
        auto routes = sim.best_routes(as);
        CHECK(lpm_origin(routes, parse_prefix("10.0.0.0/24").address) == 65001);
        CHECK(lpm_origin(routes, parse_prefix("10.0.1.0/24").address) == 65001);
    }
}

TEST_CASE("a /24 owned prefix cannot be rescued by de-aggregation") {
    SimTopology topo = chain_topology();
    tap_all(topo, {{"src45", 45.0}});
    Scenario scenario = basic_scenario(topo, "198.51.100.0/24");

    ScenarioResult r = run_scenario(scenario);
    CHECK(r.alert_raised);
    CHECK(r.unmitigable);
    CHECK(std::isnan(r.injected_at));
    CHECK(std::isnan(r.fully_switched_at));
    CHECK(r.legit_fraction < 1.0);  // the hijacker keeps preferring itself
    REQUIRE(r.alerts.size() == 1);
    CHECK(r.alerts[0].state == AlertState::New);  // never mitigated
    CHECK(r.plans.empty());
}

TEST_CASE("identical scenarios produce identical runs") {
    auto build = [] {
        DetRng rng(404);
        SimTopology topo = random_topology(40, 0.05, rng);
        for (Asn as : topo.ases) {
            topo.monitors.push_back({"src45", as, 45.0});
            topo.monitors.push_back({"src120", as, 120.0});
        }
        return basic_scenario(topo);
    };
    ScenarioResult a = run_scenario(build());
    ScenarioResult b = run_scenario(build());
    CHECK(a.event_log == b.event_log);
    CHECK(a.t_detect == b.t_detect);
    CHECK(a.t_complete == b.t_complete);
    CHECK(a.events_processed == b.events_processed);
    CHECK(a.setup_converged_at == b.setup_converged_at);
}

TEST_CASE("detection latency equals the fastest hijack observation") {
    for (std::uint64_t seed = 21; seed <= 32; ++seed) {
        DetRng rng(seed);
        SimTopology topo = random_topology(static_cast<int>(rng.range(10, 50)), 0.06, rng);
        // partial taps with integer extra delays; always watch the hijacker
        const char* sources[] = {"a", "b", "c"};
        for (const char* src : sources) {
            double extra = static_cast<double>(rng.range(5, 400));
            for (Asn as : topo.ases)
                if (as == topo.hijacker || rng.below(3) == 0)
                    topo.monitors.push_back({src, as, extra});
        }
        Scenario scenario = basic_scenario(topo);
        Simulator sim(scenario);
        ScenarioResult r = sim.run();

        REQUIRE(r.alert_raised);
        REQUIRE(!r.hijack_deliveries.empty());
        double expected = r.hijack_deliveries.begin()->second;
        for (const auto& [key, t] : r.hijack_deliveries) expected = std::min(expected, t);
        CHECK(r.detected_at == expected);
        CHECK(r.t_detect == expected - r.hijack_started_at);
    }
}

TEST_CASE("longest-prefix victory on random topologies") {
    for (std::uint64_t seed = 100; seed < 110; ++seed) {
        DetRng rng(seed);
        SimTopology topo = random_topology(static_cast<int>(rng.range(10, 80)), 0.05, rng);
        tap_all(topo, {{"src45", 45.0}, {"src120", 120.0}});
        Scenario scenario = basic_scenario(topo);
        Simulator sim(scenario);
        ScenarioResult r = sim.run();

        REQUIRE(r.alert_raised);
        CHECK(r.legit_fraction == 1.0);
        CHECK(sim.decision_fixed_point());
        IpPrefix owned = parse_prefix("10.0.0.0/23");
        for (Asn as : sim.ases()) {
            auto routes = sim.best_routes(as);
            for (std::uint64_t block = owned.address; block < owned.end(); block += 256) {
                auto verdict = lpm_origin(routes, static_cast<std::uint32_t>(block));
                REQUIRE(verdict);
                CHECK(*verdict == topo.legitimate_origin);
            }
        }
        // ordering audit
        REQUIRE(!r.plans.empty());
        CHECK(r.detected_at <= r.plans[0].commanded_at);
        CHECK(r.plans[0].commanded_at <= r.plans[0].completed_at);
    }
}

TEST_CASE("legitimate fraction never regresses after the commands take effect") {
    for (std::uint64_t seed : {3ull, 14ull, 59ull}) {
        DetRng rng(seed);
        SimTopology topo = random_topology(static_cast<int>(rng.range(15, 60)), 0.05, rng);
        tap_all(topo, {{"src45", 45.0}, {"src120", 120.0}});
        ScenarioResult r = run_scenario(basic_scenario(topo));
        REQUIRE(!std::isnan(r.injected_at));

        // a post-injection flip to legitimate can only come from the injected
        // sub-prefixes, and those can never lose the longest match again; so
        // each vantage point's contribution to the fraction never regresses
        std::set<std::string> mitigated;
        for (const TimelineRecord& record : r.timeline) {
            if (mitigated.count(record.vantage_point)) {
                CHECK(record.legitimate);
                continue;
            }
            if (record.legitimate && record.t > r.injected_at)
                mitigated.insert(record.vantage_point);
        }
        CHECK(!mitigated.empty());
    }
}

TEST_CASE("the event budget stops a runaway scenario") {
    SimTopology topo = chain_topology();
    tap_all(topo, {{"src45", 45.0}});
    Scenario scenario = basic_scenario(topo);
    scenario.event_budget = 3;
    CHECK_THROWS_AS(run_scenario(scenario), ScenarioStalled);
}

TEST_CASE("topology loading and validation") {
    SimTopology topo = load_topology(
        "# comment\n"
        "provider 64500 65001 5\n"
        "provider 64500 65002 7\n"
        "peer 65001 65002 2\n");
    CHECK(topo.ases == std::vector<Asn>{64500, 65001, 65002});
    CHECK(topo.links.size() == 3);
    load_monitors(topo, "monitor src45 * 45\nmonitor lg 65001 120\n");
    CHECK(topo.monitors.size() == 4);
    topo.legitimate_origin = 65001;
    topo.hijacker = 65002;
    topo.validate();

    CHECK_THROWS_AS(load_topology("provider 1 1 5\n").validate(), ConfigInvalid);
    CHECK_THROWS_AS(load_topology("provider 1 2 0\n").validate(), ConfigInvalid);
    CHECK_THROWS_AS(load_topology("provider 1 2 5\npeer 2 1 1\n").validate(), ConfigInvalid);
    CHECK_THROWS_AS(load_topology("provider 1 2 5\nprovider 3 4 5\n").validate(),
                    ConfigInvalid);
    CHECK_THROWS_AS(load_topology("link 1 2 5\n"), ConfigInvalid);
}

TEST_CASE("random topologies are connected and well-formed") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        DetRng rng(seed);
        int n = static_cast<int>(rng.range(2, 120));
        SimTopology topo = random_topology(n, 0.1, rng);
        CHECK(topo.ases.size() == static_cast<std::size_t>(n));
        topo.validate();  // includes the connectivity check
        CHECK(topo.legitimate_origin != topo.hijacker);
        for (const TopologyLink& l : topo.links) {
            CHECK(l.delay >= 1.0);
            CHECK(l.delay <= 10.0);
            CHECK(l.delay == std::floor(l.delay));  // integral, keeps times exact
        }
    }
}
