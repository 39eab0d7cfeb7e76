#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "pguard/engine.hpp"

namespace pguard {

// Deterministic, platform-independent RNG (splitmix64). The standard
// distributions are implementation-defined, so seeded runs use this instead.
class DetRng {
public:
    explicit DetRng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next();
    std::uint32_t below(std::uint32_t bound);        // uniform in [0, bound)
    long range(long lo, long hi);                    // uniform inclusive
    double chance() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

private:
    std::uint64_t state_;
};

// Business relationship of a neighbor as seen from the local AS.
enum class Relationship { Customer, Peer, Provider, Self };

// Fixed route preference: own > customer > peer > provider.
int relationship_preference(Relationship rel);

struct TopologyLink {
    Asn a = 0;
    Asn b = 0;
    bool peer = false;  // false: a is provider of b
    double delay = 1.0; // per-hop propagation delay, seconds, > 0
};

struct MonitorTap {
    std::string source_id;
    Asn vantage = 0;
    double extra_delay = 0.0;  // observation latency on top of propagation
};

// AS-level graph with relationships, per-link delays and monitor taps.
struct SimTopology {
    std::vector<Asn> ases;  // sorted, unique
    std::vector<TopologyLink> links;
    std::vector<MonitorTap> monitors;
    Asn legitimate_origin = 0;
    Asn hijacker = 0;

    bool has_as(Asn asn) const;
    // Throws ConfigInvalid: disconnected graph, self links, duplicate pairs,
    // non-positive delays.
    void validate() const;
};

// Text loaders. Topology lines: "provider <a> <b> <delay>" (a provides
// transit to b) and "peer <a> <b> <delay>". Monitor lines:
// "monitor <source_id> <asn|*> <extra_delay>"; '*' taps every AS.
SimTopology load_topology(std::string_view text);
void load_monitors(SimTopology& topology, std::string_view text);

// Random provider tree plus peering links; integer delays in
// [delay_min, delay_max] so event times stay exact in doubles. Picks
// distinct legitimate origin and hijacker roles.
SimTopology random_topology(int n_ases, double peer_probability, DetRng& rng,
                            int delay_min = 1, int delay_max = 10);

// One route offered to an AS: path as received (announcing neighbor first,
// origin last; empty for self-originated routes).
struct CandidateRoute {
    AsPath path;
    Relationship learned_from = Relationship::Provider;
    Asn neighbor = 0;

    friend bool operator==(const CandidateRoute&, const CandidateRoute&) = default;
};

// Standard policy decision: highest relationship preference, then shortest
// path, then lowest announcing neighbor. Deterministic; throws NoCandidates.
const CandidateRoute& decide(std::span<const CandidateRoute> candidates);

// Best-route adoption as seen during a single origination flood.
struct DeliveryEvent {
    double time = 0.0;
    Asn at = 0;
    AsPath path;  // as stored at the adopting AS
};

// Floods one origination under valley-free export policy and returns every
// best-route adoption in time order. Throws UnknownOrigin.
std::vector<DeliveryEvent> propagate(const SimTopology& topology, Asn origin,
                                     const IpPrefix& prefix, double start_time);

struct Scenario {
    SimTopology topology;
    IpPrefix owned_prefix;
    double hijack_start = 30.0;      // offset after setup quiescence
    double controller_delay = 15.0;  // command to announcement-effective
    std::uint64_t event_budget = 2'000'000;
    std::optional<EngineConfig> engine;  // derived from the scenario when absent
    GeoTable geo;

    EngineConfig engine_config() const;  // resolved config (controller External)
};

// Key-value scenario file; relative paths resolve against the file's
// directory. Throws ConfigInvalid.
Scenario load_scenario_file(const std::string& path, std::uint64_t seed = 1);

struct ScenarioResult {
    // absolute simulation clock times (NaN where the phase never happened)
    double setup_converged_at = 0.0;
    double hijack_started_at = 0.0;
    double detected_at = std::nan("");
    double commands_sent_at = std::nan("");
    double injected_at = std::nan("");        // commands effective (acked)
    double fully_switched_at = std::nan("");  // every tapped AS back to legitimate

    // headline intervals
    double t_detect = std::nan("");    // detected_at - hijack_started_at
    double t_command = std::nan("");   // injected_at - detected_at
    double t_complete = std::nan("");  // fully_switched_at - injected_at
    double total = std::nan("");       // fully_switched_at - hijack_started_at

    bool alert_raised = false;
    bool unmitigable = false;
    double legit_fraction = 0.0;  // tapped ASes with legitimate ground truth, at end
    std::uint64_t events_processed = 0;

    std::vector<HijackAlert> alerts;
    std::vector<MitigationPlan> plans;
    std::string event_log;
    std::vector<TimelineRecord> timeline;

    // earliest delivery of a hijack-origin observation per (source, vantage)
    std::map<std::pair<std::string, Asn>, double> hijack_deliveries;
};

// Discrete-event run of the three-phase experiment: announce and converge,
// hijack and detect, mitigate and measure. Deterministic for a given
// scenario; the simulator is both the network and the controller for the
// engine under test. Throws ScenarioStalled when the event budget runs out.
class Simulator {
public:
    explicit Simulator(Scenario scenario);
    ~Simulator();

    ScenarioResult run();

    // Ground-truth verdict at one AS over an address space (longest-prefix
    // match across its best routes), for post-run audits.
    SpaceOrigin ground_truth(Asn at, const IpPrefix& space) const;
    // Selected best routes at one AS: prefix -> full path, the local AS
    // first and the origin last.
    std::map<IpPrefix, AsPath> best_routes(Asn at) const;
    std::span<const Asn> ases() const;
    // True when re-running the decision procedure at every AS changes no
    // best route (quiescence fixed point).
    bool decision_fixed_point() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

ScenarioResult run_scenario(Scenario scenario);

}  // namespace pguard
