#include "pguard/sim.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "json.hpp"

namespace pguard {

using nlohmann::json;

// -- deterministic rng -------------------------------------------------------

std::uint64_t DetRng::next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

std::uint32_t DetRng::below(std::uint32_t bound) {
    if (bound == 0) return 0;
    // rejection sampling keeps the distribution exactly uniform
    std::uint64_t limit = (0x100000000ull / bound) * bound;
    while (true) {
        std::uint64_t v = next() >> 32;
        if (v < limit) return static_cast<std::uint32_t>(v % bound);
    }
}

long DetRng::range(long lo, long hi) {
    return lo + static_cast<long>(below(static_cast<std::uint32_t>(hi - lo + 1)));
}

// -- topology ----------------------------------------------------------------

int relationship_preference(Relationship rel) {
    switch (rel) {
        case Relationship::Self: return 300;
        case Relationship::Customer: return 200;
        case Relationship::Peer: return 100;
        case Relationship::Provider: return 50;
    }
    return 0;
}

bool SimTopology::has_as(Asn asn) const {
    return std::binary_search(ases.begin(), ases.end(), asn);
}

void SimTopology::validate() const {
    if (ases.empty()) throw ConfigInvalid("topology has no ASes");
    std::set<std::pair<Asn, Asn>> pairs;
    std::map<Asn, std::vector<Asn>> adj;
    for (const TopologyLink& link : links) {
        if (link.a == link.b)
            throw ConfigInvalid("self link at AS " + std::to_string(link.a));
        if (!has_as(link.a) || !has_as(link.b))
            throw ConfigInvalid("link references unknown AS " +
                                std::to_string(has_as(link.a) ? link.b : link.a));
        if (link.delay <= 0)
            throw ConfigInvalid("non-positive delay on link " + std::to_string(link.a) + "-" +
                                std::to_string(link.b));
        auto key = std::minmax(link.a, link.b);
        if (!pairs.insert({key.first, key.second}).second)
            throw ConfigInvalid("duplicate link " + std::to_string(link.a) + "-" +
                                std::to_string(link.b));
        adj[link.a].push_back(link.b);
        adj[link.b].push_back(link.a);
    }
    if (ases.size() > 1) {
        std::set<Asn> reached;
        std::vector<Asn> frontier{ases.front()};
        reached.insert(ases.front());
        while (!frontier.empty()) {
            Asn as = frontier.back();
            frontier.pop_back();
            for (Asn next : adj[as])
                if (reached.insert(next).second) frontier.push_back(next);
        }
        if (reached.size() != ases.size()) throw ConfigInvalid("topology is not connected");
    }
    for (const MonitorTap& tap : monitors) {
        if (!has_as(tap.vantage))
            throw ConfigInvalid("monitor " + tap.source_id + " taps unknown AS " +
                                std::to_string(tap.vantage));
        if (tap.extra_delay < 0)
            throw ConfigInvalid("monitor " + tap.source_id + " has negative delay");
    }
}

namespace {

void note_as(std::vector<Asn>& ases, Asn asn) {
    auto it = std::lower_bound(ases.begin(), ases.end(), asn);
    if (it == ases.end() || *it != asn) ases.insert(it, asn);
}

}  // namespace

SimTopology load_topology(std::string_view text) {
    SimTopology topo;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream row(line);
        std::string kind;
        if (!(row >> kind)) continue;
        if (kind != "provider" && kind != "peer")
            throw ConfigInvalid("topology line " + std::to_string(lineno) +
                                ": expected 'provider' or 'peer', got '" + kind + "'");
        unsigned long a = 0, b = 0;
        double delay = 0;
        if (!(row >> a >> b >> delay))
            throw ConfigInvalid("topology line " + std::to_string(lineno) +
                                ": expected '<a> <b> <delay>'");
        TopologyLink link;
        link.a = static_cast<Asn>(a);
        link.b = static_cast<Asn>(b);
        link.peer = kind == "peer";
        link.delay = delay;
        topo.links.push_back(link);
        note_as(topo.ases, link.a);
        note_as(topo.ases, link.b);
    }
    return topo;
}

void load_monitors(SimTopology& topology, std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream row(line);
        std::string kind;
        if (!(row >> kind)) continue;
        if (kind != "monitor")
            throw ConfigInvalid("monitor line " + std::to_string(lineno) +
                                ": expected 'monitor', got '" + kind + "'");
        std::string source, vantage;
        double extra = 0;
        if (!(row >> source >> vantage >> extra))
            throw ConfigInvalid("monitor line " + std::to_string(lineno) +
                                ": expected 'monitor <source> <asn|*> <delay>'");
        if (vantage == "*") {
            for (Asn as : topology.ases)
                topology.monitors.push_back({source, as, extra});
        } else {
            try {
                topology.monitors.push_back(
                    {source, static_cast<Asn>(std::stoul(vantage)), extra});
            } catch (const std::exception&) {
                throw ConfigInvalid("monitor line " + std::to_string(lineno) +
                                    ": bad AS number '" + vantage + "'");
            }
        }
    }
}

SimTopology random_topology(int n_ases, double peer_probability, DetRng& rng, int delay_min,
                            int delay_max) {
    if (n_ases < 2) throw ConfigInvalid("random topology needs at least 2 ASes");
    SimTopology topo;
    const Asn base = 64500;
    for (int i = 0; i < n_ases; ++i) topo.ases.push_back(base + i);

    auto delay = [&] { return static_cast<double>(rng.range(delay_min, delay_max)); };

    std::set<std::pair<Asn, Asn>> linked;
    // provider tree: every AS after the first buys transit from an earlier one
    for (int i = 1; i < n_ases; ++i) {
        Asn provider = base + rng.below(static_cast<std::uint32_t>(i));
        Asn customer = base + static_cast<Asn>(i);
        topo.links.push_back({provider, customer, false, delay()});
        linked.insert({provider, customer});
    }
    // extra peering edges
    for (int i = 0; i < n_ases; ++i) {
        for (int j = i + 1; j < n_ases; ++j) {
            Asn a = base + i, b = base + j;
            if (linked.count({a, b})) continue;
            if (rng.chance() < peer_probability)
                topo.links.push_back({a, b, true, delay()});
        }
    }

    topo.legitimate_origin = base + rng.below(static_cast<std::uint32_t>(n_ases));
    do {
        topo.hijacker = base + rng.below(static_cast<std::uint32_t>(n_ases));
    } while (topo.hijacker == topo.legitimate_origin);
    return topo;
}

// -- decision procedure ------------------------------------------------------

namespace {

Asn first_hop(const CandidateRoute& c) { return c.path.empty() ? c.neighbor : c.path.front(); }

bool route_better(const CandidateRoute& a, const CandidateRoute& b) {
    int pa = relationship_preference(a.learned_from);
    int pb = relationship_preference(b.learned_from);
    if (pa != pb) return pa > pb;
    if (a.path.size() != b.path.size()) return a.path.size() < b.path.size();
    return first_hop(a) < first_hop(b);
}

}  // namespace

const CandidateRoute& decide(std::span<const CandidateRoute> candidates) {
    if (candidates.empty()) throw NoCandidates("decision over an empty candidate set");
    const CandidateRoute* best = &candidates[0];
    for (const CandidateRoute& c : candidates.subspan(1))
        if (route_better(c, *best)) best = &c;
    return *best;
}

// -- routing core ------------------------------------------------------------

namespace {

struct Neighbor {
    Asn asn = 0;
    Relationship rel = Relationship::Provider;  // of the neighbor, from the local AS
    double delay = 1.0;
};

struct RibEntry {
    std::map<Asn, CandidateRoute> candidates;  // keyed by announcing neighbor
    std::optional<CandidateRoute> best;
};

struct UpdateOut {
    Asn to = 0;
    Asn from = 0;
    double delay = 0;
    AsPath path;
};

struct StepResult {
    bool best_changed = false;
    CandidateRoute best;
    std::vector<UpdateOut> exports;
};

class RoutingCore {
public:
    void build(const SimTopology& topo) {
        for (Asn as : topo.ases) adj_[as];
        for (const TopologyLink& link : topo.links) {
            if (link.peer) {
                adj_[link.a].push_back({link.b, Relationship::Peer, link.delay});
                adj_[link.b].push_back({link.a, Relationship::Peer, link.delay});
            } else {
                adj_[link.a].push_back({link.b, Relationship::Customer, link.delay});
                adj_[link.b].push_back({link.a, Relationship::Provider, link.delay});
            }
        }
        // deterministic export order
        for (auto& [as, neighbors] : adj_)
            std::sort(neighbors.begin(), neighbors.end(),
                      [](const Neighbor& x, const Neighbor& y) { return x.asn < y.asn; });
    }

    StepResult originate(Asn at, const IpPrefix& prefix) {
        RibEntry& entry = ribs_[at][prefix];
        entry.candidates[at] = CandidateRoute{{}, Relationship::Self, at};
        return recompute(at, prefix);
    }

    StepResult receive(Asn to, Asn from, const IpPrefix& prefix, const AsPath& path) {
        if (std::find(path.begin(), path.end(), to) != path.end()) return {};  // loop
        auto rel = Relationship::Provider;
        bool found = false;
        for (const Neighbor& n : adj_.at(to))
            if (n.asn == from) {
                rel = n.rel;
                found = true;
                break;
            }
        if (!found) return {};
        RibEntry& entry = ribs_[to][prefix];
        CandidateRoute incoming{path, rel, from};
        auto it = entry.candidates.find(from);
        if (it != entry.candidates.end() && it->second == incoming) return {};
        entry.candidates[from] = std::move(incoming);
        return recompute(to, prefix);
    }

    const std::map<Asn, std::map<IpPrefix, RibEntry>>& ribs() const { return ribs_; }

    std::map<IpPrefix, AsPath> best_routes(Asn at) const {
        std::map<IpPrefix, AsPath> out;
        auto it = ribs_.find(at);
        if (it == ribs_.end()) return out;
        for (const auto& [prefix, entry] : it->second) {
            if (!entry.best) continue;
            AsPath path{at};
            path.insert(path.end(), entry.best->path.begin(), entry.best->path.end());
            out[prefix] = std::move(path);
        }
        return out;
    }

    SpaceOrigin ground_truth(Asn at, const IpPrefix& space) const {
        VantagePointView view;
        auto it = ribs_.find(at);
        if (it == ribs_.end()) return {};
        for (const auto& [prefix, entry] : it->second) {
            if (!entry.best) continue;
            SelectedRoute route;
            route.path.push_back(at);
            route.path.insert(route.path.end(), entry.best->path.begin(),
                              entry.best->path.end());
            view.selected[prefix] = std::move(route);
        }
        return effective_origin(view, space);
    }

    bool decision_fixed_point() const {
        for (const auto& [as, table] : ribs_) {
            for (const auto& [prefix, entry] : table) {
                if (entry.candidates.empty()) continue;
                std::vector<CandidateRoute> cands;
                for (const auto& [n, c] : entry.candidates) cands.push_back(c);
                const CandidateRoute& best = decide(cands);
                if (!entry.best || !(*entry.best == best)) return false;
            }
        }
        return true;
    }

private:
    StepResult recompute(Asn as, const IpPrefix& prefix) {
        RibEntry& entry = ribs_[as][prefix];
        std::vector<CandidateRoute> cands;
        cands.reserve(entry.candidates.size());
        for (const auto& [n, c] : entry.candidates) cands.push_back(c);
        CandidateRoute best = decide(cands);
        if (entry.best && *entry.best == best) return {};
        entry.best = best;

        StepResult result;
        result.best_changed = true;
        result.best = best;
        bool to_all = best.learned_from == Relationship::Self ||
                      best.learned_from == Relationship::Customer;
        for (const Neighbor& n : adj_.at(as)) {
            if (best.learned_from != Relationship::Self && n.asn == best.neighbor)
                continue;  // never echo a route back to its sender
            if (!to_all && n.rel != Relationship::Customer)
                continue;  // valley-free: peer/provider routes export to customers only
            UpdateOut out;
            out.to = n.asn;
            out.from = as;
            out.delay = n.delay;
            out.path.reserve(best.path.size() + 1);
            out.path.push_back(as);
            out.path.insert(out.path.end(), best.path.begin(), best.path.end());
            result.exports.push_back(std::move(out));
        }
        return result;
    }

    std::map<Asn, std::vector<Neighbor>> adj_;
    std::map<Asn, std::map<IpPrefix, RibEntry>> ribs_;
};

struct SimEvent {
    double time = 0;
    std::uint64_t seq = 0;
    enum class Kind { RouteUpdate, Originate, MonitorDeliver, ControllerEffect, EngineTimer };
    Kind kind = Kind::RouteUpdate;
    Asn to = 0;
    Asn from = 0;
    IpPrefix prefix;
    AsPath path;
    RouteObservation obs;
    std::string line;
};

struct SimEventAfter {
    bool operator()(const SimEvent& a, const SimEvent& b) const {
        if (a.time != b.time) return a.time > b.time;
        return a.seq > b.seq;
    }
};

}  // namespace

// -- propagate (single origination flood) ------------------------------------

std::vector<DeliveryEvent> propagate(const SimTopology& topology, Asn origin,
                                     const IpPrefix& prefix, double start_time) {
    topology.validate();
    if (!topology.has_as(origin))
        throw UnknownOrigin("AS " + std::to_string(origin) + " is not in the topology");

    RoutingCore core;
    core.build(topology);

    std::priority_queue<SimEvent, std::vector<SimEvent>, SimEventAfter> queue;
    std::uint64_t seq = 0;
    auto schedule = [&](double time, const UpdateOut& out) {
        SimEvent e;
        e.time = time;
        e.seq = seq++;
        e.kind = SimEvent::Kind::RouteUpdate;
        e.to = out.to;
        e.from = out.from;
        e.prefix = prefix;
        e.path = out.path;
        queue.push(std::move(e));
    };

    std::vector<DeliveryEvent> deliveries;
    StepResult first = core.originate(origin, prefix);
    for (const UpdateOut& out : first.exports) schedule(start_time + out.delay, out);

    while (!queue.empty()) {
        SimEvent e = queue.top();
        queue.pop();
        StepResult step = core.receive(e.to, e.from, e.prefix, e.path);
        if (!step.best_changed) continue;
        deliveries.push_back({e.time, e.to, step.best.path});
        for (const UpdateOut& out : step.exports) schedule(e.time + out.delay, out);
    }
    return deliveries;
}

// -- scenario ----------------------------------------------------------------

EngineConfig Scenario::engine_config() const {
    EngineConfig cfg;
    if (engine) {
        cfg = *engine;
    } else {
        OwnedPrefix owned;
        owned.prefix = owned_prefix;
        owned.legitimate_origins = {topology.legitimate_origin};
        owned.mitigation_enabled = true;
        cfg.owned = {owned};
        std::map<std::string, double> min_delay;
        for (const MonitorTap& tap : topology.monitors) {
            auto it = min_delay.find(tap.source_id);
            if (it == min_delay.end() || tap.extra_delay < it->second)
                min_delay[tap.source_id] = tap.extra_delay;
        }
        for (const auto& [id, delay] : min_delay) {
            MonitorSource src;
            src.id = id;
            src.kind = SourceKind::stream;
            src.endpoint = "sim";
            src.nominal_delay = delay;
            cfg.sources.push_back(std::move(src));
        }
        // the model never withdraws routes, so post-resolution cleanup is off
        cfg.mitigation.linger = -1.0;
    }
    cfg.controller.mode = ControllerMode::External;  // the simulator is the controller
    return cfg;
}

// -- simulator ---------------------------------------------------------------

struct Simulator::Impl {
    Scenario scenario;
    RoutingCore core;
    std::priority_queue<SimEvent, std::vector<SimEvent>, SimEventAfter> queue;
    std::uint64_t seq = 0;
    std::uint64_t processed = 0;
    double now = 0;

    std::unique_ptr<Engine> engine;
    std::vector<std::string> outgoing;  // commands the engine emitted

    std::map<Asn, std::vector<std::pair<std::string, double>>> taps;  // as -> (source, extra)
    std::vector<Asn> tapped;            // sorted unique tapped ASes
    std::map<Asn, bool> tap_legit;
    std::size_t tap_legit_count = 0;

    std::set<double> scheduled_ticks;
    std::map<std::pair<std::string, Asn>, double> hijack_deliveries;

    ScenarioResult result;
    bool injected = false;

    explicit Impl(Scenario s) : scenario(std::move(s)) {}

    void schedule(SimEvent e) {
        e.seq = seq++;
        queue.push(std::move(e));
    }

    void schedule_update(double time, const IpPrefix& prefix, const UpdateOut& out) {
        SimEvent e;
        e.time = time;
        e.kind = SimEvent::Kind::RouteUpdate;
        e.to = out.to;
        e.from = out.from;
        e.prefix = prefix;
        e.path = out.path;
        schedule(std::move(e));
    }

    void schedule_originate(double time, Asn at, const IpPrefix& prefix) {
        SimEvent e;
        e.time = time;
        e.kind = SimEvent::Kind::Originate;
        e.to = at;
        e.prefix = prefix;
        schedule(std::move(e));
    }

    void apply_step(const IpPrefix& prefix, Asn at, const StepResult& step) {
        if (!step.best_changed) return;
        for (const UpdateOut& out : step.exports) schedule_update(now + out.delay, prefix, out);
        on_best_change(at, prefix, step.best);
    }

    void on_best_change(Asn as, const IpPrefix& prefix, const CandidateRoute& best) {
        auto tap_it = taps.find(as);
        if (tap_it != taps.end()) {
            AsPath observed;
            observed.reserve(best.path.size() + 1);
            observed.push_back(as);
            observed.insert(observed.end(), best.path.begin(), best.path.end());
            Asn origin = observed.back();
            for (const auto& [source, extra] : tap_it->second) {
                RouteObservation obs;
                obs.source = source;
                obs.vantage_point = "AS" + std::to_string(as);
                obs.prefix = prefix;
                obs.kind = UpdateKind::announcement;
                obs.path = observed;
                obs.timestamp = now;
                obs.received_at = now + extra;
                SimEvent e;
                e.time = obs.received_at;
                e.kind = SimEvent::Kind::MonitorDeliver;
                e.obs = std::move(obs);
                schedule(std::move(e));
                if (origin == scenario.topology.hijacker)
                    hijack_deliveries.try_emplace({source, as}, now + extra);
            }
        }
        update_tap_verdict(as);
    }

    void update_tap_verdict(Asn as) {
        auto it = tap_legit.find(as);
        if (it == tap_legit.end()) return;
        bool legit = verdict_legit(as);
        if (legit != it->second) {
            it->second = legit;
            tap_legit_count += legit ? 1 : -1;
        }
        check_full_switch();
    }

    bool verdict_legit(Asn as) const {
        SpaceOrigin so = core.ground_truth(as, scenario.owned_prefix);
        if (!so.origin) return false;
        for (const OwnedPrefix& owned : engine->config().owned)
            if (owned.prefix == scenario.owned_prefix)
                return owned.is_legitimate(*so.origin);
        return *so.origin == scenario.topology.legitimate_origin;
    }

    void check_full_switch() {
        if (!injected || !std::isnan(result.fully_switched_at)) return;
        if (tap_legit_count == tapped.size()) result.fully_switched_at = now;
    }

    void after_engine() {
        for (const std::string& line : outgoing) {
            if (std::isnan(result.commands_sent_at)) result.commands_sent_at = now;
            SimEvent e;
            e.time = now + scenario.controller_delay;
            e.kind = SimEvent::Kind::ControllerEffect;
            e.line = line;
            schedule(std::move(e));
        }
        outgoing.clear();
        if (auto t = engine->next_timer()) {
            if (scheduled_ticks.insert(*t).second) {
                SimEvent e;
                e.time = *t;
                e.kind = SimEvent::Kind::EngineTimer;
                schedule(std::move(e));
            }
        }
    }

    void dispatch(const SimEvent& e) {
        switch (e.kind) {
            case SimEvent::Kind::Originate:
                apply_step(e.prefix, e.to, core.originate(e.to, e.prefix));
                break;
            case SimEvent::Kind::RouteUpdate:
                apply_step(e.prefix, e.to, core.receive(e.to, e.from, e.prefix, e.path));
                break;
            case SimEvent::Kind::MonitorDeliver:
                engine->on_observation(e.obs);
                after_engine();
                break;
            case SimEvent::Kind::ControllerEffect: {
                ControllerCommand command;
                try {
                    command = parse_command(e.line);
                } catch (const MalformedCommand& err) {
                    engine->on_controller_reply(std::string("error ") + err.what(), now);
                    after_engine();
                    break;
                }
                if (command.verb == ControllerCommand::Verb::Announce) {
                    if (!scenario.topology.has_as(command.origin)) {
                        engine->on_controller_reply("error unknown origin " + e.line, now);
                        after_engine();
                        break;
                    }
                    if (!injected) {
                        injected = true;
                        result.injected_at = now;
                    }
                    apply_step(command.prefix, command.origin,
                               core.originate(command.origin, command.prefix));
                    check_full_switch();
                }
                // withdrawals are acknowledged but not propagated by the model
                engine->on_controller_reply("ok " + e.line, now);
                after_engine();
                break;
            }
            case SimEvent::Kind::EngineTimer:
                scheduled_ticks.erase(e.time);
                engine->on_tick(now);
                after_engine();
                break;
        }
    }

    void drain() {
        while (!queue.empty()) {
            SimEvent e = queue.top();
            queue.pop();
            now = e.time;
            if (++processed > scenario.event_budget)
                throw ScenarioStalled("event budget of " +
                                      std::to_string(scenario.event_budget) +
                                      " exhausted at sim time " + std::to_string(now));
            dispatch(e);
        }
    }
};

Simulator::Simulator(Scenario scenario) : impl_(std::make_unique<Impl>(std::move(scenario))) {
    Scenario& s = impl_->scenario;
    s.topology.validate();
    if (!s.topology.has_as(s.topology.legitimate_origin))
        throw ConfigInvalid("legitimate origin is not in the topology");
    if (!s.topology.has_as(s.topology.hijacker))
        throw ConfigInvalid("hijacker is not in the topology");
    if (s.topology.monitors.empty())
        throw ConfigInvalid("scenario defines no monitor taps");

    impl_->core.build(s.topology);
    for (const MonitorTap& tap : s.topology.monitors) {
        impl_->taps[tap.vantage].push_back({tap.source_id, tap.extra_delay});
        impl_->tap_legit.emplace(tap.vantage, false);
    }
    for (const auto& [as, flag] : impl_->tap_legit) impl_->tapped.push_back(as);

    impl_->engine = std::make_unique<Engine>(
        s.engine_config(), [this](const std::string& line) { impl_->outgoing.push_back(line); });
}

Simulator::~Simulator() = default;

ScenarioResult Simulator::run() {
    Impl& im = *impl_;
    const Scenario& s = im.scenario;

    // Phase 1: the owner announces; run to quiescence so every tap has the route.
    im.schedule_originate(0.0, s.topology.legitimate_origin, s.owned_prefix);
    im.drain();
    im.result.setup_converged_at = im.now;

    // Phase 2: the hijacker originates the same prefix; monitors feed the
    // engine, which detects, commands de-aggregation, and the injected
    // sub-prefixes win the longest-prefix match everywhere (Phase 3).
    double hijack_at = im.result.setup_converged_at + s.hijack_start;
    im.result.hijack_started_at = hijack_at;
    im.schedule_originate(hijack_at, s.topology.hijacker, s.owned_prefix);
    im.drain();

    ScenarioResult& r = im.result;
    r.events_processed = im.processed;
    r.alerts = im.engine->detector().alerts();
    r.plans = im.engine->plans();
    r.event_log = im.engine->event_log_text();
    r.timeline = im.engine->timeline();
    r.alert_raised = im.engine->alerts_raised() > 0;
    for (const std::string& line : im.engine->event_lines()) {
        json rec = json::parse(line);
        if (rec.value("event", "") == "unmitigable") r.unmitigable = true;
        if (rec.value("event", "") == "alert_raised") {
            double t = rec.value("detected_at", std::nan(""));
            if (std::isnan(r.detected_at) || t < r.detected_at) r.detected_at = t;
        }
    }

    std::size_t legit = 0;
    for (Asn as : im.tapped)
        if (im.verdict_legit(as)) ++legit;
    r.legit_fraction = im.tapped.empty()
                           ? 0.0
                           : static_cast<double>(legit) / static_cast<double>(im.tapped.size());
    r.hijack_deliveries = im.hijack_deliveries;

    r.t_detect = r.detected_at - r.hijack_started_at;
    r.t_command = r.injected_at - r.detected_at;
    r.t_complete = r.fully_switched_at - r.injected_at;
    r.total = r.fully_switched_at - r.hijack_started_at;
    return r;
}

SpaceOrigin Simulator::ground_truth(Asn at, const IpPrefix& space) const {
    return impl_->core.ground_truth(at, space);
}

std::map<IpPrefix, AsPath> Simulator::best_routes(Asn at) const {
    return impl_->core.best_routes(at);
}

std::span<const Asn> Simulator::ases() const { return impl_->scenario.topology.ases; }

bool Simulator::decision_fixed_point() const { return impl_->core.decision_fixed_point(); }

ScenarioResult run_scenario(Scenario scenario) {
    Simulator sim(std::move(scenario));
    return sim.run();
}

// -- scenario file -----------------------------------------------------------

namespace {

std::string read_file(const std::string& path, const char* what) {
    std::ifstream in(path);
    if (!in) throw ConfigInvalid(std::string("cannot open ") + what + " file " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

Scenario load_scenario_file(const std::string& path, std::uint64_t seed) {
    std::filesystem::path base = std::filesystem::path(path).parent_path();
    auto resolve = [&](const std::string& p) {
        std::filesystem::path fp(p);
        return fp.is_absolute() ? fp.string() : (base / fp).string();
    };

    Scenario scenario;
    std::string topology_path, monitors_path, engine_path, geo_path;
    long random_ases = 0;
    double peer_prob = 0.05;
    int delay_min = 1, delay_max = 10;
    Asn legit = 0, hijacker = 0;
    bool have_owned = false;

    std::istringstream in(read_file(path, "scenario"));
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream row(line);
        std::string key;
        if (!(row >> key)) continue;
        auto fail = [&](const std::string& message) -> void {
            throw ConfigInvalid("scenario line " + std::to_string(lineno) + ": " + message);
        };
        std::string value;
        if (!(row >> value)) fail("missing value for '" + key + "'");

        try {
            if (key == "topology") topology_path = resolve(value);
            else if (key == "monitors") monitors_path = resolve(value);
            else if (key == "engine_config") engine_path = resolve(value);
            else if (key == "geo_table") geo_path = resolve(value);
            else if (key == "random_ases") random_ases = std::stol(value);
            else if (key == "peer_prob") peer_prob = std::stod(value);
            else if (key == "delay_min") delay_min = std::stoi(value);
            else if (key == "delay_max") delay_max = std::stoi(value);
            else if (key == "owned_prefix") {
                scenario.owned_prefix = parse_prefix(value);
                have_owned = true;
            } else if (key == "legitimate_origin") legit = static_cast<Asn>(std::stoul(value));
            else if (key == "hijacker") hijacker = static_cast<Asn>(std::stoul(value));
            else if (key == "hijack_start") scenario.hijack_start = std::stod(value);
            else if (key == "controller_delay") scenario.controller_delay = std::stod(value);
            else if (key == "event_budget") scenario.event_budget = std::stoull(value);
            else fail("unknown key '" + key + "'");
        } catch (const ConfigInvalid&) {
            throw;
        } catch (const Error& e) {
            fail(e.what());
        } catch (const std::exception&) {
            fail("bad value '" + value + "' for '" + key + "'");
        }
    }

    if (!have_owned) throw ConfigInvalid("scenario misses owned_prefix");

    if (!topology_path.empty()) {
        scenario.topology = load_topology(read_file(topology_path, "topology"));
        if (legit == 0 || hijacker == 0)
            throw ConfigInvalid("scenario misses legitimate_origin or hijacker");
        scenario.topology.legitimate_origin = legit;
        scenario.topology.hijacker = hijacker;
    } else if (random_ases > 0) {
        DetRng rng(seed);
        scenario.topology = random_topology(static_cast<int>(random_ases), peer_prob, rng,
                                            delay_min, delay_max);
        if (legit != 0) scenario.topology.legitimate_origin = legit;
        if (hijacker != 0) scenario.topology.hijacker = hijacker;
    } else {
        throw ConfigInvalid("scenario needs either 'topology <path>' or 'random_ases <n>'");
    }

    if (!monitors_path.empty())
        load_monitors(scenario.topology, read_file(monitors_path, "monitors"));
    if (!engine_path.empty()) scenario.engine = load_config_file(engine_path);
    if (!geo_path.empty()) scenario.geo = parse_geo_table(read_file(geo_path, "geo table"));
    return scenario;
}

}  // namespace pguard
