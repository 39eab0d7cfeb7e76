#include "pguard/monitor.hpp"

#include <algorithm>
#include <sstream>

#include "json.hpp"

namespace pguard {

using nlohmann::json;

void ViewStore::apply(const RouteObservation& observation) {
    std::string key = vp_key(observation);
    VantagePointView& view = views_[key];
    if (view.vantage_point.empty()) view.vantage_point = key;

    SelectedRoute incoming;
    if (observation.kind == UpdateKind::announcement) incoming.path = observation.path;
    incoming.timestamp = observation.timestamp;
    incoming.arrival = ++arrivals_;

    auto it = view.selected.find(observation.prefix);
    if (it == view.selected.end()) {
        view.selected.emplace(observation.prefix, std::move(incoming));
        return;
    }
    if (incoming.timestamp < it->second.timestamp) return;  // stale update
    it->second = std::move(incoming);
}

SpaceOrigin effective_origin(const VantagePointView& view, const IpPrefix& space) {
    // Candidate routes: selected prefixes contained in or equal to the space.
    std::vector<const std::pair<const IpPrefix, SelectedRoute>*> candidates;
    for (const auto& entry : view.selected) {
        if (entry.second.withdrawn()) continue;
        if (space.contains(entry.first)) candidates.push_back(&entry);
    }
    if (candidates.empty()) return {};

    // The longest-prefix match is piecewise constant between candidate
    // boundaries, so evaluating one address per elementary interval covers
    // the whole space exactly.
    std::vector<std::uint64_t> cuts{space.address, space.end()};
    for (const auto* c : candidates) {
        cuts.push_back(c->first.address);
        cuts.push_back(c->first.end());
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    SpaceOrigin result;
    result.has_route = true;
    std::optional<Asn> uniform;
    bool first = true;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        if (cuts[i] < space.address || cuts[i] >= space.end()) continue;
        auto probe = static_cast<std::uint32_t>(cuts[i]);
        const std::pair<const IpPrefix, SelectedRoute>* best = nullptr;
        for (const auto* c : candidates) {
            if (!c->first.contains_address(probe)) continue;
            if (!best || c->first.length > best->first.length) best = c;
        }
        if (!best) return result;  // uncovered gap: mixed/partial
        Asn origin = path_origin(best->second.path);
        if (first) {
            uniform = origin;
            first = false;
        } else if (uniform != origin) {
            return result;  // two origins across the space
        }
    }
    result.origin = uniform;
    return result;
}

ConvergenceReport ProgressMonitor::report(const std::string& alert_id, const IpPrefix& space,
                                          std::span<const Asn> legitimate_origins,
                                          double now) {
    ConvergenceReport rep;
    rep.alert_id = alert_id;
    for (const auto& [key, view] : store_.views()) {
        SpaceOrigin so = effective_origin(view, space);
        if (!so.has_route) continue;  // cannot attest either way
        ++rep.total_vps;
        if (so.origin && std::find(legitimate_origins.begin(), legitimate_origins.end(),
                                   *so.origin) != legitimate_origins.end())
            ++rep.legitimate_vps;
    }
    if (rep.total_vps == 0)
        throw NoVantagePoints("no vantage point holds a route for " + space.str());
    rep.fraction = static_cast<double>(rep.legitimate_vps) / static_cast<double>(rep.total_vps);

    if (rep.fraction == 1.0) {
        auto [it, inserted] = full_since_.try_emplace(alert_id, now);
        double since = it->second;
        if (now - since >= hold_time_) {
            rep.complete = true;
            rep.completed_at = since;
        }
    } else {
        full_since_.erase(alert_id);
    }
    return rep;
}

std::optional<double> ProgressMonitor::hold_expiry(const std::string& alert_id) const {
    auto it = full_since_.find(alert_id);
    if (it == full_since_.end()) return std::nullopt;
    return it->second + hold_time_;
}

std::optional<double> ProgressMonitor::earliest_hold_expiry() const {
    std::optional<double> earliest;
    for (const auto& [id, since] : full_since_) {
        double expiry = since + hold_time_;
        if (!earliest || expiry < *earliest) earliest = expiry;
    }
    return earliest;
}

GeoTable parse_geo_table(std::string_view text) {
    GeoTable table;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream row(line);
        std::string vp;
        double lat = 0, lon = 0;
        if (!(row >> vp >> lat >> lon))
            throw ConfigInvalid("geo table line " + std::to_string(lineno) + ": expected "
                                "'<vantage_point> <latitude> <longitude>'");
        table[vp] = {lat, lon};
    }
    return table;
}

namespace {

json record_properties(const TimelineRecord& r) {
    json props;
    props["t"] = r.t;
    props["vantage_point"] = r.vantage_point;
    if (r.effective_origin)
        props["effective_origin"] = *r.effective_origin;
    else
        props["effective_origin"] = nullptr;
    props["legitimate"] = r.legitimate;
    return props;
}

}  // namespace

std::string render_timeline(std::span<const TimelineRecord> records) {
    std::string out;
    for (const TimelineRecord& r : records) {
        out += record_properties(r).dump();
        out += '\n';
    }
    return out;
}

std::string render_geojson(std::span<const TimelineRecord> records, const GeoTable& geo) {
    json features = json::array();
    for (const TimelineRecord& r : records) {
        json feature;
        feature["type"] = "Feature";
        auto it = geo.find(r.vantage_point);
        if (it == geo.end()) {
            // Composite ids fall back to the bare vantage point name.
            auto slash = r.vantage_point.find('/');
            if (slash != std::string::npos)
                it = geo.find(r.vantage_point.substr(slash + 1));
        }
        if (it != geo.end()) {
            feature["geometry"] = {{"type", "Point"},
                                   {"coordinates", {it->second.second, it->second.first}}};
        } else {
            feature["geometry"] = nullptr;
        }
        feature["properties"] = record_properties(r);
        features.push_back(std::move(feature));
    }
    json collection;
    collection["type"] = "FeatureCollection";
    collection["features"] = std::move(features);
    return collection.dump();
}

std::vector<TimelineRecord> timeline_from_event_log(std::string_view ndjson) {
    std::vector<TimelineRecord> records;
    std::istringstream in{std::string(ndjson)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json event = json::parse(line, nullptr, false);
        if (event.is_discarded() || !event.is_object())
            throw LogMalformed("event log line " + std::to_string(lineno) + ": not JSON");
        if (event.value("event", "") != "origin_change") continue;
        TimelineRecord r;
        try {
            r.t = event.at("t").get<double>();
            r.vantage_point = event.at("vantage_point").get<std::string>();
            if (!event.at("effective_origin").is_null())
                r.effective_origin = event.at("effective_origin").get<Asn>();
            r.legitimate = event.at("legitimate").get<bool>();
        } catch (const json::exception& e) {
            throw LogMalformed("event log line " + std::to_string(lineno) + ": " + e.what());
        }
        records.push_back(std::move(r));
    }
    return records;
}

}  // namespace pguard
