#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pguard/observation.hpp"

namespace pguard {

// Route currently selected at a vantage point for one exact prefix.
// An empty path is a withdrawal tombstone; it keeps latest-wins replay
// order-insensitive and is treated as "no route" on lookup.
struct SelectedRoute {
    AsPath path;
    double timestamp = 0.0;
    std::uint64_t arrival = 0;  // tiebreak: later arrival wins equal timestamps

    bool withdrawn() const { return path.empty(); }
};

struct VantagePointView {
    std::string vantage_point;  // composite "source/vp" id
    std::map<IpPrefix, SelectedRoute> selected;
    std::optional<std::pair<double, double>> geo;  // latitude, longitude
};

// Outcome of longest-prefix matching a whole address space at one vantage
// point. `origin` is set when a single origin wins at every covered block;
// has_route without origin means the space is mixed or partially routed.
struct SpaceOrigin {
    std::optional<Asn> origin;
    bool has_route = false;
};

// Evaluates the routes selected at `view` over `space`: only routes contained
// in or equal to the space count, the longest covering route wins at each
// point, and the verdict is uniform only when every part of the space
// resolves to the same origin.
SpaceOrigin effective_origin(const VantagePointView& view, const IpPrefix& space);

struct ConvergenceReport {
    std::string alert_id;
    std::size_t total_vps = 0;        // vantage points with any route for the space
    std::size_t legitimate_vps = 0;   // of those, uniformly legitimate ones
    double fraction = 0.0;
    bool complete = false;
    std::optional<double> completed_at;  // the moment fraction first hit 1
};

// Tracks per-vantage-point selected routes. Single writer, snapshot readers.
class ViewStore {
public:
    // Latest-wins upsert/remove; older-timestamped updates are ignored,
    // ties go to the later arrival.
    void apply(const RouteObservation& observation);

    const std::map<std::string, VantagePointView>& views() const { return views_; }

    static std::string vp_key(const RouteObservation& o) {
        return o.source + "/" + o.vantage_point;
    }

private:
    std::map<std::string, VantagePointView> views_;
    std::uint64_t arrivals_ = 0;
};

// Convergence bookkeeping over a view store: fraction of vantage points
// whose effective origin over the watched space is legitimate, with a hold
// time before completion is declared so a flap cannot end mitigation early.
class ProgressMonitor {
public:
    explicit ProgressMonitor(double hold_time = 60.0) : hold_time_(hold_time) {}

    void apply(const RouteObservation& observation) { store_.apply(observation); }
    const ViewStore& store() const { return store_; }

    // Counts vantage points for `space`; throws NoVantagePoints when none has
    // a route. Completion requires fraction == 1 sustained for the hold time.
    ConvergenceReport report(const std::string& alert_id, const IpPrefix& space,
                             std::span<const Asn> legitimate_origins, double now);

    // Time at which `alert_id` would complete if fraction stays 1 (hold
    // expiry), if currently holding.
    std::optional<double> hold_expiry(const std::string& alert_id) const;
    std::optional<double> earliest_hold_expiry() const;

    void forget(const std::string& alert_id) { full_since_.erase(alert_id); }

    double hold_time() const { return hold_time_; }

private:
    ViewStore store_;
    double hold_time_;
    std::map<std::string, double> full_since_;
};

// -- timeline / geo export --------------------------------------------------

struct TimelineRecord {
    double t = 0.0;
    std::string vantage_point;
    std::optional<Asn> effective_origin;
    bool legitimate = false;
};

// vantage point id -> (latitude, longitude)
using GeoTable = std::map<std::string, std::pair<double, double>>;

// Parses "vantage_point latitude longitude" rows; '#' starts a comment.
GeoTable parse_geo_table(std::string_view text);

std::string render_timeline(std::span<const TimelineRecord> records);

// GeoJSON FeatureCollection of point features carrying the record fields as
// properties. Vantage points missing from the geo table get a null geometry.
std::string render_geojson(std::span<const TimelineRecord> records, const GeoTable& geo);

// Rebuilds timeline records from an engine event log (NDJSON text), keeping
// the origin-change records. Throws LogMalformed on unparsable lines.
std::vector<TimelineRecord> timeline_from_event_log(std::string_view ndjson);

}  // namespace pguard
