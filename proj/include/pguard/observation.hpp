#pragma once

#include <string>
#include <tuple>
#include <vector>

#include "pguard/prefix.hpp"

namespace pguard {

enum class SourceKind { stream, poll, trace };

std::string to_string(SourceKind kind);
SourceKind source_kind_from_string(std::string_view text);

// One configured monitor feed. nominal_delay is the expected observation
// latency in seconds; the simulator and latency accounting use it.
struct MonitorSource {
    std::string id;
    SourceKind kind = SourceKind::trace;
    std::string endpoint;        // file or FIFO path, "-" for stdin
    double nominal_delay = 0.0;  // seconds, >= 0
    double poll_interval = 30.0; // poll sources only, seconds

    friend bool operator==(const MonitorSource&, const MonitorSource&) = default;
};

enum class UpdateKind { announcement, withdrawal };

// One announcement or withdrawal as seen by one vantage point through one
// monitor source. received_at is assigned locally at ingest (wall clock in
// live mode, trace/sim clock in replay and simulation) and never trusted
// from the wire.
struct RouteObservation {
    std::string source;          // MonitorSource id
    std::string vantage_point;   // observing peer/router id
    IpPrefix prefix;
    UpdateKind kind = UpdateKind::announcement;
    AsPath path;                 // non-empty for announcements, empty for withdrawals
    double timestamp = 0.0;      // monitor-assigned, seconds since epoch
    double received_at = 0.0;    // local arrival, seconds since epoch

    Asn origin() const { return path_origin(path); }

    friend bool operator==(const RouteObservation&, const RouteObservation&) = default;
};

// Identity of one routing event. Deliberately excludes the source so the
// same event relayed by several monitors collapses to its earliest arrival;
// the monitor timestamp stays in the key so a genuine re-announcement is
// not suppressed.
using EventKey = std::tuple<std::string, IpPrefix, UpdateKind, AsPath, double>;

inline EventKey event_key(const RouteObservation& o) {
    return {o.vantage_point, o.prefix, o.kind, o.path, o.timestamp};
}

// Observations ordered by received_at with a stable tiebreak on
// (source id, vantage_point, prefix).
using ObservationStream = std::vector<RouteObservation>;

}  // namespace pguard
