#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "pguard/observation.hpp"

namespace pguard {

// Counters kept by the ingest layer. Skipped messages never abort the
// pipeline; they land here.
struct FeedMetrics {
    std::uint64_t messages = 0;
    std::uint64_t observations = 0;
    std::uint64_t empty_updates = 0;
    std::uint64_t schema_violations = 0;
    std::uint64_t duplicates = 0;
    std::uint64_t late_arrivals = 0;
};

// Parses one live-stream message (JSON object, RIS-live style) into route
// observations: one per announced prefix, one per withdrawn prefix.
// Required fields: type="ris_message", data.timestamp, data.peer,
// data.peer_asn, data.type="UPDATE"; data.path is required when the message
// carries announcements. Unknown fields are ignored.
// Throws SchemaViolation naming the offending field, or EmptyUpdate when the
// message has neither announcements nor withdrawals.
std::vector<RouteObservation> parse_stream_message(std::string_view raw,
                                                   const std::string& source_id,
                                                   double received_at);

// Route-table snapshot from a polled source: (vantage_point, prefix) -> path.
using RouteSnapshot = std::map<std::pair<std::string, IpPrefix>, AsPath>;

// Parses the snapshot table format: one row per entry,
// "<vantage_point> <prefix> <as1> <as2> ... <asN>".
RouteSnapshot parse_snapshot(std::string_view text);

// Turns two consecutive snapshots into synthetic updates: an announcement
// for every added or re-pathed entry, a withdrawal for every removed one.
// Identical snapshots produce nothing.
std::vector<RouteObservation> diff_snapshots(const RouteSnapshot& previous,
                                             const RouteSnapshot& current,
                                             const MonitorSource& source,
                                             double observed_at);

// Merges streams into one: ordered by received_at with the stable tiebreak
// on (source, vantage_point, prefix), duplicates under the event key removed
// with the first arrival retained. The first observation of an event seen by
// k sources therefore lands at the minimum of their arrival times.
ObservationStream merge(const std::vector<ObservationStream>& streams);

// Sorts a stream in place by (received_at, source, vantage_point, prefix),
// keeping input order for fully equal keys.
void sort_stream(ObservationStream& stream);

// Live-mode merge boundary: producers push, the single consumer drains.
// Observations are held for `window` seconds so bounded reordering on the
// wire still comes out sorted; anything older than the last emitted
// observation is passed through in arrival order and counted.
class MergeBuffer {
public:
    explicit MergeBuffer(double window = 10.0) : window_(window) {}

    void push(RouteObservation obs);

    // Emits everything with received_at <= now - window, sorted and deduped.
    ObservationStream drain(double now);
    // Emits the rest, for end of input.
    ObservationStream flush();

    const FeedMetrics& metrics() const { return metrics_; }

private:
    ObservationStream take_ready(double cutoff);

    double window_;
    double watermark_ = 0.0;
    bool emitted_any_ = false;
    ObservationStream pending_;
    std::set<EventKey> seen_;
    FeedMetrics metrics_;
};

}  // namespace pguard
