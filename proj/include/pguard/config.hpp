#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "pguard/detection.hpp"
#include "pguard/mitigation.hpp"
#include "pguard/observation.hpp"

namespace pguard {

enum class ControllerMode { Instant, Pipe, External };

// Where mitigation commands go and where acks come back from. Instant mode
// acknowledges every command at the moment it is sent; pipe mode writes
// command lines to command_path and reads reply lines from reply_path.
// External mode is programmatic: the embedder owns the command sink and
// feeds replies back itself (the simulator does this).
struct ControllerConfig {
    ControllerMode mode = ControllerMode::Instant;
    std::string command_path;
    std::string reply_path;

    friend bool operator==(const ControllerConfig&, const ControllerConfig&) = default;
};

struct OutputConfig {
    std::string event_log;   // NDJSON event records
    std::string timeline;    // NDJSON origin-change timeline
    std::string geojson;     // optional GeoJSON export
    std::string geo_table;   // optional vantage-point coordinates

    friend bool operator==(const OutputConfig&, const OutputConfig&) = default;
};

struct EngineConfig {
    std::vector<OwnedPrefix> owned;
    std::vector<MonitorSource> sources;
    MitigationPolicy mitigation;
    double hold_time = 60.0;       // seconds fraction must stay 1 before resolution
    int quorum = 1;                // observations required to raise an alert
    double reorder_window = 10.0;  // live-mode reordering window, seconds
    ControllerConfig controller;
    OutputConfig outputs;
};

bool operator==(const EngineConfig& a, const EngineConfig& b);

// Parses the line-oriented config format ('#' starts a comment). Validates
// everything at load: canonical, pairwise non-overlapping owned prefixes,
// unique source ids, positive durations. Throws ConfigInvalid with the
// offending line number.
EngineConfig load_config(std::string_view text);
EngineConfig load_config_file(const std::string& path);

// Canonical form; load(render(cfg)) == cfg for every valid config.
std::string render_config(const EngineConfig& config);

}  // namespace pguard
