#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pguard/config.hpp"
#include "pguard/detection.hpp"
#include "pguard/feed.hpp"
#include "pguard/mitigation.hpp"
#include "pguard/monitor.hpp"

namespace pguard {

// Orchestrates the pipeline behind one merged observation stream:
// detection raises alerts, mitigation plans and commands de-aggregation,
// monitoring tracks per-vantage-point convergence until resolution.
//
// The engine is clock-agnostic: every entry point takes (or derives) the
// current time, so live mode passes the wall clock while replay and
// simulation pass their own clocks. All outputs are deterministic given the
// same inputs.
class Engine {
public:
    using CommandSink = std::function<void(const std::string& line)>;

    explicit Engine(EngineConfig config, CommandSink send_command = {});

    // Feeds one merged-stream observation; `now` is its arrival time.
    void on_observation(const RouteObservation& observation);

    // Controller replies ("ok <echo>" / "error <reason>").
    void on_controller_reply(const std::string& line, double now);

    // Fires due timers: ack deadlines and resends, convergence holds,
    // post-resolution withdrawals.
    void on_tick(double now);

    // Earliest pending timer, if any. Schedulers (simulator, replay loop)
    // call on_tick at exactly this time.
    std::optional<double> next_timer() const;

    // Runs every timer due at or before `now`, in order, then remembers
    // `now` as the engine clock.
    void advance_to(double now);

    const EngineConfig& config() const { return config_; }
    const Detector& detector() const { return detector_; }
    const ProgressMonitor& progress() const { return monitor_; }
    std::vector<MitigationPlan> plans() const;
    const MitigationPlan* plan_for(const std::string& alert_id) const;
    const std::vector<std::string>& event_lines() const { return events_; }
    const std::vector<TimelineRecord>& timeline() const { return timeline_; }
    FeedMetrics& metrics() { return metrics_; }
    const FeedMetrics& metrics() const { return metrics_; }

    std::string event_log_text() const;
    std::size_t alerts_raised() const { return alerts_raised_; }

private:
    struct PlanRuntime {
        MitigationPlan plan;
        std::vector<std::string> command_lines;
        std::set<std::string> pending_acks;
        int attempts = 0;                 // resends used
        std::optional<double> deadline;   // ack deadline while commanded
        std::optional<double> resend_at;  // scheduled retry
        std::optional<double> withdraw_at;
        bool withdrawn = false;
    };

    void log_alert_event(const char* event, const HijackAlert& alert);
    void log_plan_status(const PlanRuntime& rt);
    void start_mitigation(const HijackAlert& alert, double now);
    void send_plan_commands(PlanRuntime& rt);
    void update_timeline(const RouteObservation& observation, double now);
    void check_convergence(double now);
    void complete_plan(PlanRuntime& rt, double completed_at, double now);

    EngineConfig config_;
    CommandSink send_command_;
    Detector detector_;
    ProgressMonitor monitor_;
    std::vector<PlanRuntime> plans_;
    std::map<std::string, std::size_t> plan_index_;  // alert id -> index
    std::set<EventKey> seen_;
    std::vector<std::string> events_;
    std::vector<TimelineRecord> timeline_;
    // last exported verdict per (vantage point, owned space)
    std::map<std::pair<std::string, IpPrefix>, std::pair<std::optional<Asn>, bool>> last_verdict_;
    FeedMetrics metrics_;
    double clock_ = 0.0;
    std::size_t alerts_raised_ = 0;
};

// Result of running one trace through the pipeline.
struct ReplaySummary {
    std::size_t messages = 0;
    std::size_t skipped_empty = 0;
    std::size_t observations = 0;
    std::size_t alerts = 0;
    std::vector<HijackAlert> alert_snapshots;
    std::vector<MitigationPlan> plan_snapshots;
    std::string event_log;  // NDJSON
    std::vector<TimelineRecord> timeline;

    // 0 = clean, 2 = hijacks detected (scriptable contract).
    int exit_code() const { return alerts > 0 ? 2 : 0; }
};

// Replays a newline-delimited trace (live-stream schema) deterministically:
// arrival times come from the trace's own timestamps, messages are merged,
// deduplicated and fed in order. Throws TraceMalformed with the line number
// on broken lines; empty updates are skipped and counted. `pacer`, when set,
// is called with the arrival-time delta before each observation (paced
// replay sleeps there); it never changes the outcome.
ReplaySummary replay_trace(const EngineConfig& config, std::string_view trace_text,
                           const std::function<void(double)>& pacer = {});

ReplaySummary replay_trace_file(const EngineConfig& config, const std::string& path,
                                const std::function<void(double)>& pacer = {});

// Nearest-rank percentile over a latency sample; q in (0, 1]. NaN when empty.
double percentile(std::vector<double> values, double q);

}  // namespace pguard
