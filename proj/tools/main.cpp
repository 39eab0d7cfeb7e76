// pguard command line: run the live pipeline, replay traces, drive the
// simulator, and summarize event logs.
#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "pguard/engine.hpp"
#include "pguard/sim.hpp"

using namespace pguard;
using nlohmann::json;

namespace {

volatile std::sig_atomic_t g_stop = 0;
void handle_signal(int) { g_stop = 1; }

double wall_now() {
    return std::chrono::duration<double>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
}

void write_text_file(const std::string& path, const std::string& text) {
    if (path.empty()) return;
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot write " + path);
    out << text;
}

GeoTable load_geo(const std::string& path) {
    if (path.empty()) return {};
    std::ifstream in(path);
    if (!in) throw ConfigInvalid("cannot open geo table " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_geo_table(buf.str());
}

void write_outputs(const OutputConfig& outputs, const std::string& event_log,
                   std::span<const TimelineRecord> timeline, const GeoTable& geo) {
    write_text_file(outputs.event_log, event_log);
    write_text_file(outputs.timeline, render_timeline(timeline));
    if (!outputs.geojson.empty())
        write_text_file(outputs.geojson, render_geojson(timeline, geo));
}

OutputConfig merge_outputs(OutputConfig base, const std::string& event_log,
                           const std::string& timeline, const std::string& geojson) {
    if (!event_log.empty()) base.event_log = event_log;
    if (!timeline.empty()) base.timeline = timeline;
    if (!geojson.empty()) base.geojson = geojson;
    return base;
}

// -- replay -------------------------------------------------------------------

int cmd_replay(const std::string& config_path, const std::string& trace_path, bool paced,
               const std::string& event_log, const std::string& timeline,
               const std::string& geojson) {
    EngineConfig cfg = load_config_file(config_path);
    std::function<void(double)> pacer;
    if (paced)
        pacer = [](double dt) {
            if (dt > 0) std::this_thread::sleep_for(std::chrono::duration<double>(dt));
        };
    ReplaySummary summary = replay_trace_file(cfg, trace_path, pacer);

    OutputConfig outputs = merge_outputs(cfg.outputs, event_log, timeline, geojson);
    write_outputs(outputs, summary.event_log, summary.timeline, load_geo(outputs.geo_table));

    std::printf("messages      %zu (%zu empty skipped)\n", summary.messages,
                summary.skipped_empty);
    std::printf("observations  %zu\n", summary.observations);
    std::printf("alerts        %zu\n", summary.alerts);
    for (const HijackAlert& alert : summary.alert_snapshots)
        std::printf("  %-4s %-18s origin %-10u %-16s %-10s detected_at %.3f\n",
                    alert.id.c_str(), alert.owned.prefix.str().c_str(),
                    alert.offending_origin, to_string(alert.kind).c_str(),
                    to_string(alert.state).c_str(), alert.detected_at);
    for (const MitigationPlan& plan : summary.plan_snapshots) {
        std::printf("  plan %-4s %-12s parent %-18s origin %u announcing",
                    plan.alert_id.c_str(), to_string(plan.status).c_str(),
                    plan.parent.str().c_str(), plan.origin);
        for (const IpPrefix& p : plan.announcements) std::printf(" %s", p.str().c_str());
        std::printf("\n");
        if (!std::isnan(plan.acknowledged_at))
            std::printf("  plan %-4s announce latency %.3fs\n", plan.alert_id.c_str(),
                        announce_latency(plan));
    }
    return summary.exit_code();
}

// -- simulate -----------------------------------------------------------------

int cmd_simulate(const std::string& scenario_path, std::uint64_t seed,
                 const std::string& event_log, const std::string& timeline,
                 const std::string& geojson) {
    Scenario scenario = load_scenario_file(scenario_path, seed);
    ScenarioResult r = run_scenario(scenario);

    std::printf("setup converged at  %.3f s (simulation clock)\n", r.setup_converged_at);
    std::printf("hijack started at   %.3f s\n", r.hijack_started_at);
    if (r.alert_raised) {
        std::printf("t_detect            %.3f s\n", r.t_detect);
    } else {
        std::printf("t_detect            - (no alert raised)\n");
    }
    if (r.unmitigable) {
        std::printf("mitigation          unmitigable by de-aggregation\n");
    } else if (!std::isnan(r.t_command)) {
        std::printf("t_command           %.3f s\n", r.t_command);
        if (!std::isnan(r.t_complete)) {
            std::printf("t_complete          %.3f s\n", r.t_complete);
            std::printf("total               %.3f s\n", r.total);
        } else {
            std::printf("t_complete          - (never fully switched)\n");
        }
    }
    std::printf("legitimate fraction %.3f over monitored vantage points\n", r.legit_fraction);
    std::printf("events processed    %llu\n",
                static_cast<unsigned long long>(r.events_processed));

    OutputConfig outputs;
    EngineConfig engine_cfg = scenario.engine_config();
    outputs = merge_outputs(engine_cfg.outputs, event_log, timeline, geojson);
    GeoTable geo = scenario.geo;
    if (geo.empty()) geo = load_geo(outputs.geo_table);
    write_outputs(outputs, r.event_log, r.timeline, geo);
    return 0;
}

// -- report -------------------------------------------------------------------

int cmd_report(const std::string& log_path, const std::string& timeline_path,
               const std::string& geojson_path, const std::string& geo_path) {
    std::ifstream in(log_path);
    if (!in) throw LogMalformed("cannot open event log " + log_path);

    if (!timeline_path.empty() || !geojson_path.empty()) {
        std::stringstream buf;
        buf << in.rdbuf();
        auto records = timeline_from_event_log(buf.str());
        write_text_file(timeline_path, render_timeline(records));
        if (!geojson_path.empty())
            write_text_file(geojson_path, render_geojson(records, load_geo(geo_path)));
        in.clear();
        in.seekg(0);
    }

    struct Row {
        std::string prefix, kind, state = "NEW", status;
        Asn origin = 0;
        double detected = std::nan(""), commanded = std::nan(""), acked = std::nan(""),
               completed = std::nan("");
    };
    std::map<std::string, Row> rows;
    std::vector<std::string> order;

    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json rec = json::parse(line, nullptr, false);
        if (rec.is_discarded() || !rec.is_object())
            throw LogMalformed("event log line " + std::to_string(lineno) + ": not JSON");
        std::string event = rec.value("event", "");
        std::string id = rec.value("alert_id", "");
        if (id.empty()) continue;
        if (!rows.count(id) && event == "alert_raised") order.push_back(id);
        Row& row = rows[id];
        if (event == "alert_raised") {
            row.prefix = rec.value("prefix", "");
            row.kind = rec.value("kind", "");
            row.origin = rec.value("offending_origin", 0u);
            row.detected = rec.value("detected_at", std::nan(""));
            row.state = rec.value("state", "NEW");
        } else if (event == "alert_state") {
            row.state = rec.value("state", row.state);
        } else if (event == "plan_status") {
            row.status = rec.value("status", "");
            if (rec.contains("commanded_at")) row.commanded = rec["commanded_at"].get<double>();
            if (rec.contains("acknowledged_at"))
                row.acked = rec["acknowledged_at"].get<double>();
            if (rec.contains("completed_at")) row.completed = rec["completed_at"].get<double>();
        }
    }

    if (order.empty()) {
        std::printf("no alerts in %s\n", log_path.c_str());
        return 0;
    }

    std::printf("%-6s %-18s %-10s %-17s %-10s %-12s %-10s %-10s %-10s\n", "alert", "prefix",
                "origin", "kind", "state", "detected", "t_command", "t_ack", "t_complete");
    std::vector<double> to_command, to_ack, to_complete;
    auto cell = [](double v) {
        char buf[32];
        if (std::isnan(v))
            std::snprintf(buf, sizeof(buf), "-");
        else
            std::snprintf(buf, sizeof(buf), "%.3f", v);
        return std::string(buf);
    };
    for (const std::string& id : order) {
        const Row& row = rows[id];
        double t_command = row.commanded - row.detected;
        double t_ack = row.acked - row.commanded;
        double t_complete = row.completed - row.commanded;
        if (!std::isnan(t_command)) to_command.push_back(t_command);
        if (!std::isnan(t_ack)) to_ack.push_back(t_ack);
        if (!std::isnan(t_complete)) to_complete.push_back(t_complete);
        std::printf("%-6s %-18s %-10u %-17s %-10s %-12s %-10s %-10s %-10s\n", id.c_str(),
                    row.prefix.c_str(), row.origin, row.kind.c_str(), row.state.c_str(),
                    cell(row.detected).c_str(), cell(t_command).c_str(), cell(t_ack).c_str(),
                    cell(t_complete).c_str());
    }
    auto stats = [&](const char* name, std::vector<double>& values) {
        if (values.empty()) return;
        std::printf("%-12s p50 %.3f  p90 %.3f  max %.3f  (n=%zu)\n", name,
                    percentile(values, 0.5), percentile(values, 0.9),
                    *std::max_element(values.begin(), values.end()), values.size());
    };
    stats("t_command", to_command);
    stats("t_ack", to_ack);
    stats("t_complete", to_complete);
    return 0;
}

// -- run ----------------------------------------------------------------------

struct LiveStream {
    MonitorSource cfg;
    int fd = -1;
    bool fifo = false;
    bool done = false;
    std::string partial;
    double retry_at = 0.0;
    int attempts = 0;
};

struct LivePoll {
    MonitorSource cfg;
    RouteSnapshot last;
    double next_poll = 0.0;
    bool warned = false;
};

bool open_stream(LiveStream& src, double now) {
    if (src.cfg.endpoint == "-") {
        src.fd = STDIN_FILENO;
        ::fcntl(src.fd, F_SETFL, ::fcntl(src.fd, F_GETFL) | O_NONBLOCK);
        return true;
    }
    struct stat st {};
    bool fifo = ::stat(src.cfg.endpoint.c_str(), &st) == 0 && S_ISFIFO(st.st_mode);
    // FIFOs are held open read+write so EOF never fires while we wait for a
    // writer; regular files are drained once to EOF.
    int flags = fifo ? (O_RDWR | O_NONBLOCK) : (O_RDONLY | O_NONBLOCK);
    int fd = ::open(src.cfg.endpoint.c_str(), flags);
    if (fd < 0) {
        double backoff = std::min(60.0, 2.0 * std::pow(2.0, src.attempts));
        ++src.attempts;
        src.retry_at = now + backoff;
        std::fprintf(stderr, "source %s unreachable (%s), retrying in %.0fs\n",
                     src.cfg.id.c_str(), src.cfg.endpoint.c_str(), backoff);
        return false;
    }
    src.fd = fd;
    src.fifo = fifo;
    src.attempts = 0;
    return true;
}

int cmd_run(const std::string& config_path) {
    EngineConfig cfg = load_config_file(config_path);

    // offline fast path: only trace sources, behave exactly like replay
    bool all_traces = !cfg.sources.empty();
    for (const auto& src : cfg.sources) all_traces &= src.kind == SourceKind::trace;
    if (all_traces) {
        std::vector<ObservationStream> streams;
        for (const auto& src : cfg.sources) {
            std::ifstream in(src.endpoint);
            if (!in) throw ConfigInvalid("cannot open trace endpoint " + src.endpoint);
            std::stringstream buf;
            buf << in.rdbuf();
            std::istringstream lines(buf.str());
            std::string line;
            int lineno = 0;
            ObservationStream stream;
            while (std::getline(lines, line)) {
                ++lineno;
                if (line.empty()) continue;
                try {
                    for (auto& obs : parse_stream_message(line, src.id, 0.0)) {
                        obs.received_at = obs.timestamp;
                        stream.push_back(std::move(obs));
                    }
                } catch (const EmptyUpdate&) {
                } catch (const SchemaViolation& e) {
                    throw TraceMalformed(src.endpoint + " line " + std::to_string(lineno) +
                                         ": " + e.what());
                }
            }
            streams.push_back(std::move(stream));
        }
        ObservationStream merged = merge(streams);
        Engine engine(cfg);
        for (const auto& obs : merged) engine.on_observation(obs);
        if (!merged.empty()) engine.on_tick(merged.back().received_at);
        write_outputs(cfg.outputs, engine.event_log_text(), engine.timeline(),
                      load_geo(cfg.outputs.geo_table));
        std::printf("sources drained; %zu observation(s), %zu alert(s)\n",
                    engine.metrics().observations, engine.alerts_raised());
        return engine.alerts_raised() ? 2 : 0;
    }

    std::signal(SIGINT, handle_signal);
    std::signal(SIGTERM, handle_signal);

    std::ofstream command_out;
    int reply_fd = -1;
    std::string reply_partial;
    Engine::CommandSink sink;
    if (cfg.controller.mode == ControllerMode::Pipe) {
        command_out.open(cfg.controller.command_path, std::ios::app);
        if (!command_out)
            throw ConfigInvalid("cannot open controller command path " +
                                cfg.controller.command_path);
        sink = [&](const std::string& line) {
            command_out << line << '\n';
            command_out.flush();
        };
        reply_fd = ::open(cfg.controller.reply_path.c_str(), O_RDWR | O_NONBLOCK);
        if (reply_fd < 0)
            throw ConfigInvalid("cannot open controller reply path " +
                                cfg.controller.reply_path);
    }
    Engine engine(cfg, sink);

    std::vector<LiveStream> streams;
    std::vector<LivePoll> polls;
    MergeBuffer buffer(cfg.reorder_window);
    double start = wall_now();

    for (const auto& src : cfg.sources) {
        if (src.kind == SourceKind::stream) {
            LiveStream s;
            s.cfg = src;
            if (!open_stream(s, start)) s.fd = -1;
            streams.push_back(std::move(s));
        } else if (src.kind == SourceKind::poll) {
            polls.push_back({src, {}, start, false});
        } else {
            // trace sources feed the pipeline once, on their own clock
            std::ifstream in(src.endpoint);
            if (!in) {
                std::fprintf(stderr, "trace source %s unreadable, skipped\n", src.id.c_str());
                continue;
            }
            std::stringstream buf;
            buf << in.rdbuf();
            std::istringstream lines(buf.str());
            std::string line;
            while (std::getline(lines, line)) {
                if (line.empty()) continue;
                try {
                    for (auto& obs : parse_stream_message(line, src.id, 0.0)) {
                        obs.received_at = obs.timestamp;
                        buffer.push(std::move(obs));
                    }
                } catch (const Error&) {
                    ++engine.metrics().schema_violations;
                }
            }
        }
    }

    std::size_t events_written = 0;
    std::ofstream event_out;
    if (!cfg.outputs.event_log.empty()) {
        event_out.open(cfg.outputs.event_log, std::ios::trunc);
        if (!event_out) throw ConfigInvalid("cannot write " + cfg.outputs.event_log);
    }

    auto pump_events = [&] {
        if (!event_out) return;
        const auto& lines = engine.event_lines();
        for (; events_written < lines.size(); ++events_written)
            event_out << lines[events_written] << '\n';
        event_out.flush();
    };

    while (!g_stop) {
        double now = wall_now();
        bool any_open = false;

        for (LiveStream& src : streams) {
            if (src.done) continue;
            if (src.fd < 0) {
                if (now >= src.retry_at) open_stream(src, now);
                if (src.fd < 0) {
                    any_open = true;  // still retrying
                    continue;
                }
            }
            any_open = any_open || src.fifo || !src.done;
            char chunk[65536];
            while (true) {
                ssize_t n = ::read(src.fd, chunk, sizeof(chunk));
                if (n > 0) {
                    src.partial.append(chunk, static_cast<std::size_t>(n));
                    std::size_t pos;
                    while ((pos = src.partial.find('\n')) != std::string::npos) {
                        std::string line = src.partial.substr(0, pos);
                        src.partial.erase(0, pos + 1);
                        if (line.empty()) continue;
                        try {
                            for (auto& obs : parse_stream_message(line, src.cfg.id, now))
                                buffer.push(std::move(obs));
                        } catch (const EmptyUpdate&) {
                            ++engine.metrics().empty_updates;
                        } catch (const SchemaViolation& e) {
                            ++engine.metrics().schema_violations;
                            std::fprintf(stderr, "source %s: %s\n", src.cfg.id.c_str(),
                                         e.what());
                        }
                    }
                    continue;
                }
                if (n == 0 && !src.fifo) {
                    src.done = true;  // regular file fully drained
                    if (src.fd != STDIN_FILENO) ::close(src.fd);
                }
                break;  // EAGAIN or EOF
            }
        }

        for (LivePoll& poll : polls) {
            any_open = true;  // poll sources never finish
            if (now < poll.next_poll) continue;
            poll.next_poll = now + poll.cfg.poll_interval;
            std::ifstream in(poll.cfg.endpoint);
            if (!in) {
                if (!poll.warned)
                    std::fprintf(stderr, "poll source %s unreachable (%s)\n",
                                 poll.cfg.id.c_str(), poll.cfg.endpoint.c_str());
                poll.warned = true;
                continue;
            }
            poll.warned = false;
            std::stringstream buf;
            buf << in.rdbuf();
            try {
                RouteSnapshot snapshot = parse_snapshot(buf.str());
                for (auto& obs : diff_snapshots(poll.last, snapshot, poll.cfg, now))
                    buffer.push(std::move(obs));
                poll.last = std::move(snapshot);
            } catch (const SchemaViolation& e) {
                ++engine.metrics().schema_violations;
                std::fprintf(stderr, "poll source %s: %s\n", poll.cfg.id.c_str(), e.what());
            }
        }

        if (reply_fd >= 0) {
            char chunk[16384];
            ssize_t n;
            while ((n = ::read(reply_fd, chunk, sizeof(chunk))) > 0) {
                reply_partial.append(chunk, static_cast<std::size_t>(n));
                std::size_t pos;
                while ((pos = reply_partial.find('\n')) != std::string::npos) {
                    std::string line = reply_partial.substr(0, pos);
                    reply_partial.erase(0, pos + 1);
                    if (!line.empty()) engine.on_controller_reply(line, now);
                }
            }
        }

        for (const auto& obs : buffer.drain(now)) engine.on_observation(obs);
        engine.on_tick(now);
        pump_events();

        if (!any_open) break;
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
    }

    double now = wall_now();
    for (const auto& obs : buffer.flush()) engine.on_observation(obs);
    engine.on_tick(now);
    pump_events();

    write_text_file(cfg.outputs.timeline, render_timeline(engine.timeline()));
    if (!cfg.outputs.geojson.empty())
        write_text_file(cfg.outputs.geojson,
                        render_geojson(engine.timeline(), load_geo(cfg.outputs.geo_table)));

    std::printf("%s; %zu observation(s), %zu alert(s)\n",
                g_stop ? "interrupted" : "sources drained", engine.metrics().observations,
                engine.alerts_raised());
    return engine.alerts_raised() ? 2 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"BGP prefix hijack detection and automatic de-aggregation mitigation"};
    app.require_subcommand(1);

    std::string config_path, trace_path, scenario_path, log_path;
    std::string event_log, timeline, geojson;
    bool paced = false, instant = false;
    std::uint64_t seed = 1;

    auto* run = app.add_subcommand("run", "run the live detection/mitigation pipeline");
    run->add_option("config", config_path, "engine config file")->required();

    auto* replay = app.add_subcommand("replay", "replay a recorded trace through the pipeline");
    replay->add_option("config", config_path, "engine config file")->required();
    replay->add_option("trace", trace_path, "newline-delimited message trace")->required();
    auto* paced_flag = replay->add_flag("--paced", paced, "sleep between messages");
    replay->add_flag("--instant", instant, "no pacing (default)")->excludes(paced_flag);
    replay->add_option("--event-log", event_log, "write the event log here");
    replay->add_option("--timeline", timeline, "write the origin-change timeline here");
    replay->add_option("--geojson", geojson, "write a GeoJSON feature collection here");

    auto* simulate = app.add_subcommand("simulate", "run a hijack scenario in the simulator");
    simulate->add_option("scenario", scenario_path, "scenario file")->required();
    simulate->add_option("--seed", seed, "seed for generated topologies");
    simulate->add_option("--event-log", event_log, "write the event log here");
    simulate->add_option("--timeline", timeline, "write the origin-change timeline here");
    simulate->add_option("--geojson", geojson, "write a GeoJSON feature collection here");

    std::string report_geo;
    auto* report = app.add_subcommand("report", "summarize an event log");
    report->add_option("event_log", log_path, "event log produced by run/replay/simulate")
        ->required();
    report->add_option("--timeline", timeline, "also extract the origin-change timeline");
    report->add_option("--geojson", geojson, "also export the timeline as GeoJSON");
    report->add_option("--geo-table", report_geo, "vantage point coordinates for --geojson");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(config_path);
        if (replay->parsed())
            return cmd_replay(config_path, trace_path, paced, event_log, timeline, geojson);
        if (simulate->parsed())
            return cmd_simulate(scenario_path, seed, event_log, timeline, geojson);
        if (report->parsed()) return cmd_report(log_path, timeline, geojson, report_geo);
    } catch (const ConfigInvalid& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 1;
    } catch (const TraceMalformed& e) {
        std::fprintf(stderr, "trace error: %s\n", e.what());
        return 1;
    } catch (const LogMalformed& e) {
        std::fprintf(stderr, "log error: %s\n", e.what());
        return 1;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 1;
}
