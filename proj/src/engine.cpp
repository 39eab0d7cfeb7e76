#include "pguard/engine.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace pguard {

using nlohmann::json;

Engine::Engine(EngineConfig config, CommandSink send_command)
    : config_(std::move(config)),
      send_command_(std::move(send_command)),
      detector_(config_.owned, config_.quorum),
      monitor_(config_.hold_time) {}

std::vector<MitigationPlan> Engine::plans() const {
    std::vector<MitigationPlan> out;
    out.reserve(plans_.size());
    for (const auto& rt : plans_) out.push_back(rt.plan);
    return out;
}

const MitigationPlan* Engine::plan_for(const std::string& alert_id) const {
    auto it = plan_index_.find(alert_id);
    if (it == plan_index_.end()) return nullptr;
    return &plans_[it->second].plan;
}

std::string Engine::event_log_text() const {
    std::string out;
    for (const auto& line : events_) {
        out += line;
        out += '\n';
    }
    return out;
}

void Engine::log_alert_event(const char* event, const HijackAlert& alert) {
    json rec;
    rec["event"] = event;
    rec["alert_id"] = alert.id;
    rec["prefix"] = alert.owned.prefix.str();
    rec["observed_prefix"] = alert.observed_prefix.str();
    rec["offending_origin"] = alert.offending_origin;
    rec["kind"] = to_string(alert.kind);
    rec["state"] = to_string(alert.state);
    rec["first_seen"] = alert.first_seen;
    rec["detected_at"] = alert.detected_at;
    events_.push_back(rec.dump());
}

void Engine::log_plan_status(const PlanRuntime& rt) {
    json rec;
    rec["event"] = "plan_status";
    rec["alert_id"] = rt.plan.alert_id;
    rec["parent"] = rt.plan.parent.str();
    json announcements = json::array();
    for (const auto& p : rt.plan.announcements) announcements.push_back(p.str());
    rec["announcements"] = std::move(announcements);
    rec["origin"] = rt.plan.origin;
    rec["status"] = to_string(rt.plan.status);
    if (!std::isnan(rt.plan.commanded_at)) rec["commanded_at"] = rt.plan.commanded_at;
    if (!std::isnan(rt.plan.acknowledged_at)) rec["acknowledged_at"] = rt.plan.acknowledged_at;
    if (!std::isnan(rt.plan.completed_at)) rec["completed_at"] = rt.plan.completed_at;
    events_.push_back(rec.dump());
}

void Engine::on_observation(const RouteObservation& observation) {
    double now = observation.received_at;
    advance_to(now);

    if (!seen_.insert(event_key(observation)).second) {
        ++metrics_.duplicates;
        return;
    }
    ++metrics_.observations;

    monitor_.apply(observation);
    update_timeline(observation, now);

    if (observation.kind == UpdateKind::announcement) {
        auto events = detector_.ingest(observation);
        for (const AlertEvent& ev : events) {
            if (ev.type != AlertEvent::Type::Raised) continue;
            ++alerts_raised_;
            log_alert_event("alert_raised", ev.alert);
            if (ev.alert.owned.mitigation_enabled) start_mitigation(ev.alert, now);
        }
    }

    check_convergence(now);
}

void Engine::update_timeline(const RouteObservation& observation, double now) {
    for (const OwnedPrefix& owned : config_.owned) {
        if (!owned.prefix.contains(observation.prefix)) continue;
        std::string key = ViewStore::vp_key(observation);
        const auto& views = monitor_.store().views();
        auto vit = views.find(key);
        if (vit == views.end()) continue;
        SpaceOrigin so = effective_origin(vit->second, owned.prefix);
        bool legit = so.origin && owned.is_legitimate(*so.origin);
        auto verdict = std::make_pair(so.origin, legit);
        auto& last = last_verdict_[{key, owned.prefix}];
        if (last == verdict) continue;
        last = verdict;

        TimelineRecord record{now, key, so.origin, legit};
        timeline_.push_back(record);
        json rec;
        rec["event"] = "origin_change";
        rec["t"] = now;
        rec["vantage_point"] = key;
        if (so.origin)
            rec["effective_origin"] = *so.origin;
        else
            rec["effective_origin"] = nullptr;
        rec["legitimate"] = legit;
        events_.push_back(rec.dump());
    }
}

void Engine::start_mitigation(const HijackAlert& alert, double now) {
    if (plan_index_.count(alert.id)) return;  // one plan per alert

    PlanRuntime rt;
    try {
        rt.plan = plan_mitigation(alert, alert.owned, config_.mitigation.max_length);
    } catch (const UnmitigableByDeaggregation& e) {
        json rec;
        rec["event"] = "unmitigable";
        rec["alert_id"] = alert.id;
        rec["prefix"] = (alert.kind == HijackKind::ExactOrigin ? alert.owned.prefix
                                                               : alert.observed_prefix)
                            .str();
        rec["reason"] = e.what();
        events_.push_back(rec.dump());
        return;  // alert stays NEW
    }
    log_plan_status(rt);

    rt.command_lines = render_commands(rt.plan, now);
    log_plan_status(rt);

    plans_.push_back(std::move(rt));
    plan_index_[alert.id] = plans_.size() - 1;
    PlanRuntime& stored = plans_.back();

    if (auto ev = detector_.mark_mitigating(alert.id))
        log_alert_event("alert_state", ev->alert);

    send_plan_commands(stored);
    stored.deadline = now + config_.mitigation.ack_deadline;

    if (config_.controller.mode == ControllerMode::Instant) {
        auto lines = stored.command_lines;  // reply handling mutates the runtime
        for (const auto& line : lines) on_controller_reply("ok " + line, now);
    }
}

void Engine::send_plan_commands(PlanRuntime& rt) {
    rt.pending_acks = {rt.command_lines.begin(), rt.command_lines.end()};
    if (send_command_)
        for (const auto& line : rt.command_lines) send_command_(line);
}

void Engine::on_controller_reply(const std::string& line, double now) {
    advance_to(now);
    ControllerReply reply;
    try {
        reply = parse_reply(line);
    } catch (const MalformedCommand& e) {
        json rec;
        rec["event"] = "controller_error";
        rec["t"] = now;
        rec["text"] = e.what();
        events_.push_back(rec.dump());
        return;
    }

    for (auto& rt : plans_) {
        if (!rt.pending_acks.count(reply.text)) continue;
        if (reply.ok) {
            rt.pending_acks.erase(reply.text);
            if (rt.pending_acks.empty() && rt.plan.status == PlanStatus::Commanded) {
                acknowledge(rt.plan, now);
                rt.deadline.reset();
                rt.resend_at.reset();
                log_plan_status(rt);
                check_convergence(now);
            }
        } else {
            rt.plan.status = PlanStatus::Failed;
            rt.deadline.reset();
            rt.resend_at.reset();
            log_plan_status(rt);
        }
        return;
    }

    if (!reply.ok) {
        json rec;
        rec["event"] = "controller_error";
        rec["t"] = now;
        rec["text"] = reply.text;
        events_.push_back(rec.dump());
    }
}

void Engine::complete_plan(PlanRuntime& rt, double completed_at, double now) {
    if (rt.plan.status != PlanStatus::Acknowledged) return;
    rt.plan.status = PlanStatus::Complete;
    rt.plan.completed_at = completed_at;
    log_plan_status(rt);
    if (config_.mitigation.linger >= 0) rt.withdraw_at = now + config_.mitigation.linger;
}

void Engine::check_convergence(double now) {
    for (const HijackAlert& alert : detector_.alerts()) {
        if (alert.state == AlertState::Resolved) continue;

        const MitigationPlan* plan = plan_for(alert.id);
        IpPrefix space;
        if (plan && (plan->status == PlanStatus::Acknowledged ||
                     plan->status == PlanStatus::Complete))
            space = plan->parent;
        else if (!alert.owned.mitigation_enabled)
            space = alert.owned.prefix;
        else
            continue;  // not commanded yet, unmitigable, or failed

        ConvergenceReport rep;
        try {
            rep = monitor_.report(alert.id, space, alert.owned.legitimate_origins, now);
        } catch (const NoVantagePoints&) {
            monitor_.forget(alert.id);
            continue;
        }
        if (!rep.complete) continue;

        if (auto it = plan_index_.find(alert.id); it != plan_index_.end())
            complete_plan(plans_[it->second], *rep.completed_at, now);
        if (auto ev = detector_.resolve(alert.id)) log_alert_event("alert_state", ev->alert);
        monitor_.forget(alert.id);
    }
}

void Engine::on_tick(double now) { advance_to(now); }

std::optional<double> Engine::next_timer() const {
    std::optional<double> earliest;
    auto consider = [&](std::optional<double> t) {
        if (t && (!earliest || *t < *earliest)) earliest = t;
    };
    for (const auto& rt : plans_) {
        if (rt.plan.status == PlanStatus::Commanded) {
            consider(rt.deadline);
            consider(rt.resend_at);
        }
        if (!rt.withdrawn) consider(rt.withdraw_at);
    }
    consider(monitor_.earliest_hold_expiry());
    return earliest;
}

void Engine::advance_to(double now) {
    while (true) {
        auto t = next_timer();
        if (!t || *t > now) break;
        double when = *t;

        for (auto& rt : plans_) {
            if (rt.plan.status == PlanStatus::Commanded && rt.deadline &&
                *rt.deadline <= when) {
                if (rt.pending_acks.empty()) {
                    rt.deadline.reset();
                } else if (rt.attempts < config_.mitigation.ack_retries) {
                    double backoff =
                        config_.mitigation.retry_backoff_base * std::pow(2.0, rt.attempts);
                    rt.resend_at = *rt.deadline + backoff;
                    rt.deadline.reset();
                } else {
                    rt.plan.status = PlanStatus::Failed;  // ack timeout, retries exhausted
                    rt.deadline.reset();
                    rt.resend_at.reset();
                    log_plan_status(rt);
                }
            }
            if (rt.plan.status == PlanStatus::Commanded && rt.resend_at &&
                *rt.resend_at <= when) {
                ++rt.attempts;
                rt.resend_at.reset();
                rt.deadline = when + config_.mitigation.ack_deadline;
                send_plan_commands(rt);
                if (config_.controller.mode == ControllerMode::Instant) {
                    auto lines = rt.command_lines;
                    for (const auto& line : lines) on_controller_reply("ok " + line, when);
                }
            }
            if (!rt.withdrawn && rt.withdraw_at && *rt.withdraw_at <= when) {
                rt.withdrawn = true;
                json rec;
                rec["event"] = "withdrawals_sent";
                rec["t"] = when;
                rec["alert_id"] = rt.plan.alert_id;
                json prefixes = json::array();
                for (const auto& p : rt.plan.announcements) {
                    std::string line =
                        render_command({ControllerCommand::Verb::Withdraw, p, 0});
                    if (send_command_) send_command_(line);
                    prefixes.push_back(p.str());
                }
                rec["prefixes"] = std::move(prefixes);
                events_.push_back(rec.dump());
            }
        }

        check_convergence(when);
    }
    clock_ = std::max(clock_, now);
}

ReplaySummary replay_trace(const EngineConfig& config, std::string_view trace_text,
                           const std::function<void(double)>& pacer) {
    ReplaySummary summary;

    std::string source_id = "trace";
    for (const auto& src : config.sources)
        if (src.kind == SourceKind::trace) {
            source_id = src.id;
            break;
        }

    std::vector<ObservationStream> streams(1);
    std::istringstream in{std::string(trace_text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        ++summary.messages;
        try {
            auto observations = parse_stream_message(line, source_id, 0.0);
            for (auto& obs : observations) {
                obs.received_at = obs.timestamp;  // the trace clock is the replay clock
                streams[0].push_back(std::move(obs));
            }
        } catch (const EmptyUpdate&) {
            ++summary.skipped_empty;
        } catch (const SchemaViolation& e) {
            throw TraceMalformed("trace line " + std::to_string(lineno) + ": " + e.what());
        }
    }

    ObservationStream merged = merge(streams);
    summary.observations = merged.size();

    EngineConfig engine_config = config;
    if (engine_config.controller.mode == ControllerMode::Pipe)
        engine_config.controller.mode = ControllerMode::Instant;  // replay is offline
    Engine engine(std::move(engine_config));

    double previous = merged.empty() ? 0.0 : merged.front().received_at;
    for (const auto& obs : merged) {
        if (pacer) pacer(std::max(0.0, obs.received_at - previous));
        previous = obs.received_at;
        engine.on_observation(obs);
    }
    if (!merged.empty()) engine.on_tick(merged.back().received_at);

    summary.alerts = engine.alerts_raised();
    summary.alert_snapshots = engine.detector().alerts();
    summary.plan_snapshots = engine.plans();
    summary.event_log = engine.event_log_text();
    summary.timeline = engine.timeline();
    return summary;
}

ReplaySummary replay_trace_file(const EngineConfig& config, const std::string& path,
                                const std::function<void(double)>& pacer) {
    std::ifstream in(path);
    if (!in) throw TraceMalformed("cannot open trace file " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return replay_trace(config, buf.str(), pacer);
}

double percentile(std::vector<double> values, double q) {
    if (values.empty()) return std::nan("");
    std::sort(values.begin(), values.end());
    auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(values.size())));
    if (rank == 0) rank = 1;
    return values[std::min(rank, values.size()) - 1];
}

}  // namespace pguard
