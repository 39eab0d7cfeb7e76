#include "pguard/detection.hpp"

#include <algorithm>

namespace pguard {

bool OwnedPrefix::is_legitimate(Asn origin) const {
    return std::find(legitimate_origins.begin(), legitimate_origins.end(), origin) !=
           legitimate_origins.end();
}

std::string to_string(RouteClass cls) {
    switch (cls) {
        case RouteClass::Legitimate: return "legitimate";
        case RouteClass::ExactOriginHijack: return "exact-origin-hijack";
        case RouteClass::SubprefixOriginHijack: return "subprefix-origin-hijack";
        case RouteClass::Unrelated: return "unrelated";
    }
    return "?";
}

std::string to_string(HijackKind kind) {
    return kind == HijackKind::ExactOrigin ? "exact-origin" : "subprefix-origin";
}

std::string to_string(AlertState state) {
    switch (state) {
        case AlertState::New: return "NEW";
        case AlertState::Mitigating: return "MITIGATING";
        case AlertState::Resolved: return "RESOLVED";
    }
    return "?";
}

Classification classify(const RouteObservation& observation,
                        std::span<const OwnedPrefix> config) {
    const OwnedPrefix* match = nullptr;
    for (const OwnedPrefix& owned : config) {
        if (!owned.prefix.contains(observation.prefix)) continue;
        if (!match || owned.prefix.length > match->prefix.length) match = &owned;
    }
    if (!match) return {RouteClass::Unrelated, nullptr};
    if (match->is_legitimate(observation.origin()))
        return {RouteClass::Legitimate, match};
    if (observation.prefix == match->prefix)
        return {RouteClass::ExactOriginHijack, match};
    return {RouteClass::SubprefixOriginHijack, match};
}

Detector::Detector(std::vector<OwnedPrefix> config, int quorum)
    : config_(std::move(config)), quorum_(quorum < 1 ? 1 : quorum) {}

std::vector<AlertEvent> Detector::ingest(const RouteObservation& observation) {
    std::vector<AlertEvent> events;
    if (observation.kind != UpdateKind::announcement) return events;

    Classification c = classify(observation, config_);
    if (c.cls != RouteClass::ExactOriginHijack && c.cls != RouteClass::SubprefixOriginHijack)
        return events;

    HijackKind kind = c.cls == RouteClass::ExactOriginHijack ? HijackKind::ExactOrigin
                                                             : HijackKind::SubprefixOrigin;
    Key key{c.owned->prefix, observation.origin(), kind};

    if (!evidence_seen_.insert(event_key(observation)).second) return events;

    auto it = active_.find(key);
    if (it == active_.end()) {
        HijackAlert alert;
        alert.id = "a" + std::to_string(next_id_++);
        alert.owned = *c.owned;
        alert.offending_origin = observation.origin();
        alert.observed_prefix = observation.prefix;
        alert.kind = kind;
        alert.state = AlertState::New;
        alert.first_seen = observation.timestamp;
        alert.evidence.push_back(observation);
        alerts_.push_back(std::move(alert));
        active_[key] = alerts_.size() - 1;
        if (quorum_ == 1) {
            alerts_.back().detected_at = observation.received_at;
            events.push_back({AlertEvent::Type::Raised, alerts_.back()});
        }
        return events;
    }

    HijackAlert& alert = alerts_[it->second];
    bool was_below_quorum = static_cast<int>(alert.evidence.size()) < quorum_;
    alert.evidence.push_back(observation);
    alert.first_seen = std::min(alert.first_seen, observation.timestamp);
    if (was_below_quorum && static_cast<int>(alert.evidence.size()) >= quorum_) {
        alert.detected_at = observation.received_at;
        events.push_back({AlertEvent::Type::Raised, alert});
    }
    return events;
}

std::optional<AlertEvent> Detector::mark_mitigating(const std::string& alert_id) {
    HijackAlert* alert = find_mutable(alert_id);
    if (!alert || alert->state != AlertState::New) return std::nullopt;
    alert->state = AlertState::Mitigating;
    return AlertEvent{AlertEvent::Type::StateChanged, *alert};
}

std::optional<AlertEvent> Detector::resolve(const std::string& alert_id) {
    HijackAlert* alert = find_mutable(alert_id);
    if (!alert || alert->state == AlertState::Resolved) return std::nullopt;
    alert->state = AlertState::Resolved;
    Key key{alert->owned.prefix, alert->offending_origin, alert->kind};
    active_.erase(key);
    return AlertEvent{AlertEvent::Type::StateChanged, *alert};
}

const HijackAlert* Detector::find(const std::string& alert_id) const {
    for (const auto& a : alerts_)
        if (a.id == alert_id) return &a;
    return nullptr;
}

HijackAlert* Detector::find_mutable(const std::string& alert_id) {
    for (auto& a : alerts_)
        if (a.id == alert_id) return &a;
    return nullptr;
}

double detection_latency(const HijackAlert& alert, std::optional<double> hijack_start) {
    if (!hijack_start)
        throw UnknownStart("hijack start time unavailable for alert " + alert.id);
    return alert.detected_at - *hijack_start;
}

}  // namespace pguard
