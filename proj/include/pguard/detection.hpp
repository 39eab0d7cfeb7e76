#pragma once

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "pguard/observation.hpp"

namespace pguard {

// One prefix the operator owns, with the origins allowed to announce it.
// Owned prefixes in one configuration never overlap; the config loader
// enforces that.
struct OwnedPrefix {
    IpPrefix prefix;
    std::vector<Asn> legitimate_origins;  // non-empty, sorted ascending
    bool mitigation_enabled = true;

    bool is_legitimate(Asn origin) const;

    friend bool operator==(const OwnedPrefix&, const OwnedPrefix&) = default;
};

enum class RouteClass { Legitimate, ExactOriginHijack, SubprefixOriginHijack, Unrelated };

std::string to_string(RouteClass cls);

struct Classification {
    RouteClass cls = RouteClass::Unrelated;
    const OwnedPrefix* owned = nullptr;  // null iff Unrelated
};

// Classifies one announcement against the owned-prefix configuration.
// Matching uses the most-specific owned prefix containing the observed
// prefix. Withdrawals never reach this; resolution logic handles them.
Classification classify(const RouteObservation& observation,
                        std::span<const OwnedPrefix> config);

enum class HijackKind { ExactOrigin, SubprefixOrigin };
enum class AlertState { New, Mitigating, Resolved };

std::string to_string(HijackKind kind);
std::string to_string(AlertState state);

// Detection state machine instance for one (owned prefix, offending origin,
// kind) key. State only ever moves New -> Mitigating -> Resolved, or
// New -> Resolved when mitigation is disabled.
struct HijackAlert {
    std::string id;
    OwnedPrefix owned;
    Asn offending_origin = 0;
    IpPrefix observed_prefix;        // the first offending announcement's prefix
    HijackKind kind = HijackKind::ExactOrigin;
    AlertState state = AlertState::New;
    double first_seen = 0.0;         // min monitor timestamp over evidence
    double detected_at = 0.0;        // local time the alert was raised
    std::vector<RouteObservation> evidence;  // append-only
};

struct AlertEvent {
    enum class Type { Raised, StateChanged };
    Type type = Type::Raised;
    HijackAlert alert;  // snapshot at event time
};

// Consumes the merged observation stream and maintains alert state.
// Single logical writer; readers take point-in-time snapshots.
class Detector {
public:
    explicit Detector(std::vector<OwnedPrefix> config, int quorum = 1);

    // Processes one announcement in merged-stream order. Returns the alert
    // events it produced (a raise once quorum evidence accumulated, nothing
    // for repeats, legitimate or unrelated routes).
    std::vector<AlertEvent> ingest(const RouteObservation& observation);

    // State transitions driven by the mitigation/monitoring layers.
    std::optional<AlertEvent> mark_mitigating(const std::string& alert_id);
    std::optional<AlertEvent> resolve(const std::string& alert_id);

    const std::vector<HijackAlert>& alerts() const { return alerts_; }
    const HijackAlert* find(const std::string& alert_id) const;
    std::span<const OwnedPrefix> config() const { return config_; }

private:
    struct Key {
        IpPrefix owned;
        Asn origin;
        HijackKind kind;
        auto operator<=>(const Key&) const = default;
    };

    HijackAlert* find_mutable(const std::string& alert_id);

    std::vector<OwnedPrefix> config_;
    int quorum_;
    std::vector<HijackAlert> alerts_;
    std::map<Key, std::size_t> active_;           // key -> index of non-resolved alert
    std::set<EventKey> evidence_seen_;
    std::uint64_t next_id_ = 1;
};

// Seconds from the hijack start to the alert. Throws UnknownStart when the
// start is unavailable (live mode).
double detection_latency(const HijackAlert& alert, std::optional<double> hijack_start);

}  // namespace pguard
