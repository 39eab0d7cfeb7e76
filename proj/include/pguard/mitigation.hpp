#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pguard/detection.hpp"

namespace pguard {

enum class PlanStatus { Planned, Commanded, Acknowledged, Complete, Failed };

std::string to_string(PlanStatus status);

// Knobs for the mitigation reactor. linger < 0 disables the post-resolution
// withdrawal of announced sub-prefixes; 0 withdraws at resolution time.
struct MitigationPolicy {
    int max_length = kDefaultMaxLength;
    double ack_deadline = 30.0;       // seconds to wait for controller acks
    int ack_retries = 3;              // resends after the first attempt
    double retry_backoff_base = 2.0;  // seconds; doubles per retry
    double linger = 3600.0;           // seconds sub-prefixes stay up after resolution

    friend bool operator==(const MitigationPolicy&, const MitigationPolicy&) = default;
};

// The sub-prefixes to announce for one alert, plus command progress.
// Status moves Planned -> Commanded -> Acknowledged -> Complete, or to
// Failed from any state.
struct MitigationPlan {
    std::string alert_id;
    IpPrefix parent;
    std::vector<IpPrefix> announcements;  // disjoint, cover parent exactly
    Asn origin = 0;                       // legitimate origin to announce from
    PlanStatus status = PlanStatus::Planned;
    double commanded_at = std::nan("");
    double acknowledged_at = std::nan("");
    double completed_at = std::nan("");
};

// Builds the de-aggregation plan for a raised alert: exact-origin hijacks
// split the owned prefix, subprefix-origin hijacks split the observed prefix
// to out-specific the attacker. Origin is the lowest configured legitimate
// origin. Throws UnmitigableByDeaggregation when the relevant prefix cannot
// be split under max_length; the alert then stays NEW.
MitigationPlan plan_mitigation(const HijackAlert& alert, const OwnedPrefix& config,
                               int max_length = kDefaultMaxLength);

// -- controller command protocol (newline-delimited, bit-exact) ------------
//   announce <prefix> origin <asn>
//   withdraw <prefix>
// replies:
//   ok <echo of the command line>
//   error <reason>

struct ControllerCommand {
    enum class Verb { Announce, Withdraw };
    Verb verb = Verb::Announce;
    IpPrefix prefix;
    Asn origin = 0;  // announce only

    friend bool operator==(const ControllerCommand&, const ControllerCommand&) = default;
};

std::string render_command(const ControllerCommand& command);
ControllerCommand parse_command(std::string_view line);  // throws MalformedCommand

struct ControllerReply {
    bool ok = false;
    std::string text;  // echoed command or error reason
};

ControllerReply parse_reply(std::string_view line);  // throws MalformedCommand

// Renders one announce line per sub-prefix and marks the plan Commanded.
// Precondition: plan.status == Planned (or a resend of a Commanded plan).
std::vector<std::string> render_commands(MitigationPlan& plan, double now);

// Marks a commanded plan acknowledged at ack_time. The commanded_at ->
// ack_time interval is the announce latency.
void acknowledge(MitigationPlan& plan, double ack_time);

double announce_latency(const MitigationPlan& plan);

}  // namespace pguard
