#include "pguard/feed.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace pguard {

using nlohmann::json;

namespace {

bool stream_less(const RouteObservation& a, const RouteObservation& b) {
    if (a.received_at != b.received_at) return a.received_at < b.received_at;
    if (a.source != b.source) return a.source < b.source;
    if (a.vantage_point != b.vantage_point) return a.vantage_point < b.vantage_point;
    return a.prefix < b.prefix;
}

const json& require_field(const json& object, const char* name, const char* where) {
    auto it = object.find(name);
    if (it == object.end())
        throw SchemaViolation(std::string("missing required field ") + where + name);
    return *it;
}

Asn as_number(const json& value, const char* where) {
    if (value.is_number_unsigned()) {
        auto v = value.get<std::uint64_t>();
        if (v > 0xffffffffull)
            throw SchemaViolation(std::string(where) + " does not fit in 32 bits");
        return static_cast<Asn>(v);
    }
    if (value.is_string()) {
        const auto& s = value.get_ref<const std::string&>();
        if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
            throw SchemaViolation(std::string(where) + " is not a number");
        unsigned long long v = 0;
        try {
            v = std::stoull(s);
        } catch (const std::out_of_range&) {
            throw SchemaViolation(std::string(where) + " does not fit in 32 bits");
        }
        if (v > 0xffffffffull)
            throw SchemaViolation(std::string(where) + " does not fit in 32 bits");
        return static_cast<Asn>(v);
    }
    throw SchemaViolation(std::string(where) + " is not a number");
}

IpPrefix prefix_field(const json& value, const char* where) {
    if (!value.is_string())
        throw SchemaViolation(std::string(where) + " is not a prefix string");
    try {
        return parse_prefix(value.get_ref<const std::string&>());
    } catch (const Error& e) {
        throw SchemaViolation(std::string(where) + ": " + e.what());
    }
}

}  // namespace

std::string to_string(SourceKind kind) {
    switch (kind) {
        case SourceKind::stream: return "stream";
        case SourceKind::poll: return "poll";
        case SourceKind::trace: return "trace";
    }
    return "?";
}

SourceKind source_kind_from_string(std::string_view text) {
    if (text == "stream") return SourceKind::stream;
    if (text == "poll") return SourceKind::poll;
    if (text == "trace") return SourceKind::trace;
    throw ConfigInvalid("unknown source kind '" + std::string(text) + "'");
}

std::vector<RouteObservation> parse_stream_message(std::string_view raw,
                                                   const std::string& source_id,
                                                   double received_at) {
    json msg = json::parse(raw, nullptr, false);
    if (msg.is_discarded() || !msg.is_object())
        throw SchemaViolation("message is not a JSON object");

    const json& type = require_field(msg, "type", "");
    if (!type.is_string() || type.get_ref<const std::string&>() != "ris_message")
        throw SchemaViolation("type is not \"ris_message\"");

    const json& data = require_field(msg, "data", "");
    if (!data.is_object()) throw SchemaViolation("data is not an object");

    const json& ts = require_field(data, "timestamp", "data.");
    if (!ts.is_number()) throw SchemaViolation("data.timestamp is not a number");
    double timestamp = ts.get<double>();

    const json& peer = require_field(data, "peer", "data.");
    if (!peer.is_string()) throw SchemaViolation("data.peer is not a string");
    std::string vantage_point = peer.get<std::string>();

    as_number(require_field(data, "peer_asn", "data."), "data.peer_asn");

    const json& update_type = require_field(data, "type", "data.");
    if (!update_type.is_string() || update_type.get_ref<const std::string&>() != "UPDATE")
        throw SchemaViolation("data.type is not \"UPDATE\"");

    std::vector<RouteObservation> out;

    AsPath path;
    bool have_announcements = false;
    if (auto it = data.find("announcements"); it != data.end()) {
        if (!it->is_array()) throw SchemaViolation("data.announcements is not an array");
        for (const json& group : *it) {
            if (!group.is_object())
                throw SchemaViolation("data.announcements entry is not an object");
            const json& prefixes = require_field(group, "prefixes", "data.announcements.");
            if (!prefixes.is_array())
                throw SchemaViolation("data.announcements.prefixes is not an array");
            if (!prefixes.empty() && !have_announcements) {
                const json& jpath = require_field(data, "path", "data.");
                if (!jpath.is_array() || jpath.empty())
                    throw SchemaViolation("data.path is not a non-empty array");
                path.clear();
                for (const json& hop : jpath) path.push_back(as_number(hop, "data.path entry"));
                have_announcements = true;
            }
            for (const json& p : prefixes) {
                RouteObservation obs;
                obs.source = source_id;
                obs.vantage_point = vantage_point;
                obs.prefix = prefix_field(p, "data.announcements.prefixes entry");
                obs.kind = UpdateKind::announcement;
                obs.path = path;
                obs.timestamp = timestamp;
                obs.received_at = received_at;
                out.push_back(std::move(obs));
            }
        }
    }

    if (auto it = data.find("withdrawals"); it != data.end()) {
        if (!it->is_array()) throw SchemaViolation("data.withdrawals is not an array");
        for (const json& p : *it) {
            RouteObservation obs;
            obs.source = source_id;
            obs.vantage_point = vantage_point;
            obs.prefix = prefix_field(p, "data.withdrawals entry");
            obs.kind = UpdateKind::withdrawal;
            obs.timestamp = timestamp;
            obs.received_at = received_at;
            out.push_back(std::move(obs));
        }
    }

    if (out.empty()) throw EmptyUpdate("message carries no announcements or withdrawals");
    return out;
}

RouteSnapshot parse_snapshot(std::string_view text) {
    RouteSnapshot snapshot;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream row(line);
        std::string vantage, prefix_text;
        if (!(row >> vantage >> prefix_text))
            throw SchemaViolation("snapshot line " + std::to_string(lineno) + ": too few fields");
        IpPrefix prefix;
        try {
            prefix = parse_prefix(prefix_text);
        } catch (const Error& e) {
            throw SchemaViolation("snapshot line " + std::to_string(lineno) + ": " + e.what());
        }
        AsPath path;
        unsigned long long hop = 0;
        while (row >> hop) {
            if (hop > 0xffffffffull)
                throw SchemaViolation("snapshot line " + std::to_string(lineno) +
                                      ": AS number does not fit in 32 bits");
            path.push_back(static_cast<Asn>(hop));
        }
        if (!row.eof())
            throw SchemaViolation("snapshot line " + std::to_string(lineno) + ": bad AS path");
        if (path.empty())
            throw SchemaViolation("snapshot line " + std::to_string(lineno) + ": empty AS path");
        snapshot[{vantage, prefix}] = std::move(path);
    }
    return snapshot;
}

std::vector<RouteObservation> diff_snapshots(const RouteSnapshot& previous,
                                             const RouteSnapshot& current,
                                             const MonitorSource& source,
                                             double observed_at) {
    std::vector<RouteObservation> out;
    for (const auto& [key, path] : current) {
        auto it = previous.find(key);
        if (it != previous.end() && it->second == path) continue;
        RouteObservation obs;
        obs.source = source.id;
        obs.vantage_point = key.first;
        obs.prefix = key.second;
        obs.kind = UpdateKind::announcement;
        obs.path = path;
        obs.timestamp = observed_at;
        obs.received_at = observed_at;
        out.push_back(std::move(obs));
    }
    for (const auto& [key, path] : previous) {
        if (current.count(key)) continue;
        RouteObservation obs;
        obs.source = source.id;
        obs.vantage_point = key.first;
        obs.prefix = key.second;
        obs.kind = UpdateKind::withdrawal;
        obs.timestamp = observed_at;
        obs.received_at = observed_at;
        out.push_back(std::move(obs));
    }
    return out;
}

void sort_stream(ObservationStream& stream) {
    std::stable_sort(stream.begin(), stream.end(), stream_less);
}

ObservationStream merge(const std::vector<ObservationStream>& streams) {
    ObservationStream all;
    for (const auto& s : streams) all.insert(all.end(), s.begin(), s.end());
    sort_stream(all);
    ObservationStream out;
    std::set<EventKey> seen;
    for (auto& obs : all) {
        if (!seen.insert(event_key(obs)).second) continue;
        out.push_back(std::move(obs));
    }
    return out;
}

void MergeBuffer::push(RouteObservation obs) {
    if (seen_.count(event_key(obs))) {
        ++metrics_.duplicates;
        return;
    }
    if (emitted_any_ && obs.received_at < watermark_) ++metrics_.late_arrivals;
    pending_.push_back(std::move(obs));
}

ObservationStream MergeBuffer::take_ready(double cutoff) {
    ObservationStream ready, rest;
    for (auto& obs : pending_) {
        if (obs.received_at <= cutoff)
            ready.push_back(std::move(obs));
        else
            rest.push_back(std::move(obs));
    }
    pending_ = std::move(rest);
    sort_stream(ready);
    ObservationStream out;
    for (auto& obs : ready) {
        if (!seen_.insert(event_key(obs)).second) {
            ++metrics_.duplicates;
            continue;
        }
        watermark_ = std::max(watermark_, obs.received_at);
        emitted_any_ = true;
        out.push_back(std::move(obs));
    }
    metrics_.observations += out.size();
    return out;
}

ObservationStream MergeBuffer::drain(double now) { return take_ready(now - window_); }

ObservationStream MergeBuffer::flush() {
    return take_ready(std::numeric_limits<double>::infinity());
}

}  // namespace pguard
