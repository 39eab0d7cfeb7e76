#include "pguard/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace pguard {

bool operator==(const EngineConfig& a, const EngineConfig& b) {
    return a.owned == b.owned && a.sources == b.sources && a.mitigation == b.mitigation &&
           a.hold_time == b.hold_time && a.quorum == b.quorum &&
           a.reorder_window == b.reorder_window && a.controller == b.controller &&
           a.outputs == b.outputs;
}

namespace {

[[noreturn]] void fail(int lineno, const std::string& message) {
    throw ConfigInvalid("config line " + std::to_string(lineno) + ": " + message);
}

double parse_seconds(const std::string& word, int lineno, const char* field) {
    try {
        size_t used = 0;
        double v = std::stod(word, &used);
        if (used != word.size()) fail(lineno, std::string(field) + ": bad number '" + word + "'");
        return v;
    } catch (const ConfigInvalid&) {
        throw;
    } catch (...) {
        fail(lineno, std::string(field) + ": bad number '" + word + "'");
    }
}

long parse_integer(const std::string& word, int lineno, const char* field) {
    long value = 0;
    auto [ptr, ec] = std::from_chars(word.data(), word.data() + word.size(), value);
    if (ec != std::errc{} || ptr != word.data() + word.size())
        fail(lineno, std::string(field) + ": bad integer '" + word + "'");
    return value;
}

std::vector<Asn> parse_origins(const std::string& word, int lineno) {
    std::vector<Asn> origins;
    std::stringstream ss(word);
    std::string item;
    while (std::getline(ss, item, ',')) {
        long long v = 0;
        auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
        if (ec != std::errc{} || ptr != item.data() + item.size() || v < 0 || v > 0xffffffffll)
            fail(lineno, "bad origin AS '" + item + "'");
        if (v == 0) fail(lineno, "origin AS 0 is not a valid origin");
        origins.push_back(static_cast<Asn>(v));
    }
    if (origins.empty()) fail(lineno, "empty origin list");
    std::sort(origins.begin(), origins.end());
    origins.erase(std::unique(origins.begin(), origins.end()), origins.end());
    return origins;
}

std::string format_number(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

const char* env_override(const char* name) {
    const char* v = std::getenv(name);
    return (v && *v) ? v : nullptr;
}

}  // namespace

EngineConfig load_config(std::string_view text) {
    EngineConfig cfg;
    std::vector<int> owned_lines;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream row(line);
        std::string directive;
        if (!(row >> directive)) continue;

        auto next_word = [&](const char* what) {
            std::string w;
            if (!(row >> w)) fail(lineno, std::string("missing ") + what);
            return w;
        };

        if (directive == "owned") {
            OwnedPrefix owned;
            std::string prefix_text = next_word("prefix");
            try {
                owned.prefix = parse_prefix(prefix_text);
            } catch (const Error& e) {
                fail(lineno, e.what());
            }
            std::string kw = next_word("'origins'");
            if (kw != "origins") fail(lineno, "expected 'origins', got '" + kw + "'");
            owned.legitimate_origins = parse_origins(next_word("origin list"), lineno);
            std::string mit;
            if (row >> mit) {
                if (mit != "mitigation") fail(lineno, "expected 'mitigation', got '" + mit + "'");
                std::string flag = next_word("'on' or 'off'");
                if (flag == "on")
                    owned.mitigation_enabled = true;
                else if (flag == "off")
                    owned.mitigation_enabled = false;
                else
                    fail(lineno, "mitigation must be 'on' or 'off', got '" + flag + "'");
            }
            cfg.owned.push_back(std::move(owned));
            owned_lines.push_back(lineno);
        } else if (directive == "source") {
            MonitorSource src;
            src.id = next_word("source id");
            std::string kind = next_word("source kind");
            try {
                src.kind = source_kind_from_string(kind);
            } catch (const Error&) {
                fail(lineno, "source kind must be stream, poll or trace, got '" + kind + "'");
            }
            src.endpoint = next_word("endpoint");
            std::string kw;
            while (row >> kw) {
                if (kw == "delay")
                    src.nominal_delay = parse_seconds(next_word("delay value"), lineno, "delay");
                else if (kw == "interval")
                    src.poll_interval =
                        parse_seconds(next_word("interval value"), lineno, "interval");
                else
                    fail(lineno, "unknown source attribute '" + kw + "'");
            }
            if (src.nominal_delay < 0) fail(lineno, "delay must be >= 0");
            if (src.poll_interval <= 0) fail(lineno, "interval must be > 0");
            if (src.kind != SourceKind::poll && src.poll_interval != 30.0)
                fail(lineno, "interval only applies to poll sources");
            cfg.sources.push_back(std::move(src));
        } else if (directive == "max_length") {
            long v = parse_integer(next_word("value"), lineno, "max_length");
            if (v < 1 || v > 32) fail(lineno, "max_length must be in [1, 32]");
            cfg.mitigation.max_length = static_cast<int>(v);
        } else if (directive == "ack_deadline") {
            cfg.mitigation.ack_deadline = parse_seconds(next_word("value"), lineno, "ack_deadline");
            if (cfg.mitigation.ack_deadline <= 0) fail(lineno, "ack_deadline must be > 0");
        } else if (directive == "ack_retries") {
            long v = parse_integer(next_word("value"), lineno, "ack_retries");
            if (v < 0) fail(lineno, "ack_retries must be >= 0");
            cfg.mitigation.ack_retries = static_cast<int>(v);
        } else if (directive == "retry_backoff") {
            cfg.mitigation.retry_backoff_base =
                parse_seconds(next_word("value"), lineno, "retry_backoff");
            if (cfg.mitigation.retry_backoff_base <= 0) fail(lineno, "retry_backoff must be > 0");
        } else if (directive == "linger") {
            std::string w = next_word("value or 'off'");
            if (w == "off")
                cfg.mitigation.linger = -1.0;
            else {
                cfg.mitigation.linger = parse_seconds(w, lineno, "linger");
                if (cfg.mitigation.linger < 0) fail(lineno, "linger must be >= 0 or 'off'");
            }
        } else if (directive == "hold_time") {
            cfg.hold_time = parse_seconds(next_word("value"), lineno, "hold_time");
            if (cfg.hold_time <= 0) fail(lineno, "hold_time must be > 0");
        } else if (directive == "quorum") {
            long v = parse_integer(next_word("value"), lineno, "quorum");
            if (v < 1) fail(lineno, "quorum must be >= 1");
            cfg.quorum = static_cast<int>(v);
        } else if (directive == "reorder_window") {
            cfg.reorder_window = parse_seconds(next_word("value"), lineno, "reorder_window");
            if (cfg.reorder_window < 0) fail(lineno, "reorder_window must be >= 0");
        } else if (directive == "controller") {
            std::string mode = next_word("mode");
            if (mode == "instant") {
                cfg.controller = {ControllerMode::Instant, "", ""};
            } else if (mode == "pipe") {
                cfg.controller.mode = ControllerMode::Pipe;
                cfg.controller.command_path = next_word("command path");
                cfg.controller.reply_path = next_word("reply path");
            } else {
                fail(lineno, "controller mode must be 'instant' or 'pipe', got '" + mode + "'");
            }
        } else if (directive == "event_log") {
            cfg.outputs.event_log = next_word("path");
        } else if (directive == "timeline") {
            cfg.outputs.timeline = next_word("path");
        } else if (directive == "geojson") {
            cfg.outputs.geojson = next_word("path");
        } else if (directive == "geo_table") {
            cfg.outputs.geo_table = next_word("path");
        } else {
            fail(lineno, "unknown directive '" + directive + "'");
        }
        std::string extra;
        if (row >> extra) fail(lineno, "trailing text '" + extra + "'");
    }

    if (cfg.owned.empty()) throw ConfigInvalid("config declares no owned prefixes");
    for (std::size_t i = 0; i < cfg.owned.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            const IpPrefix& a = cfg.owned[j].prefix;
            const IpPrefix& b = cfg.owned[i].prefix;
            if (a.contains(b) || b.contains(a))
                fail(owned_lines[i], "owned prefix " + b.str() + " overlaps " + a.str());
        }
    }
    std::vector<std::string> ids;
    for (const auto& src : cfg.sources) ids.push_back(src.id);
    std::sort(ids.begin(), ids.end());
    if (std::adjacent_find(ids.begin(), ids.end()) != ids.end())
        throw ConfigInvalid("duplicate source id '" +
                            *std::adjacent_find(ids.begin(), ids.end()) + "'");

    // Environment overrides apply to paths and endpoints only.
    if (const char* v = env_override("PGUARD_EVENT_LOG")) cfg.outputs.event_log = v;
    if (const char* v = env_override("PGUARD_TIMELINE")) cfg.outputs.timeline = v;
    if (const char* v = env_override("PGUARD_GEOJSON")) cfg.outputs.geojson = v;
    if (const char* v = env_override("PGUARD_GEO_TABLE")) cfg.outputs.geo_table = v;
    for (auto& src : cfg.sources) {
        std::string var = "PGUARD_SOURCE_" + src.id + "_ENDPOINT";
        std::transform(var.begin(), var.end(), var.begin(),
                       [](unsigned char c) { return std::toupper(c); });
        if (const char* v = env_override(var.c_str())) src.endpoint = v;
    }
    return cfg;
}

EngineConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigInvalid("cannot open config file " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return load_config(buf.str());
}

std::string render_config(const EngineConfig& cfg) {
    std::string out;
    for (const auto& owned : cfg.owned) {
        out += "owned " + owned.prefix.str() + " origins ";
        for (std::size_t i = 0; i < owned.legitimate_origins.size(); ++i) {
            if (i) out += ',';
            out += std::to_string(owned.legitimate_origins[i]);
        }
        out += owned.mitigation_enabled ? " mitigation on\n" : " mitigation off\n";
    }
    for (const auto& src : cfg.sources) {
        out += "source " + src.id + " " + to_string(src.kind) + " " + src.endpoint +
               " delay " + format_number(src.nominal_delay);
        if (src.kind == SourceKind::poll) out += " interval " + format_number(src.poll_interval);
        out += '\n';
    }
    out += "max_length " + std::to_string(cfg.mitigation.max_length) + '\n';
    out += "ack_deadline " + format_number(cfg.mitigation.ack_deadline) + '\n';
    out += "ack_retries " + std::to_string(cfg.mitigation.ack_retries) + '\n';
    out += "retry_backoff " + format_number(cfg.mitigation.retry_backoff_base) + '\n';
    out += cfg.mitigation.linger < 0 ? "linger off\n"
                                     : "linger " + format_number(cfg.mitigation.linger) + '\n';
    out += "hold_time " + format_number(cfg.hold_time) + '\n';
    out += "quorum " + std::to_string(cfg.quorum) + '\n';
    out += "reorder_window " + format_number(cfg.reorder_window) + '\n';
    if (cfg.controller.mode == ControllerMode::Instant)
        out += "controller instant\n";
    else
        out += "controller pipe " + cfg.controller.command_path + " " +
               cfg.controller.reply_path + '\n';
    if (!cfg.outputs.event_log.empty()) out += "event_log " + cfg.outputs.event_log + '\n';
    if (!cfg.outputs.timeline.empty()) out += "timeline " + cfg.outputs.timeline + '\n';
    if (!cfg.outputs.geojson.empty()) out += "geojson " + cfg.outputs.geojson + '\n';
    if (!cfg.outputs.geo_table.empty()) out += "geo_table " + cfg.outputs.geo_table + '\n';
    return out;
}

}  // namespace pguard
