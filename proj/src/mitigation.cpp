#include "pguard/mitigation.hpp"

#include <algorithm>

namespace pguard {

std::string to_string(PlanStatus status) {
    switch (status) {
        case PlanStatus::Planned: return "PLANNED";
        case PlanStatus::Commanded: return "COMMANDED";
        case PlanStatus::Acknowledged: return "ACKNOWLEDGED";
        case PlanStatus::Complete: return "COMPLETE";
        case PlanStatus::Failed: return "FAILED";
    }
    return "?";
}

MitigationPlan plan_mitigation(const HijackAlert& alert, const OwnedPrefix& config,
                               int max_length) {
    const IpPrefix& target =
        alert.kind == HijackKind::ExactOrigin ? config.prefix : alert.observed_prefix;
    std::pair<IpPrefix, IpPrefix> children;
    try {
        children = deaggregate(target, max_length);
    } catch (const Unsplittable& e) {
        throw UnmitigableByDeaggregation(std::string("alert ") + alert.id + ": " + e.what());
    }
    MitigationPlan plan;
    plan.alert_id = alert.id;
    plan.parent = target;
    plan.announcements = {children.first, children.second};
    plan.origin = *std::min_element(config.legitimate_origins.begin(),
                                    config.legitimate_origins.end());
    return plan;
}

std::string render_command(const ControllerCommand& command) {
    if (command.verb == ControllerCommand::Verb::Announce)
        return "announce " + command.prefix.str() + " origin " + std::to_string(command.origin);
    return "withdraw " + command.prefix.str();
}

namespace {

std::vector<std::string> split_words(std::string_view line) {
    std::vector<std::string> words;
    size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && line[i] == ' ') ++i;
        size_t start = i;
        while (i < line.size() && line[i] != ' ') ++i;
        if (i > start) words.emplace_back(line.substr(start, i - start));
    }
    return words;
}

Asn parse_origin_word(const std::string& word) {
    if (word.empty() || word.find_first_not_of("0123456789") != std::string::npos)
        throw MalformedCommand("bad origin '" + word + "'");
    unsigned long long v = 0;
    try {
        v = std::stoull(word);
    } catch (const std::out_of_range&) {
        throw MalformedCommand("origin out of range: " + word);
    }
    if (v == 0 || v > 0xffffffffull) throw MalformedCommand("origin out of range: " + word);
    return static_cast<Asn>(v);
}

}  // namespace

ControllerCommand parse_command(std::string_view line) {
    auto words = split_words(line);
    if (words.empty()) throw MalformedCommand("empty command line");
    ControllerCommand command;
    try {
        if (words[0] == "announce") {
            if (words.size() != 4 || words[2] != "origin")
                throw MalformedCommand("expected 'announce <prefix> origin <asn>'");
            command.verb = ControllerCommand::Verb::Announce;
            command.prefix = parse_prefix(words[1]);
            command.origin = parse_origin_word(words[3]);
        } else if (words[0] == "withdraw") {
            if (words.size() != 2) throw MalformedCommand("expected 'withdraw <prefix>'");
            command.verb = ControllerCommand::Verb::Withdraw;
            command.prefix = parse_prefix(words[1]);
        } else {
            throw MalformedCommand("unknown verb '" + words[0] + "'");
        }
    } catch (const MalformedCommand&) {
        throw;
    } catch (const Error& e) {
        throw MalformedCommand(std::string(e.what()));
    }
    return command;
}

ControllerReply parse_reply(std::string_view line) {
    if (line.rfind("ok ", 0) == 0) return {true, std::string(line.substr(3))};
    if (line == "ok") return {true, ""};
    if (line.rfind("error ", 0) == 0) return {false, std::string(line.substr(6))};
    throw MalformedCommand("bad controller reply '" + std::string(line) + "'");
}

std::vector<std::string> render_commands(MitigationPlan& plan, double now) {
    if (plan.announcements.empty())
        throw UnmitigableByDeaggregation("plan for alert " + plan.alert_id +
                                         " has no announcements");
    std::vector<std::string> lines;
    lines.reserve(plan.announcements.size());
    for (const IpPrefix& p : plan.announcements)
        lines.push_back(
            render_command({ControllerCommand::Verb::Announce, p, plan.origin}));
    if (plan.status == PlanStatus::Planned) plan.status = PlanStatus::Commanded;
    if (std::isnan(plan.commanded_at)) plan.commanded_at = now;
    return lines;
}

void acknowledge(MitigationPlan& plan, double ack_time) {
    if (plan.status != PlanStatus::Commanded) return;
    plan.status = PlanStatus::Acknowledged;
    plan.acknowledged_at = ack_time;
}

double announce_latency(const MitigationPlan& plan) {
    return plan.acknowledged_at - plan.commanded_at;
}

}  // namespace pguard
