#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "pguard/engine.hpp"
#include "pguard/sim.hpp"

namespace py = pybind11;
using namespace pguard;

namespace {

std::string prefix_repr(const IpPrefix& p) { return "IpPrefix('" + p.str() + "')"; }

}  // namespace

PYBIND11_MODULE(_pguard, m) {
    m.doc() = "BGP prefix hijack detection, de-aggregation mitigation, and an "
              "AS-level propagation simulator";

    py::register_exception<MalformedPrefix>(m, "MalformedPrefix");
    py::register_exception<NonCanonical>(m, "NonCanonical");
    py::register_exception<LengthOutOfRange>(m, "LengthOutOfRange");
    py::register_exception<Unsplittable>(m, "Unsplittable");
    py::register_exception<SchemaViolation>(m, "SchemaViolation");
    py::register_exception<EmptyUpdate>(m, "EmptyUpdate");
    py::register_exception<UnknownStart>(m, "UnknownStart");
    py::register_exception<UnmitigableByDeaggregation>(m, "UnmitigableByDeaggregation");
    py::register_exception<NoVantagePoints>(m, "NoVantagePoints");
    py::register_exception<UnknownOrigin>(m, "UnknownOrigin");
    py::register_exception<ScenarioStalled>(m, "ScenarioStalled");
    py::register_exception<ConfigInvalid>(m, "ConfigInvalid");
    py::register_exception<TraceMalformed>(m, "TraceMalformed");

    py::class_<IpPrefix>(m, "IpPrefix")
        .def(py::init([](const std::string& text) { return parse_prefix(text); }))
        .def_readonly("address", &IpPrefix::address)
        .def_readonly("length", &IpPrefix::length)
        .def("contains", &IpPrefix::contains)
        .def("__str__", &IpPrefix::str)
        .def("__repr__", &prefix_repr)
        .def("__eq__", [](const IpPrefix& a, const IpPrefix& b) { return a == b; })
        .def("__hash__",
             [](const IpPrefix& p) { return (std::uint64_t{p.address} << 6) | p.length; });

    m.def("parse_prefix", &parse_prefix, py::arg("text"),
          "Parse 'a.b.c.d/len'; rejects non-canonical prefixes.");
    m.def("contains", &contains, py::arg("parent"), py::arg("child"));
    m.def(
        "deaggregate",
        [](const std::string& prefix, int max_length) {
            auto [low, high] = deaggregate(parse_prefix(prefix), max_length);
            return py::make_tuple(low.str(), high.str());
        },
        py::arg("prefix"), py::arg("max_length") = kDefaultMaxLength,
        "Split a prefix into its two immediate children.");

    py::enum_<UpdateKind>(m, "UpdateKind")
        .value("announcement", UpdateKind::announcement)
        .value("withdrawal", UpdateKind::withdrawal);

    py::class_<RouteObservation>(m, "RouteObservation")
        .def(py::init<>())
        .def_readwrite("source", &RouteObservation::source)
        .def_readwrite("vantage_point", &RouteObservation::vantage_point)
        .def_readwrite("prefix", &RouteObservation::prefix)
        .def_readwrite("kind", &RouteObservation::kind)
        .def_readwrite("path", &RouteObservation::path)
        .def_readwrite("timestamp", &RouteObservation::timestamp)
        .def_readwrite("received_at", &RouteObservation::received_at)
        .def("origin", &RouteObservation::origin);

    m.def("parse_stream_message", &parse_stream_message, py::arg("raw"), py::arg("source_id"),
          py::arg("received_at"),
          "Parse one live-stream message into route observations.");
    m.def(
        "merge",
        [](const std::vector<std::vector<RouteObservation>>& streams) {
            return merge(streams);
        },
        py::arg("streams"),
        "Merge observation streams: time-ordered, duplicates collapse to the "
        "earliest arrival.");

    py::enum_<RouteClass>(m, "RouteClass")
        .value("Legitimate", RouteClass::Legitimate)
        .value("ExactOriginHijack", RouteClass::ExactOriginHijack)
        .value("SubprefixOriginHijack", RouteClass::SubprefixOriginHijack)
        .value("Unrelated", RouteClass::Unrelated);

    py::class_<OwnedPrefix>(m, "OwnedPrefix")
        .def(py::init([](const std::string& prefix, std::vector<Asn> origins, bool mitigate) {
                 OwnedPrefix owned{parse_prefix(prefix), std::move(origins), mitigate};
                 return owned;
             }),
             py::arg("prefix"), py::arg("legitimate_origins"),
             py::arg("mitigation_enabled") = true)
        .def_readonly("prefix", &OwnedPrefix::prefix)
        .def_readonly("legitimate_origins", &OwnedPrefix::legitimate_origins)
        .def_readonly("mitigation_enabled", &OwnedPrefix::mitigation_enabled);

    m.def(
        "classify",
        [](const RouteObservation& obs, const std::vector<OwnedPrefix>& config) {
            return classify(obs, config).cls;
        },
        py::arg("observation"), py::arg("config"),
        "Classify one announcement against the owned-prefix configuration.");

    py::enum_<HijackKind>(m, "HijackKind")
        .value("ExactOrigin", HijackKind::ExactOrigin)
        .value("SubprefixOrigin", HijackKind::SubprefixOrigin);
    py::enum_<AlertState>(m, "AlertState")
        .value("New", AlertState::New)
        .value("Mitigating", AlertState::Mitigating)
        .value("Resolved", AlertState::Resolved);
    py::enum_<PlanStatus>(m, "PlanStatus")
        .value("Planned", PlanStatus::Planned)
        .value("Commanded", PlanStatus::Commanded)
        .value("Acknowledged", PlanStatus::Acknowledged)
        .value("Complete", PlanStatus::Complete)
        .value("Failed", PlanStatus::Failed);

    py::class_<HijackAlert>(m, "HijackAlert")
        .def_readonly("id", &HijackAlert::id)
        .def_readonly("owned", &HijackAlert::owned)
        .def_readonly("offending_origin", &HijackAlert::offending_origin)
        .def_readonly("observed_prefix", &HijackAlert::observed_prefix)
        .def_readonly("kind", &HijackAlert::kind)
        .def_readonly("state", &HijackAlert::state)
        .def_readonly("first_seen", &HijackAlert::first_seen)
        .def_readonly("detected_at", &HijackAlert::detected_at)
        .def_readonly("evidence", &HijackAlert::evidence);

    py::class_<MitigationPlan>(m, "MitigationPlan")
        .def_readonly("alert_id", &MitigationPlan::alert_id)
        .def_readonly("parent", &MitigationPlan::parent)
        .def_readonly("announcements", &MitigationPlan::announcements)
        .def_readonly("origin", &MitigationPlan::origin)
        .def_readonly("status", &MitigationPlan::status)
        .def_readonly("commanded_at", &MitigationPlan::commanded_at)
        .def_readonly("acknowledged_at", &MitigationPlan::acknowledged_at)
        .def_readonly("completed_at", &MitigationPlan::completed_at);

    m.def(
        "plan_mitigation",
        [](const HijackAlert& alert, int max_length) {
            return plan_mitigation(alert, alert.owned, max_length);
        },
        py::arg("alert"), py::arg("max_length") = kDefaultMaxLength,
        "Build the de-aggregation plan for an alert.");
    m.def(
        "render_commands",
        [](MitigationPlan& plan, double now) { return render_commands(plan, now); },
        py::arg("plan"), py::arg("now") = 0.0,
        "Render controller announce lines; marks the plan commanded.");

    py::class_<EngineConfig>(m, "EngineConfig")
        .def_readonly("owned", &EngineConfig::owned)
        .def_readonly("hold_time", &EngineConfig::hold_time)
        .def_readonly("quorum", &EngineConfig::quorum);
    m.def("load_config", &load_config, py::arg("text"),
          "Parse and validate an engine configuration.");
    m.def("load_config_file", &load_config_file, py::arg("path"));
    m.def("render_config", &render_config, py::arg("config"));

    py::class_<ReplaySummary>(m, "ReplaySummary")
        .def_readonly("messages", &ReplaySummary::messages)
        .def_readonly("skipped_empty", &ReplaySummary::skipped_empty)
        .def_readonly("observations", &ReplaySummary::observations)
        .def_readonly("alerts", &ReplaySummary::alerts)
        .def_readonly("alert_snapshots", &ReplaySummary::alert_snapshots)
        .def_readonly("plan_snapshots", &ReplaySummary::plan_snapshots)
        .def_readonly("event_log", &ReplaySummary::event_log)
        .def("exit_code", &ReplaySummary::exit_code);

    m.def(
        "replay_trace",
        [](const EngineConfig& cfg, const std::string& text) {
            return replay_trace(cfg, text);
        },
        py::arg("config"), py::arg("trace_text"),
        "Deterministically replay a newline-delimited message trace.");
    m.def(
        "replay_trace_file",
        [](const EngineConfig& cfg, const std::string& path) {
            return replay_trace_file(cfg, path);
        },
        py::arg("config"), py::arg("path"));

    py::class_<ScenarioResult>(m, "ScenarioResult")
        .def_readonly("setup_converged_at", &ScenarioResult::setup_converged_at)
        .def_readonly("hijack_started_at", &ScenarioResult::hijack_started_at)
        .def_readonly("detected_at", &ScenarioResult::detected_at)
        .def_readonly("injected_at", &ScenarioResult::injected_at)
        .def_readonly("fully_switched_at", &ScenarioResult::fully_switched_at)
        .def_readonly("t_detect", &ScenarioResult::t_detect)
        .def_readonly("t_command", &ScenarioResult::t_command)
        .def_readonly("t_complete", &ScenarioResult::t_complete)
        .def_readonly("total", &ScenarioResult::total)
        .def_readonly("alert_raised", &ScenarioResult::alert_raised)
        .def_readonly("unmitigable", &ScenarioResult::unmitigable)
        .def_readonly("legit_fraction", &ScenarioResult::legit_fraction)
        .def_readonly("events_processed", &ScenarioResult::events_processed)
        .def_readonly("event_log", &ScenarioResult::event_log);

    m.def("load_scenario_file", &load_scenario_file, py::arg("path"), py::arg("seed") = 1,
          "Load a scenario file (key-value format).");
    m.def(
        "run_scenario_file",
        [](const std::string& path, std::uint64_t seed) {
            return run_scenario(load_scenario_file(path, seed));
        },
        py::arg("path"), py::arg("seed") = 1,
        "Load and run a scenario; returns the measured result.");
    m.def(
        "run_random_scenario",
        [](int n_ases, double peer_probability, std::uint64_t seed,
           const std::string& owned_prefix, std::vector<double> monitor_delays,
           double hijack_start, double controller_delay) {
            DetRng rng(seed);
            SimTopology topo = random_topology(n_ases, peer_probability, rng);
            int i = 0;
            for (double d : monitor_delays) {
                std::string id = "src" + std::to_string(i++);
                for (Asn as : topo.ases) topo.monitors.push_back({id, as, d});
            }
            Scenario scenario;
            scenario.topology = std::move(topo);
            scenario.owned_prefix = parse_prefix(owned_prefix);
            scenario.hijack_start = hijack_start;
            scenario.controller_delay = controller_delay;
            return run_scenario(std::move(scenario));
        },
        py::arg("n_ases"), py::arg("peer_probability") = 0.05, py::arg("seed") = 1,
        py::arg("owned_prefix") = "10.0.0.0/23",
        py::arg("monitor_delays") = std::vector<double>{45.0, 120.0},
        py::arg("hijack_start") = 30.0, py::arg("controller_delay") = 15.0,
        "Generate a random topology, run the hijack scenario, and return the result.");
}
