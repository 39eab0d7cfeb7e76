#include "doctest.h"

#include "pguard/config.hpp"

using namespace pguard;

namespace {

const char* kSample =
    "# sample configuration\n"
    "owned 10.0.0.0/23 origins 65001 mitigation on\n"
    "owned 198.51.100.0/24 origins 65010,65011 mitigation off\n"
    "source ris1 stream feeds/ris1.ndjson delay 45\n"
    "source lg1 poll feeds/lg1.snapshot delay 120 interval 15\n"
    "source old trace traces/old.ndjson delay 0\n"
    "max_length 24\n"
    "ack_deadline 30\n"
    "ack_retries 3\n"
    "retry_backoff 2\n"
    "linger 3600\n"
    "hold_time 60\n"
    "quorum 1\n"
    "reorder_window 10\n"
    "controller pipe cmd.fifo ack.fifo\n"
    "event_log out/events.ndjson\n"
    "timeline out/timeline.ndjson\n";

}  // namespace

TEST_CASE("a full config loads") {
    EngineConfig cfg = load_config(kSample);
    REQUIRE(cfg.owned.size() == 2);
    CHECK(cfg.owned[0].prefix.str() == "10.0.0.0/23");
    CHECK(cfg.owned[0].legitimate_origins == std::vector<Asn>{65001});
    CHECK(cfg.owned[0].mitigation_enabled);
    CHECK(cfg.owned[1].legitimate_origins == std::vector<Asn>{65010, 65011});
    CHECK_FALSE(cfg.owned[1].mitigation_enabled);
    REQUIRE(cfg.sources.size() == 3);
    CHECK(cfg.sources[0].kind == SourceKind::stream);
    CHECK(cfg.sources[0].nominal_delay == 45.0);
    CHECK(cfg.sources[1].kind == SourceKind::poll);
    CHECK(cfg.sources[1].poll_interval == 15.0);
    CHECK(cfg.sources[2].kind == SourceKind::trace);
    CHECK(cfg.mitigation.max_length == 24);
    CHECK(cfg.mitigation.linger == 3600.0);
    CHECK(cfg.hold_time == 60.0);
    CHECK(cfg.controller.mode == ControllerMode::Pipe);
    CHECK(cfg.controller.command_path == "cmd.fifo");
    CHECK(cfg.outputs.event_log == "out/events.ndjson");
    CHECK(cfg.outputs.geojson.empty());
}

TEST_CASE("load then render then load is the identity") {
    EngineConfig cfg = load_config(kSample);
    std::string rendered = render_config(cfg);
    EngineConfig again = load_config(rendered);
    CHECK(again == cfg);
    CHECK(render_config(again) == rendered);
}

TEST_CASE("overlapping owned prefixes are rejected with the line") {
    const char* overlapping =
        "owned 10.0.0.0/23 origins 65001\n"
        "owned 10.0.1.0/24 origins 65001\n";
    try {
        load_config(overlapping);
        FAIL("expected ConfigInvalid");
    } catch (const ConfigInvalid& e) {
        std::string what = e.what();
        CHECK(what.find("line 2") != std::string::npos);
        CHECK(what.find("overlaps") != std::string::npos);
    }
    // equal prefixes overlap too
    CHECK_THROWS_AS(load_config("owned 10.0.0.0/23 origins 65001\n"
                                "owned 10.0.0.0/23 origins 65002\n"),
                    ConfigInvalid);
}

TEST_CASE("config errors name the offending field") {
    auto message_of = [](const char* text) {
        try {
            load_config(text);
        } catch (const ConfigInvalid& e) {
            return std::string(e.what());
        }
        return std::string("no error");
    };
    CHECK(message_of("owned 10.0.0.0/23 origins 65001\nsource s1 websocket x delay 1\n")
              .find("source kind") != std::string::npos);
    CHECK(message_of("owned 10.0.1.0/23 origins 65001\n").find("host bits") !=
          std::string::npos);
    CHECK(message_of("owned 10.0.0.0/23 origins 0\n").find("origin AS 0") !=
          std::string::npos);
    CHECK(message_of("owned 10.0.0.0/23 origins 65001\nquorum 0\n").find("quorum") !=
          std::string::npos);
    CHECK(message_of("owned 10.0.0.0/23 origins 65001\nhold_time -3\n").find("hold_time") !=
          std::string::npos);
    CHECK(message_of("owned 10.0.0.0/23 origins 65001\nbogus 1\n").find("unknown directive") !=
          std::string::npos);
    CHECK(message_of("owned 10.0.0.0/23 origins 65001\n"
                     "source a stream x delay 1\nsource a stream y delay 2\n")
              .find("duplicate source id") != std::string::npos);
    CHECK(message_of("").find("no owned prefixes") != std::string::npos);
}

TEST_CASE("environment variables override paths and endpoints only") {
    setenv("PGUARD_EVENT_LOG", "/tmp/override.ndjson", 1);
    setenv("PGUARD_SOURCE_RIS1_ENDPOINT", "/tmp/other-feed", 1);
    EngineConfig cfg = load_config(
        "owned 10.0.0.0/23 origins 65001\n"
        "source ris1 stream feeds/ris1.ndjson delay 45\n"
        "event_log out/events.ndjson\n");
    unsetenv("PGUARD_EVENT_LOG");
    unsetenv("PGUARD_SOURCE_RIS1_ENDPOINT");
    CHECK(cfg.outputs.event_log == "/tmp/override.ndjson");
    CHECK(cfg.sources[0].endpoint == "/tmp/other-feed");
    CHECK(cfg.sources[0].nominal_delay == 45.0);  // values stay file-driven
}

TEST_CASE("linger can be disabled") {
    EngineConfig cfg = load_config("owned 10.0.0.0/23 origins 65001\nlinger off\n");
    CHECK(cfg.mitigation.linger < 0);
    std::string rendered = render_config(cfg);
    CHECK(rendered.find("linger off") != std::string::npos);
    CHECK(load_config(rendered) == cfg);
}
