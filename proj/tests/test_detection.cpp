#include "doctest.h"

#include <algorithm>

#include "pguard/detection.hpp"
#include "pguard/feed.hpp"
#include "pguard/sim.hpp"

using namespace pguard;

namespace {

std::vector<OwnedPrefix> config_one() {
    return {{parse_prefix("10.0.0.0/23"), {65001}, true}};
}

RouteObservation announce(const char* prefix, AsPath path, double t, std::string vp = "VP1",
                          std::string source = "ris") {
    RouteObservation o;
    o.source = std::move(source);
    o.vantage_point = std::move(vp);
    o.prefix = parse_prefix(prefix);
    o.kind = UpdateKind::announcement;
    o.path = std::move(path);
    o.timestamp = t;
    o.received_at = t;
    return o;
}

}  // namespace

TEST_CASE("classification against the owned configuration") {
    auto config = config_one();

    CHECK(classify(announce("10.0.0.0/23", {64500, 65002}, 1), config).cls ==
          RouteClass::ExactOriginHijack);
    CHECK(classify(announce("10.0.0.0/23", {64500, 65001}, 1), config).cls ==
          RouteClass::Legitimate);
    CHECK(classify(announce("10.0.0.128/25", {64500, 65002}, 1), config).cls ==
          RouteClass::SubprefixOriginHijack);
    CHECK(classify(announce("10.0.1.0/24", {64500, 64777, 65002}, 1), config).cls ==
          RouteClass::SubprefixOriginHijack);
    // sub-prefix announced by a legitimate origin (mitigation's own routes)
    CHECK(classify(announce("10.0.0.0/24", {64500, 65001}, 1), config).cls ==
          RouteClass::Legitimate);
    CHECK(classify(announce("192.0.2.0/24", {64500, 65002}, 1), config).cls ==
          RouteClass::Unrelated);
    // a covering super-prefix is not a hijack of the owned prefix
    CHECK(classify(announce("10.0.0.0/22", {64500, 65002}, 1), config).cls ==
          RouteClass::Unrelated);
}

TEST_CASE("classification picks the most specific owned prefix") {
    std::vector<OwnedPrefix> config = {{parse_prefix("10.0.0.0/23"), {65001}, true},
                                       {parse_prefix("10.2.0.0/16"), {65050}, true}};
    auto c = classify(announce("10.2.9.0/24", {64500, 65050}, 1), config);
    CHECK(c.cls == RouteClass::Legitimate);
    CHECK(c.owned->prefix.str() == "10.2.0.0/16");
}

TEST_CASE("first hijack observation raises exactly one alert") {
    Detector detector(config_one());

    auto events = detector.ingest(announce("10.0.0.0/23", {64500, 65002}, 100));
    REQUIRE(events.size() == 1);
    CHECK(events[0].type == AlertEvent::Type::Raised);
    const HijackAlert& alert = events[0].alert;
    CHECK(alert.state == AlertState::New);
    CHECK(alert.kind == HijackKind::ExactOrigin);
    CHECK(alert.offending_origin == 65002);
    CHECK(alert.detected_at == 100);
    CHECK(alert.first_seen == 100);
    CHECK(alert.evidence.size() == 1);

    // a second vantage point adds evidence, not a new alert
    auto more = detector.ingest(announce("10.0.0.0/23", {64501, 65002}, 130, "VP2"));
    CHECK(more.empty());
    REQUIRE(detector.alerts().size() == 1);
    CHECK(detector.alerts()[0].evidence.size() == 2);
    CHECK(detector.alerts()[0].first_seen == 100);

    // duplicate evidence is ignored
    auto dup = detector.ingest(announce("10.0.0.0/23", {64501, 65002}, 130, "VP2"));
    CHECK(dup.empty());
    CHECK(detector.alerts()[0].evidence.size() == 2);

    // legitimate and unrelated announcements never alert
    CHECK(detector.ingest(announce("10.0.0.0/23", {64500, 65001}, 140)).empty());
    CHECK(detector.ingest(announce("192.0.2.0/24", {64500, 65002}, 141)).empty());
    CHECK(detector.alerts().size() == 1);
}

TEST_CASE("alert state machine transitions") {
    Detector detector(config_one());
    auto events = detector.ingest(announce("10.0.0.0/23", {64500, 65002}, 100));
    std::string id = events[0].alert.id;

    auto mit = detector.mark_mitigating(id);
    REQUIRE(mit);
    CHECK(mit->alert.state == AlertState::Mitigating);
    CHECK_FALSE(detector.mark_mitigating(id));  // only from NEW

    auto res = detector.resolve(id);
    REQUIRE(res);
    CHECK(res->alert.state == AlertState::Resolved);
    CHECK_FALSE(detector.resolve(id));

    // after resolution the same key may alert again
    auto again = detector.ingest(announce("10.0.0.0/23", {64500, 65002}, 500));
    REQUIRE(again.size() == 1);
    CHECK(again[0].alert.id != id);
}

TEST_CASE("distinct origins and kinds get distinct alerts") {
    Detector detector(config_one());
    CHECK(detector.ingest(announce("10.0.0.0/23", {64500, 65002}, 1)).size() == 1);
    CHECK(detector.ingest(announce("10.0.0.0/23", {64500, 65003}, 2)).size() == 1);
    CHECK(detector.ingest(announce("10.0.0.0/24", {64500, 65002}, 3)).size() == 1);
    CHECK(detector.alerts().size() == 3);
}

TEST_CASE("a quorum larger than one delays the raise") {
    Detector detector(config_one(), 2);
    CHECK(detector.ingest(announce("10.0.0.0/23", {64500, 65002}, 100)).empty());
    auto events = detector.ingest(announce("10.0.0.0/23", {64501, 65002}, 120, "VP2"));
    REQUIRE(events.size() == 1);
    CHECK(events[0].alert.detected_at == 120);
    CHECK(events[0].alert.first_seen == 100);
    CHECK(events[0].alert.evidence.size() == 2);
}

TEST_CASE("ingest is deterministic across replays") {
    DetRng rng(31337);
    ObservationStream stream;
    for (int i = 0; i < 200; ++i) {
        AsPath path{64500 + rng.below(3), static_cast<Asn>(65001 + rng.below(3))};
        stream.push_back(announce(rng.below(2) ? "10.0.0.0/23" : "10.0.1.0/24", path,
                                  static_cast<double>(rng.range(0, 400)),
                                  "VP" + std::to_string(rng.below(4))));
    }
    ObservationStream merged = merge({stream});

    auto run = [&] {
        Detector detector(config_one());
        std::vector<std::string> log;
        for (const auto& o : merged)
            for (const auto& ev : detector.ingest(o))
                log.push_back(ev.alert.id + "|" + std::to_string(ev.alert.detected_at) + "|" +
                              to_string(ev.alert.kind) +
                              std::to_string(ev.alert.offending_origin));
        return log;
    };
    auto a = run(), b = run();
    CHECK(a == b);
    CHECK(!a.empty());
}

TEST_CASE("soundness: every alert carries illegitimate evidence") {
    DetRng rng(77);
    auto config = config_one();
    Detector detector(config);
    for (int i = 0; i < 500; ++i) {
        AsPath path{64500, static_cast<Asn>(65000 + rng.below(4))};
        detector.ingest(announce(rng.below(2) ? "10.0.0.0/23" : "10.0.0.0/24", path,
                                 static_cast<double>(i), "VP" + std::to_string(rng.below(3))));
    }
    for (const HijackAlert& alert : detector.alerts()) {
        REQUIRE(!alert.evidence.empty());
        bool illegitimate = std::any_of(
            alert.evidence.begin(), alert.evidence.end(), [&](const RouteObservation& o) {
                return !alert.owned.is_legitimate(o.origin());
            });
        CHECK(illegitimate);
        double min_seen = alert.evidence[0].timestamp;
        for (const auto& o : alert.evidence) min_seen = std::min(min_seen, o.timestamp);
        CHECK(alert.first_seen == min_seen);
    }
}

TEST_CASE("detection latency is measured from the hijack start") {
    Detector detector(config_one());
    auto events = detector.ingest(announce("10.0.0.0/23", {64500, 65002}, 645));
    const HijackAlert& alert = events[0].alert;

    CHECK(detection_latency(alert, 600.0) == 45.0);
    CHECK(detection_latency(alert, 645.0) == 0.0);
    CHECK_THROWS_AS(detection_latency(alert, std::nullopt), UnknownStart);
}

TEST_CASE("detection latency equals the minimum source delay") {
    DetRng rng(2024);
    for (int round = 0; round < 50; ++round) {
        double hijack_start = static_cast<double>(rng.range(0, 1000));
        int k = static_cast<int>(rng.range(1, 6));
        std::vector<double> delays;
        for (int i = 0; i < k; ++i) delays.push_back(static_cast<double>(rng.range(1, 900)));

        std::vector<ObservationStream> streams;
        for (int i = 0; i < k; ++i) {
            RouteObservation o = announce("10.0.0.0/23", {64500, 65002},
                                          hijack_start + delays[i], "VP1",
                                          "src" + std::to_string(i));
            o.timestamp = hijack_start;  // same routing event relayed k times
            streams.push_back({o});
        }
        ObservationStream merged = merge(streams);
        Detector detector(config_one());
        std::vector<AlertEvent> events;
        for (const auto& o : merged)
            for (auto& ev : detector.ingest(o)) events.push_back(std::move(ev));
        REQUIRE(events.size() == 1);

        double expected = *std::min_element(delays.begin(), delays.end());  // brute force
        CHECK(detection_latency(events[0].alert, hijack_start) == expected);
    }
}
