#include <doctest.h>

#include "servsim/control.hpp"

using namespace servsim;
using nlohmann::json;

namespace {

SimConfig manual() {
    SimConfig c;
    c.workload.mode = WorkloadMode::Manual;
    return c;
}

std::string error_of(const json& reply) {
    REQUIRE(reply.at("ok") == false);
    return reply.at("error").get<std::string>();
}

}  // namespace

TEST_SUITE("control") {

TEST_CASE("every reply carries ok and kind") {
    Controller c(manual());
    const auto ok = c.apply(json{{"kind", "Start"}});
    CHECK(ok.at("ok") == true);
    CHECK(ok.at("kind") == "Start");
    CHECK(ok.at("t") == 0);
    CHECK(c.running());
    c.apply(json{{"kind", "Pause"}});
    CHECK_FALSE(c.running());
}

TEST_CASE("malformed commands are rejected with a code") {
    Controller c(manual());
    CHECK(error_of(c.apply(json{{"kind", "Explode"}})) == "UnknownCommand");
    CHECK(error_of(c.apply(json{{"n", 3}})) == "UnknownCommand");
    CHECK(error_of(c.apply(json("Start"))) == "InvalidConfig");
    CHECK(error_of(c.apply(json{{"kind", "FailNode"}, {"node", "X7"}})) == "UnknownNode");
    CHECK(error_of(c.apply(json{{"kind", "FailNode"}, {"node", "N7"}})) == "UnknownNode");
    CHECK(error_of(c.apply(json{{"kind", "UpdateConfig"}, {"patch", {{"max_nodes", 0}}}})) == "InvalidConfig");
    CHECK(error_of(c.apply(json{{"kind", "UpdateConfig"}, {"patch", 5}})) == "InvalidConfig");
    CHECK(error_of(c.apply(json{{"kind", "InjectRequests"}, {"n", 0}})) == "InvalidConfig");
    CHECK(error_of(c.apply(json{{"kind", "InjectRequests"}, {"function_type", "zzz"}})) == "UnknownFunctionType");
    CHECK(error_of(c.apply(json{{"kind", "StepLockstep"}, {"dt", 100}})) == "InvalidConfig");
    CHECK(error_of(c.apply(json{{"kind", "Reset"}, {"scenario", "nope"}})) == "UnknownScenario");
    // A rejected command leaves no trace in the log.
    CHECK(c.simulation()->kernel().log().empty());
}

TEST_CASE("inject returns the new request ids") {
    Controller c(manual());
    const auto reply = c.apply(json{{"kind", "InjectRequests"}, {"n", 3}, {"function_type", "f"}});
    CHECK(reply.at("result") == json{"R1", "R2", "R3"});
}

TEST_CASE("FailNode via a command matches the direct call") {
    SimConfig cfg = load_scenario("node-failure-drill").config;
    cfg.scripted_failures.clear();
    Controller c(cfg);
    c.advance_unconditionally(5000);
    const auto reply = c.apply(json{{"kind", "FailNode"}, {"node", "N1"}});
    REQUIRE(reply.at("ok") == true);

    Simulation direct(cfg);
    direct.run_until(5000);
    const auto report = direct.fail_node(NodeId{1});
    CHECK(reply.at("result").at("failed_requests").size() == report.failed_requests.size());
    c.advance_unconditionally(5000);
    direct.run_until(10000);
    CHECK(c.simulation()->export_csv() == direct.export_csv());
    CHECK(c.simulation()->event_log_ndjson() == direct.event_log_ndjson());
}

TEST_CASE("advance is a no-op while paused") {
    Controller c(load_scenario("steady-state").config);
    c.advance(1000);
    CHECK(c.now() == 0);
    c.apply(json{{"kind", "Start"}});
    c.advance(1000);
    CHECK(c.now() == 1000);
}

TEST_CASE("Reset rebuilds the arena and bumps the generation") {
    Controller c(load_scenario("steady-state").config);
    c.advance_unconditionally(3000);
    const auto g = c.generation();
    REQUIRE(c.apply(json{{"kind", "Reset"}, {"scenario", "cold-start-burst"}, {"seed", 99}}).at("ok") == true);
    CHECK(c.now() == 0);
    CHECK(c.generation() == g + 1);
    CHECK(c.simulation()->config().seed == 99);
    CHECK(c.simulation()->config().workload == load_scenario("cold-start-burst").config.workload);
}

TEST_CASE("battleground commands need an arena where it matters") {
    Controller c(load_scenario("strategy-duel").config);
    const json create{{"kind", "CreateBattleground"},
                      {"config_a", "strategy-duel"},
                      {"config_b", [] {
                           auto j = to_json(load_scenario("strategy-duel").config);
                           j["routing_strategy"] = "round_robin";
                           return j;
                       }()},
                      {"seed", 5}};
    REQUIRE(c.apply(create).at("ok") == true);
    CHECK(c.battleground_mode());
    CHECK(c.battleground()->arena("B").config().routing_strategy == RoutingKind::RoundRobin);

    const auto step = c.apply(json{{"kind", "StepLockstep"}, {"dt", 5000}});
    REQUIRE(step.at("ok") == true);
    CHECK(step.at("t") == 5000);
    CHECK(step.at("result").at("events").at("A").get<int>() > 0);

    CHECK(error_of(c.apply(json{{"kind", "FailNode"}, {"node", "N1"}})) == "InvalidConfig");
    CHECK(error_of(c.apply(json{{"kind", "FailNode"}, {"node", "N1"}, {"arena", "Z"}})) == "UnknownCommand");
    CHECK(c.apply(json{{"kind", "FailNode"}, {"node", "N1"}, {"arena", "B"}}).at("ok") == true);

    const auto state = c.state_json();
    CHECK(state.at("mode") == "battleground");
    CHECK(state.at("arenas").contains("A"));
    CHECK(c.metrics_json().at("arenas").size() == 2);
    CHECK(c.export_csv().find("arena,request_id") != std::string::npos);

    REQUIRE(c.apply(json{{"kind", "Reset"}}).at("ok") == true);
    CHECK_FALSE(c.battleground_mode());
}

TEST_CASE("stream sink follows arena replacement") {
    Controller c(load_scenario("steady-state").config);
    std::map<std::string, int> seen;
    c.set_stream_sink([&](const std::string& arena, const SimEvent&, std::size_t, std::span<const StateDelta>) {
        ++seen[arena];
    });
    c.advance_unconditionally(2000);
    CHECK(seen[""] > 0);
    c.apply(json{{"kind", "CreateBattleground"}, {"scenario", "strategy-duel"}});
    c.advance_unconditionally(2000);
    CHECK(seen["A"] > 0);
    CHECK(seen["B"] == seen["A"]);
}

}
