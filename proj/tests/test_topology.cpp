// Copyright the plantbus authors. Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#include <doctest.h>

#include <algorithm>
#include <string>

#include "plan_gen.hpp"
#include "plantbus/topology.hpp"

using namespace plantbus;
using namespace plantbus::topology;

namespace {

const char* kGoldenPlan = R"({
  "nodes": [
    {"name": "desk1", "address": "127.0.0.1:7431"},
    {"name": "desk2", "address": "127.0.0.1:7432"}
  ],
  "components": [
    {"name": "gw.teleperm", "level": "data_stream", "node": "desk2"},
    {"name": "hist.main", "level": "data_organization", "node": "desk1"},
    {"name": "app.calc", "level": "application_processing", "node": "desk1"}
  ],
  "channels": [
    {"id": 1, "from": "gw.teleperm", "to": "hist.main"},
    {"id": 2, "from": "app.calc", "to": "hist.main", "pattern": "rpc"}
  ],
  "signals": [
    {"variable": "boiler.feed_temp", "generator": "sine", "amplitude": 15, "period_s": 120, "offset": 460},
    {"variable": "boiler.feed_flow", "generator": "random_walk", "start": 310, "step_sd": 0.8, "seed": 42}
  ],
  "computed": [
    {"output": "boiler.heat_index", "inputs": ["boiler.feed_temp", "boiler.feed_flow"],
     "expr": "boiler.feed_temp * 0.4 + boiler.feed_flow * 0.6"}
  ]
})";

bool hasRule(const std::vector<Violation>& violations, const std::string& rule) {
    return std::any_of(violations.begin(), violations.end(),
                       [&](const Violation& v) { return v.rule == rule; });
}

}  // namespace

TEST_SUITE("topology") {

TEST_CASE("parsePlan fills the golden plan and applies defaults") {
    auto plan = parsePlan(kGoldenPlan);
    REQUIRE(plan.nodes.size() == 2);
    REQUIRE(plan.components.size() == 3);
    REQUIRE(plan.channels.size() == 2);

    CHECK(plan.nodes[0].name == "desk1");
    CHECK(plan.components[0].level == Level::data_stream);
    CHECK(plan.components[1].level == Level::data_organization);
    CHECK(plan.channels[0].pattern == Pattern::stream);  // the default
    CHECK(plan.channels[1].pattern == Pattern::rpc);
    CHECK_FALSE(plan.allow_level_skip);
    CHECK(plan.retention_window_ms == 600'000);
    CHECK(plan.trend_interval_ms == 60'000);
    CHECK(plan.period_ms == 1000);

    REQUIRE(plan.signals.size() == 2);
    CHECK(plan.signals[0].spec.variable.name == "boiler.feed_temp");
    CHECK(plan.signals[0].component == "gw.teleperm");  // sole data_stream component
    auto* sine = std::get_if<gateway::Sine>(&plan.signals[0].spec.generator);
    REQUIRE(sine != nullptr);
    CHECK(sine->amplitude == 15.0);
    CHECK(sine->period_s == 120.0);
    CHECK(sine->offset == 460.0);
    auto* walk = std::get_if<gateway::RandomWalk>(&plan.signals[1].spec.generator);
    REQUIRE(walk != nullptr);
    CHECK(walk->seed == 42);

    REQUIRE(plan.computed.size() == 1);
    CHECK(plan.computed[0].def.output.name == "boiler.heat_index");
    CHECK(plan.computed[0].def.output.kind == rtdb::VarKind::computed);
    CHECK(plan.computed[0].component == "app.calc");
    CHECK(plan.computed[0].def.inputs.size() == 2);

    CHECK(validatePlan(plan).empty());
}

TEST_CASE("malformed JSON reports a byte offset") {
    try {
        parsePlan("{\"nodes\": [");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.byteOffset() > 0);
    }
}

TEST_CASE("schema violations name the offending key") {
    CHECK_THROWS_AS(parsePlan("{}"), SchemaError);
    CHECK_THROWS_AS(parsePlan(R"({"nodes": 5, "components": [], "channels": []})"), SchemaError);
    CHECK_THROWS_AS(
        parsePlan(R"({"nodes": [{"name": "n"}], "components": [], "channels": []})"),
        SchemaError);  // node missing its address
    CHECK_THROWS_AS(parsePlan(R"({"nodes": [], "components": [
        {"name": "c", "level": "no_such_level", "node": "n"}], "channels": []})"),
                    SchemaError);
    CHECK_THROWS_AS(parsePlan(R"({"nodes": [], "components": [], "channels": [
        {"id": 1, "from": "a", "to": "b", "pattern": "carrier_pigeon"}]})"),
                    SchemaError);

    try {
        parsePlan(R"({"nodes": [{"name": "n", "address": "127.0.0.1:7000"}],
                      "components": [
                        {"name": "dup", "level": "data_organization", "node": "n"},
                        {"name": "dup", "level": "data_stream", "node": "n"}],
                      "channels": []})");
        FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
        CHECK(std::string(e.what()).find("dup") != std::string::npos);
    }
}

TEST_CASE("signal and computed ownership must be resolvable") {
    // Two data_stream components, no "component" key: ambiguous.
    CHECK_THROWS_AS(parsePlan(R"({"nodes": [{"name": "n", "address": "127.0.0.1:7000"}],
        "components": [
          {"name": "gw1", "level": "data_stream", "node": "n"},
          {"name": "gw2", "level": "data_stream", "node": "n"},
          {"name": "org", "level": "data_organization", "node": "n"}],
        "channels": [],
        "signals": [{"variable": "v", "generator": "constant", "value": 1}]})"),
                    SchemaError);

    // An explicit component key resolves it.
    auto plan = parsePlan(R"({"nodes": [{"name": "n", "address": "127.0.0.1:7000"}],
        "components": [
          {"name": "gw1", "level": "data_stream", "node": "n"},
          {"name": "gw2", "level": "data_stream", "node": "n"},
          {"name": "org", "level": "data_organization", "node": "n"}],
        "channels": [],
        "signals": [{"variable": "v", "generator": "constant", "value": 1, "component": "gw2"}]})");
    CHECK(plan.signals[0].component == "gw2");
}

TEST_CASE("validatePlan reports each broken rule by name") {
    auto base = parsePlan(kGoldenPlan);

    SUBCASE("level-skip") {
        auto plan = base;
        plan.channels.push_back({3, "app.calc", "gw.teleperm", Pattern::rpc});
        auto violations = validatePlan(plan);
        CHECK(hasRule(violations, "level-skip"));
    }
    SUBCASE("level-peer") {
        auto plan = base;
        plan.components.push_back({"gw.other", Level::data_stream, "desk1"});
        plan.channels.push_back({3, "gw.teleperm", "gw.other", Pattern::event});
        CHECK(hasRule(validatePlan(plan), "level-peer"));
    }
    SUBCASE("allow_level_skip suppresses the ordering rules") {
        auto plan = base;
        plan.components.push_back({"gw.other", Level::data_stream, "desk1"});
        plan.channels.push_back({3, "app.calc", "gw.teleperm", Pattern::rpc});
        plan.channels.push_back({4, "gw.teleperm", "gw.other", Pattern::event});
        plan.allow_level_skip = true;
        CHECK(validatePlan(plan).empty());
    }
    SUBCASE("unknown-endpoint") {
        auto plan = base;
        plan.channels.push_back({3, "nobody", "hist.main", Pattern::rpc});
        CHECK(hasRule(validatePlan(plan), "unknown-endpoint"));
    }
    SUBCASE("self-loop") {
        auto plan = base;
        plan.channels.push_back({3, "hist.main", "hist.main", Pattern::rpc});
        CHECK(hasRule(validatePlan(plan), "self-loop"));
    }
    SUBCASE("duplicate-channel-id") {
        auto plan = base;
        plan.channels.push_back({1, "app.calc", "hist.main", Pattern::event});
        CHECK(hasRule(validatePlan(plan), "duplicate-channel-id"));
    }
    SUBCASE("unknown-node") {
        auto plan = base;
        plan.components[0].node = "ghost";
        CHECK(hasRule(validatePlan(plan), "unknown-node"));
    }
    SUBCASE("bad-address") {
        auto plan = base;
        plan.nodes[0].address = "localhost";
        CHECK(hasRule(validatePlan(plan), "bad-address"));
    }
    SUBCASE("signal rules") {
        auto plan = base;
        plan.signals[0].component = "app.calc";  // not a data_stream component
        CHECK(hasRule(validatePlan(plan), "wrong-level"));

        plan = base;
        plan.signals.push_back(plan.signals[0]);
        CHECK(hasRule(validatePlan(plan), "duplicate-variable"));

        plan = base;
        plan.computed[0].def.inputs.push_back("never.registered");
        CHECK(hasRule(validatePlan(plan), "unknown-input"));
    }
}

TEST_CASE("violations carry the offending element") {
    auto plan = parsePlan(kGoldenPlan);
    plan.channels.push_back({7, "app.calc", "gw.teleperm", Pattern::rpc});
    auto violations = validatePlan(plan);
    REQUIRE_FALSE(violations.empty());
    bool found = false;
    for (const auto& v : violations) {
        if (v.rule == "level-skip") {
            found = true;
            CHECK(v.element.find("7") != std::string::npos);
            CHECK_FALSE(v.detail.empty());
        }
    }
    CHECK(found);
}

TEST_CASE("deriveBindings follows node placement") {
    auto plan = parsePlan(kGoldenPlan);
    auto bindings = deriveBindings(plan);
    REQUIRE(bindings.size() == 2);
    // gw.teleperm on desk2 feeds hist.main on desk1: network at desk1.
    CHECK(bindings.at(1).mode == session::BindingMode::network);
    CHECK(bindings.at(1).address == "127.0.0.1:7431");
    // app.calc and hist.main share desk1.
    CHECK(bindings.at(2).mode == session::BindingMode::in_process);
    CHECK(bindings.at(2).address.empty());
}

TEST_CASE("deriveBindings refuses an invalid plan") {
    auto plan = parsePlan(kGoldenPlan);
    plan.channels.push_back({3, "app.calc", "gw.teleperm", Pattern::rpc});
    CHECK_THROWS_AS(deriveBindings(plan), UnvalidatedPlanError);
}

TEST_CASE("random valid plans validate clean and bind totally") {
    testgen::PlanGen gen(0xA11CE);
    for (int round = 0; round < 100; ++round) {
        auto plan = gen.validPlan();
        auto violations = validatePlan(plan);
        CHECK(violations.empty());

        auto bindings = deriveBindings(plan);
        CHECK(bindings.size() == plan.channels.size());
        for (const auto& chan : plan.channels) {
            auto from = plan.findComponent(chan.from);
            auto to = plan.findComponent(chan.to);
            const auto& binding = bindings.at(chan.id);
            if (from->node == to->node) {
                CHECK(binding.mode == session::BindingMode::in_process);
            } else {
                CHECK(binding.mode == session::BindingMode::network);
                CHECK(binding.address == plan.findNode(to->node)->address);
            }
        }
    }
}

TEST_CASE("each breaking mutation is caught by its rule") {
    testgen::PlanGen gen(0xBEEF);
    for (int round = 0; round < 200; ++round) {
        auto plan = gen.validPlan();
        auto expected = gen.breakPlan(plan);
        auto violations = validatePlan(plan);
        REQUIRE_FALSE(violations.empty());
        INFO("expected rule: ", expected);
        CHECK(hasRule(violations, expected));
    }
}

TEST_CASE("collapsing to one node leaves the logical layer untouched") {
    testgen::PlanGen gen(0xC0FFEE);
    for (int round = 0; round < 50; ++round) {
        auto plan = gen.validPlan();
        auto collapsed = testgen::collapseToOneNode(plan);
        CHECK(collapsed.channels == plan.channels);
        CHECK(collapsed.nodes == plan.nodes);
        for (const auto& binding : deriveBindings(collapsed)) {
            CHECK(binding.second.mode == session::BindingMode::in_process);
        }
    }
}

}  // TEST_SUITE
