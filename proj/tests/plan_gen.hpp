// Copyright the plantbus authors. Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "plantbus/topology.hpp"

// Random deployment plans for property tests: structurally valid by
// construction, plus mutations that each break one named validation rule.

namespace plantbus::testgen {

class PlanGen {
public:
    explicit PlanGen(std::uint64_t seed) : rng_(seed) {}

    topology::DeploymentPlan validPlan() {
        using namespace topology;
        DeploymentPlan plan;
        const int node_count = 1 + static_cast<int>(rng_() % 3);
        for (int i = 0; i < node_count; ++i) {
            plan.nodes.push_back({"node" + std::to_string(i),
                                  "127.0.0.1:" + std::to_string(7000 + i * 10 + (rng_() % 10))});
        }
        auto anyNode = [&] { return "node" + std::to_string(rng_() % node_count); };

        plan.components.push_back({"org", Level::data_organization, anyNode()});
        const int gw_count = 2 + static_cast<int>(rng_() % 2);
        for (int i = 0; i < gw_count; ++i) {
            plan.components.push_back({"gw" + std::to_string(i), Level::data_stream, anyNode()});
        }
        const int app_count = 1 + static_cast<int>(rng_() % 2);
        for (int i = 0; i < app_count; ++i) {
            plan.components.push_back(
                {"app" + std::to_string(i), Level::application_processing, anyNode()});
        }

        static const Pattern kPatterns[] = {Pattern::rpc, Pattern::event, Pattern::stream,
                                            Pattern::file};
        std::uint32_t next_id = 1;
        for (const auto& c : plan.components) {
            if (c.level == Level::data_organization) continue;
            plan.channels.push_back({next_id++, c.name, "org", kPatterns[rng_() % 4]});
        }
        if (rng_() % 2) {
            plan.channels.push_back({next_id++, "org", "gw0", kPatterns[rng_() % 4]});
        }
        return plan;
    }

    /// Mutates the plan in place; the returned rule must appear among the
    /// violations. Relies on validPlan()'s shape (gw0, gw1, app0 exist and
    /// there are at least three channels).
    std::string breakPlan(topology::DeploymentPlan& plan) {
        using namespace topology;
        switch (rng_() % 9) {
            case 0:
                plan.nodes.push_back(plan.nodes.front());
                return "duplicate-node";
            case 1:
                plan.nodes.front().address = "not an address";
                return "bad-address";
            case 2:
                plan.components.push_back(plan.components.front());
                return "duplicate-component";
            case 3:
                plan.components.back().node = "ghost-node";
                return "unknown-node";
            case 4:
                plan.channels.back().id = plan.channels.front().id;
                return "duplicate-channel-id";
            case 5:
                plan.channels.front().to = plan.channels.front().from;
                return "self-loop";
            case 6:
                plan.channels.front().from = "ghost";
                return "unknown-endpoint";
            case 7:
                plan.channels.push_back({999, "gw0", "gw1", Pattern::event});
                return "level-peer";
            default:
                plan.channels.push_back({998, "gw0", "app0", Pattern::rpc});
                return "level-skip";
        }
    }

    std::mt19937_64& rng() { return rng_; }

private:
    std::mt19937_64 rng_;
};

inline topology::DeploymentPlan collapseToOneNode(topology::DeploymentPlan plan) {
    for (auto& c : plan.components) c.node = plan.nodes.front().name;
    return plan;
}

}  // namespace plantbus::testgen
