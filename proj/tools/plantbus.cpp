// Copyright the plantbus authors. Licensed under the terms of the Apache 2.0
// license. See LICENSE in the project root.
#include <pthread.h>

#include <csignal>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "plantbus/json_io.hpp"
#include "plantbus/runtime.hpp"

namespace harness = plantbus::harness;
namespace rtdb = plantbus::rtdb;
namespace session = plantbus::session;
namespace topo = plantbus::topology;

namespace {

std::string trendDir() {
    const char* env = std::getenv("PLANTBUS_TREND_DIR");
    return (env != nullptr && *env != '\0') ? env : "./trends";
}

topo::DeploymentPlan loadPlan(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw topo::SchemaError("cannot open plan file: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return topo::parsePlan(buffer.str());
}

const topo::ComponentDecl& storeComponent(const topo::DeploymentPlan& plan) {
    for (const auto& component : plan.components) {
        if (component.level == topo::Level::data_organization) return component;
    }
    throw harness::BootFailureError("plan has no data_organization component");
}

// Queries ride an unplanned channel id that the store node's listener maps
// to its rpc surface.
session::Channel adminChannel(const topo::DeploymentPlan& plan) {
    const auto& org = storeComponent(plan);
    auto node = plan.findNode(org.node);
    if (!node) {
        throw harness::BootFailureError("store component " + org.name +
                                        " sits on undeclared node " + org.node);
    }
    session::Binding binding{session::BindingMode::network, node->address};
    return session::openChannel(binding, harness::kAdminChannelId);
}

void blockStopSignals(sigset_t* set) {
    sigemptyset(set);
    sigaddset(set, SIGINT);
    sigaddset(set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, set, nullptr);
}

int cmdRunNode(const std::string& plan_path, const std::string& node, std::int64_t max_ticks) {
    sigset_t stop_signals;
    blockStopSignals(&stop_signals);
    auto plan = loadPlan(plan_path);
    harness::NodeRuntime runtime(plan, node, trendDir());
    if (max_ticks > 0) {
        runtime.run(max_ticks);
        return 0;
    }
    std::thread watcher([&stop_signals, &runtime] {
        int sig = 0;
        sigwait(&stop_signals, &sig);
        runtime.stop();
    });
    try {
        runtime.run();
    } catch (...) {
        pthread_kill(watcher.native_handle(), SIGTERM);
        watcher.join();
        throw;
    }
    watcher.join();
    return 0;
}

int cmdScenario(const std::string& plan_path, std::int64_t ticks, std::uint64_t seed) {
    auto plan = loadPlan(plan_path);
    harness::ScenarioOptions options;
    options.seed = seed;
    options.trend_dir = trendDir();
    auto result = harness::runScenario(plan, ticks, options);
    std::cout << nlohmann::json(result).dump() << "\n";
    return 0;
}

int cmdQueryLatest(const std::string& plan_path, const std::string& variable) {
    auto plan = loadPlan(plan_path);
    auto channel = adminChannel(plan);
    harness::RemoteStoreClient client(channel);
    auto sample = client.latest(variable);
    nlohmann::json line;
    if (sample) {
        line = *sample;
    } else {
        line = nlohmann::json{{"no_data", true}, {"variable", variable}};
    }
    std::cout << line.dump() << "\n";
    return 0;
}

int cmdQueryRange(const std::string& plan_path, const std::string& variable, std::int64_t from,
                  std::int64_t to) {
    auto plan = loadPlan(plan_path);
    auto channel = adminChannel(plan);
    harness::RemoteStoreClient client(channel);
    for (const auto& sample : client.range(variable, from, to)) {
        std::cout << nlohmann::json(sample).dump() << "\n";
    }
    return 0;
}

// Trends are read straight from the persisted file, no running node needed.
int cmdQueryTrend(const std::string& plan_path, const std::string& variable, std::int64_t from,
                  std::int64_t to) {
    auto plan = loadPlan(plan_path);
    const auto& org = storeComponent(plan);
    rtdb::TrendFileStream stream(trendDir() + "/" + org.name + ".trends");
    for (const auto& point : rtdb::readTrendRecords(stream)) {
        if (point.variable.name != variable) continue;
        if (point.interval_start_ms < from || point.interval_start_ms >= to) continue;
        std::cout << nlohmann::json(point).dump() << "\n";
    }
    return 0;
}

int cmdPerfRpc(const std::string& target, std::size_t n, std::size_t payload) {
    session::Binding binding{session::BindingMode::network, target};
    auto channel = session::openChannel(binding, harness::kAdminChannelId);
    auto report = harness::measureRpc(channel, n, payload);
    std::cout << nlohmann::json(report).dump() << "\n";
    return 0;
}

int cmdPerfServe(std::uint16_t port) {
    sigset_t stop_signals;
    blockStopSignals(&stop_signals);
    auto listener = session::Listener::listen(port, [](session::Endpoint endpoint) {
        endpoint.setChannelAcceptor([](session::Channel channel) {
            channel.serve("echo", [](const std::vector<std::uint8_t>& args) { return args; });
        });
    });
    std::cout << nlohmann::json{{"listening", listener->port()}}.dump() << "\n" << std::flush;
    int sig = 0;
    sigwait(&stop_signals, &sig);
    listener->stop();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"plant data integration middleware"};
    app.require_subcommand(1);

    std::string plan_path;
    std::string node_name;
    std::string variable;
    std::string target;
    std::int64_t ticks = 0;
    std::uint64_t seed = 0;
    std::int64_t max_ticks = 0;
    std::int64_t from = std::numeric_limits<std::int64_t>::min();
    std::int64_t to = std::numeric_limits<std::int64_t>::max();
    std::size_t count = 0;
    std::size_t payload = 0;
    std::uint16_t port = 0;

    auto* run_node = app.add_subcommand("run-node", "boot one node's components and serve");
    run_node->add_option("--plan", plan_path, "deployment plan JSON file")->required();
    run_node->add_option("--node", node_name, "node name from the plan")->required();
    run_node->add_option("--max-ticks", max_ticks, "stop after this many periods (0: run forever)");

    auto* scenario = app.add_subcommand("scenario", "single-process run of the whole plan");
    scenario->add_option("--plan", plan_path, "deployment plan JSON file")->required();
    scenario->add_option("--ticks", ticks, "number of acquisition ticks")->required();
    scenario->add_option("--seed", seed, "mixed into every random_walk seed");

    auto* query = app.add_subcommand("query", "query a running store or the trend files");
    query->require_subcommand(1);
    auto* q_latest = query->add_subcommand("latest", "newest sample of a variable");
    auto* q_range = query->add_subcommand("range", "retained samples in [from, to]");
    auto* q_trend = query->add_subcommand("trend", "persisted trend points in [from, to)");
    for (auto* sub : {q_latest, q_range, q_trend}) {
        sub->add_option("--plan", plan_path, "deployment plan JSON file")->required();
        sub->add_option("--var", variable, "variable name")->required();
    }
    for (auto* sub : {q_range, q_trend}) {
        sub->add_option("--from", from, "start of the window, ms");
        sub->add_option("--to", to, "end of the window, ms");
    }

    auto* perf = app.add_subcommand("perf", "a-posteriori performance measurement");
    perf->require_subcommand(1);
    auto* p_rpc = perf->add_subcommand("rpc", "sequential echo round-trips against a listener");
    p_rpc->add_option("--target", target, "host:port of the responder")->required();
    p_rpc->add_option("--n", count, "number of calls")->required();
    p_rpc->add_option("--payload", payload, "request payload size in bytes")->required();
    auto* p_serve = perf->add_subcommand("serve", "standalone echo responder");
    p_serve->add_option("--port", port, "listening port (0 picks one)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (run_node->parsed()) return cmdRunNode(plan_path, node_name, max_ticks);
        if (scenario->parsed()) return cmdScenario(plan_path, ticks, seed);
        if (q_latest->parsed()) return cmdQueryLatest(plan_path, variable);
        if (q_range->parsed()) return cmdQueryRange(plan_path, variable, from, to);
        if (q_trend->parsed()) return cmdQueryTrend(plan_path, variable, from, to);
        if (p_rpc->parsed()) return cmdPerfRpc(target, count, payload);
        if (p_serve->parsed()) return cmdPerfServe(port);
    } catch (const topo::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const topo::SchemaError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const topo::UnvalidatedPlanError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const harness::BootFailureError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const plantbus::gateway::InvalidSpecError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const plantbus::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
