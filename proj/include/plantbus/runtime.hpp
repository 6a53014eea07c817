// Copyright the plantbus authors. Licensed under the terms of the Apache 2.0
// license. See LICENSE in the project root.
#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "plantbus/appmods.hpp"
#include "plantbus/errors.hpp"
#include "plantbus/latency.hpp"
#include "plantbus/rtdb.hpp"
#include "plantbus/session.hpp"
#include "plantbus/topology.hpp"
#include "plantbus/trend_io.hpp"

// Orchestration over a deployment plan: boot the components a plan places on
// one node (run-node) or on every node at once (scenario), wire their
// channels per the derived bindings, and drive the acquisition/evaluation/
// retention/persistence cycle. The scenario path runs on a simulated clock,
// so two runs of one plan are identical; node runtimes use the wall clock.

namespace plantbus::harness {

class BootFailureError : public Error {
public:
    using Error::Error;
};

/// Store access over a session channel. Errors raised by the remote store
/// come back as typed rtdb errors, so callers cannot tell this client from
/// the in-process one.
class RemoteStoreClient final : public appmods::StoreClient {
public:
    explicit RemoteStoreClient(session::Channel channel, std::int64_t timeout_ms = 30'000);

    void registerVariable(const std::string& name, rtdb::VarKind kind) override;
    bool insert(const rtdb::Sample& sample) override;
    std::optional<rtdb::Sample> latest(const std::string& variable) override;
    std::vector<rtdb::Sample> range(const std::string& variable, std::int64_t t0, std::int64_t t1);

private:
    session::Channel channel_;
    std::int64_t timeout_ms_;
};

/// The data_organization component: owns the store, answers every session
/// pattern on attached channels, and persists closed trend intervals. Every
/// variable the plan declares (signals are raw data) is registered at
/// construction; computed outputs arrive later through register calls.
class StoreHost {
public:
    StoreHost(const topology::ComponentDecl& component, const topology::DeploymentPlan& plan,
              const std::string& trend_dir, bool truncate_trends);
    ~StoreHost();

    StoreHost(const StoreHost&) = delete;
    StoreHost& operator=(const StoreHost&) = delete;

    rtdb::Store& store();
    const rtdb::Store& store() const;
    const std::string& componentName() const { return component_; }
    const std::string& trendFilePath() const { return trend_path_; }

    /// Wires the channel to the store: rpc serves register/insert/latest/
    /// range/echo, stream and event frames feed inserts, inbound files are
    /// accepted and counted. Safe to call from acceptor threads.
    void attach(session::Channel channel, topology::Pattern pattern);

    /// Rolls up and persists every interval that closed before now_ms.
    /// Returns the number of trend points written.
    std::size_t persistClosed(std::int64_t now_ms);

    std::size_t enforceRetention(std::int64_t now_ms);

    std::uint64_t received() const;
    std::uint64_t accepted() const;

private:
    // Channel workers share ownership of the core, so a handler running
    // while the host is torn down still touches live state.
    struct Core;
    std::string component_;
    std::string trend_path_;
    std::shared_ptr<Core> core_;
    std::mutex attach_mu_;
    std::vector<session::Channel> channels_;
    std::vector<session::Registration> registrations_;
};

struct ScenarioOptions {
    std::int64_t clock_start_ms = 0;
    std::uint64_t seed = 0;  // nonzero: XORed into every random_walk seed
    std::string trend_dir = "./trends";
    bool measure_ingest = true;
};

struct ScenarioResult {
    std::int64_t duration_ms = 0;
    std::uint64_t emitted = 0;
    std::uint64_t stored = 0;
    std::uint64_t evicted = 0;
    std::uint64_t trend_points = 0;
    std::uint64_t computed_evaluations = 0;
    std::vector<LatencyReport> latency;

    // Inspection handles for differential tests; not part of the JSON view.
    std::map<std::string, std::vector<rtdb::Sample>> final_samples;
    std::vector<std::string> trend_files;
};

/// Boots every component of the plan inside this process (network bindings
/// become real loopback connections), runs `ticks` acquisition cycles on the
/// simulated clock, and tears everything down. The plan must validate and
/// place exactly one data_organization component.
ScenarioResult runScenario(const topology::DeploymentPlan& plan, std::int64_t ticks,
                           const ScenarioOptions& options = {});

/// The ingest-visibility report of a scenario run: per sample, wall-clock
/// time from emission to visibility through latest().
LatencyReport measureIngestLatency(const topology::DeploymentPlan& plan, std::int64_t ticks,
                                   const ScenarioOptions& options = {});

/// Channel id used by query tools. Not part of any plan; the store node's
/// listener serves its RPC interface on channels it never planned.
inline constexpr std::uint32_t kAdminChannelId = 0xFFFFFFFE;

/// One node's long-running half of a plan: the store node listens and
/// persists on a timer; gateway and application nodes connect out and drive
/// their components on the wall clock.
class NodeRuntime {
public:
    NodeRuntime(const topology::DeploymentPlan& plan, const std::string& node,
                const std::string& trend_dir);
    ~NodeRuntime();

    NodeRuntime(const NodeRuntime&) = delete;
    NodeRuntime& operator=(const NodeRuntime&) = delete;

    /// Runs the node's periodic work until stop() or, when tick_limit > 0,
    /// for that many periods.
    void run(std::int64_t tick_limit = 0);
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace plantbus::harness
