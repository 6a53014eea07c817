// Copyright the plantbus authors. Licensed under the terms of the Apache 2.0
// license. See LICENSE in the project root.
#include "plantbus/runtime.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <thread>
#include <utility>
#include <variant>

#include "plantbus/bytes.hpp"
#include "plantbus/gateway.hpp"
#include "plantbus/wire.hpp"

namespace plantbus::harness {

namespace {

std::int64_t floorDiv(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    std::int64_t r = a % b;
    if (r != 0 && ((r < 0) != (b < 0))) --q;
    return q;
}

// The store's errors cross the wire as text; turn the known ones back into
// the types local callers would have seen.
[[noreturn]] void rethrowStoreError(const session::RemoteError& e) {
    const std::string what = e.what();
    auto has = [&](const char* text) { return what.find(text) != std::string::npos; };
    if (has("unknown variable")) throw rtdb::UnknownVariableError(what);
    if (has("already registered")) throw rtdb::DuplicateNameError(what);
    if (has("non-finite")) throw rtdb::NonFiniteValueError(what);
    if (has("invalid variable name")) throw rtdb::InvalidNameError(what);
    if (has("t0 > t1")) throw rtdb::InvalidRangeError(what);
    throw;
}

}  // namespace

RemoteStoreClient::RemoteStoreClient(session::Channel channel, std::int64_t timeout_ms)
    : channel_(std::move(channel)), timeout_ms_(timeout_ms) {}

void RemoteStoreClient::registerVariable(const std::string& name, rtdb::VarKind kind) {
    try {
        channel_.call("register", wire::encodeRegisterArgs(name, kind), timeout_ms_);
    } catch (const session::RemoteError& e) {
        rethrowStoreError(e);
    }
}

bool RemoteStoreClient::insert(const rtdb::Sample& sample) {
    std::vector<std::uint8_t> args;
    wire::encodeSample(args, sample);
    try {
        return wire::decodeBool(channel_.call("insert", args, timeout_ms_));
    } catch (const session::RemoteError& e) {
        rethrowStoreError(e);
    }
}

std::optional<rtdb::Sample> RemoteStoreClient::latest(const std::string& variable) {
    try {
        return wire::decodeOptionalSample(
            channel_.call("latest", wire::encodeNameArg(variable), timeout_ms_));
    } catch (const session::RemoteError& e) {
        rethrowStoreError(e);
    }
}

std::vector<rtdb::Sample> RemoteStoreClient::range(const std::string& variable, std::int64_t t0,
                                                   std::int64_t t1) {
    try {
        return wire::decodeSampleList(
            channel_.call("range", wire::encodeRangeArgs(variable, t0, t1), timeout_ms_));
    } catch (const session::RemoteError& e) {
        rethrowStoreError(e);
    }
}

struct StoreHost::Core {
    rtdb::Store store;
    rtdb::TrendFileStream trend_stream;
    rtdb::TrendWriter trend_writer;
    std::mutex persist_mu;
    std::int64_t horizon_ms = 0;
    bool horizon_set = false;
    std::atomic<std::uint64_t> received{0};
    std::atomic<std::uint64_t> accepted{0};

    Core(const topology::DeploymentPlan& plan, const std::string& trend_path)
        : store(rtdb::RetentionPolicy{plan.retention_window_ms, 1'000'000},
                plan.trend_interval_ms),
          trend_stream(trend_path),
          trend_writer(trend_stream) {}

    bool insertSample(const rtdb::Sample& sample) {
        received.fetch_add(1, std::memory_order_relaxed);
        bool stored = store.insert(sample);
        if (stored) accepted.fetch_add(1, std::memory_order_relaxed);
        return stored;
    }

    bool insertPayload(const std::vector<std::uint8_t>& payload) {
        bytes::Reader reader(payload);
        rtdb::Sample sample = wire::decodeSample(reader);
        if (reader.remaining() != 0) throw wire::WireError("trailing bytes after sample");
        return insertSample(sample);
    }
};

StoreHost::StoreHost(const topology::ComponentDecl& component,
                     const topology::DeploymentPlan& plan, const std::string& trend_dir,
                     bool truncate_trends)
    : component_(component.name) {
    std::filesystem::create_directories(trend_dir);
    trend_path_ = (std::filesystem::path(trend_dir) / (component_ + ".trends")).string();
    if (truncate_trends) {
        std::ofstream out(trend_path_, std::ios::trunc | std::ios::binary);
    }
    core_ = std::make_shared<Core>(plan, trend_path_);
    for (const auto& signal : plan.signals) {
        core_->store.registerVariable(signal.spec.variable.name, rtdb::VarKind::raw);
    }
}

StoreHost::~StoreHost() {
    std::lock_guard<std::mutex> lk(attach_mu_);
    for (auto& registration : registrations_) registration.cancel();
    for (auto& channel : channels_) channel.close();
}

rtdb::Store& StoreHost::store() { return core_->store; }
const rtdb::Store& StoreHost::store() const { return core_->store; }

std::size_t StoreHost::enforceRetention(std::int64_t now_ms) {
    return core_->store.enforceRetention(now_ms);
}

std::uint64_t StoreHost::received() const { return core_->received.load(); }
std::uint64_t StoreHost::accepted() const { return core_->accepted.load(); }

void StoreHost::attach(session::Channel channel, topology::Pattern pattern) {
    auto core = core_;
    std::vector<session::Registration> regs;
    switch (pattern) {
        case topology::Pattern::rpc:
            regs.push_back(channel.serve("register", [core](const std::vector<std::uint8_t>& args) {
                auto [name, kind] = wire::decodeRegisterArgs(args);
                core->store.registerVariable(name, kind);
                return std::vector<std::uint8_t>{};
            }));
            regs.push_back(channel.serve("insert", [core](const std::vector<std::uint8_t>& args) {
                return wire::encodeBool(core->insertPayload(args));
            }));
            regs.push_back(channel.serve("latest", [core](const std::vector<std::uint8_t>& args) {
                return wire::encodeOptionalSample(core->store.latest(wire::decodeNameArg(args)));
            }));
            regs.push_back(channel.serve("range", [core](const std::vector<std::uint8_t>& args) {
                auto range = wire::decodeRangeArgs(args);
                return wire::encodeSampleList(core->store.range(range.name, range.t0, range.t1));
            }));
            regs.push_back(channel.serve(
                "echo", [](const std::vector<std::uint8_t>& args) { return args; }));
            break;
        case topology::Pattern::event:
            regs.push_back(channel.subscribe([core](const std::vector<std::uint8_t>& payload) {
                core->insertPayload(payload);
            }));
            break;
        case topology::Pattern::stream: {
            session::StreamEvents events;
            events.on_data = [core](std::uint64_t, const std::vector<std::uint8_t>& payload) {
                core->insertPayload(payload);
            };
            channel.onStream(events);
            break;
        }
        case topology::Pattern::file:
            channel.onFile(
                [core](const session::IncomingFile&) { core->received.fetch_add(1); });
            break;
    }
    std::lock_guard<std::mutex> lk(attach_mu_);
    channels_.push_back(std::move(channel));
    for (auto& reg : regs) registrations_.push_back(std::move(reg));
}

std::size_t StoreHost::persistClosed(std::int64_t now_ms) {
    auto& core = *core_;
    std::lock_guard<std::mutex> lk(core.persist_mu);
    const std::int64_t len = core.store.trendIntervalMs();
    const std::int64_t closed_end = floorDiv(now_ms, len) * len;
    if (!core.horizon_set) {
        // Persistence starts at the oldest retained sample's interval.
        core.horizon_ms = closed_end;
        for (const auto& name : core.store.variableNames()) {
            auto samples = core.store.range(name, std::numeric_limits<std::int64_t>::min(),
                                            std::numeric_limits<std::int64_t>::max());
            if (!samples.empty()) {
                core.horizon_ms = std::min(
                    core.horizon_ms, floorDiv(samples.front().timestamp_ms, len) * len);
            }
        }
        core.horizon_set = true;
    }
    if (closed_end <= core.horizon_ms) return 0;
    std::vector<rtdb::TrendPoint> points;
    for (const auto& name : core.store.variableNames()) {
        auto part = core.store.rollup(name, core.horizon_ms, closed_end, len);
        points.insert(points.end(), part.begin(), part.end());
    }
    core.horizon_ms = closed_end;
    return core.trend_writer.persist(points);
}

namespace {

struct SignalRunner {
    gateway::SignalSpec spec;
    std::optional<gateway::RandomWalkCursor> cursor;
};

struct EmitRecord {
    std::string variable;
    std::chrono::steady_clock::time_point emitted_at;
};

// One data_stream component and its channel into the store.
struct GatewayRunner {
    std::string component;
    topology::Pattern pattern = topology::Pattern::stream;
    session::Channel channel;
    std::optional<session::StreamHandle> stream;
    std::unique_ptr<RemoteStoreClient> rpc;
    std::vector<SignalRunner> signals;

    void openTransport() {
        if (pattern == topology::Pattern::stream) {
            stream = channel.openStream();
        } else if (pattern == topology::Pattern::rpc) {
            rpc = std::make_unique<RemoteStoreClient>(channel);
        }
    }

    void emitTick(std::int64_t tick, std::int64_t t_ms, std::vector<EmitRecord>* records) {
        for (auto& runner : signals) {
            rtdb::Sample sample;
            sample.variable = {runner.spec.variable.name, rtdb::VarKind::raw};
            sample.timestamp_ms = t_ms;
            // Walks advance through the cursor so a run costs O(ticks); the
            // accumulation order matches the pure form bit for bit.
            sample.value = runner.cursor
                               ? (tick == 0 ? runner.cursor->value() : runner.cursor->next())
                               : gateway::sampleSignal(runner.spec, t_ms, tick);
            sample.quality = rtdb::Quality::good;
            const auto emitted_at = std::chrono::steady_clock::now();
            switch (pattern) {
                case topology::Pattern::stream: {
                    std::vector<std::uint8_t> payload;
                    wire::encodeSample(payload, sample);
                    stream->send(payload);
                    break;
                }
                case topology::Pattern::event: {
                    std::vector<std::uint8_t> payload;
                    wire::encodeSample(payload, sample);
                    channel.publish(payload);
                    break;
                }
                case topology::Pattern::rpc:
                    rpc->insert(sample);
                    break;
                case topology::Pattern::file:
                    break;  // rejected at boot
            }
            if (records) records->push_back({runner.spec.variable.name, emitted_at});
        }
    }
};

// One application_processing component and its rpc channel into the store.
struct AppRunner {
    std::string component;
    session::Channel channel;
    std::shared_ptr<appmods::StoreClient> client;
    std::vector<appmods::ComputedHandle> handles;
};

struct IngestCollector {
    bool enabled = false;
    std::vector<double> samples_us;
};

void awaitVisible(const rtdb::Store& store, const std::string& variable, std::int64_t t_ms,
                  std::chrono::steady_clock::time_point emitted_at, IngestCollector& collector) {
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(10);
    for (;;) {
        auto latest = store.latest(variable);
        if (latest && latest->timestamp_ms >= t_ms) break;
        if (std::chrono::steady_clock::now() >= deadline) {
            throw Error("sample for " + variable + " at t=" + std::to_string(t_ms) +
                        " never became visible");
        }
        std::this_thread::sleep_for(std::chrono::microseconds(20));
    }
    if (collector.enabled) {
        const auto visible_at = std::chrono::steady_clock::now();
        collector.samples_us.push_back(
            std::chrono::duration<double, std::micro>(visible_at - emitted_at).count());
    }
}

const topology::ComponentDecl& requireSingleStore(const topology::DeploymentPlan& plan) {
    const topology::ComponentDecl* org = nullptr;
    std::size_t count = 0;
    for (const auto& component : plan.components) {
        if (component.level == topology::Level::data_organization) {
            org = &component;
            ++count;
        }
    }
    if (count != 1) {
        throw BootFailureError("plan must place exactly one data_organization component, found " +
                               std::to_string(count));
    }
    return *org;
}

void requireValid(const topology::DeploymentPlan& plan) {
    auto violations = topology::validatePlan(plan);
    if (violations.empty()) return;
    throw BootFailureError("plan has " + std::to_string(violations.size()) +
                           " violation(s); first: " + violations.front().rule + " on " +
                           violations.front().element);
}

// A component's working path into the store: the first channel it owns
// toward the store whose pattern can carry its traffic.
std::optional<topology::ChannelDecl> usableChannel(const topology::DeploymentPlan& plan,
                                                   const std::string& component,
                                                   const std::string& org, bool need_rpc) {
    for (const auto& channel : plan.channels) {
        if (channel.from != component || channel.to != org) continue;
        if (need_rpc && channel.pattern != topology::Pattern::rpc) continue;
        if (!need_rpc && channel.pattern == topology::Pattern::file) continue;
        return channel;
    }
    return std::nullopt;
}

std::vector<SignalRunner> buildSignalRunners(const topology::DeploymentPlan& plan,
                                             const std::string& component, std::uint64_t seed) {
    std::vector<SignalRunner> runners;
    for (const auto& planned : plan.signals) {
        if (planned.component != component) continue;
        SignalRunner runner;
        runner.spec = planned.spec;
        if (auto* walk = std::get_if<gateway::RandomWalk>(&runner.spec.generator)) {
            if (seed != 0) walk->seed ^= seed;
            runner.cursor.emplace(*walk);
        }
        runners.push_back(std::move(runner));
    }
    return runners;
}

session::Channel openWithRetry(const session::Binding& binding, std::uint32_t id,
                               std::int64_t budget_ms) {
    const auto deadline =
        std::chrono::steady_clock::now() + std::chrono::milliseconds(budget_ms);
    for (;;) {
        try {
            return session::openChannel(binding, id);
        } catch (const session::ConnectFailureError&) {
            if (std::chrono::steady_clock::now() >= deadline) throw;
            std::this_thread::sleep_for(std::chrono::milliseconds(100));
        }
    }
}

}  // namespace

ScenarioResult runScenario(const topology::DeploymentPlan& plan, std::int64_t ticks,
                           const ScenarioOptions& options) {
    if (ticks < 0) throw BootFailureError("tick count must be nonnegative");
    session::detail::resetProcessChannelRegistry();

    requireValid(plan);
    const auto& org = requireSingleStore(plan);
    auto bindings = topology::deriveBindings(plan);

    StoreHost host(org, plan, options.trend_dir, /*truncate_trends=*/true);

    std::map<std::uint32_t, topology::Pattern> inbound_patterns;
    for (const auto& channel : plan.channels) {
        if (channel.to == org.name) inbound_patterns[channel.id] = channel.pattern;
    }

    // One listener per address that accepts network channels into the store.
    std::vector<std::unique_ptr<session::Listener>> listeners;
    {
        std::set<std::string> listen_addresses;
        for (const auto& channel : plan.channels) {
            if (channel.to != org.name) continue;
            const auto& binding = bindings.at(channel.id);
            if (binding.mode == session::BindingMode::network) {
                listen_addresses.insert(binding.address);
            }
        }
        for (const auto& address : listen_addresses) {
            auto port = session::parseHostPort(address).second;
            StoreHost* host_ptr = &host;
            listeners.push_back(session::Listener::listen(
                port, [host_ptr, inbound_patterns](session::Endpoint endpoint) {
                    endpoint.setChannelAcceptor(
                        [host_ptr, inbound_patterns](session::Channel channel) {
                            auto it = inbound_patterns.find(channel.id());
                            auto pattern = it != inbound_patterns.end() ? it->second
                                                                        : topology::Pattern::rpc;
                            host_ptr->attach(std::move(channel), pattern);
                        });
                }));
        }
    }

    // In-process channels into the store rendezvous inside this process:
    // claim the store's end before any producer claims the other.
    for (const auto& channel : plan.channels) {
        if (channel.to != org.name) continue;
        const auto& binding = bindings.at(channel.id);
        if (binding.mode == session::BindingMode::in_process) {
            host.attach(session::openChannel(binding, channel.id), channel.pattern);
        }
    }

    std::vector<GatewayRunner> gateways;
    for (const auto& component : plan.components) {
        if (component.level != topology::Level::data_stream) continue;
        auto signals = buildSignalRunners(plan, component.name, options.seed);
        if (signals.empty()) continue;
        auto decl = usableChannel(plan, component.name, org.name, /*need_rpc=*/false);
        if (!decl) {
            throw BootFailureError("component " + component.name +
                                   " emits signals but has no stream, event, or rpc channel to " +
                                   org.name);
        }
        GatewayRunner runner;
        runner.component = component.name;
        runner.pattern = decl->pattern;
        runner.channel = session::openChannel(bindings.at(decl->id), decl->id);
        runner.signals = std::move(signals);
        runner.openTransport();
        gateways.push_back(std::move(runner));
    }

    std::vector<AppRunner> apps;
    for (const auto& component : plan.components) {
        if (component.level != topology::Level::application_processing) continue;
        bool owns_computed = std::any_of(plan.computed.begin(), plan.computed.end(),
                                         [&](const topology::PlannedComputed& pc) {
                                             return pc.component == component.name;
                                         });
        if (!owns_computed) continue;
        auto decl = usableChannel(plan, component.name, org.name, /*need_rpc=*/true);
        if (!decl) {
            throw BootFailureError("component " + component.name +
                                   " evaluates computed variables but has no rpc channel to " +
                                   org.name);
        }
        AppRunner runner;
        runner.component = component.name;
        runner.channel = session::openChannel(bindings.at(decl->id), decl->id);
        runner.client = std::make_shared<RemoteStoreClient>(runner.channel);
        apps.push_back(std::move(runner));
    }
    // Definitions run in plan order, so outputs may feed later definitions.
    for (const auto& planned : plan.computed) {
        auto it = std::find_if(apps.begin(), apps.end(), [&](const AppRunner& runner) {
            return runner.component == planned.component;
        });
        if (it == apps.end()) {
            throw BootFailureError("computed variable " + planned.def.output.name +
                                   " names component " + planned.component +
                                   " which did not boot");
        }
        it->handles.push_back(appmods::defineComputed(planned.def, it->client));
    }

    ScenarioResult result;
    result.duration_ms = ticks * plan.period_ms;
    IngestCollector collector;
    collector.enabled = options.measure_ingest;

    std::vector<EmitRecord> records;
    for (std::int64_t tick = 0; tick < ticks; ++tick) {
        const std::int64_t t = options.clock_start_ms + tick * plan.period_ms;

        records.clear();
        for (auto& runner : gateways) runner.emitTick(tick, t, &records);
        result.emitted += records.size();

        // Acquisition barrier: every emitted sample must be visible before
        // computed variables read their inputs, whatever the transport.
        for (const auto& record : records) {
            awaitVisible(host.store(), record.variable, t, record.emitted_at, collector);
        }
        result.stored += records.size();

        for (auto& runner : apps) {
            for (auto& handle : runner.handles) {
                const auto before = std::chrono::steady_clock::now();
                auto outcome = handle.eval(t);
                if (!outcome) continue;
                result.computed_evaluations += 1;
                result.emitted += 1;
                if (outcome->stored) {
                    result.stored += 1;
                    awaitVisible(host.store(), outcome->sample.variable.name, t, before,
                                 collector);
                }
            }
        }

        result.evicted += host.enforceRetention(t);
        result.trend_points += host.persistClosed(t);
    }

    for (const auto& name : host.store().variableNames()) {
        result.final_samples[name] =
            host.store().range(name, std::numeric_limits<std::int64_t>::min(),
                               std::numeric_limits<std::int64_t>::max());
    }
    result.trend_files.push_back(host.trendFilePath());
    if (collector.enabled && !collector.samples_us.empty()) {
        result.latency.push_back(buildLatencyReport("ingest", std::move(collector.samples_us)));
    }

    for (auto& runner : gateways) {
        try {
            if (runner.stream) runner.stream->close();
        } catch (const Error&) {
        }
        runner.channel.close();
    }
    for (auto& runner : apps) runner.channel.close();
    session::detail::resetProcessChannelRegistry();
    for (auto& listener : listeners) listener->stop();
    return result;
}

LatencyReport measureIngestLatency(const topology::DeploymentPlan& plan, std::int64_t ticks,
                                   const ScenarioOptions& options) {
    ScenarioOptions opts = options;
    opts.measure_ingest = true;
    auto result = runScenario(plan, ticks, opts);
    if (result.latency.empty()) throw MeasureError("scenario emitted no samples", 0);
    return result.latency.front();
}

struct NodeRuntime::Impl {
    topology::DeploymentPlan plan;
    std::string node;
    std::unique_ptr<StoreHost> store_host;
    std::unique_ptr<session::Listener> listener;
    std::vector<GatewayRunner> gateways;
    std::vector<AppRunner> apps;
    std::mutex mu;
    std::condition_variable cv;
    bool stopping = false;
};

NodeRuntime::NodeRuntime(const topology::DeploymentPlan& plan, const std::string& node,
                         const std::string& trend_dir)
    : impl_(std::make_unique<Impl>()) {
    impl_->plan = plan;
    impl_->node = node;

    if (!plan.findNode(node)) throw BootFailureError("plan declares no node named " + node);
    requireValid(plan);
    const auto& org = requireSingleStore(plan);
    auto bindings = topology::deriveBindings(plan);

    if (org.node == node) {
        // This node is the historian: it appends to existing trend files.
        impl_->store_host =
            std::make_unique<StoreHost>(org, plan, trend_dir, /*truncate_trends=*/false);
        for (const auto& channel : plan.channels) {
            if (channel.to != org.name) continue;
            const auto& binding = bindings.at(channel.id);
            if (binding.mode == session::BindingMode::in_process) {
                impl_->store_host->attach(session::openChannel(binding, channel.id),
                                          channel.pattern);
            }
        }
        std::map<std::uint32_t, topology::Pattern> inbound_patterns;
        for (const auto& channel : plan.channels) {
            if (channel.to == org.name) inbound_patterns[channel.id] = channel.pattern;
        }
        // Unplanned channel ids (queries, perf probes) get the rpc surface.
        auto port = session::parseHostPort(plan.findNode(node)->address).second;
        StoreHost* host_ptr = impl_->store_host.get();
        impl_->listener = session::Listener::listen(
            port, [host_ptr, inbound_patterns](session::Endpoint endpoint) {
                endpoint.setChannelAcceptor(
                    [host_ptr, inbound_patterns](session::Channel channel) {
                        auto it = inbound_patterns.find(channel.id());
                        auto pattern = it != inbound_patterns.end() ? it->second
                                                                    : topology::Pattern::rpc;
                        host_ptr->attach(std::move(channel), pattern);
                    });
            });
    }

    for (const auto& component : plan.components) {
        if (component.node != node) continue;
        if (component.level == topology::Level::data_stream) {
            auto signals = buildSignalRunners(plan, component.name, 0);
            if (signals.empty()) continue;
            auto decl = usableChannel(plan, component.name, org.name, /*need_rpc=*/false);
            if (!decl) {
                throw BootFailureError(
                    "component " + component.name +
                    " emits signals but has no stream, event, or rpc channel to " + org.name);
            }
            GatewayRunner runner;
            runner.component = component.name;
            runner.pattern = decl->pattern;
            runner.channel = openWithRetry(bindings.at(decl->id), decl->id, 10'000);
            runner.signals = std::move(signals);
            runner.openTransport();
            impl_->gateways.push_back(std::move(runner));
        } else if (component.level == topology::Level::application_processing) {
            bool owns_computed = std::any_of(plan.computed.begin(), plan.computed.end(),
                                             [&](const topology::PlannedComputed& pc) {
                                                 return pc.component == component.name;
                                             });
            if (!owns_computed) continue;
            auto decl = usableChannel(plan, component.name, org.name, /*need_rpc=*/true);
            if (!decl) {
                throw BootFailureError(
                    "component " + component.name +
                    " evaluates computed variables but has no rpc channel to " + org.name);
            }
            AppRunner runner;
            runner.component = component.name;
            runner.channel = openWithRetry(bindings.at(decl->id), decl->id, 10'000);
            runner.client = std::make_shared<RemoteStoreClient>(runner.channel);
            impl_->apps.push_back(std::move(runner));
        }
    }

    for (const auto& planned : plan.computed) {
        auto it = std::find_if(impl_->apps.begin(), impl_->apps.end(),
                               [&](const AppRunner& runner) {
                                   return runner.component == planned.component;
                               });
        if (it == impl_->apps.end()) continue;  // another node's component
        // Outputs defined by peers may not be registered yet; keep trying
        // for a while before giving up.
        const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(10);
        for (;;) {
            try {
                it->handles.push_back(appmods::defineComputed(planned.def, it->client));
                break;
            } catch (const appmods::UnknownInputError&) {
                if (std::chrono::steady_clock::now() >= deadline) throw;
                std::this_thread::sleep_for(std::chrono::milliseconds(100));
            }
        }
    }
}

NodeRuntime::~NodeRuntime() {
    stop();
    for (auto& runner : impl_->gateways) {
        try {
            if (runner.stream) runner.stream->close();
        } catch (...) {
        }
        try {
            runner.channel.close();
        } catch (...) {
        }
    }
    for (auto& runner : impl_->apps) {
        try {
            runner.channel.close();
        } catch (...) {
        }
    }
    if (impl_->listener) impl_->listener->stop();
}

void NodeRuntime::run(std::int64_t tick_limit) {
    auto& im = *impl_;
    std::int64_t tick = 0;
    for (;;) {
        {
            std::lock_guard<std::mutex> lk(im.mu);
            if (im.stopping) return;
        }
        const std::int64_t t_wall =
            std::chrono::duration_cast<std::chrono::milliseconds>(
                std::chrono::system_clock::now().time_since_epoch())
                .count();
        for (auto& runner : im.gateways) runner.emitTick(tick, t_wall, nullptr);
        for (auto& runner : im.apps) {
            for (auto& handle : runner.handles) handle.eval(t_wall);
        }
        if (im.store_host) {
            im.store_host->enforceRetention(t_wall);
            // One period of grace so stragglers still land in their interval.
            im.store_host->persistClosed(t_wall - im.plan.period_ms);
        }
        ++tick;
        if (tick_limit > 0 && tick >= tick_limit) return;
        std::unique_lock<std::mutex> lk(im.mu);
        im.cv.wait_for(lk, std::chrono::milliseconds(im.plan.period_ms),
                       [&] { return im.stopping; });
        if (im.stopping) return;
    }
}

void NodeRuntime::stop() {
    {
        std::lock_guard<std::mutex> lk(impl_->mu);
        impl_->stopping = true;
    }
    impl_->cv.notify_all();
}

}  // namespace plantbus::harness
