// Copyright the plantbus authors. Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
//
// Acceptance suite: one check per shipping criterion, each printed as a
// single PASS/FAIL line with its runtime. Exits zero only when all pass.
// Criterion 8 drives the installed CLI binary named by PLANTBUS_BIN.

#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "plan_gen.hpp"
#include "plantbus/appmods.hpp"
#include "plantbus/crc32.hpp"
#include "plantbus/frame.hpp"
#include "plantbus/json_io.hpp"
#include "plantbus/runtime.hpp"

using namespace plantbus;
using namespace std::chrono_literals;

namespace {

struct Outcome {
    bool pass = true;
    std::string note;

    void fail(const std::string& why) {
        if (pass) note = why;
        pass = false;
    }
    void require(bool condition, const std::string& why) {
        if (!condition) fail(why);
    }
};

// ---- shared helpers -------------------------------------------------------

rtdb::Sample mkSample(const std::string& name, rtdb::VarKind kind, std::int64_t t, double v,
                      rtdb::Quality q = rtdb::Quality::good) {
    rtdb::Sample s;
    s.variable = {name, kind};
    s.timestamp_ms = t;
    s.value = v;
    s.quality = q;
    return s;
}

std::string freshDir(const std::string& tag) {
    auto dir = std::filesystem::temp_directory_path() / ("plantbus_acceptance_" + tag);
    std::filesystem::remove_all(dir);
    return dir.string();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

// The reference scenario: two raw signals into one store, one computed
// variable on top, matching the shapes deployed at the desks.
topology::DeploymentPlan scenarioPlan(bool split) {
    using namespace topology;
    DeploymentPlan plan;
    plan.nodes.push_back({"desk1", "127.0.0.1:17541"});
    if (split) plan.nodes.push_back({"desk2", "127.0.0.1:17542"});
    plan.components.push_back({"gw.teleperm", Level::data_stream, split ? "desk2" : "desk1"});
    plan.components.push_back({"hist.main", Level::data_organization, "desk1"});
    plan.components.push_back({"app.calc", Level::application_processing, "desk1"});
    plan.channels.push_back({1, "gw.teleperm", "hist.main", Pattern::stream});
    plan.channels.push_back({2, "app.calc", "hist.main", Pattern::rpc});
    plan.period_ms = 1000;
    plan.trend_interval_ms = 10'000;

    PlannedSignal temp;
    temp.spec.variable = {"boiler.feed_temp", rtdb::VarKind::raw};
    temp.spec.generator = gateway::Sine{15.0, 120.0, 0.0, 460.0};
    temp.component = "gw.teleperm";
    plan.signals.push_back(temp);

    PlannedSignal flow;
    flow.spec.variable = {"boiler.feed_flow", rtdb::VarKind::raw};
    flow.spec.generator = gateway::RandomWalk{310.0, 0.8, 42};
    flow.component = "gw.teleperm";
    plan.signals.push_back(flow);

    PlannedComputed heat;
    heat.def.output = {"boiler.heat_index", rtdb::VarKind::computed};
    heat.def.inputs = {"boiler.feed_temp", "boiler.feed_flow"};
    heat.def.expr = "boiler.feed_temp * 0.4 + boiler.feed_flow * 0.6";
    heat.component = "app.calc";
    plan.computed.push_back(heat);
    return plan;
}

// ---- criterion 1: the ten-minute retention window -------------------------

void checkRetention(Outcome& out) {
    rtdb::Store store(rtdb::RetentionPolicy{600'000, 1'000'000});
    auto id = store.registerVariable("unit0.level", rtdb::VarKind::raw);
    for (std::int64_t t = 0; t <= 900'000; t += 1000) {
        store.insert(mkSample(id.name, id.kind, t, static_cast<double>(t)));
    }
    store.enforceRetention(900'000);
    auto kept = store.range("unit0.level", 0, 900'000);
    out.require(!kept.empty(), "no samples retained");
    if (kept.empty()) return;
    out.require(kept.front().timestamp_ms >= 300'000,
                "oldest retained sample is older than the window");
    out.require(kept.size() >= 600 && kept.size() <= 602,
                "retained count " + std::to_string(kept.size()) + " outside 601 +/- 1");
}

// ---- criterion 2: rollup versus the partition oracle -----------------------

struct Bucket {
    double min = std::numeric_limits<double>::infinity();
    double max = -std::numeric_limits<double>::infinity();
    long double sum = 0.0L;
    std::uint64_t count = 0;
};

std::int64_t floorDiv(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) q -= 1;
    return q;
}

void checkTrendOracle(Outcome& out) {
    std::mt19937_64 rng(0x524F4C4C5550ULL);
    std::uniform_real_distribution<double> val(-1e9, 1e9);
    for (int round = 0; round < 1000 && out.pass; ++round) {
        rtdb::Store store(
            rtdb::RetentionPolicy{std::numeric_limits<std::int64_t>::max() / 4, 1'000'000});
        store.registerVariable("v", rtdb::VarKind::raw);

        const std::size_t n = 1 + rng() % 10'000;
        const std::int64_t span = 1 + static_cast<std::int64_t>(rng() % 2'000'000);
        const std::int64_t len = 1 + static_cast<std::int64_t>(rng() % 120'000);
        std::vector<rtdb::Sample> inserted;
        inserted.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            auto s = mkSample("v", rtdb::VarKind::raw,
                              static_cast<std::int64_t>(rng() % span), val(rng));
            if (store.insert(s)) inserted.push_back(s);
        }
        const std::int64_t t0 = static_cast<std::int64_t>(rng() % span);
        const std::int64_t t1 = t0 + static_cast<std::int64_t>(rng() % span);

        std::map<std::int64_t, Bucket> buckets;
        const std::int64_t first = floorDiv(t0, len);
        const std::int64_t last = t0 == t1 ? first - 1 : floorDiv(t1 - 1, len);
        for (const auto& s : inserted) {
            const std::int64_t b = floorDiv(s.timestamp_ms, len);
            if (b < first || b > last) continue;
            auto& bucket = buckets[b];
            bucket.min = std::min(bucket.min, s.value);
            bucket.max = std::max(bucket.max, s.value);
            bucket.sum += s.value;
            bucket.count += 1;
        }

        auto got = store.rollup("v", t0, t1, len);
        out.require(got.size() == buckets.size(),
                    "round " + std::to_string(round) + ": interval count mismatch");
        if (!out.pass) return;
        std::size_t i = 0;
        for (const auto& [b, want] : buckets) {
            const auto& p = got[i++];
            const double want_mean = static_cast<double>(want.sum / static_cast<long double>(want.count));
            if (p.interval_start_ms != b * len || p.count != want.count || p.min != want.min ||
                p.max != want.max ||
                std::abs(p.mean - want_mean) > 1e-12 * std::max(1.0, std::abs(want_mean))) {
                out.fail("round " + std::to_string(round) + ": aggregate mismatch at interval " +
                         std::to_string(b * len));
                return;
            }
        }
    }
}

// ---- criterion 3: codec round-trip and mutation fuzz ------------------------

session::Frame randomFrame(std::mt19937_64& rng) {
    session::Frame f;
    f.kind = static_cast<session::FrameKind>(1 + rng() % 11);
    f.channel_id = static_cast<std::uint32_t>(rng());
    f.correlation_id = rng();
    f.payload.resize(rng() % 64);
    for (auto& b : f.payload) b = static_cast<std::uint8_t>(rng());
    return f;
}

void checkCodec(Outcome& out) {
    using namespace session;
    std::mt19937_64 rng(0xC0DEC);
    for (int i = 0; i < 10'000 && out.pass; ++i) {
        Frame f = randomFrame(rng);
        auto bytes = encodeFrame(f);
        auto result = decodeFrame(bytes);
        out.require(result.status == DecodeStatus::ok && result.frame == f &&
                        result.consumed == bytes.size(),
                    "round-trip failed at frame " + std::to_string(i));
    }

    for (int i = 0; i < 10'000 && out.pass; ++i) {
        Frame f = randomFrame(rng);
        auto bytes = encodeFrame(f);
        DecodeStatus want;
        switch (i % 6) {
            case 0:
                bytes[0] ^= 0xFF;
                want = DecodeStatus::bad_magic;
                break;
            case 1:
                bytes[1] ^= 0x01;
                want = DecodeStatus::bad_magic;
                break;
            case 2:
                bytes[2] = static_cast<std::uint8_t>(2 + rng() % 254);
                want = DecodeStatus::bad_version;
                break;
            case 3:
                bytes[3] = (rng() % 2 == 0) ? 0x00
                                            : static_cast<std::uint8_t>(0x0C + rng() % 0xF4);
                want = DecodeStatus::unknown_kind;
                break;
            case 4:
                // Declared payload length beyond the cap.
                bytes[16] = 0x01;
                bytes[17] = 0x00;
                bytes[18] = 0x00;
                bytes[19] = 0x01;
                want = DecodeStatus::payload_too_large;
                break;
            default:
                bytes.resize(rng() % bytes.size());
                want = DecodeStatus::need_more;
                break;
        }
        try {
            auto result = decodeFrame(bytes);
            out.require(result.status == want,
                        std::string("mutation yielded ") + toString(result.status) +
                            ", wanted " + toString(want));
            out.require(result.consumed == 0, "error outcome consumed bytes");
        } catch (...) {
            out.fail("decode raised on mutated input " + std::to_string(i));
        }
    }
}

// ---- criterion 4: transport transparency ------------------------------------

void checkTransportTransparency(Outcome& out) {
    harness::ScenarioOptions options;
    options.trend_dir = freshDir("transparency_single");
    auto single = harness::runScenario(scenarioPlan(false), 100, options);
    const std::string single_trends = slurp(single.trend_files.at(0));

    options.trend_dir = freshDir("transparency_split");
    auto split = harness::runScenario(scenarioPlan(true), 100, options);
    const std::string split_trends = slurp(split.trend_files.at(0));

    out.require(single.final_samples == split.final_samples,
                "stored samples differ between in-process and networked runs");
    out.require(!single_trends.empty(), "single-node run persisted no trends");
    out.require(single_trends == split_trends, "trend files differ byte for byte");

    nlohmann::json ja(single), jb(split);
    ja.erase("latency");
    jb.erase("latency");
    out.require(ja.dump() == jb.dump(), "scenario reports differ outside latency");
}

// ---- criterion 5: secondary data equivalence --------------------------------

void checkSecondaryEquivalence(Outcome& out) {
    std::mt19937_64 rng(0x5457494EULL);
    std::uniform_real_distribution<double> val(-1e4, 1e4);
    for (int trial = 0; trial < 100 && out.pass; ++trial) {
        rtdb::Store store(rtdb::RetentionPolicy{std::numeric_limits<std::int64_t>::max() / 4,
                                                1'000'000},
                          7'000);
        store.registerVariable("twin.raw", rtdb::VarKind::raw);
        store.registerVariable("twin.comp", rtdb::VarKind::computed);

        const int n = 50 + static_cast<int>(rng() % 200);
        for (int i = 0; i < n; ++i) {
            const std::int64_t t = static_cast<std::int64_t>(rng() % 60'000);
            const double v = val(rng);
            const auto q = static_cast<rtdb::Quality>(rng() % 3);
            bool a = store.insert(mkSample("twin.raw", rtdb::VarKind::raw, t, v, q));
            bool b = store.insert(mkSample("twin.comp", rtdb::VarKind::computed, t, v, q));
            out.require(a == b, "insert outcomes diverged");
        }

        auto latest_a = store.latest("twin.raw");
        auto latest_b = store.latest("twin.comp");
        out.require(latest_a.has_value() == latest_b.has_value() &&
                        (!latest_a || (latest_a->value == latest_b->value &&
                                       latest_a->timestamp_ms == latest_b->timestamp_ms &&
                                       latest_a->quality == latest_b->quality)),
                    "latest() diverged");

        const std::int64_t t0 = static_cast<std::int64_t>(rng() % 60'000);
        const std::int64_t t1 = t0 + static_cast<std::int64_t>(rng() % 60'000);
        auto range_a = store.range("twin.raw", t0, t1);
        auto range_b = store.range("twin.comp", t0, t1);
        out.require(range_a.size() == range_b.size(), "range() sizes diverged");
        for (std::size_t i = 0; out.pass && i < range_a.size(); ++i) {
            out.require(range_a[i].value == range_b[i].value &&
                            range_a[i].timestamp_ms == range_b[i].timestamp_ms &&
                            range_a[i].quality == range_b[i].quality,
                        "range() contents diverged");
        }

        auto roll_a = store.rollup("twin.raw", 0, 60'000, 7'000);
        auto roll_b = store.rollup("twin.comp", 0, 60'000, 7'000);
        out.require(roll_a.size() == roll_b.size(), "rollup() sizes diverged");
        for (std::size_t i = 0; out.pass && i < roll_a.size(); ++i) {
            out.require(roll_a[i].min == roll_b[i].min && roll_a[i].max == roll_b[i].max &&
                            roll_a[i].mean == roll_b[i].mean && roll_a[i].count == roll_b[i].count,
                        "rollup() contents diverged");
        }

        auto status = appmods::statusSnapshot({"twin.raw", "twin.comp"}, store, 60'000);
        out.require(status.rows[0].has_data == status.rows[1].has_data &&
                        status.rows[0].value == status.rows[1].value &&
                        status.rows[0].age_ms == status.rows[1].age_ms &&
                        status.rows[0].quality == status.rows[1].quality,
                    "statusSnapshot() diverged");

        auto usage_a = appmods::periodReport("twin.raw", 0, 60'000, store, nullptr);
        auto usage_b = appmods::periodReport("twin.comp", 0, 60'000, store, nullptr);
        out.require(usage_a.total_count == usage_b.total_count && usage_a.min == usage_b.min &&
                        usage_a.max == usage_b.max && usage_a.mean == usage_b.mean,
                    "periodReport() diverged");
    }
}

// ---- criterion 6: session patterns end to end -------------------------------

void checkSessionPatterns(Outcome& out) {
    using namespace session;

    // Ordered, lossless event delivery over TCP loopback.
    {
        std::mutex mu;
        std::condition_variable cv;
        Endpoint server;
        bool accepted = false;
        auto listener = Listener::listen(0, [&](Endpoint ep) {
            std::lock_guard<std::mutex> lk(mu);
            server = ep;
            accepted = true;
            cv.notify_all();
        });
        Endpoint client = Endpoint::connect("127.0.0.1:" + std::to_string(listener->port()));
        {
            std::unique_lock<std::mutex> lk(mu);
            if (!cv.wait_for(lk, 5s, [&] { return accepted; })) {
                out.fail("listener never accepted");
                return;
            }
        }
        Channel near = client.openChannel(1);
        Channel far = server.openChannel(1);

        const std::uint32_t kCount = 10'000;
        std::vector<std::uint32_t> received;
        received.reserve(kCount);
        auto reg = far.subscribe([&](const std::vector<std::uint8_t>& payload) {
            std::uint32_t seq = 0;
            for (std::uint8_t b : payload) seq = (seq << 8) | b;
            std::lock_guard<std::mutex> lk(mu);
            received.push_back(seq);
            if (received.size() == kCount) cv.notify_all();
        });
        for (std::uint32_t i = 0; i < kCount; ++i) {
            std::vector<std::uint8_t> payload = {
                static_cast<std::uint8_t>(i >> 24), static_cast<std::uint8_t>(i >> 16),
                static_cast<std::uint8_t>(i >> 8), static_cast<std::uint8_t>(i)};
            near.publish(payload);
        }
        {
            std::unique_lock<std::mutex> lk(mu);
            if (!cv.wait_for(lk, 30s, [&] { return received.size() == kCount; })) {
                out.fail("lost events: received " + std::to_string(received.size()) + " of 10000");
            }
        }
        for (std::uint32_t i = 0; out.pass && i < kCount; ++i) {
            out.require(received[i] == i, "event order broken at index " + std::to_string(i));
        }
        client.close();
        server.close();
        listener->stop();
    }

    // Checksum-verified 1 MiB file transfer over both transports.
    auto fileCheck = [&](Channel near, Channel far) {
        std::mt19937_64 rng(0xF11E);
        std::vector<std::uint8_t> content(1 << 20);
        for (auto& b : content) b = static_cast<std::uint8_t>(rng());

        std::mutex mu;
        std::condition_variable cv;
        bool got = false;
        IncomingFile incoming;
        far.onFile([&](const IncomingFile& f) {
            std::lock_guard<std::mutex> lk(mu);
            incoming = f;
            got = true;
            cv.notify_all();
        });
        auto receipt = near.sendFile("trend.archive", content, 64 * 1024);
        out.require(receipt.checksum == crc32(content), "receipt checksum mismatch");
        std::unique_lock<std::mutex> lk(mu);
        if (!cv.wait_for(lk, 10s, [&] { return got; })) {
            out.fail("file never delivered");
            return;
        }
        out.require(incoming.content == content, "file content differs");
        out.require(incoming.receipt == receipt, "receiver receipt differs");
    };
    {
        auto [a, b] = Endpoint::inProcessPair();
        fileCheck(a.openChannel(2), b.openChannel(2));
        a.close();
        b.close();
    }
    {
        std::mutex mu;
        std::condition_variable cv;
        Endpoint server;
        bool accepted = false;
        auto listener = Listener::listen(0, [&](Endpoint ep) {
            std::lock_guard<std::mutex> lk(mu);
            server = ep;
            accepted = true;
            cv.notify_all();
        });
        Endpoint client = Endpoint::connect("127.0.0.1:" + std::to_string(listener->port()));
        {
            std::unique_lock<std::mutex> lk(mu);
            cv.wait_for(lk, 5s, [&] { return accepted; });
        }
        fileCheck(client.openChannel(2), server.openChannel(2));
        client.close();
        server.close();
        listener->stop();
    }

    // Timeout accuracy against a blackhole responder: best of three tries
    // absorbs scheduler noise, the lower bound must hold on every try.
    {
        auto [a, b] = Endpoint::inProcessPair();
        Channel near = a.openChannel(3);
        double best_ms = 1e9;
        for (int attempt = 0; attempt < 3; ++attempt) {
            auto before = std::chrono::steady_clock::now();
            try {
                near.call("blackhole", {}, 100);
                out.fail("blackhole call returned");
            } catch (const TimeoutError&) {
            }
            double elapsed =
                std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - before)
                    .count();
            out.require(elapsed >= 100.0, "timeout fired early");
            best_ms = std::min(best_ms, elapsed);
        }
        out.require(best_ms <= 150.0,
                    "timeout overshot: best of three was " + std::to_string(best_ms) + " ms");
        a.close();
        b.close();
    }
}

// ---- criterion 7: deployment mapping ----------------------------------------

void checkDeploymentMapping(Outcome& out) {
    testgen::PlanGen gen(0x4D415050ULL);
    for (int round = 0; round < 200 && out.pass; ++round) {
        auto plan = gen.validPlan();
        out.require(topology::validatePlan(plan).empty(), "generated plan failed validation");

        auto bindings = topology::deriveBindings(plan);
        out.require(bindings.size() == plan.channels.size(), "bindings are not total");
        for (const auto& chan : plan.channels) {
            auto from = plan.findComponent(chan.from);
            auto to = plan.findComponent(chan.to);
            auto it = bindings.find(chan.id);
            if (it == bindings.end()) {
                out.fail("channel " + std::to_string(chan.id) + " has no binding");
                break;
            }
            if (from->node == to->node) {
                out.require(it->second.mode == session::BindingMode::in_process,
                            "same-node channel not in_process");
            } else {
                out.require(it->second.mode == session::BindingMode::network &&
                                it->second.address == plan.findNode(to->node)->address,
                            "cross-node channel not bound to the to-side address");
            }
        }

        auto collapsed = testgen::collapseToOneNode(plan);
        out.require(collapsed.channels == plan.channels &&
                        collapsed.components.size() == plan.components.size(),
                    "collapsing changed the logical layer");
        for (std::size_t i = 0; i < plan.components.size(); ++i) {
            out.require(collapsed.components[i].name == plan.components[i].name &&
                            collapsed.components[i].level == plan.components[i].level,
                        "collapsing changed component declarations");
        }
        for (const auto& [id, binding] : topology::deriveBindings(collapsed)) {
            out.require(binding.mode == session::BindingMode::in_process,
                        "collapsed plan still binds over the network");
        }
    }
}

// ---- criterion 8: the CLI perf harness --------------------------------------

struct Child {
    pid_t pid = -1;
    int out_fd = -1;
};

Child spawn(const std::vector<std::string>& args) {
    int fds[2];
    if (pipe(fds) != 0) return {};
    pid_t pid = fork();
    if (pid == 0) {
        dup2(fds[1], STDOUT_FILENO);
        close(fds[0]);
        close(fds[1]);
        std::vector<char*> argv;
        argv.reserve(args.size() + 1);
        for (const auto& a : args) argv.push_back(const_cast<char*>(a.c_str()));
        argv.push_back(nullptr);
        execv(argv[0], argv.data());
        _exit(127);
    }
    close(fds[1]);
    return {pid, fds[0]};
}

bool readLine(int fd, std::string& line, int timeout_ms) {
    line.clear();
    char c;
    auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
    while (true) {
        auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
                        deadline - std::chrono::steady_clock::now())
                        .count();
        if (left <= 0) return false;
        struct pollfd pfd = {fd, POLLIN, 0};
        int ready = poll(&pfd, 1, static_cast<int>(left));
        if (ready <= 0) return false;
        ssize_t n = read(fd, &c, 1);
        if (n <= 0) return false;
        if (c == '\n') return true;
        line.push_back(c);
    }
}

void checkPerfHarness(Outcome& out) {
    const char* bin = std::getenv("PLANTBUS_BIN");
    if (!bin) {
        out.fail("PLANTBUS_BIN is not set");
        return;
    }

    Child server = spawn({bin, "perf", "serve", "--port", "0"});
    if (server.pid <= 0) {
        out.fail("could not spawn the echo server");
        return;
    }

    std::string line;
    int port = 0;
    if (readLine(server.out_fd, line, 10'000)) {
        try {
            port = nlohmann::json::parse(line).at("listening").get<int>();
        } catch (...) {
            out.fail("unparsable listening line: " + line);
        }
    } else {
        out.fail("echo server printed no listening line");
    }

    if (out.pass) {
        Child perf = spawn({bin, "perf", "rpc", "--target", "127.0.0.1:" + std::to_string(port),
                            "--n", "1000", "--payload", "64"});
        std::string output;
        {
            char buf[4096];
            ssize_t n;
            while ((n = read(perf.out_fd, buf, sizeof buf)) > 0) output.append(buf, static_cast<std::size_t>(n));
        }
        close(perf.out_fd);
        int status = 0;
        waitpid(perf.pid, &status, 0);
        out.require(WIFEXITED(status) && WEXITSTATUS(status) == 0, "perf rpc exited nonzero");

        try {
            auto j = nlohmann::json::parse(output);
            out.require(j.at("sample_count").get<int>() == 1000, "sample_count is not 1000");
            auto q = j.at("quantiles");
            double p50 = q.at("p50").get<double>();
            double p90 = q.at("p90").get<double>();
            double p95 = q.at("p95").get<double>();
            double p99 = q.at("p99").get<double>();
            out.require(p50 <= p90 && p90 <= p95 && p95 <= p99, "quantiles are not monotone");
            out.require(j.at("min_us").get<double>() <= p50 && p99 <= j.at("max_us").get<double>(),
                        "quantiles escape the min/max envelope");
        } catch (const std::exception& e) {
            out.fail(std::string("unparsable perf report: ") + e.what());
        }
    }

    kill(server.pid, SIGTERM);
    int status = 0;
    waitpid(server.pid, &status, 0);
    close(server.out_fd);
    out.require(WIFEXITED(status) && WEXITSTATUS(status) == 0,
                "echo server did not exit cleanly on SIGTERM");
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        double budget_s;  // 0: no cap asserted
        std::function<void(Outcome&)> run;
    };
    const Criterion criteria[] = {
        {"retention window", 1.0, checkRetention},
        {"trend rollup oracle", 30.0, checkTrendOracle},
        {"frame codec fuzz", 30.0, checkCodec},
        {"transport transparency", 60.0, checkTransportTransparency},
        {"secondary data equivalence", 0.0, checkSecondaryEquivalence},
        {"session patterns", 0.0, checkSessionPatterns},
        {"deployment mapping", 0.0, checkDeploymentMapping},
        {"perf harness smoke", 0.0, checkPerfHarness},
    };

    int passed = 0;
    int index = 0;
    for (const auto& criterion : criteria) {
        index += 1;
        Outcome out;
        auto before = std::chrono::steady_clock::now();
        try {
            criterion.run(out);
        } catch (const std::exception& e) {
            out.fail(std::string("unexpected exception: ") + e.what());
        }
        double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - before).count();
        if (criterion.budget_s > 0.0 && elapsed > criterion.budget_s) {
            out.fail("overran the " + std::to_string(criterion.budget_s) + " s budget");
        }
        std::printf("[%d] %-28s %s (%.2f s)%s%s\n", index, criterion.name,
                    out.pass ? "PASS" : "FAIL", elapsed, out.note.empty() ? "" : " -- ",
                    out.note.c_str());
        std::fflush(stdout);
        if (out.pass) passed += 1;
    }
    std::printf("%d/8 criteria passed\n", passed);
    return passed == 8 ? 0 : 1;
}
