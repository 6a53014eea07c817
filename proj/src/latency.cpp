// Copyright the plantbus authors. Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#include "plantbus/latency.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

namespace plantbus::harness {

namespace {

constexpr double kQuantiles[] = {0.50, 0.90, 0.95, 0.99};

// Nearest-rank quantile over an ascending vector.
double quantileOf(const std::vector<double>& sorted, double q) {
    std::size_t n = sorted.size();
    std::size_t rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n)));
    if (rank == 0) rank = 1;
    if (rank > n) rank = n;
    return sorted[rank - 1];
}

}  // namespace

LatencyReport buildLatencyReport(std::string operation, std::vector<double> samples_us) {
    if (samples_us.empty()) throw MeasureError("no samples recorded for " + operation, 0);
    std::sort(samples_us.begin(), samples_us.end());

    LatencyReport report;
    report.operation = std::move(operation);
    report.sample_count = samples_us.size();
    report.min_us = samples_us.front();
    report.max_us = samples_us.back();
    double sum = 0.0;
    double comp = 0.0;
    for (double v : samples_us) {
        double term = v - comp;
        double next = sum + term;
        comp = (next - sum) - term;
        sum = next;
    }
    report.mean_us = sum / static_cast<double>(samples_us.size());
    for (double q : kQuantiles) {
        report.quantiles.emplace_back(q, quantileOf(samples_us, q));
    }
    return report;
}

LatencyReport measureRpc(session::Channel& channel, std::size_t n, std::size_t payload_size) {
    if (n == 0) throw MeasureError("measurement needs at least one call", 0);

    std::mt19937_64 rng(0x706C616E74627573ULL);  // fixed seed: payloads vary, runs repeat
    std::vector<std::uint8_t> payload(payload_size);
    std::vector<double> durations_us;
    durations_us.reserve(n);

    for (std::size_t i = 0; i < n; ++i) {
        for (auto& b : payload) b = static_cast<std::uint8_t>(rng());
        auto started = std::chrono::steady_clock::now();
        std::vector<std::uint8_t> reply;
        try {
            reply = channel.call("echo", payload, 30'000);
        } catch (const Error& e) {
            throw MeasureError(std::string("echo call failed: ") + e.what(), i);
        }
        auto finished = std::chrono::steady_clock::now();
        if (reply != payload) {
            throw MeasureError("echo reply does not match its request", i);
        }
        durations_us.push_back(
            std::chrono::duration<double, std::micro>(finished - started).count());
    }
    return buildLatencyReport("rpc_echo", std::move(durations_us));
}

}  // namespace plantbus::harness
