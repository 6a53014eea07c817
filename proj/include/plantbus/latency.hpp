// Copyright the plantbus authors. Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "plantbus/errors.hpp"
#include "plantbus/session.hpp"

// A-posteriori performance measurement: record real durations in a running
// system and summarize them. Quantiles come from an exact sort; at desk
// scale there is no reason to estimate.

namespace plantbus::harness {

struct LatencyReport {
    std::string operation;
    std::uint64_t sample_count = 0;
    double min_us = 0.0;
    double max_us = 0.0;
    double mean_us = 0.0;
    /// (q, microseconds) for q in {0.50, 0.90, 0.95, 0.99}, ascending.
    std::vector<std::pair<double, double>> quantiles;
};

/// Raised when a measured operation fails mid-batch; completed() is the
/// number of successful operations before the failure.
class MeasureError : public Error {
public:
    MeasureError(const std::string& what, std::size_t completed)
        : Error(what), completed_(completed) {}
    std::size_t completed() const { return completed_; }

private:
    std::size_t completed_;
};

/// Sorts the recordings and fills every field. Empty input is an error:
/// a report always describes at least one observation.
LatencyReport buildLatencyReport(std::string operation, std::vector<double> samples_us);

/// Issues n sequential echo calls of payload_size random bytes over the
/// channel, timing each round trip on the wall clock.
LatencyReport measureRpc(session::Channel& channel, std::size_t n, std::size_t payload_size);

}  // namespace plantbus::harness
