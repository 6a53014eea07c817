// Copyright the plantbus authors. Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "plantbus/errors.hpp"
#include "plantbus/rtdb.hpp"

// Simulated plant sources standing in for vendor DCS gateways. Every
// generator is a pure function of its parameters and the tick index, so a
// rerun of the same configuration reproduces the sample sequence exactly.

namespace plantbus::gateway {

struct Constant {
    double value = 0.0;

    friend bool operator==(const Constant&, const Constant&) = default;
};

struct Ramp {
    double offset = 0.0;
    double slope_per_s = 0.0;

    friend bool operator==(const Ramp&, const Ramp&) = default;
};

struct Sine {
    double amplitude = 1.0;
    double period_s = 1.0;
    double phase_rad = 0.0;
    double offset = 0.0;

    friend bool operator==(const Sine&, const Sine&) = default;
};

struct RandomWalk {
    double start = 0.0;
    double step_sd = 1.0;
    std::uint64_t seed = 0;

    friend bool operator==(const RandomWalk&, const RandomWalk&) = default;
};

using Generator = std::variant<Constant, Ramp, Sine, RandomWalk>;

struct SignalSpec {
    rtdb::VariableId variable;
    Generator generator;

    friend bool operator==(const SignalSpec&, const SignalSpec&) = default;
};

class InvalidSpecError : public Error {
public:
    using Error::Error;
};

/// Raised when a sample sink rejects an emission mid-run; emitted() is the
/// number of samples delivered before the failure.
class StreamClosedError : public Error {
public:
    StreamClosedError(const std::string& what, std::size_t emitted)
        : Error(what), emitted_(emitted) {}
    std::size_t emitted() const { return emitted_; }

private:
    std::size_t emitted_;
};

/// The step the random walk takes at tick k (k >= 1): approximately standard
/// normal, a pure function of (seed, k). The exact discipline is documented
/// in the README so foreign reimplementations can reproduce it bit for bit.
double randomWalkStep(std::uint64_t seed, std::uint64_t tick);

/// Value of the signal at time t_ms, which is tick `tick` of its run. Only
/// random_walk consults the tick; the analytic generators are functions of
/// t_ms alone.
double sampleSignal(const SignalSpec& spec, std::int64_t t_ms, std::uint64_t tick = 0);

/// Incremental random-walk evaluation: next() advances one tick and returns
/// the walk value there, bit-identical to sampleSignal at the same tick.
class RandomWalkCursor {
public:
    explicit RandomWalkCursor(const RandomWalk& params);

    double next();
    std::uint64_t tick() const { return tick_; }
    double value() const { return value_; }

private:
    RandomWalk params_;
    std::uint64_t tick_ = 0;
    double value_ = 0.0;
};

struct AcquisitionConfig {
    std::vector<SignalSpec> specs;
    std::int64_t period_ms = 1000;
    std::int64_t tick_count = 0;
};

using SampleSink = std::function<void(const rtdb::Sample&)>;

/// Emits Sample(variable, clock_start_ms + k*period_ms, value, good) for
/// every spec at every tick k in [0, tick_count), in tick order and spec
/// order within a tick. Returns the emission count, specs * ticks.
std::size_t runAcquisition(const AcquisitionConfig& config, std::int64_t clock_start_ms,
                           const std::map<std::string, SampleSink>& sinks);

}  // namespace plantbus::gateway
