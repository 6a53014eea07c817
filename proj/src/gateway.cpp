// Copyright the plantbus authors. Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#include "plantbus/gateway.hpp"

#include <cmath>
#include <numbers>
#include <optional>

#include "plantbus/session.hpp"

namespace plantbus::gateway {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

double unitUniform(std::uint64_t bits) {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

}  // namespace

double randomWalkStep(std::uint64_t seed, std::uint64_t tick) {
    // Counter-based: the per-tick stream starts at mix64(seed xor tick*phi)
    // and advances as SplitMix64. Twelve uniforms summed and centered give an
    // Irwin-Hall approximation of N(0, 1).
    std::uint64_t state = mix64(seed ^ (tick * kGolden));
    double sum = 0.0;
    for (int i = 0; i < 12; ++i) {
        state += kGolden;
        sum += unitUniform(mix64(state));
    }
    return sum - 6.0;
}

namespace {

double walkValue(const RandomWalk& p, std::uint64_t tick) {
    double value = p.start;
    for (std::uint64_t k = 1; k <= tick; ++k) {
        value += p.step_sd * randomWalkStep(p.seed, k);
    }
    return value;
}

}  // namespace

double sampleSignal(const SignalSpec& spec, std::int64_t t_ms, std::uint64_t tick) {
    const double t_s = static_cast<double>(t_ms) / 1000.0;
    if (const auto* c = std::get_if<Constant>(&spec.generator)) {
        return c->value;
    }
    if (const auto* r = std::get_if<Ramp>(&spec.generator)) {
        return r->offset + r->slope_per_s * t_s;
    }
    if (const auto* s = std::get_if<Sine>(&spec.generator)) {
        if (!(s->period_s > 0.0)) {
            throw InvalidSpecError("sine period must be positive: " + spec.variable.name);
        }
        return s->offset + s->amplitude * std::sin(2.0 * std::numbers::pi * t_s / s->period_s +
                                                   s->phase_rad);
    }
    const auto& w = std::get<RandomWalk>(spec.generator);
    if (w.step_sd < 0.0) {
        throw InvalidSpecError("random_walk step_sd must be nonnegative: " + spec.variable.name);
    }
    return walkValue(w, tick);
}

RandomWalkCursor::RandomWalkCursor(const RandomWalk& params) : params_(params), value_(params.start) {
    if (params.step_sd < 0.0) throw InvalidSpecError("random_walk step_sd must be nonnegative");
}

double RandomWalkCursor::next() {
    tick_ += 1;
    value_ += params_.step_sd * randomWalkStep(params_.seed, tick_);
    return value_;
}

std::size_t runAcquisition(const AcquisitionConfig& config, std::int64_t clock_start_ms,
                           const std::map<std::string, SampleSink>& sinks) {
    if (config.period_ms <= 0) throw InvalidSpecError("acquisition period must be positive");
    if (config.tick_count <= 0) throw InvalidSpecError("tick count must be positive");
    for (const auto& spec : config.specs) {
        if (!rtdb::isValidVariableName(spec.variable.name)) {
            throw InvalidSpecError("invalid variable name in signal spec");
        }
        if (sinks.find(spec.variable.name) == sinks.end()) {
            throw InvalidSpecError("no sink for variable: " + spec.variable.name);
        }
    }

    // Random walks advance through cursors so a whole run costs O(ticks),
    // not O(ticks^2); the cursor accumulates in the same order as the pure
    // form, so the values are bit-identical.
    std::vector<std::optional<RandomWalkCursor>> cursors(config.specs.size());
    for (std::size_t i = 0; i < config.specs.size(); ++i) {
        if (const auto* w = std::get_if<RandomWalk>(&config.specs[i].generator)) {
            cursors[i].emplace(*w);
        }
    }

    std::size_t emitted = 0;
    for (std::int64_t k = 0; k < config.tick_count; ++k) {
        const std::int64_t t = clock_start_ms + k * config.period_ms;
        for (std::size_t i = 0; i < config.specs.size(); ++i) {
            const auto& spec = config.specs[i];
            rtdb::Sample sample;
            sample.variable = spec.variable;
            sample.timestamp_ms = t;
            sample.value = cursors[i] ? (k == 0 ? std::get<RandomWalk>(spec.generator).start
                                                : cursors[i]->next())
                                      : sampleSignal(spec, t, static_cast<std::uint64_t>(k));
            sample.quality = rtdb::Quality::good;
            try {
                sinks.at(spec.variable.name)(sample);
            } catch (const session::StreamClosedError& e) {
                throw StreamClosedError(std::string("sink closed mid-run: ") + e.what(), emitted);
            } catch (const session::ChannelClosedError& e) {
                throw StreamClosedError(std::string("sink closed mid-run: ") + e.what(), emitted);
            }
            emitted += 1;
        }
    }
    return emitted;
}

}  // namespace plantbus::gateway
