// Copyright the plantbus authors. Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "plantbus/errors.hpp"

namespace plantbus::rtdb {

enum class VarKind { raw, computed };

/// Ordered worst-last: good < uncertain < bad.
enum class Quality : std::uint8_t { good = 0, uncertain = 1, bad = 2 };

const char* toString(VarKind kind);
const char* toString(Quality q);

struct VariableId {
    std::string name;
    VarKind kind = VarKind::raw;

    friend bool operator==(const VariableId&, const VariableId&) = default;
};

/// A name is valid if nonempty and free of whitespace and commas (it appears
/// in trend file records and CLI arguments).
bool isValidVariableName(std::string_view name);

struct Sample {
    VariableId variable;
    std::int64_t timestamp_ms = 0;
    double value = 0.0;
    Quality quality = Quality::good;

    friend bool operator==(const Sample&, const Sample&) = default;
};

struct RetentionPolicy {
    std::int64_t window_ms = 600'000;  // ten minutes of raw data
    std::size_t max_samples_per_variable = 1'000'000;
};

/// Aggregate of one variable over one epoch-aligned interval.
struct TrendPoint {
    VariableId variable;
    std::int64_t interval_start_ms = 0;
    std::int64_t interval_len_ms = 60'000;
    double min = 0.0;
    double max = 0.0;
    double mean = 0.0;
    std::uint64_t count = 0;
};

class DuplicateNameError : public Error {
public:
    using Error::Error;
};

class InvalidNameError : public Error {
public:
    using Error::Error;
};

class UnknownVariableError : public Error {
public:
    using Error::Error;
};

class NonFiniteValueError : public Error {
public:
    using Error::Error;
};

class InvalidRangeError : public Error {
public:
    using Error::Error;
};

/// In-memory store of the most recent samples per variable, bounded by a
/// retention window and a per-variable cap. All operations are safe for
/// concurrent callers; queries observe a consistent snapshot. Time is always
/// supplied by the caller; the store never reads a clock.
class Store {
public:
    explicit Store(RetentionPolicy policy = {}, std::int64_t trend_interval_ms = 60'000);

    Store(const Store&) = delete;
    Store& operator=(const Store&) = delete;

    VariableId registerVariable(const std::string& name, VarKind kind);

    /// Stores the sample in timestamp order (stable among equal timestamps).
    /// Returns false without storing when the sample is older than the
    /// retention horizon behind the newest sample of its variable.
    bool insert(const Sample& sample);

    /// Sample with the greatest timestamp, or nothing if the buffer is empty.
    std::optional<Sample> latest(const std::string& variable) const;

    /// All retained samples with t0 <= timestamp <= t1, ascending, stable
    /// among ties. The result is a snapshot, unaffected by later inserts.
    std::vector<Sample> range(const std::string& variable, std::int64_t t0, std::int64_t t1) const;

    /// Drops samples older than now - window and trims each variable to the
    /// cap, oldest first. Returns the number removed.
    std::size_t enforceRetention(std::int64_t now_ms);

    /// One TrendPoint per epoch-aligned interval overlapping [t0, t1) that
    /// holds at least one sample. Aggregates cover the whole interval, even
    /// samples outside [t0, t1). Means use compensated summation.
    std::vector<TrendPoint> rollup(const std::string& variable, std::int64_t t0, std::int64_t t1,
                                   std::int64_t interval_len_ms) const;

    std::optional<VariableId> find(const std::string& name) const;
    std::vector<std::string> variableNames() const;

    const RetentionPolicy& policy() const { return policy_; }
    std::int64_t trendIntervalMs() const { return trend_interval_ms_; }

private:
    struct VarState {
        VariableId id;
        std::deque<Sample> samples;  // ascending by timestamp
    };

    const VarState& stateFor(const std::string& name) const;

    RetentionPolicy policy_;
    std::int64_t trend_interval_ms_;
    mutable std::shared_mutex mutex_;
    std::map<std::string, VarState> vars_;
};

}  // namespace plantbus::rtdb
