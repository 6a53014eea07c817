// Copyright the plantbus authors. Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#include "plantbus/rtdb.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <mutex>

namespace plantbus::rtdb {

const char* toString(VarKind kind) {
    return kind == VarKind::raw ? "raw" : "computed";
}

const char* toString(Quality q) {
    switch (q) {
        case Quality::good: return "good";
        case Quality::uncertain: return "uncertain";
        case Quality::bad: return "bad";
    }
    return "good";
}

bool isValidVariableName(std::string_view name) {
    if (name.empty()) return false;
    for (unsigned char c : name) {
        if (std::isspace(c) || c == ',') return false;
    }
    return true;
}

Store::Store(RetentionPolicy policy, std::int64_t trend_interval_ms)
    : policy_(policy), trend_interval_ms_(trend_interval_ms) {
    if (policy_.window_ms <= 0) throw InvalidRangeError("retention window_ms must be positive");
    if (policy_.max_samples_per_variable == 0)
        throw InvalidRangeError("max_samples_per_variable must be positive");
    if (trend_interval_ms_ <= 0) throw InvalidRangeError("trend_interval_ms must be positive");
}

VariableId Store::registerVariable(const std::string& name, VarKind kind) {
    if (!isValidVariableName(name))
        throw InvalidNameError("invalid variable name: '" + name + "'");
    std::unique_lock lock(mutex_);
    auto [it, inserted] = vars_.try_emplace(name);
    if (!inserted) throw DuplicateNameError("variable already registered: " + name);
    it->second.id = VariableId{name, kind};
    return it->second.id;
}

const Store::VarState& Store::stateFor(const std::string& name) const {
    auto it = vars_.find(name);
    if (it == vars_.end()) throw UnknownVariableError("unknown variable: " + name);
    return it->second;
}

bool Store::insert(const Sample& sample) {
    if (!std::isfinite(sample.value))
        throw NonFiniteValueError("non-finite value for variable " + sample.variable.name);
    std::unique_lock lock(mutex_);
    auto it = vars_.find(sample.variable.name);
    if (it == vars_.end()) throw UnknownVariableError("unknown variable: " + sample.variable.name);
    auto& buf = it->second.samples;
    if (!buf.empty() && sample.timestamp_ms < buf.back().timestamp_ms - policy_.window_ms)
        return false;
    Sample stored = sample;
    stored.variable = it->second.id;  // normalize kind to the registration
    auto pos = std::upper_bound(buf.begin(), buf.end(), stored.timestamp_ms,
                                [](std::int64_t t, const Sample& s) { return t < s.timestamp_ms; });
    buf.insert(pos, std::move(stored));
    return true;
}

std::optional<Sample> Store::latest(const std::string& variable) const {
    std::shared_lock lock(mutex_);
    const auto& st = stateFor(variable);
    if (st.samples.empty()) return std::nullopt;
    return st.samples.back();
}

std::vector<Sample> Store::range(const std::string& variable, std::int64_t t0, std::int64_t t1) const {
    if (t0 > t1) throw InvalidRangeError("range: t0 > t1");
    std::shared_lock lock(mutex_);
    const auto& st = stateFor(variable);
    const auto& buf = st.samples;
    auto lo = std::lower_bound(buf.begin(), buf.end(), t0,
                               [](const Sample& s, std::int64_t t) { return s.timestamp_ms < t; });
    auto hi = std::upper_bound(buf.begin(), buf.end(), t1,
                               [](std::int64_t t, const Sample& s) { return t < s.timestamp_ms; });
    return std::vector<Sample>(lo, hi);
}

std::size_t Store::enforceRetention(std::int64_t now_ms) {
    std::unique_lock lock(mutex_);
    std::size_t evicted = 0;
    for (auto& [name, st] : vars_) {
        auto& buf = st.samples;
        const std::int64_t horizon = now_ms - policy_.window_ms;
        while (!buf.empty() && buf.front().timestamp_ms < horizon) {
            buf.pop_front();
            ++evicted;
        }
        while (buf.size() > policy_.max_samples_per_variable) {
            buf.pop_front();
            ++evicted;
        }
    }
    return evicted;
}

namespace {

std::int64_t floorDiv(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

}  // namespace

std::vector<TrendPoint> Store::rollup(const std::string& variable, std::int64_t t0, std::int64_t t1,
                                      std::int64_t interval_len_ms) const {
    if (t0 > t1) throw InvalidRangeError("rollup: t0 > t1");
    if (interval_len_ms <= 0) throw InvalidRangeError("rollup: interval_len_ms must be positive");
    std::shared_lock lock(mutex_);
    const auto& st = stateFor(variable);
    const auto& buf = st.samples;

    std::vector<TrendPoint> out;
    if (t0 == t1) return out;

    // Intervals overlapping [t0, t1): indices first_k ..= last_k. Aggregates
    // span whole intervals, so the sample scan covers [first_k*len, (last_k+1)*len).
    const std::int64_t first_k = floorDiv(t0, interval_len_ms);
    const std::int64_t last_k = floorDiv(t1 - 1, interval_len_ms);

    auto lo = std::lower_bound(buf.begin(), buf.end(), first_k * interval_len_ms,
                               [](const Sample& s, std::int64_t t) { return s.timestamp_ms < t; });
    auto hi = buf.end();
    if (last_k < std::numeric_limits<std::int64_t>::max() / interval_len_ms - 1) {
        hi = std::lower_bound(lo, buf.end(), (last_k + 1) * interval_len_ms,
                              [](const Sample& s, std::int64_t t) { return s.timestamp_ms < t; });
    }

    TrendPoint cur;
    bool open = false;
    double sum = 0.0, comp = 0.0;  // Kahan accumulator for the mean

    auto flush = [&] {
        if (!open) return;
        cur.mean = sum / static_cast<double>(cur.count);
        out.push_back(cur);
        open = false;
    };

    for (auto it = lo; it != hi; ++it) {
        const std::int64_t start = floorDiv(it->timestamp_ms, interval_len_ms) * interval_len_ms;
        if (!open || start != cur.interval_start_ms) {
            flush();
            cur = TrendPoint{st.id, start, interval_len_ms, it->value, it->value, 0.0, 0};
            sum = 0.0;
            comp = 0.0;
            open = true;
        }
        cur.min = std::min(cur.min, it->value);
        cur.max = std::max(cur.max, it->value);
        ++cur.count;
        double y = it->value - comp;
        double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    flush();
    return out;
}

std::optional<VariableId> Store::find(const std::string& name) const {
    std::shared_lock lock(mutex_);
    auto it = vars_.find(name);
    if (it == vars_.end()) return std::nullopt;
    return it->second.id;
}

std::vector<std::string> Store::variableNames() const {
    std::shared_lock lock(mutex_);
    std::vector<std::string> names;
    names.reserve(vars_.size());
    for (const auto& [name, st] : vars_) names.push_back(name);
    return names;
}

}  // namespace plantbus::rtdb
