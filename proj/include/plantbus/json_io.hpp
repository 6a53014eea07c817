// Copyright the plantbus authors. Licensed under the terms of the Apache 2.0
// license. See LICENSE in the project root.
#pragma once

#include <cstdio>

#include <json.hpp>

#include "plantbus/appmods.hpp"
#include "plantbus/latency.hpp"
#include "plantbus/rtdb.hpp"
#include "plantbus/runtime.hpp"
#include "plantbus/topology.hpp"

// JSON views of the report types. nlohmann::json keeps object keys sorted,
// so two structurally equal reports always serialize to the same bytes.

namespace plantbus::rtdb {

inline void to_json(nlohmann::json& j, const Quality& q) {
    switch (q) {
        case Quality::good: j = "good"; return;
        case Quality::uncertain: j = "uncertain"; return;
        case Quality::bad: j = "bad"; return;
    }
    j = "bad";
}

inline void to_json(nlohmann::json& j, const Sample& s) {
    j = nlohmann::json{
        {"quality", s.quality},
        {"timestamp_ms", s.timestamp_ms},
        {"value", s.value},
        {"variable", s.variable.name},
    };
}

inline void to_json(nlohmann::json& j, const TrendPoint& p) {
    j = nlohmann::json{
        {"count", p.count},
        {"interval_len_ms", p.interval_len_ms},
        {"interval_start_ms", p.interval_start_ms},
        {"max", p.max},
        {"mean", p.mean},
        {"min", p.min},
        {"variable", p.variable.name},
    };
}

}  // namespace plantbus::rtdb

namespace plantbus::appmods {

inline void to_json(nlohmann::json& j, const StatusRow& r) {
    if (!r.has_data) {
        j = nlohmann::json{{"no_data", true}, {"variable", r.variable}};
        return;
    }
    j = nlohmann::json{
        {"age_ms", r.age_ms},
        {"quality", r.quality},
        {"timestamp_ms", r.timestamp_ms},
        {"value", r.value},
        {"variable", r.variable},
    };
}

inline void to_json(nlohmann::json& j, const StatusReport& r) {
    j = nlohmann::json{{"generated_at_ms", r.generated_at_ms}, {"rows", r.rows}};
}

inline void to_json(nlohmann::json& j, const UsageReport& r) {
    j = nlohmann::json{
        {"t0", r.t0},
        {"t1", r.t1},
        {"total_count", r.total_count},
        {"variable", r.variable},
    };
    if (r.has_data) {
        j["max"] = r.max;
        j["mean"] = r.mean;
        j["min"] = r.min;
    } else {
        j["no_data"] = true;
    }
}

}  // namespace plantbus::appmods

namespace plantbus::harness {

inline void to_json(nlohmann::json& j, const LatencyReport& r) {
    nlohmann::json q = nlohmann::json::object();
    for (const auto& [quantile, value] : r.quantiles) {
        char key[16];
        std::snprintf(key, sizeof(key), "p%02d", static_cast<int>(quantile * 100.0 + 0.5));
        q[key] = value;
    }
    j = nlohmann::json{
        {"max_us", r.max_us},
        {"mean_us", r.mean_us},
        {"min_us", r.min_us},
        {"operation", r.operation},
        {"quantiles", q},
        {"sample_count", r.sample_count},
    };
}

// The sample and trend handles are inspection state for tests, not part of
// the report.
inline void to_json(nlohmann::json& j, const ScenarioResult& r) {
    j = nlohmann::json{
        {"computed_evaluations", r.computed_evaluations},
        {"duration_ms", r.duration_ms},
        {"emitted", r.emitted},
        {"evicted", r.evicted},
        {"latency", r.latency},
        {"stored", r.stored},
        {"trend_points", r.trend_points},
    };
}

}  // namespace plantbus::harness

namespace plantbus::topology {

inline void to_json(nlohmann::json& j, const Violation& v) {
    j = nlohmann::json{{"detail", v.detail}, {"element", v.element}, {"rule", v.rule}};
}

}  // namespace plantbus::topology
