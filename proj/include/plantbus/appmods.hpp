// Copyright the plantbus authors. Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "plantbus/expr.hpp"
#include "plantbus/rtdb.hpp"
#include "plantbus/trend_io.hpp"

// Application processing level: computed variables written back through the
// ordinary insert path, plus status snapshots and usage reports. Computed
// samples are indistinguishable from measured ones to every consumer.

namespace plantbus::appmods {

struct ComputedDef {
    rtdb::VariableId output;  // kind is forced to computed
    std::vector<std::string> inputs;
    std::string expr;

    friend bool operator==(const ComputedDef&, const ComputedDef&) = default;
};

class UnknownInputError : public Error {
public:
    using Error::Error;
};

/// Store access used by computed-variable evaluation. The local adapter
/// wraps a Store in-process; the harness provides a session-backed one, so
/// evaluation code cannot tell where the store lives.
class StoreClient {
public:
    virtual ~StoreClient() = default;
    virtual void registerVariable(const std::string& name, rtdb::VarKind kind) = 0;
    virtual bool insert(const rtdb::Sample& sample) = 0;
    virtual std::optional<rtdb::Sample> latest(const std::string& variable) = 0;
};

class LocalStoreClient final : public StoreClient {
public:
    explicit LocalStoreClient(rtdb::Store& store) : store_(store) {}
    void registerVariable(const std::string& name, rtdb::VarKind kind) override;
    bool insert(const rtdb::Sample& sample) override;
    std::optional<rtdb::Sample> latest(const std::string& variable) override;

private:
    rtdb::Store& store_;
};

struct EvalOutcome {
    rtdb::Sample sample;
    bool stored = false;  // false when the store rejected the insert as late
};

class ComputedHandle {
public:
    ComputedHandle() = default;

    const ComputedDef& def() const { return def_; }

    /// Reads latest() of every input; nothing happens if any input is empty.
    /// Otherwise evaluates, inserts through the ordinary path with quality =
    /// worst input quality, and reports the sample.
    std::optional<EvalOutcome> eval(std::int64_t now_ms);

private:
    friend ComputedHandle defineComputed(const ComputedDef&, std::shared_ptr<StoreClient>);
    ComputedDef def_;
    ExprPtr tree_;
    std::shared_ptr<StoreClient> client_;
};

/// Validates the definition (expression parses, identifiers are declared
/// inputs, no constant zero divisor, inputs registered), registers the
/// output as a computed variable, and returns the evaluation handle.
ComputedHandle defineComputed(const ComputedDef& def, std::shared_ptr<StoreClient> client);
ComputedHandle defineComputed(const ComputedDef& def, rtdb::Store& store);

inline std::optional<rtdb::Sample> evalComputed(ComputedHandle& handle, std::int64_t now_ms) {
    auto outcome = handle.eval(now_ms);
    if (!outcome) return std::nullopt;
    return outcome->sample;
}

struct StatusRow {
    std::string variable;
    bool has_data = false;
    double value = 0.0;
    std::int64_t timestamp_ms = 0;
    std::int64_t age_ms = 0;  // generated_at - timestamp, clamped at 0
    rtdb::Quality quality = rtdb::Quality::good;
};

struct StatusReport {
    std::int64_t generated_at_ms = 0;
    std::vector<StatusRow> rows;
};

/// One row per variable from latest(); rows for empty variables carry the
/// no-data marker. Raw and computed variables are handled identically.
StatusReport statusSnapshot(const std::vector<std::string>& variables, const rtdb::Store& store,
                            std::int64_t now_ms);

struct UsageReport {
    std::string variable;
    std::int64_t t0 = 0;
    std::int64_t t1 = 0;
    std::uint64_t total_count = 0;
    bool has_data = false;  // aggregates below are meaningful only when true
    double min = 0.0;
    double max = 0.0;
    double mean = 0.0;  // weighted by per-interval counts
};

/// Aggregates queryTrend(variable, t0, t1) into one usage summary. Passing
/// no trend source aggregates the in-memory rollup alone.
UsageReport periodReport(const std::string& variable, std::int64_t t0, std::int64_t t1,
                         const rtdb::Store& store, const rtdb::TrendRecordStream* trend_source);

}  // namespace plantbus::appmods
