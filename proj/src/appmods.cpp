// Copyright the plantbus authors. Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#include "plantbus/appmods.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace plantbus::appmods {

void LocalStoreClient::registerVariable(const std::string& name, rtdb::VarKind kind) {
    store_.registerVariable(name, kind);
}

bool LocalStoreClient::insert(const rtdb::Sample& sample) { return store_.insert(sample); }

std::optional<rtdb::Sample> LocalStoreClient::latest(const std::string& variable) {
    return store_.latest(variable);
}

namespace {

ExprPtr validateDef(const ComputedDef& def) {
    ExprPtr tree = parseExpr(def.expr);
    std::set<std::string> declared(def.inputs.begin(), def.inputs.end());
    for (const auto& name : exprIdentifiers(*tree)) {
        if (!declared.count(name)) {
            throw UnknownIdentifierError("expression uses undeclared input: " + name);
        }
    }
    if (hasConstantZeroDivisor(*tree)) {
        throw EvalError("expression divides by a constant zero: " + def.expr);
    }
    return tree;
}

}  // namespace

ComputedHandle defineComputed(const ComputedDef& def, std::shared_ptr<StoreClient> client) {
    ComputedHandle handle;
    handle.def_ = def;
    handle.def_.output.kind = rtdb::VarKind::computed;
    handle.tree_ = validateDef(def);
    // Inputs must already exist; latest() on an unregistered name raises.
    for (const auto& input : def.inputs) {
        try {
            client->latest(input);
        } catch (const Error&) {
            throw UnknownInputError("input not registered: " + input);
        }
    }
    client->registerVariable(handle.def_.output.name, rtdb::VarKind::computed);
    handle.client_ = std::move(client);
    return handle;
}

ComputedHandle defineComputed(const ComputedDef& def, rtdb::Store& store) {
    return defineComputed(def, std::make_shared<LocalStoreClient>(store));
}

std::optional<EvalOutcome> ComputedHandle::eval(std::int64_t now_ms) {
    std::map<std::string, double> env;
    rtdb::Quality worst = rtdb::Quality::good;
    for (const auto& input : def_.inputs) {
        auto latest = client_->latest(input);
        if (!latest) return std::nullopt;
        env[input] = latest->value;
        worst = std::max(worst, latest->quality);
    }
    double value = evalExpr(*tree_, env);
    if (!std::isfinite(value)) throw EvalError("computed value is not finite: " + def_.output.name);

    EvalOutcome outcome;
    outcome.sample.variable = def_.output;
    outcome.sample.timestamp_ms = now_ms;
    outcome.sample.value = value;
    outcome.sample.quality = worst;
    outcome.stored = client_->insert(outcome.sample);
    return outcome;
}

StatusReport statusSnapshot(const std::vector<std::string>& variables, const rtdb::Store& store,
                            std::int64_t now_ms) {
    StatusReport report;
    report.generated_at_ms = now_ms;
    report.rows.reserve(variables.size());
    for (const auto& name : variables) {
        StatusRow row;
        row.variable = name;
        auto latest = store.latest(name);  // raises on unknown variables
        if (latest) {
            row.has_data = true;
            row.value = latest->value;
            row.timestamp_ms = latest->timestamp_ms;
            row.age_ms = std::max<std::int64_t>(0, now_ms - latest->timestamp_ms);
            row.quality = latest->quality;
        }
        report.rows.push_back(std::move(row));
    }
    return report;
}

UsageReport periodReport(const std::string& variable, std::int64_t t0, std::int64_t t1,
                         const rtdb::Store& store, const rtdb::TrendRecordStream* trend_source) {
    if (t0 > t1) throw rtdb::InvalidRangeError("usage report range is reversed");
    if (!store.find(variable)) throw rtdb::UnknownVariableError("unknown variable: " + variable);

    rtdb::TrendMemoryStream empty;
    const rtdb::TrendRecordStream& source = trend_source ? *trend_source : empty;
    std::vector<rtdb::TrendPoint> points = rtdb::queryTrend(store, variable, t0, t1, source);

    UsageReport report;
    report.variable = variable;
    report.t0 = t0;
    report.t1 = t1;
    double weighted = 0.0;
    double comp = 0.0;  // Kahan correction for the weighted sum
    for (const auto& p : points) {
        if (p.count == 0) continue;
        if (!report.has_data) {
            report.min = p.min;
            report.max = p.max;
            report.has_data = true;
        } else {
            report.min = std::min(report.min, p.min);
            report.max = std::max(report.max, p.max);
        }
        report.total_count += p.count;
        double term = p.mean * static_cast<double>(p.count) - comp;
        double next = weighted + term;
        comp = (next - weighted) - term;
        weighted = next;
    }
    if (report.has_data) {
        report.mean = weighted / static_cast<double>(report.total_count);
    }
    return report;
}

}  // namespace plantbus::appmods
