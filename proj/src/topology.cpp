// Copyright the plantbus authors. Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#include "plantbus/topology.hpp"

#include <algorithm>
#include <set>

#include <json.hpp>

namespace plantbus::topology {

using nlohmann::json;

const char* toString(Level level) {
    switch (level) {
        case Level::data_stream: return "data_stream";
        case Level::data_organization: return "data_organization";
        default: return "application_processing";
    }
}

std::optional<Level> parseLevel(std::string_view text) {
    if (text == "data_stream") return Level::data_stream;
    if (text == "data_organization") return Level::data_organization;
    if (text == "application_processing") return Level::application_processing;
    return std::nullopt;
}

const char* toString(Pattern pattern) {
    switch (pattern) {
        case Pattern::rpc: return "rpc";
        case Pattern::event: return "event";
        case Pattern::stream: return "stream";
        default: return "file";
    }
}

std::optional<Pattern> parsePattern(std::string_view text) {
    if (text == "rpc") return Pattern::rpc;
    if (text == "event") return Pattern::event;
    if (text == "stream") return Pattern::stream;
    if (text == "file") return Pattern::file;
    return std::nullopt;
}

std::optional<ComponentDecl> DeploymentPlan::findComponent(const std::string& name) const {
    for (const auto& c : components) {
        if (c.name == name) return c;
    }
    return std::nullopt;
}

std::optional<NodeDecl> DeploymentPlan::findNode(const std::string& name) const {
    for (const auto& n : nodes) {
        if (n.name == name) return n;
    }
    return std::nullopt;
}

namespace {

const json& requireKey(const json& obj, const char* key, const std::string& context) {
    auto it = obj.find(key);
    if (it == obj.end()) throw SchemaError("missing key '" + std::string(key) + "' in " + context);
    return *it;
}

std::string requireString(const json& obj, const char* key, const std::string& context) {
    const json& v = requireKey(obj, key, context);
    if (!v.is_string()) {
        throw SchemaError("key '" + std::string(key) + "' in " + context + " must be a string");
    }
    return v.get<std::string>();
}

double requireNumber(const json& obj, const char* key, const std::string& context) {
    const json& v = requireKey(obj, key, context);
    if (!v.is_number()) {
        throw SchemaError("key '" + std::string(key) + "' in " + context + " must be a number");
    }
    return v.get<double>();
}

double numberOr(const json& obj, const char* key, double fallback, const std::string& context) {
    auto it = obj.find(key);
    if (it == obj.end()) return fallback;
    if (!it->is_number()) {
        throw SchemaError("key '" + std::string(key) + "' in " + context + " must be a number");
    }
    return it->get<double>();
}

std::int64_t positiveIntOr(const json& obj, const char* key, std::int64_t fallback) {
    auto it = obj.find(key);
    if (it == obj.end()) return fallback;
    if (!it->is_number_integer() || it->get<std::int64_t>() <= 0) {
        throw SchemaError("key '" + std::string(key) + "' must be a positive integer");
    }
    return it->get<std::int64_t>();
}

const json& requireArray(const json& obj, const char* key) {
    const json& v = requireKey(obj, key, "plan");
    if (!v.is_array()) throw SchemaError("key '" + std::string(key) + "' must be an array");
    return v;
}

// Resolves which component owns a planned signal or computed variable: an
// explicit "component" key wins; otherwise the single component at the
// required level is implied, and anything else is ambiguous.
std::string resolveComponent(const json& item, const DeploymentPlan& plan, Level level,
                             const std::string& context) {
    if (auto it = item.find("component"); it != item.end()) {
        if (!it->is_string()) throw SchemaError("key 'component' in " + context + " must be a string");
        return it->get<std::string>();
    }
    std::string found;
    int count = 0;
    for (const auto& c : plan.components) {
        if (c.level == level) {
            found = c.name;
            count += 1;
        }
    }
    if (count == 1) return found;
    if (count == 0) {
        throw SchemaError("no " + std::string(toString(level)) + " component to own " + context);
    }
    throw SchemaError("several " + std::string(toString(level)) + " components could own " + context +
                      "; add a 'component' key");
}

gateway::Generator parseGenerator(const json& item, const std::string& context) {
    std::string kind = requireString(item, "generator", context);
    if (kind == "constant") {
        gateway::Constant g;
        g.value = numberOr(item, "value", 0.0, context);
        return g;
    }
    if (kind == "ramp") {
        gateway::Ramp g;
        g.offset = numberOr(item, "offset", 0.0, context);
        g.slope_per_s = numberOr(item, "slope_per_s", 0.0, context);
        return g;
    }
    if (kind == "sine") {
        gateway::Sine g;
        g.amplitude = numberOr(item, "amplitude", 1.0, context);
        g.period_s = numberOr(item, "period_s", 1.0, context);
        g.phase_rad = numberOr(item, "phase_rad", 0.0, context);
        g.offset = numberOr(item, "offset", 0.0, context);
        if (!(g.period_s > 0.0)) throw SchemaError("sine period_s must be positive in " + context);
        return g;
    }
    if (kind == "random_walk") {
        gateway::RandomWalk g;
        g.start = numberOr(item, "start", 0.0, context);
        g.step_sd = numberOr(item, "step_sd", 1.0, context);
        if (g.step_sd < 0.0) throw SchemaError("random_walk step_sd must be nonnegative in " + context);
        if (auto it = item.find("seed"); it != item.end()) {
            if (!it->is_number_unsigned() && !it->is_number_integer()) {
                throw SchemaError("key 'seed' in " + context + " must be an integer");
            }
            g.seed = it->get<std::uint64_t>();
        }
        return g;
    }
    throw SchemaError("unknown generator '" + kind + "' in " + context);
}

}  // namespace

DeploymentPlan parsePlan(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(e.what(), e.byte);
    }
    if (!doc.is_object()) throw SchemaError("plan document must be a JSON object");

    DeploymentPlan plan;
    for (const auto& n : requireArray(doc, "nodes")) {
        NodeDecl node;
        node.name = requireString(n, "name", "node");
        node.address = requireString(n, "address", "node '" + node.name + "'");
        plan.nodes.push_back(std::move(node));
    }

    std::set<std::string> component_names;
    for (const auto& c : requireArray(doc, "components")) {
        ComponentDecl comp;
        comp.name = requireString(c, "name", "component");
        std::string level_text = requireString(c, "level", "component '" + comp.name + "'");
        auto level = parseLevel(level_text);
        if (!level) {
            throw SchemaError("unknown level '" + level_text + "' in component '" + comp.name + "'");
        }
        comp.level = *level;
        comp.node = requireString(c, "node", "component '" + comp.name + "'");
        if (!component_names.insert(comp.name).second) {
            throw SchemaError("duplicate component name: " + comp.name);
        }
        plan.components.push_back(std::move(comp));
    }

    for (const auto& c : requireArray(doc, "channels")) {
        ChannelDecl chan;
        double id = requireNumber(c, "id", "channel");
        if (id < 0 || id > 4294967295.0 || id != static_cast<double>(static_cast<std::uint64_t>(id))) {
            throw SchemaError("channel id must be a 32-bit unsigned integer");
        }
        chan.id = static_cast<std::uint32_t>(id);
        std::string context = "channel " + std::to_string(chan.id);
        chan.from = requireString(c, "from", context);
        chan.to = requireString(c, "to", context);
        if (auto it = c.find("pattern"); it != c.end()) {
            if (!it->is_string()) throw SchemaError("key 'pattern' in " + context + " must be a string");
            auto pattern = parsePattern(it->get<std::string>());
            if (!pattern) {
                throw SchemaError("unknown pattern '" + it->get<std::string>() + "' in " + context);
            }
            chan.pattern = *pattern;
        }
        plan.channels.push_back(std::move(chan));
    }

    if (auto it = doc.find("allow_level_skip"); it != doc.end()) {
        if (!it->is_boolean()) throw SchemaError("key 'allow_level_skip' must be a boolean");
        plan.allow_level_skip = it->get<bool>();
    }
    plan.retention_window_ms = positiveIntOr(doc, "retention_window_ms", plan.retention_window_ms);
    plan.trend_interval_ms = positiveIntOr(doc, "trend_interval_ms", plan.trend_interval_ms);
    plan.period_ms = positiveIntOr(doc, "period_ms", plan.period_ms);

    if (auto it = doc.find("signals"); it != doc.end()) {
        if (!it->is_array()) throw SchemaError("key 'signals' must be an array");
        for (const auto& s : *it) {
            PlannedSignal sig;
            sig.spec.variable.name = requireString(s, "variable", "signal");
            sig.spec.variable.kind = rtdb::VarKind::raw;
            std::string context = "signal '" + sig.spec.variable.name + "'";
            sig.spec.generator = parseGenerator(s, context);
            sig.component = resolveComponent(s, plan, Level::data_stream, context);
            plan.signals.push_back(std::move(sig));
        }
    }

    if (auto it = doc.find("computed"); it != doc.end()) {
        if (!it->is_array()) throw SchemaError("key 'computed' must be an array");
        for (const auto& c : *it) {
            PlannedComputed pc;
            pc.def.output.name = requireString(c, "output", "computed variable");
            pc.def.output.kind = rtdb::VarKind::computed;
            std::string context = "computed variable '" + pc.def.output.name + "'";
            const json& inputs = requireKey(c, "inputs", context);
            if (!inputs.is_array()) throw SchemaError("key 'inputs' in " + context + " must be an array");
            for (const auto& name : inputs) {
                if (!name.is_string()) {
                    throw SchemaError("inputs of " + context + " must be strings");
                }
                pc.def.inputs.push_back(name.get<std::string>());
            }
            pc.def.expr = requireString(c, "expr", context);
            pc.component = resolveComponent(c, plan, Level::application_processing, context);
            plan.computed.push_back(std::move(pc));
        }
    }
    return plan;
}

namespace {

void checkLevels(const DeploymentPlan& plan, const ChannelDecl& chan, std::vector<Violation>& out) {
    auto from = plan.findComponent(chan.from);
    auto to = plan.findComponent(chan.to);
    if (!from || !to || plan.allow_level_skip) return;
    Level a = from->level;
    Level b = to->level;
    if (a == Level::data_organization || b == Level::data_organization) return;
    std::string element = "channel " + std::to_string(chan.id);
    if (a == b) {
        out.push_back({"level-peer", element,
                       chan.from + " and " + chan.to + " are both at level " + toString(a) +
                           "; they may connect only to data_organization"});
    } else {
        out.push_back({"level-skip", element,
                       chan.from + " (" + toString(a) + ") may not bypass the data_organization level "
                           "to reach " + chan.to + " (" + toString(b) + ")"});
    }
}

}  // namespace

std::vector<Violation> validatePlan(const DeploymentPlan& plan) {
    std::vector<Violation> out;

    std::set<std::string> node_names;
    for (const auto& n : plan.nodes) {
        if (!node_names.insert(n.name).second) {
            out.push_back({"duplicate-node", "node " + n.name, "node name appears twice"});
        }
        try {
            session::parseHostPort(n.address);
        } catch (const Error& e) {
            out.push_back({"bad-address", "node " + n.name, e.what()});
        }
    }

    std::set<std::string> component_names;
    for (const auto& c : plan.components) {
        if (!component_names.insert(c.name).second) {
            out.push_back({"duplicate-component", "component " + c.name, "component name appears twice"});
        }
        if (!node_names.count(c.node)) {
            out.push_back({"unknown-node", "component " + c.name, "assigned to undeclared node " + c.node});
        }
    }

    std::set<std::uint32_t> channel_ids;
    for (const auto& chan : plan.channels) {
        std::string element = "channel " + std::to_string(chan.id);
        if (!channel_ids.insert(chan.id).second) {
            out.push_back({"duplicate-channel-id", element, "channel id appears twice"});
        }
        if (chan.from == chan.to) {
            out.push_back({"self-loop", element, "from and to are both " + chan.from});
        }
        for (const auto& end : {chan.from, chan.to}) {
            if (!component_names.count(end)) {
                out.push_back({"unknown-endpoint", element, "references undeclared component " + end});
            }
        }
        checkLevels(plan, chan, out);
    }

    std::set<std::string> variable_names;
    for (const auto& sig : plan.signals) {
        std::string element = "signal " + sig.spec.variable.name;
        if (!rtdb::isValidVariableName(sig.spec.variable.name)) {
            out.push_back({"invalid-variable", element, "variable name is not usable"});
        }
        if (!variable_names.insert(sig.spec.variable.name).second) {
            out.push_back({"duplicate-variable", element, "variable declared twice"});
        }
        auto owner = plan.findComponent(sig.component);
        if (!owner) {
            out.push_back({"unknown-component", element, "owned by undeclared component " + sig.component});
        } else if (owner->level != Level::data_stream) {
            out.push_back({"wrong-level", element,
                           "owner " + sig.component + " is not a data_stream component"});
        }
    }
    for (const auto& pc : plan.computed) {
        std::string element = "computed " + pc.def.output.name;
        if (!rtdb::isValidVariableName(pc.def.output.name)) {
            out.push_back({"invalid-variable", element, "variable name is not usable"});
        }
        for (const auto& input : pc.def.inputs) {
            if (!variable_names.count(input)) {
                out.push_back({"unknown-input", element,
                               "input " + input + " is not a declared signal or earlier computed output"});
            }
        }
        if (!variable_names.insert(pc.def.output.name).second) {
            out.push_back({"duplicate-variable", element, "variable declared twice"});
        }
        auto owner = plan.findComponent(pc.component);
        if (!owner) {
            out.push_back({"unknown-component", element, "owned by undeclared component " + pc.component});
        } else if (owner->level != Level::application_processing) {
            out.push_back({"wrong-level", element,
                           "owner " + pc.component + " is not an application_processing component"});
        }
    }
    return out;
}

std::map<std::uint32_t, session::Binding> deriveBindings(const DeploymentPlan& plan) {
    auto violations = validatePlan(plan);
    if (!violations.empty()) {
        throw UnvalidatedPlanError("plan has " + std::to_string(violations.size()) +
                                   " violation(s); first: " + violations.front().rule + " on " +
                                   violations.front().element);
    }
    std::map<std::uint32_t, session::Binding> out;
    for (const auto& chan : plan.channels) {
        const auto from = plan.findComponent(chan.from);
        const auto to = plan.findComponent(chan.to);
        session::Binding binding;
        if (from->node == to->node) {
            binding.mode = session::BindingMode::in_process;
        } else {
            binding.mode = session::BindingMode::network;
            binding.address = plan.findNode(to->node)->address;
        }
        out.emplace(chan.id, binding);
    }
    return out;
}

}  // namespace plantbus::topology
