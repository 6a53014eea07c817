// Copyright the plantbus authors. Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "plantbus/appmods.hpp"
#include "plantbus/errors.hpp"
#include "plantbus/gateway.hpp"
#include "plantbus/session.hpp"

// The two-step deployment method: a logical component graph designed with no
// reference to hardware, then a plan assigning components to nodes, from
// which every channel's transport binding follows mechanically.

namespace plantbus::topology {

enum class Level { data_stream, data_organization, application_processing };

const char* toString(Level level);
std::optional<Level> parseLevel(std::string_view text);

enum class Pattern { rpc, event, stream, file };

const char* toString(Pattern pattern);
std::optional<Pattern> parsePattern(std::string_view text);

struct NodeDecl {
    std::string name;
    std::string address;  // host:port hosting this node's listeners

    friend bool operator==(const NodeDecl&, const NodeDecl&) = default;
};

struct ComponentDecl {
    std::string name;
    Level level = Level::data_organization;
    std::string node;

    friend bool operator==(const ComponentDecl&, const ComponentDecl&) = default;
};

struct ChannelDecl {
    std::uint32_t id = 0;
    std::string from;
    std::string to;
    Pattern pattern = Pattern::stream;

    friend bool operator==(const ChannelDecl&, const ChannelDecl&) = default;
};

/// A signal emitted by one data_stream component.
struct PlannedSignal {
    gateway::SignalSpec spec;
    std::string component;

    friend bool operator==(const PlannedSignal&, const PlannedSignal&) = default;
};

/// A computed variable evaluated by one application_processing component.
struct PlannedComputed {
    appmods::ComputedDef def;
    std::string component;

    friend bool operator==(const PlannedComputed&, const PlannedComputed&) = default;
};

struct DeploymentPlan {
    std::vector<NodeDecl> nodes;
    std::vector<ComponentDecl> components;
    std::vector<ChannelDecl> channels;
    bool allow_level_skip = false;
    std::int64_t retention_window_ms = 600'000;
    std::int64_t trend_interval_ms = 60'000;
    std::int64_t period_ms = 1000;  // acquisition period for planned signals
    std::vector<PlannedSignal> signals;
    std::vector<PlannedComputed> computed;

    std::optional<ComponentDecl> findComponent(const std::string& name) const;
    std::optional<NodeDecl> findNode(const std::string& name) const;
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t byte_offset)
        : Error(what), byte_offset_(byte_offset) {}
    std::size_t byteOffset() const { return byte_offset_; }

private:
    std::size_t byte_offset_ = 0;
};

class SchemaError : public Error {
public:
    using Error::Error;
};

class UnvalidatedPlanError : public Error {
public:
    using Error::Error;
};

/// One broken invariant: which rule, which element, and a readable note.
struct Violation {
    std::string rule;     // e.g. "level-skip", "unknown-endpoint"
    std::string element;  // offending component/channel/node
    std::string detail;

    friend bool operator==(const Violation&, const Violation&) = default;
};

/// Parses the JSON plan document, applying defaults. Malformed JSON raises
/// ParseError with the byte offset; a missing or ill-typed key raises
/// SchemaError naming it.
DeploymentPlan parsePlan(const std::string& text);

/// Empty iff every plan invariant holds. Violations are data, not errors.
std::vector<Violation> validatePlan(const DeploymentPlan& plan);

/// One Binding per channel: endpoints on one node bind in_process, otherwise
/// network at the to-side node's address. Raises UnvalidatedPlanError when
/// validatePlan(plan) is nonempty.
std::map<std::uint32_t, session::Binding> deriveBindings(const DeploymentPlan& plan);

}  // namespace plantbus::topology
