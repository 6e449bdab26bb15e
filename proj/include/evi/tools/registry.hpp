#pragma once

#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "evi/core/types.hpp"
#include "evi/tools/schema.hpp"

namespace evi {

struct Transport {
    enum class Type { builtin, http };
    Type type = Type::builtin;
    // builtin: id of an in-process implementation; http: endpoint URL.
    std::string target;

    bool operator==(const Transport&) const = default;
};

struct ToolSpec {
    std::string name;  // [a-z][a-z0-9_]*
    EvidenceKind kind = EvidenceKind::custom;
    std::string description;
    Transport transport;
    ArgSchema schema;
    int timeout_ms = 10000;

    bool operator==(const ToolSpec&) const = default;
};

bool valid_tool_name(const std::string& name);

// Ordered tool collection; load order is preserved and drives prompt
// rendering. Registered tools never change or disappear afterwards.
class Registry {
public:
    // Validates name shape and uniqueness; throws ConfigError(bad_name /
    // duplicate_tool).
    void add(ToolSpec spec);

    const ToolSpec* find(const std::string& name) const;
    const std::vector<ToolSpec>& tools() const { return tools_; }
    std::size_t size() const { return tools_.size(); }
    bool empty() const { return tools_.empty(); }

private:
    std::vector<ToolSpec> tools_;
};

// Loads {"tools": [...]} (see README for the field contract), skipping tools
// whose kind is disabled. Throws ConfigError with codes io / parse /
// duplicate_tool / unknown_kind / bad_schema / bad_name / empty_registry;
// messages name the offending config path.
Registry load_config(const std::string& path, const std::set<EvidenceKind>& disabled_kinds = {});
Registry load_config_json(const Json& doc, const std::set<EvidenceKind>& disabled_kinds = {});

// Deterministic tool menu for the planner prompt: one stanza per tool in
// load order — name, kind, description, argument schema.
std::string tools_prompt(const Registry& registry);

// In-process tool implementation. Returns the ok payload; throws
// std::exception (any) to signal a tool_error.
using BuiltinFn = std::function<Json(const Json& args)>;

// Execution context for dispatch: builtin implementations keyed by the
// transport target id.
struct ToolHost {
    std::map<std::string, BuiltinFn> builtins;
};

// Total function: never throws. Unknown tool => validation_error with the
// hallucinated flag; bad args => validation_error; transport/implementation
// failures => tool_error or timeout. Payload is set only on ok.
ToolResult dispatch(const Registry& registry, const ToolCall& call, const ToolHost& host);

}  // namespace evi
