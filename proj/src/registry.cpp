#include "evi/tools/registry.hpp"

#include <chrono>
#include <fstream>

#include "httplib.h"

#include "evi/errors.hpp"

namespace evi {

namespace {

// Parses one tool entry; `at` names the config path for diagnostics.
ToolSpec parse_tool(const Json& t, const std::string& at) {
    if (!t.is_object()) throw ConfigError("parse", at + ": tool entry must be an object");

    for (const char* field : {"name", "kind", "description", "transport", "schema"})
        if (!t.contains(field))
            throw ConfigError("parse", at + ": missing field '" + std::string(field) + "'");

    ToolSpec spec;
    if (!t["name"].is_string())
        throw ConfigError("parse", at + ".name: must be a string");
    spec.name = t["name"].get<std::string>();
    if (!valid_tool_name(spec.name))
        throw ConfigError("bad_name", at + ".name: '" + spec.name +
                                          "' does not match [a-z][a-z0-9_]*");

    if (!t["kind"].is_string())
        throw ConfigError("parse", at + ".kind: must be a string");
    auto kind = evidence_kind_from_string(t["kind"].get<std::string>());
    if (!kind)
        throw ConfigError("unknown_kind", at + ".kind: unknown kind '" +
                                              t["kind"].get<std::string>() + "'");
    spec.kind = *kind;

    if (!t["description"].is_string() || t["description"].get<std::string>().empty())
        throw ConfigError("parse", at + ".description: must be a non-empty string");
    spec.description = t["description"].get<std::string>();

    const Json& tr = t["transport"];
    if (!tr.is_object() || !tr.contains("type") || !tr["type"].is_string())
        throw ConfigError("parse", at + ".transport: must be an object with a 'type'");
    std::string type = tr["type"].get<std::string>();
    if (type == "builtin") {
        spec.transport.type = Transport::Type::builtin;
        if (!tr.contains("mock") || !tr["mock"].is_string() || tr["mock"].get<std::string>().empty())
            throw ConfigError("parse", at + ".transport.mock: builtin transport needs a mock id");
        spec.transport.target = tr["mock"].get<std::string>();
    } else if (type == "http") {
        spec.transport.type = Transport::Type::http;
        if (!tr.contains("endpoint") || !tr["endpoint"].is_string() ||
            tr["endpoint"].get<std::string>().empty())
            throw ConfigError("parse", at + ".transport.endpoint: http transport needs an endpoint");
        spec.transport.target = tr["endpoint"].get<std::string>();
    } else {
        throw ConfigError("parse", at + ".transport.type: must be 'builtin' or 'http'");
    }

    const Json& schema = t["schema"];
    if (!schema.is_object() || !schema.contains("properties") || !schema["properties"].is_object())
        throw ConfigError("bad_schema", at + ".schema: must be an object with 'properties'");
    for (auto it = schema["properties"].begin(); it != schema["properties"].end(); ++it) {
        const std::string prop_at = at + ".schema.properties." + it.key();
        const Json& p = it.value();
        if (!p.is_object() || !p.contains("type") || !p["type"].is_string())
            throw ConfigError("bad_schema", prop_at + ": must be an object with a 'type'");
        auto type_tag = arg_type_from_string(p["type"].get<std::string>());
        if (!type_tag)
            throw ConfigError("bad_schema", prop_at + ".type: unknown type '" +
                                                p["type"].get<std::string>() + "'");
        PropertySpec prop;
        prop.type = *type_tag;
        if (p.contains("description")) {
            if (!p["description"].is_string())
                throw ConfigError("bad_schema", prop_at + ".description: must be a string");
            prop.description = p["description"].get<std::string>();
        }
        if (p.contains("enum")) {
            if (!p["enum"].is_array() || p["enum"].empty())
                throw ConfigError("bad_schema", prop_at + ".enum: must be a non-empty array");
            for (std::size_t i = 0; i < p["enum"].size(); ++i) {
                if (!matches_type(p["enum"][i], prop.type))
                    throw ConfigError("bad_schema",
                                      prop_at + ".enum[" + std::to_string(i) +
                                          "]: value does not match declared type " +
                                          to_string(prop.type));
                prop.enum_values.push_back(p["enum"][i]);
            }
        }
        spec.schema.properties.emplace_back(it.key(), std::move(prop));
    }
    if (schema.contains("required")) {
        if (!schema["required"].is_array())
            throw ConfigError("bad_schema", at + ".schema.required: must be an array");
        for (const auto& r : schema["required"]) {
            if (!r.is_string())
                throw ConfigError("bad_schema", at + ".schema.required: entries must be strings");
            std::string name = r.get<std::string>();
            if (!spec.schema.find(name))
                throw ConfigError("bad_schema", at + ".schema.required: '" + name +
                                                    "' is not a declared property");
            spec.schema.required.push_back(name);
        }
    }

    if (t.contains("timeout_ms")) {
        if (!t["timeout_ms"].is_number_integer() || t["timeout_ms"].get<int>() <= 0)
            throw ConfigError("parse", at + ".timeout_ms: must be a positive integer");
        spec.timeout_ms = t["timeout_ms"].get<int>();
    }
    return spec;
}

ToolResult http_dispatch(const ToolSpec& spec, const ToolCall& call) {
    ToolResult result;
    result.call_id = call.call_id;

    auto scheme_end = spec.transport.target.find("://");
    if (scheme_end == std::string::npos) {
        result.status = ToolResultStatus::tool_error;
        result.diagnostic = "bad endpoint: " + spec.transport.target;
        return result;
    }
    auto path_begin = spec.transport.target.find('/', scheme_end + 3);
    std::string host = path_begin == std::string::npos ? spec.transport.target
                                                       : spec.transport.target.substr(0, path_begin);
    std::string path = path_begin == std::string::npos ? "/"
                                                       : spec.transport.target.substr(path_begin);

    Json body{{"tool", call.tool_name}, {"arguments", call.arguments}};
    auto started = std::chrono::steady_clock::now();
    auto elapsed_ms = [&] {
        return std::chrono::duration_cast<std::chrono::milliseconds>(
                   std::chrono::steady_clock::now() - started)
            .count();
    };

    // One retry on transport-level failure.
    httplib::Result res;
    for (int attempt = 0; attempt < 2; ++attempt) {
        httplib::Client client(host);
        client.set_connection_timeout(0, spec.timeout_ms * 1000LL);
        client.set_read_timeout(spec.timeout_ms / 1000, (spec.timeout_ms % 1000) * 1000);
        client.set_write_timeout(spec.timeout_ms / 1000, (spec.timeout_ms % 1000) * 1000);
        res = client.Post(path, body.dump(), "application/json");
        if (res) break;
        bool timed_out = res.error() == httplib::Error::ConnectionTimeout ||
                         (res.error() == httplib::Error::Read && elapsed_ms() >= spec.timeout_ms);
        if (timed_out) {
            result.status = ToolResultStatus::timeout;
            result.diagnostic = "tool endpoint timed out after " +
                                std::to_string(spec.timeout_ms) + " ms";
            return result;
        }
    }
    if (!res) {
        result.status = ToolResultStatus::tool_error;
        result.diagnostic = "transport failure after retry: " + httplib::to_string(res.error());
        return result;
    }
    if (res->status != 200) {
        result.status = ToolResultStatus::tool_error;
        result.diagnostic = "tool endpoint returned HTTP " + std::to_string(res->status);
        return result;
    }
    Json reply = parse_lenient(res->body);
    if (reply.is_discarded() || !reply.is_object() || !reply.contains("status") ||
        !reply["status"].is_string() || !reply.contains("payload")) {
        result.status = ToolResultStatus::tool_error;
        result.diagnostic = "tool endpoint response must be {status, payload}";
        return result;
    }
    auto status = tool_status_from_string(reply["status"].get<std::string>());
    if (!status) {
        result.status = ToolResultStatus::tool_error;
        result.diagnostic = "tool endpoint returned unknown status '" +
                            reply["status"].get<std::string>() + "'";
        return result;
    }
    result.status = *status;
    if (result.ok()) {
        result.payload = reply["payload"];
    } else {
        result.diagnostic = reply["payload"].is_string() ? reply["payload"].get<std::string>()
                                                         : canon_dump(reply["payload"]);
    }
    return result;
}

}  // namespace

bool valid_tool_name(const std::string& name) {
    if (name.empty()) return false;
    if (name[0] < 'a' || name[0] > 'z') return false;
    for (char c : name) {
        bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
        if (!ok) return false;
    }
    return true;
}

void Registry::add(ToolSpec spec) {
    if (!valid_tool_name(spec.name))
        throw ConfigError("bad_name", "tool name '" + spec.name +
                                          "' does not match [a-z][a-z0-9_]*");
    if (find(spec.name))
        throw ConfigError("duplicate_tool", "tool '" + spec.name + "' is already registered");
    tools_.push_back(std::move(spec));
}

const ToolSpec* Registry::find(const std::string& name) const {
    for (const auto& t : tools_)
        if (t.name == name) return &t;
    return nullptr;
}

Registry load_config(const std::string& path, const std::set<EvidenceKind>& disabled_kinds) {
    std::ifstream in(path);
    if (!in) throw ConfigError("io", "cannot open tool config: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    Json doc = parse_lenient(text);
    if (doc.is_discarded())
        throw ConfigError("parse", "tool config is not valid JSON: " + path);
    return load_config_json(doc, disabled_kinds);
}

Registry load_config_json(const Json& doc, const std::set<EvidenceKind>& disabled_kinds) {
    if (!doc.is_object() || !doc.contains("tools") || !doc["tools"].is_array())
        throw ConfigError("parse", "tool config must be an object with a 'tools' array");
    const Json& tools = doc["tools"];
    if (tools.empty()) throw ConfigError("parse", "tools: array must be non-empty");

    Registry registry;
    for (std::size_t i = 0; i < tools.size(); ++i) {
        ToolSpec spec = parse_tool(tools[i], "tools[" + std::to_string(i) + "]");
        if (disabled_kinds.count(spec.kind)) continue;
        registry.add(std::move(spec));
    }
    if (registry.empty())
        throw ConfigError("empty_registry",
                          "no tools left after filtering disabled kinds");
    return registry;
}

std::string tools_prompt(const Registry& registry) {
    if (registry.empty()) return "(no tools available)\n";
    std::string out;
    for (const auto& tool : registry.tools()) {
        out += "- " + tool.name + " (kind: " + to_string(tool.kind) + ")\n";
        out += "  " + tool.description + "\n";
        if (tool.schema.properties.empty()) {
            out += "  args: none\n";
        } else {
            out += "  args:\n";
            for (const auto& [name, prop] : tool.schema.properties) {
                out += "    " + name + " (" + to_string(prop.type);
                out += tool.schema.is_required(name) ? ", required" : ", optional";
                out += ")";
                if (!prop.enum_values.empty()) {
                    out += " one of [";
                    for (std::size_t i = 0; i < prop.enum_values.size(); ++i) {
                        if (i) out += ", ";
                        out += canon_dump(prop.enum_values[i]);
                    }
                    out += "]";
                }
                if (!prop.description.empty()) out += ": " + prop.description;
                out += "\n";
            }
        }
    }
    return out;
}

ToolResult dispatch(const Registry& registry, const ToolCall& call, const ToolHost& host) {
    ToolResult result;
    result.call_id = call.call_id;
    auto started = std::chrono::steady_clock::now();
    auto finish = [&](ToolResult r) {
        r.latency_ms = std::chrono::duration<double, std::milli>(
                           std::chrono::steady_clock::now() - started)
                           .count();
        return r;
    };

    const ToolSpec* spec = registry.find(call.tool_name);
    if (!spec) {
        result.status = ToolResultStatus::validation_error;
        result.diagnostic = "unknown tool: " + call.tool_name;
        result.hallucinated = true;
        return finish(std::move(result));
    }

    // A completely empty schema (no properties, no required list) declares an
    // unvalidated tool: arguments pass through to the transport as-is.
    bool open_schema = spec->schema.properties.empty() && spec->schema.required.empty();
    if (!open_schema) {
        auto violations = validate_args(spec->schema, call.arguments);
        if (!violations.empty()) {
            result.status = ToolResultStatus::validation_error;
            result.diagnostic = describe_violations(violations);
            return finish(std::move(result));
        }
    }

    if (spec->transport.type == Transport::Type::builtin) {
        auto it = host.builtins.find(spec->transport.target);
        if (it == host.builtins.end()) {
            result.status = ToolResultStatus::tool_error;
            result.diagnostic = "builtin implementation '" + spec->transport.target +
                                "' is not registered";
            return finish(std::move(result));
        }
        try {
            result.payload = it->second(call.arguments);
            result.status = ToolResultStatus::ok;
        } catch (const std::exception& e) {
            result.status = ToolResultStatus::tool_error;
            result.diagnostic = e.what();
            result.payload = Json();
        } catch (...) {
            result.status = ToolResultStatus::tool_error;
            result.diagnostic = "tool implementation failed";
            result.payload = Json();
        }
        return finish(std::move(result));
    }

    try {
        return finish(http_dispatch(*spec, call));
    } catch (const std::exception& e) {
        result.status = ToolResultStatus::tool_error;
        result.diagnostic = e.what();
        return finish(std::move(result));
    }
}

}  // namespace evi
