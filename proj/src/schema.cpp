#include "evi/tools/schema.hpp"

#include <algorithm>
#include <cmath>

namespace evi {

const char* to_string(ArgType type) {
    switch (type) {
        case ArgType::string_t: return "string";
        case ArgType::number_t: return "number";
        case ArgType::integer_t: return "integer";
        case ArgType::boolean_t: return "boolean";
        case ArgType::array_t: return "array";
        case ArgType::object_t: return "object";
    }
    return "string";
}

std::optional<ArgType> arg_type_from_string(std::string_view name) {
    if (name == "string") return ArgType::string_t;
    if (name == "number") return ArgType::number_t;
    if (name == "integer") return ArgType::integer_t;
    if (name == "boolean") return ArgType::boolean_t;
    if (name == "array") return ArgType::array_t;
    if (name == "object") return ArgType::object_t;
    return std::nullopt;
}

const char* to_string(ViolationKind kind) {
    switch (kind) {
        case ViolationKind::missing: return "missing";
        case ViolationKind::type_mismatch: return "type_mismatch";
        case ViolationKind::enum_violation: return "enum_violation";
        case ViolationKind::unknown_field: return "unknown_field";
    }
    return "missing";
}

const PropertySpec* ArgSchema::find(const std::string& name) const {
    for (const auto& [prop_name, spec] : properties)
        if (prop_name == name) return &spec;
    return nullptr;
}

bool ArgSchema::is_required(const std::string& name) const {
    return std::find(required.begin(), required.end(), name) != required.end();
}

bool matches_type(const Json& value, ArgType type) {
    switch (type) {
        case ArgType::string_t: return value.is_string();
        case ArgType::number_t: return value.is_number();
        case ArgType::integer_t:
            if (value.is_number_integer() || value.is_number_unsigned()) return true;
            if (value.is_number_float()) {
                double d = value.get<double>();
                return std::isfinite(d) && d == std::floor(d);
            }
            return false;
        case ArgType::boolean_t: return value.is_boolean();
        case ArgType::array_t: return value.is_array();
        case ArgType::object_t: return value.is_object();
    }
    return false;
}

std::vector<Violation> validate_args(const ArgSchema& schema, const Json& args) {
    std::vector<Violation> out;
    if (!args.is_object()) {
        out.push_back({ViolationKind::type_mismatch, "", "arguments must be a JSON object"});
        return out;
    }
    for (const auto& name : schema.required) {
        if (!args.contains(name))
            out.push_back({ViolationKind::missing, name, "required field '" + name + "' is missing"});
    }
    // nlohmann objects iterate in sorted key order — deterministic.
    for (auto it = args.begin(); it != args.end(); ++it) {
        const PropertySpec* spec = schema.find(it.key());
        if (!spec) {
            out.push_back({ViolationKind::unknown_field, it.key(),
                           "unknown field '" + it.key() + "'"});
            continue;
        }
        if (!matches_type(it.value(), spec->type)) {
            out.push_back({ViolationKind::type_mismatch, it.key(),
                           "field '" + it.key() + "' must be of type " + to_string(spec->type)});
            continue;
        }
        if (!spec->enum_values.empty()) {
            bool hit = false;
            for (const auto& allowed : spec->enum_values)
                if (allowed == it.value()) {
                    hit = true;
                    break;
                }
            if (!hit)
                out.push_back({ViolationKind::enum_violation, it.key(),
                               "field '" + it.key() + "' must be one of the enum values, got " +
                                   canon_dump(it.value())});
        }
    }
    return out;
}

std::string describe_violations(const std::vector<Violation>& violations) {
    std::string out;
    for (std::size_t i = 0; i < violations.size(); ++i) {
        if (i) out += "; ";
        out += violations[i].message;
    }
    return out;
}

}  // namespace evi
