#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "evi/jsonutil.hpp"

namespace evi {

enum class ArgType { string_t, number_t, integer_t, boolean_t, array_t, object_t };

const char* to_string(ArgType type);
std::optional<ArgType> arg_type_from_string(std::string_view name);

struct PropertySpec {
    ArgType type = ArgType::string_t;
    std::string description;
    std::vector<Json> enum_values;  // empty => unconstrained

    bool operator==(const PropertySpec&) const = default;
};

struct ArgSchema {
    // Sorted by property name (JSON object order); deterministic rendering.
    std::vector<std::pair<std::string, PropertySpec>> properties;
    std::vector<std::string> required;

    const PropertySpec* find(const std::string& name) const;
    bool is_required(const std::string& name) const;

    bool operator==(const ArgSchema&) const = default;
};

enum class ViolationKind { missing, type_mismatch, enum_violation, unknown_field };

const char* to_string(ViolationKind kind);

struct Violation {
    ViolationKind kind = ViolationKind::missing;
    std::string field;
    std::string message;

    bool operator==(const Violation&) const = default;
};

// True when `value` inhabits `type` under JSON-schema conventions
// (any number with zero fractional part counts as an integer).
bool matches_type(const Json& value, ArgType type);

// Strict validation: missing requireds (schema order), then per provided
// field (name order): unknown field, type mismatch, enum violation.
// Empty result means the arguments are acceptable.
std::vector<Violation> validate_args(const ArgSchema& schema, const Json& args);

std::string describe_violations(const std::vector<Violation>& violations);

}  // namespace evi
