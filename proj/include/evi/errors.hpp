#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace evi {

// Base class for all library errors. `code()` is a stable, machine-readable
// tag (snake_case); what() carries the human-readable diagnostic.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

// ---- evidence memory ----

// Appended item id is not strictly greater than every existing id.
class MemoryOrderError : public Error {
public:
    explicit MemoryOrderError(const std::string& m) : Error("memory_order", m) {}
};

// Item violates evidence invariants (bad kind, non-ok source result, ...).
class InvalidEvidenceError : public Error {
public:
    explicit InvalidEvidenceError(const std::string& m) : Error("invalid_evidence", m) {}
};

// ---- trajectory log ----

// Serialization requested for a log with no terminal event.
class IncompleteTrajectoryError : public Error {
public:
    explicit IncompleteTrajectoryError(const std::string& m) : Error("incomplete_trajectory", m) {}
};

// Bytes on disk do not form a well-formed trajectory.
class TrajectoryParseError : public Error {
public:
    explicit TrajectoryParseError(const std::string& m) : Error("trajectory_parse", m) {}
};

// ---- backend gateway ----

class GatewayError : public Error {
public:
    using Error::Error;
};

class BackendUnavailable : public GatewayError {
public:
    explicit BackendUnavailable(const std::string& m) : GatewayError("backend_unavailable", m) {}
};

class BackendTimeout : public GatewayError {
public:
    explicit BackendTimeout(const std::string& m) : GatewayError("backend_timeout", m) {}
};

// Scripted backend asked for more emissions than the script holds.
class ScriptExhausted : public GatewayError {
public:
    explicit ScriptExhausted(const std::string& m) : GatewayError("script_exhausted", m) {}
};

// Caller violated an API precondition (empty message list, ...).
class PreconditionError : public Error {
public:
    explicit PreconditionError(const std::string& m) : Error("precondition", m) {}
};

// ---- tool registry / configuration ----

// Carries a sub-code: duplicate_tool, unknown_kind, bad_schema, bad_name,
// empty_registry, unknown_variant, io, parse.
class ConfigError : public Error {
public:
    ConfigError(std::string code, const std::string& m) : Error(std::move(code), m) {}
};

// ---- knowledge store ----

// Sub-codes: unknown_label, degenerate_vector, duplicate_entry.
class BuildError : public Error {
public:
    BuildError(std::string code, const std::string& m) : Error(std::move(code), m) {}
};

class DimensionError : public Error {
public:
    explicit DimensionError(const std::string& m) : Error("dimension_mismatch", m) {}
};

class DegenerateVectorError : public Error {
public:
    explicit DegenerateVectorError(const std::string& m) : Error("degenerate_vector", m) {}
};

// Query embedder does not match the embedder the store was built with.
class StoreMismatch : public Error {
public:
    explicit StoreMismatch(const std::string& m) : Error("store_mismatch", m) {}
};

class StoreVersionError : public Error {
public:
    explicit StoreVersionError(const std::string& m) : Error("store_version", m) {}
};

class StoreCorruptError : public Error {
public:
    explicit StoreCorruptError(const std::string& m) : Error("store_corrupt", m) {}
};

// Bad retrieval query (label outside the store's vocabulary, k < 1).
class QueryError : public Error {
public:
    QueryError(std::string code, const std::string& m) : Error(std::move(code), m) {}
};

// ---- report generation ----

// Report violates the evidence-citation contract.
class ReportRejected : public Error {
public:
    explicit ReportRejected(const std::string& m) : Error("report_rejected", m) {}
};

// ---- metrics ----

class MetricsError : public Error {
public:
    MetricsError(std::string code, const std::string& m) : Error(std::move(code), m) {}
};

}  // namespace evi
