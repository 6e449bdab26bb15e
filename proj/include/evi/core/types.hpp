#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "evi/jsonutil.hpp"

namespace evi {

// ---------------------------------------------------------------------------
// evidence kinds
// ---------------------------------------------------------------------------

// Declaration order is the canonical kind order used when grouping an
// evidence chain.
enum class EvidenceKind {
    classification,
    posture,
    grounding,
    segmentation,
    retrieval,
    web,
    custom,
};

inline constexpr std::array<EvidenceKind, 7> kAllEvidenceKinds = {
    EvidenceKind::classification, EvidenceKind::posture,   EvidenceKind::grounding,
    EvidenceKind::segmentation,   EvidenceKind::retrieval, EvidenceKind::web,
    EvidenceKind::custom,
};

const char* to_string(EvidenceKind kind);
std::optional<EvidenceKind> evidence_kind_from_string(std::string_view name);

// ---------------------------------------------------------------------------
// tool call / result
// ---------------------------------------------------------------------------

enum class ToolResultStatus {
    ok,
    tool_error,
    validation_error,
    timeout,
};

const char* to_string(ToolResultStatus status);
std::optional<ToolResultStatus> tool_status_from_string(std::string_view name);

struct ToolCall {
    int call_id = 0;  // unique per run, dense from 1
    int round = 0;    // acting round that issued the call
    std::string tool_name;
    Json arguments = Json::object();

    bool operator==(const ToolCall&) const = default;
};

struct ToolResult {
    int call_id = 0;
    ToolResultStatus status = ToolResultStatus::tool_error;
    Json payload;             // non-null iff status == ok
    std::string diagnostic;   // human-readable reason when status != ok
    double latency_ms = 0.0;  // in-memory only; never serialized
    bool hallucinated = false;  // true when the call named a tool that does not exist

    bool ok() const { return status == ToolResultStatus::ok; }
};

// ---------------------------------------------------------------------------
// study input & plan
// ---------------------------------------------------------------------------

struct StudyInput {
    std::string study_id;
    std::vector<std::string> images;  // opaque references (paths or ids)
    std::string instruction;
    std::optional<std::string> ground_truth_report;

    bool operator==(const StudyInput&) const = default;
};

struct PlanStep {
    int step_id = 0;  // first step is 1; ids strictly increasing
    std::string description;
    std::optional<std::string> suggested_tool;

    bool operator==(const PlanStep&) const = default;
};

struct ExecutionPlan {
    std::vector<PlanStep> steps;

    bool operator==(const ExecutionPlan&) const = default;
};

// ---------------------------------------------------------------------------
// evidence
// ---------------------------------------------------------------------------

struct EvidenceItem {
    int evidence_id = 0;  // dense from 1 in memory order; rendered as E<n>
    EvidenceKind kind = EvidenceKind::custom;
    Json payload;
    int source_call_id = 0;

    bool operator==(const EvidenceItem&) const = default;
};

// Ordered extraction result handed to the report generator.
struct EvidenceChain {
    std::vector<EvidenceItem> entries;     // grouped by canonical kind order unless !grouped
    bool grouped = true;                   // false => raw memory passed through
    std::map<int, int> provenance;         // evidence_id -> source_call_id
    std::optional<std::string> summary;    // optional gateway summarization pass

    std::set<int> ids() const {
        std::set<int> out;
        for (const auto& e : entries) out.insert(e.evidence_id);
        return out;
    }

    bool operator==(const EvidenceChain&) const = default;
};

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

struct Finding {
    std::string text;
    std::vector<int> evidence_ids;  // order of first citation, deduplicated

    bool operator==(const Finding&) const = default;
};

struct Report {
    std::vector<Finding> findings;
    std::string impression;
    std::string raw_text;  // verbatim generator emission

    bool operator==(const Report&) const = default;
};

Json report_to_json(const Report& report);
Report report_from_json(const Json& j);

// ---------------------------------------------------------------------------
// run configuration
// ---------------------------------------------------------------------------

struct RunConfig {
    int t_max = 10;                        // max acting rounds
    int top_k = 4;                         // retrieval depth per pathology
    int max_parse_retries_per_round = 2;   // corrective re-asks on malformed emissions
    bool strict_evidence = true;           // reject findings without citations
    std::set<EvidenceKind> disabled_tool_kinds;
    bool skip_planning = false;
    bool skip_extraction = false;
};

}  // namespace evi
