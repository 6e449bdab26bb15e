#pragma once

#include <optional>
#include <string>

#include "evi/core/types.hpp"
#include "evi/gateway/message.hpp"

namespace evi {

// Which pipeline stage the emission was produced for. Plan blocks are only
// legal while planning; action/final blocks only while acting.
enum class DecisionPhase { planning, acting };

enum class ParseErrorCode {
    missing_block,       // no ```evi fence found
    multiple_blocks,     // more than one ```evi fence
    unterminated_block,  // opening fence without closing ```
    bad_json,            // fence body is not valid JSON
    not_an_object,       // fence body is JSON but not an object
    no_decision_key,     // none of {plan, action, final} present
    conflicting_keys,    // more than one of {plan, action, final}
    unexpected_key,      // stray top-level key
    missing_field,       // action without sibling args
    bad_field_type,      // wrong JSON type for a known field
    bad_plan,            // plan steps malformed (ids, descriptions)
    plan_not_allowed,    // plan block while acting
    expected_plan,       // action/final block while planning
};

const char* to_string(ParseErrorCode code);

struct ParseDiag {
    ParseErrorCode code = ParseErrorCode::missing_block;
    std::string detail;

    bool operator==(const ParseDiag&) const = default;
};

// Total parse result: one of four variants. Malformed is a value, never an
// exception — the engine turns it into a corrective re-ask.
struct PlannerDecision {
    enum class Kind { plan, invoke, final, malformed };

    Kind kind = Kind::malformed;
    std::string raw_text;  // always the verbatim emission

    // kind == plan
    std::optional<ExecutionPlan> plan;
    // kind == invoke
    std::string tool_name;
    Json arguments = Json::object();
    std::string thought;  // free text outside the fence, trimmed
    // kind == final
    std::string answer_text;
    // kind == malformed
    std::optional<ParseDiag> error;

    bool is_malformed() const { return kind == Kind::malformed; }

    // Semantic equality: compares the variant content, not raw_text, so a
    // decision equals its render→reparse image.
    bool operator==(const PlannerDecision& other) const {
        if (kind != other.kind) return false;
        switch (kind) {
            case Kind::plan: return plan == other.plan;
            case Kind::invoke:
                return tool_name == other.tool_name && arguments == other.arguments &&
                       thought == other.thought;
            case Kind::final: return answer_text == other.answer_text;
            case Kind::malformed: return error == other.error;
        }
        return false;
    }
};

// Deterministic and total: any byte sequence yields a decision; equal inputs
// yield equal decisions.
PlannerDecision parse_decision(const std::string& raw, DecisionPhase phase);

// Canonical block for a plan/invoke/final decision (the form the corrective
// prompt asks for). parse_decision(render_decision(d), matching phase) == d.
// Malformed decisions cannot be rendered (PreconditionError).
std::string render_decision(const PlannerDecision& decision);

// Tool result as a chat message: compact canonical JSON payload for ok
// results, "TOOL_ERROR: ..." text otherwise. Carries the call_id.
ChatMessage render_tool_result(const ToolResult& result);

}  // namespace evi
