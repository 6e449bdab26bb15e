#include "evi/gateway/decision.hpp"

#include <cctype>

#include "evi/errors.hpp"

namespace evi {

namespace {

constexpr const char* kFenceOpen = "```evi";
constexpr const char* kFenceClose = "```";

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

struct FenceScan {
    bool found = false;
    bool multiple = false;
    bool unterminated = false;
    std::size_t open_begin = 0;  // index of the first backtick of ```evi
    std::size_t body_begin = 0;  // first byte of the JSON body
    std::size_t body_end = 0;    // one past the last body byte
    std::size_t close_end = 0;   // one past the closing ```
};

// Locate the single ```evi ... ``` fence. The opening marker must be
// followed by whitespace/newline (so ```evidence is not a fence).
FenceScan scan_fence(const std::string& raw) {
    FenceScan scan;
    const std::size_t open_len = std::char_traits<char>::length(kFenceOpen);
    std::size_t pos = 0;
    while (true) {
        std::size_t at = raw.find(kFenceOpen, pos);
        if (at == std::string::npos) break;
        std::size_t after = at + open_len;
        bool boundary = after >= raw.size() ||
                        std::isspace(static_cast<unsigned char>(raw[after]));
        if (!boundary) {
            pos = after;
            continue;
        }
        if (scan.found) {
            scan.multiple = true;
            return scan;
        }
        scan.found = true;
        scan.open_begin = at;
        scan.body_begin = after;
        std::size_t close = raw.find(kFenceClose, after);
        if (close == std::string::npos) {
            scan.unterminated = true;
            return scan;
        }
        scan.body_end = close;
        scan.close_end = close + std::char_traits<char>::length(kFenceClose);
        pos = scan.close_end;
    }
    return scan;
}

PlannerDecision malformed(const std::string& raw, ParseErrorCode code, std::string detail) {
    PlannerDecision d;
    d.kind = PlannerDecision::Kind::malformed;
    d.raw_text = raw;
    d.error = ParseDiag{code, std::move(detail)};
    return d;
}

// Steps must be an array of objects {step, description[, tool]} with ids
// strictly increasing from 1. Returns diag detail on failure.
std::optional<std::string> parse_plan_steps(const Json& value, ExecutionPlan& out) {
    if (!value.is_array()) return "plan must be an array of steps";
    if (value.empty()) return "plan must contain at least one step";
    int last_id = 0;
    for (std::size_t i = 0; i < value.size(); ++i) {
        const Json& s = value[i];
        std::string at = "step[" + std::to_string(i) + "]";
        if (!s.is_object()) return at + " must be an object";
        if (!s.contains("step") || !s["step"].is_number_integer())
            return at + " needs an integer 'step' id";
        if (!s.contains("description") || !s["description"].is_string())
            return at + " needs a string 'description'";
        for (auto it = s.begin(); it != s.end(); ++it) {
            if (it.key() != "step" && it.key() != "description" && it.key() != "tool")
                return at + " has unexpected key '" + it.key() + "'";
        }
        PlanStep step;
        step.step_id = s["step"].get<int>();
        step.description = trim(s["description"].get<std::string>());
        if (step.description.empty()) return at + " description must be non-empty";
        if (s.contains("tool")) {
            if (!s["tool"].is_string()) return at + " 'tool' must be a string";
            step.suggested_tool = s["tool"].get<std::string>();
        }
        if (i == 0 && step.step_id != 1)
            return "first step id must be 1, got " + std::to_string(step.step_id);
        if (step.step_id <= last_id)
            return at + " id " + std::to_string(step.step_id) +
                   " is not greater than previous id " + std::to_string(last_id);
        last_id = step.step_id;
        out.steps.push_back(std::move(step));
    }
    return std::nullopt;
}

}  // namespace

const char* to_string(ParseErrorCode code) {
    switch (code) {
        case ParseErrorCode::missing_block: return "missing_block";
        case ParseErrorCode::multiple_blocks: return "multiple_blocks";
        case ParseErrorCode::unterminated_block: return "unterminated_block";
        case ParseErrorCode::bad_json: return "bad_json";
        case ParseErrorCode::not_an_object: return "not_an_object";
        case ParseErrorCode::no_decision_key: return "no_decision_key";
        case ParseErrorCode::conflicting_keys: return "conflicting_keys";
        case ParseErrorCode::unexpected_key: return "unexpected_key";
        case ParseErrorCode::missing_field: return "missing_field";
        case ParseErrorCode::bad_field_type: return "bad_field_type";
        case ParseErrorCode::bad_plan: return "bad_plan";
        case ParseErrorCode::plan_not_allowed: return "plan_not_allowed";
        case ParseErrorCode::expected_plan: return "expected_plan";
    }
    return "missing_block";
}

PlannerDecision parse_decision(const std::string& raw, DecisionPhase phase) {
    FenceScan scan = scan_fence(raw);
    if (scan.multiple)
        return malformed(raw, ParseErrorCode::multiple_blocks,
                         "exactly one ```evi block is allowed");
    if (!scan.found)
        return malformed(raw, ParseErrorCode::missing_block, "no ```evi block found");
    if (scan.unterminated)
        return malformed(raw, ParseErrorCode::unterminated_block,
                         "```evi block has no closing ```");

    std::string body = raw.substr(scan.body_begin, scan.body_end - scan.body_begin);
    Json obj = parse_lenient(trim(body));
    if (obj.is_discarded())
        return malformed(raw, ParseErrorCode::bad_json, "fence body is not valid JSON");
    if (!obj.is_object())
        return malformed(raw, ParseErrorCode::not_an_object, "fence body must be a JSON object");

    int decision_keys = obj.contains("plan") + obj.contains("action") + obj.contains("final");
    if (decision_keys == 0)
        return malformed(raw, ParseErrorCode::no_decision_key,
                         "object must contain one of {plan, action, final}");
    if (decision_keys > 1)
        return malformed(raw, ParseErrorCode::conflicting_keys,
                         "object must contain exactly one of {plan, action, final}");

    // thought = text outside the fence; both sides trimmed, joined by one space
    std::string before = trim(raw.substr(0, scan.open_begin));
    std::string after = trim(raw.substr(scan.close_end));
    std::string thought =
        before.empty() ? after : after.empty() ? before : before + " " + after;

    if (obj.contains("plan")) {
        for (auto it = obj.begin(); it != obj.end(); ++it)
            if (it.key() != "plan")
                return malformed(raw, ParseErrorCode::unexpected_key,
                                 "unexpected key '" + it.key() + "' beside 'plan'");
        if (phase == DecisionPhase::acting)
            return malformed(raw, ParseErrorCode::plan_not_allowed,
                             "plan blocks are only legal in the planning phase");
        ExecutionPlan plan;
        if (auto detail = parse_plan_steps(obj["plan"], plan))
            return malformed(raw, ParseErrorCode::bad_plan, *detail);
        PlannerDecision d;
        d.kind = PlannerDecision::Kind::plan;
        d.raw_text = raw;
        d.plan = std::move(plan);
        return d;
    }

    if (obj.contains("action")) {
        for (auto it = obj.begin(); it != obj.end(); ++it)
            if (it.key() != "action" && it.key() != "args")
                return malformed(raw, ParseErrorCode::unexpected_key,
                                 "unexpected key '" + it.key() + "' beside 'action'");
        if (phase == DecisionPhase::planning)
            return malformed(raw, ParseErrorCode::expected_plan,
                             "only plan blocks are legal in the planning phase");
        if (!obj["action"].is_string() || obj["action"].get<std::string>().empty())
            return malformed(raw, ParseErrorCode::bad_field_type,
                             "'action' must be a non-empty string");
        if (!obj.contains("args"))
            return malformed(raw, ParseErrorCode::missing_field,
                             "'action' requires a sibling 'args' object");
        if (!obj["args"].is_object())
            return malformed(raw, ParseErrorCode::bad_field_type, "'args' must be an object");
        PlannerDecision d;
        d.kind = PlannerDecision::Kind::invoke;
        d.raw_text = raw;
        d.tool_name = obj["action"].get<std::string>();
        d.arguments = obj["args"];
        d.thought = std::move(thought);
        return d;
    }

    // final
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (it.key() != "final")
            return malformed(raw, ParseErrorCode::unexpected_key,
                             "unexpected key '" + it.key() + "' beside 'final'");
    if (phase == DecisionPhase::planning)
        return malformed(raw, ParseErrorCode::expected_plan,
                         "only plan blocks are legal in the planning phase");
    if (!obj["final"].is_string())
        return malformed(raw, ParseErrorCode::bad_field_type, "'final' must be a string");
    PlannerDecision d;
    d.kind = PlannerDecision::Kind::final;
    d.raw_text = raw;
    d.answer_text = obj["final"].get<std::string>();
    return d;
}

std::string render_decision(const PlannerDecision& decision) {
    Json obj;
    std::string prefix;
    switch (decision.kind) {
        case PlannerDecision::Kind::plan: {
            if (!decision.plan)
                throw PreconditionError("plan decision without plan payload");
            Json steps = Json::array();
            for (const auto& s : decision.plan->steps) {
                Json step{{"step", s.step_id}, {"description", s.description}};
                if (s.suggested_tool) step["tool"] = *s.suggested_tool;
                steps.push_back(std::move(step));
            }
            obj = Json{{"plan", std::move(steps)}};
            break;
        }
        case PlannerDecision::Kind::invoke:
            obj = Json{{"action", decision.tool_name}, {"args", decision.arguments}};
            if (!decision.thought.empty()) prefix = decision.thought + "\n";
            break;
        case PlannerDecision::Kind::final:
            obj = Json{{"final", decision.answer_text}};
            break;
        case PlannerDecision::Kind::malformed:
            throw PreconditionError("malformed decisions have no canonical rendering");
    }
    return prefix + "```evi\n" + obj.dump() + "\n```";
}

ChatMessage render_tool_result(const ToolResult& result) {
    ChatMessage msg;
    msg.role = ChatRole::tool;
    msg.call_id = result.call_id;
    if (result.ok()) {
        msg.text = canon_dump(result.payload);
    } else {
        msg.text = std::string("TOOL_ERROR: [") + to_string(result.status) + "] " +
                   result.diagnostic;
    }
    return msg;
}

}  // namespace evi
