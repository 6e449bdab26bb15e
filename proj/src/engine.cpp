#include "evi/engine/engine.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "evi/errors.hpp"

namespace evi {

namespace {

std::string trim_copy(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::string corrective_text(DecisionPhase phase, const ParseDiag& diag) {
    std::string expect = phase == DecisionPhase::planning
                             ? "{\"plan\": [...]}"
                             : "{\"action\": \"<tool>\", \"args\": {...}} or {\"final\": \"...\"}";
    return "FORMAT_ERROR: " + std::string(to_string(diag.code)) + ": " + diag.detail +
           "\nRespond with exactly one fenced block:\n```evi\n" + expect + "\n```";
}

Json plan_to_json(const ExecutionPlan& plan) {
    Json steps = Json::array();
    for (const auto& s : plan.steps) {
        Json step{{"step", s.step_id}, {"description", s.description}};
        if (s.suggested_tool) step["tool"] = *s.suggested_tool;
        steps.push_back(std::move(step));
    }
    return Json{{"steps", std::move(steps)}};
}

Json chain_to_json(const EvidenceChain& chain) {
    Json entries = Json::array();
    for (const auto& e : chain.entries)
        entries.push_back(Json{{"evidence_id", e.evidence_id},
                               {"kind", to_string(e.kind)},
                               {"payload", e.payload},
                               {"source_call_id", e.source_call_id}});
    Json j{{"grouped", chain.grouped}, {"entries", std::move(entries)}};
    if (chain.summary) j["summary"] = *chain.summary;
    return j;
}

}  // namespace

const char* to_string(EnginePhase phase) {
    switch (phase) {
        case EnginePhase::planning: return "planning";
        case EnginePhase::acting: return "acting";
        case EnginePhase::extracting: return "extracting";
        case EnginePhase::reporting: return "reporting";
        case EnginePhase::done: return "done";
        case EnginePhase::failed: return "failed";
    }
    return "failed";
}

const char* to_string(OutcomeStatus status) {
    switch (status) {
        case OutcomeStatus::valid: return "valid";
        case OutcomeStatus::invalid_exhausted: return "invalid_exhausted";
        case OutcomeStatus::failed: return "failed";
    }
    return "failed";
}

int exit_code(OutcomeStatus status) {
    switch (status) {
        case OutcomeStatus::valid: return 0;
        case OutcomeStatus::invalid_exhausted: return 2;
        case OutcomeStatus::failed: return 3;
    }
    return 3;
}

Engine::Engine(const Registry& registry, Gateway& gateway, const ToolHost& host, RunConfig cfg,
               EngineOptions opts)
    : registry_(registry), gateway_(gateway), host_(host), cfg_(std::move(cfg)),
      opts_(std::move(opts)) {}

EngineState Engine::init_state(const StudyInput& study) const {
    EngineState st;
    st.study = study;
    st.log = TrajectoryLog(study.study_id);
    st.phase = cfg_.skip_planning ? EnginePhase::acting : EnginePhase::planning;
    return st;
}

// ---------------------------------------------------------------------------
// prompt assembly
// ---------------------------------------------------------------------------

std::string Engine::render_plan(const std::optional<ExecutionPlan>& plan) {
    if (!plan || plan->steps.empty()) return "(no plan)\n";
    std::string out;
    for (const auto& s : plan->steps) {
        out += std::to_string(s.step_id) + ". " + s.description;
        if (s.suggested_tool) out += " (tool: " + *s.suggested_tool + ")";
        out += "\n";
    }
    return out;
}

std::string Engine::render_memory(const EvidenceMemory& memory) {
    if (memory.empty()) return "(empty)\n";
    std::string out;
    for (const auto& item : memory.items())
        out += "E" + std::to_string(item.evidence_id) + " [" + to_string(item.kind) +
               "]: " + canon_dump(item.payload) + "\n";
    return out;
}

std::string Engine::render_chain(const EvidenceChain& chain) {
    std::string out;
    if (chain.entries.empty()) {
        out = "(no evidence collected)\n";
    } else if (chain.grouped) {
        EvidenceKind current = EvidenceKind::custom;
        bool first = true;
        for (const auto& e : chain.entries) {
            if (first || e.kind != current) {
                out += std::string("## ") + to_string(e.kind) + "\n";
                current = e.kind;
                first = false;
            }
            out += "E" + std::to_string(e.evidence_id) + " (from call " +
                   std::to_string(e.source_call_id) + "): " + canon_dump(e.payload) + "\n";
        }
    } else {
        for (const auto& e : chain.entries)
            out += "E" + std::to_string(e.evidence_id) + " [" + to_string(e.kind) + "] (from call " +
                   std::to_string(e.source_call_id) + "): " + canon_dump(e.payload) + "\n";
    }
    if (chain.summary) out += "## summary\n" + *chain.summary + "\n";
    return out;
}

std::vector<ChatMessage> Engine::build_planning_messages(const EngineState& st) const {
    std::vector<ChatMessage> msgs;
    msgs.push_back(system_message(opts_.prompts.planning + "\n# Available tools\n" +
                                  tools_prompt(registry_)));
    msgs.push_back(user_message("# Task\n" + st.study.instruction, st.study.images));
    for (const auto& m : st.history) msgs.push_back(m);
    return msgs;
}

std::vector<ChatMessage> Engine::build_acting_messages(const EngineState& st) const {
    std::vector<ChatMessage> msgs;
    msgs.push_back(system_message(opts_.prompts.acting + "\n# Available tools\n" +
                                  tools_prompt(registry_)));
    msgs.push_back(user_message("# Task\n" + st.study.instruction + "\n\n# Plan\n" +
                                    render_plan(st.plan) + "\n# Evidence memory\n" +
                                    render_memory(st.memory),
                                st.study.images));
    for (const auto& m : st.history) msgs.push_back(m);
    return msgs;
}

std::vector<ChatMessage> Engine::build_report_messages(const std::string& instruction,
                                                       const EvidenceChain& chain) const {
    // Strict evidence conditioning: instruction + chain only. No image
    // references, no chat history.
    std::vector<ChatMessage> msgs;
    msgs.push_back(system_message(opts_.prompts.generation));
    msgs.push_back(
        user_message("# Instruction\n" + instruction + "\n\n# Evidence chain\n" +
                     render_chain(chain)));
    return msgs;
}

// ---------------------------------------------------------------------------
// stages
// ---------------------------------------------------------------------------

std::optional<Engine::Emission> Engine::obtain_decision(EngineState& st, DecisionPhase phase) {
    while (true) {
        std::vector<ChatMessage> msgs = phase == DecisionPhase::planning
                                            ? build_planning_messages(st)
                                            : build_acting_messages(st);
        std::string raw = gateway_.complete(msgs);
        st.log.record(EventType::PlannerRawEmission,
                      Json{{"phase", phase == DecisionPhase::planning ? "planning" : "acting"},
                           {"text", raw}},
                      now());
        PlannerDecision d = parse_decision(raw, phase);
        if (!d.is_malformed()) return Emission{raw, std::move(d)};

        st.log.record(EventType::ParseFailure,
                      Json{{"phase", phase == DecisionPhase::planning ? "planning" : "acting"},
                           {"code", to_string(d.error->code)},
                           {"detail", d.error->detail}},
                      now());
        if (st.parse_retries_this_round >= cfg_.max_parse_retries_per_round) {
            abort_run(st, "parse_retries_exhausted",
                      "malformed emission after " +
                          std::to_string(cfg_.max_parse_retries_per_round) + " corrective re-asks: " +
                          d.error->detail,
                      OutcomeStatus::failed);
            return std::nullopt;
        }
        ++st.parse_retries_this_round;
        st.history.push_back(assistant_message(raw));
        st.history.push_back(user_message(corrective_text(phase, *d.error)));
    }
}

bool Engine::plan_stage(EngineState& st) {
    st.phase = EnginePhase::planning;
    st.parse_retries_this_round = 0;
    auto emission = obtain_decision(st, DecisionPhase::planning);
    if (!emission) return false;
    // parse_decision in planning phase only yields plan or malformed.
    st.plan = emission->decision.plan;
    st.log.record(EventType::PlanEmitted, plan_to_json(*st.plan), now());
    st.history.clear();  // planning retries don't leak into acting context
    return true;
}

void Engine::act_stage(EngineState& st) {
    st.phase = EnginePhase::acting;
    st.history.clear();
    for (st.round = 1; st.round <= cfg_.t_max; ++st.round) {
        st.parse_retries_this_round = 0;
        auto emission = obtain_decision(st, DecisionPhase::acting);
        if (!emission) return;  // aborted
        const PlannerDecision& d = emission->decision;

        if (d.kind == PlannerDecision::Kind::final) {
            st.log.record(EventType::DecisionParsed,
                          Json{{"phase", "acting"}, {"variant", "final"}}, now());
            st.phase = EnginePhase::extracting;
            return;
        }

        // invoke
        st.log.record(EventType::DecisionParsed,
                      Json{{"phase", "acting"},
                           {"variant", "invoke"},
                           {"tool", d.tool_name},
                           {"args", d.arguments}},
                      now());
        ToolCall call;
        call.call_id = st.next_call_id++;
        call.round = st.round;
        call.tool_name = d.tool_name;
        call.arguments = d.arguments;
        st.log.record(EventType::ToolDispatched,
                      Json{{"call_id", call.call_id},
                           {"round", call.round},
                           {"tool", call.tool_name},
                           {"arguments", call.arguments}},
                      now());

        ToolResult result = dispatch(registry_, call, host_);
        Json returned{{"call_id", result.call_id},
                      {"status", to_string(result.status)},
                      {"hallucinated", result.hallucinated}};
        if (result.ok())
            returned["payload"] = result.payload;
        else
            returned["diagnostic"] = result.diagnostic;
        st.log.record(EventType::ToolReturned, std::move(returned), now());

        if (result.ok()) {
            const ToolSpec* spec = registry_.find(call.tool_name);
            EvidenceItem item;
            item.evidence_id = st.memory.next_id();
            item.kind = spec->kind;
            item.payload = result.payload;
            item.source_call_id = call.call_id;
            append_evidence(st.memory, item, result);
            st.log.record(EventType::EvidenceAppended,
                          Json{{"evidence_id", item.evidence_id},
                               {"kind", to_string(item.kind)},
                               {"source_call_id", item.source_call_id}},
                          now());
        }

        st.history.push_back(assistant_message(emission->raw));
        st.history.push_back(render_tool_result(result));
    }
    abort_run(st, "round_limit_reached",
              "no final decision within " + std::to_string(cfg_.t_max) + " rounds",
              OutcomeStatus::invalid_exhausted);
}

EvidenceChain Engine::extract_evidence(const EvidenceMemory& memory, const RunConfig& cfg) {
    EvidenceChain chain;
    if (cfg.skip_extraction) {
        chain.grouped = false;
        chain.entries = memory.items();
    } else {
        chain.grouped = true;
        // Drop items whose payload is byte-identical to an earlier item of
        // the same kind; first occurrence wins.
        std::set<std::pair<int, std::string>> seen;
        std::vector<EvidenceItem> kept;
        for (const auto& item : memory.items()) {
            auto key = std::make_pair(static_cast<int>(item.kind), canon_dump(item.payload));
            if (seen.insert(std::move(key)).second) kept.push_back(item);
        }
        for (EvidenceKind kind : kAllEvidenceKinds)
            for (const auto& item : kept)
                if (item.kind == kind) chain.entries.push_back(item);
    }
    for (const auto& e : chain.entries) chain.provenance[e.evidence_id] = e.source_call_id;
    return chain;
}

EvidenceChain Engine::extract_stage(EngineState& st) {
    st.phase = EnginePhase::extracting;
    EvidenceChain chain = extract_evidence(st.memory, cfg_);
    if (opts_.summarize_extraction && !chain.entries.empty()) {
        std::vector<ChatMessage> msgs;
        msgs.push_back(system_message(opts_.prompts.extraction));
        msgs.push_back(user_message("# Evidence chain\n" + render_chain(chain)));
        std::string raw = gateway_.complete(msgs);
        st.log.record(EventType::PlannerRawEmission,
                      Json{{"phase", "extracting"}, {"text", raw}}, now());
        chain.summary = trim_copy(raw);
    }
    st.log.record(EventType::ChainExtracted, chain_to_json(chain), now());
    return chain;
}

Report Engine::parse_report(const std::string& raw, const EvidenceChain& chain, bool strict) {
    Report report;
    report.raw_text = raw;
    std::set<int> chain_ids = chain.ids();

    enum class Section { preamble, findings, impression };
    Section section = Section::preamble;
    std::string impression;

    std::size_t start = 0;
    while (start <= raw.size()) {
        std::size_t end = raw.find('\n', start);
        std::string line = raw.substr(start, end == std::string::npos ? std::string::npos
                                                                      : end - start);
        start = end == std::string::npos ? raw.size() + 1 : end + 1;

        std::string trimmed = trim_copy(line);
        if (trimmed == "FINDINGS:") {
            section = Section::findings;
            continue;
        }
        if (trimmed == "IMPRESSION:") {
            section = Section::impression;
            continue;
        }
        if (section == Section::findings && trimmed.rfind("- ", 0) == 0) {
            std::string body = trimmed.substr(2);
            Finding finding;
            // pull out [E<n>] citations
            std::string text;
            std::size_t i = 0;
            while (i < body.size()) {
                if (body[i] == '[' && i + 2 < body.size() && body[i + 1] == 'E' &&
                    std::isdigit(static_cast<unsigned char>(body[i + 2]))) {
                    std::size_t j = i + 2;
                    while (j < body.size() && std::isdigit(static_cast<unsigned char>(body[j]))) ++j;
                    if (j < body.size() && body[j] == ']') {
                        int id = std::stoi(body.substr(i + 2, j - i - 2));
                        if (std::find(finding.evidence_ids.begin(), finding.evidence_ids.end(),
                                      id) == finding.evidence_ids.end())
                            finding.evidence_ids.push_back(id);
                        i = j + 1;
                        continue;
                    }
                }
                text += body[i];
                ++i;
            }
            finding.text = trim_copy(text);
            report.findings.push_back(std::move(finding));
        } else if (section == Section::impression && !trimmed.empty()) {
            if (!impression.empty()) impression += "\n";
            impression += trimmed;
        }
    }
    report.impression = impression;

    for (const auto& f : report.findings) {
        for (int id : f.evidence_ids)
            if (!chain_ids.count(id))
                throw ReportRejected("finding cites nonexistent evidence id E" +
                                     std::to_string(id) + ": " + f.text);
        if (strict && f.evidence_ids.empty())
            throw ReportRejected("strict mode: finding has no evidence citation: " + f.text);
    }
    return report;
}

Report Engine::report_stage(EngineState& st, const EvidenceChain& chain) {
    st.phase = EnginePhase::reporting;
    std::vector<ChatMessage> msgs = build_report_messages(st.study.instruction, chain);
    std::string raw = gateway_.complete(msgs);
    st.log.record(EventType::PlannerRawEmission, Json{{"phase", "reporting"}, {"text", raw}},
                  now());
    return parse_report(raw, chain, cfg_.strict_evidence);
}

// ---------------------------------------------------------------------------
// run
// ---------------------------------------------------------------------------

void Engine::abort_run(EngineState& st, const std::string& reason, const std::string& detail,
                       OutcomeStatus status) {
    st.abort_status = status;
    st.phase = EnginePhase::failed;
    st.log.record(EventType::Aborted,
                  Json{{"reason", reason}, {"detail", detail}, {"status", to_string(status)}},
                  now());
}

RunOutcome Engine::finish(EngineState& st, std::optional<Report> report,
                          std::optional<EvidenceChain> chain) {
    RunOutcome outcome;
    outcome.report = std::move(report);
    outcome.chain = std::move(chain);
    outcome.status = outcome.report ? OutcomeStatus::valid : st.abort_status;
    outcome.log = std::move(st.log);
    // Stats mirror the log by construction.
    outcome.stats.tool_calls = static_cast<int>(outcome.log.count(EventType::ToolDispatched));
    outcome.stats.format_errors = static_cast<int>(outcome.log.count(EventType::ParseFailure));
    int rounds = 0;
    for (const auto& ev : outcome.log.events())
        if (ev.type == EventType::DecisionParsed && ev.payload.value("phase", "") == "acting")
            ++rounds;
    outcome.stats.rounds_used = rounds;
    return outcome;
}

RunOutcome Engine::run(const StudyInput& study) {
    EngineState st = init_state(study);
    std::optional<EvidenceChain> chain;
    try {
        if (study.study_id.empty() || study.images.empty()) {
            abort_run(st, "invalid_study",
                      "study needs a non-empty id and at least one image reference",
                      OutcomeStatus::failed);
            return finish(st, std::nullopt, std::nullopt);
        }
        if (!cfg_.skip_planning) {
            if (!plan_stage(st)) return finish(st, std::nullopt, std::nullopt);
        }
        act_stage(st);
        if (st.phase == EnginePhase::failed) return finish(st, std::nullopt, std::nullopt);

        chain = extract_stage(st);
        Report report = report_stage(st, *chain);
        st.log.record(EventType::ReportEmitted, Json{{"report", report_to_json(report)}}, now());
        st.phase = EnginePhase::done;
        return finish(st, std::move(report), std::move(chain));
    } catch (const Error& e) {
        if (!st.log.has_terminal()) abort_run(st, e.code(), e.what(), OutcomeStatus::failed);
        return finish(st, std::nullopt, std::move(chain));
    } catch (const std::exception& e) {
        if (!st.log.has_terminal()) abort_run(st, "internal_error", e.what(), OutcomeStatus::failed);
        return finish(st, std::nullopt, std::move(chain));
    }
}

}  // namespace evi
