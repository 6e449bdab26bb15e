#pragma once

#include <functional>
#include <optional>

#include "evi/core/memory.hpp"
#include "evi/core/trajectory.hpp"
#include "evi/core/types.hpp"
#include "evi/engine/prompts.hpp"
#include "evi/gateway/backend.hpp"
#include "evi/gateway/decision.hpp"
#include "evi/tools/registry.hpp"

namespace evi {

enum class EnginePhase { planning, acting, extracting, reporting, done, failed };

const char* to_string(EnginePhase phase);

enum class OutcomeStatus { valid, invalid_exhausted, failed };

const char* to_string(OutcomeStatus status);

// Process exit code contract: valid=0, invalid_exhausted=2, failed=3.
int exit_code(OutcomeStatus status);

struct RunStats {
    int tool_calls = 0;     // == ToolDispatched events
    int format_errors = 0;  // == ParseFailure events
    int rounds_used = 0;    // == acting decisions (invoke + final)

    bool operator==(const RunStats&) const = default;
};

struct RunOutcome {
    OutcomeStatus status = OutcomeStatus::failed;
    std::optional<Report> report;      // set iff status == valid
    std::optional<EvidenceChain> chain;  // set once extraction completed
    TrajectoryLog log;
    RunStats stats;
};

// Mutable state of one run; exposed so stage functions are testable.
struct EngineState {
    EnginePhase phase = EnginePhase::planning;
    int round = 0;  // current acting round, 1-based
    std::optional<ExecutionPlan> plan;
    EvidenceMemory memory;
    std::vector<ChatMessage> history;  // assistant emissions + tool/corrective replies
    int parse_retries_this_round = 0;
    int next_call_id = 1;
    StudyInput study;
    TrajectoryLog log;
    OutcomeStatus abort_status = OutcomeStatus::failed;  // status chosen when aborting
};

struct EngineOptions {
    // Timestamp source for trajectory events. Defaults to the fixed 0
    // sentinel so identical runs produce identical bytes.
    std::function<std::int64_t()> clock = [] { return std::int64_t{0}; };
    // When true, a gateway pass appends a summary to the extracted chain.
    bool summarize_extraction = false;
    PromptSet prompts = PromptSet::builtin();
};

// Orchestrates one plan -> act -> extract -> report pipeline over a tool
// registry and a chat backend. run() is total: every failure mode ends in a
// structured outcome with a terminated trajectory, never an exception.
class Engine {
public:
    Engine(const Registry& registry, Gateway& gateway, const ToolHost& host, RunConfig cfg,
           EngineOptions opts = {});

    RunOutcome run(const StudyInput& study);

    // --- stage functions (public for tests) ---
    EngineState init_state(const StudyInput& study) const;
    // False when planning aborted the run (state.phase == failed).
    bool plan_stage(EngineState& st);
    // Loops acting rounds until final/limit/failure; leaves phase at
    // extracting, or failed (abort already logged).
    void act_stage(EngineState& st);
    // Rule-based extraction + optional summarization; logs ChainExtracted.
    EvidenceChain extract_stage(EngineState& st);
    // Generates and parses the report; throws ReportRejected on citation
    // violations and gateway errors through.
    Report report_stage(EngineState& st, const EvidenceChain& chain);

    // --- pure helpers ---
    // Deduplicates byte-identical payloads per kind (first wins) and groups
    // by canonical kind order; with cfg.skip_extraction passes raw memory
    // through ungrouped. Provenance covers every entry either way.
    static EvidenceChain extract_evidence(const EvidenceMemory& memory, const RunConfig& cfg);

    // Parses the generator emission (FINDINGS/IMPRESSION grammar, [E#]
    // citations). Citing an id outside the chain is always ReportRejected;
    // a finding with no citation is ReportRejected only in strict mode.
    static Report parse_report(const std::string& raw, const EvidenceChain& chain, bool strict);

    static std::string render_plan(const std::optional<ExecutionPlan>& plan);
    static std::string render_memory(const EvidenceMemory& memory);
    static std::string render_chain(const EvidenceChain& chain);

    // Message lists per stage; exposed so tests can assert the report
    // prompt is built from nothing but instruction + chain.
    std::vector<ChatMessage> build_planning_messages(const EngineState& st) const;
    std::vector<ChatMessage> build_acting_messages(const EngineState& st) const;
    std::vector<ChatMessage> build_report_messages(const std::string& instruction,
                                                   const EvidenceChain& chain) const;

private:
    struct Emission {
        std::string raw;
        PlannerDecision decision;
    };

    // Completes + parses until a well-formed decision or retry exhaustion;
    // nullopt means the run was aborted (failed).
    std::optional<Emission> obtain_decision(EngineState& st, DecisionPhase phase);

    void abort_run(EngineState& st, const std::string& reason, const std::string& detail,
                   OutcomeStatus status);
    RunOutcome finish(EngineState& st, std::optional<Report> report,
                      std::optional<EvidenceChain> chain);

    std::int64_t now() const { return opts_.clock(); }

    const Registry& registry_;
    Gateway& gateway_;
    const ToolHost& host_;
    RunConfig cfg_;
    EngineOptions opts_;
};

}  // namespace evi
