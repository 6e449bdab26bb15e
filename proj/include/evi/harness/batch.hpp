#pragma once

#include <optional>
#include <string>
#include <vector>

#include "evi/engine/engine.hpp"
#include "evi/harness/metrics.hpp"

namespace evi {

// One batch episode: a study plus the emission script backing its run.
// With an empty script the batch's shared backend config is used instead.
struct BatchCase {
    StudyInput study;
    std::vector<std::string> script;
};

struct BatchSpec {
    std::vector<BatchCase> cases;
    RunConfig cfg;
    int parallelism = 1;
    std::string output_dir;  // empty => don't write files
    std::optional<BackendConfig> backend;  // for cases without scripts
};

struct BatchResult {
    std::vector<RunOutcome> outcomes;  // same order as spec.cases
    AgentMetrics metrics;
};

// Runs every case (worker pool of spec.parallelism threads), writing
// out_dir/<study_id>/{trajectory.traj.jsonl, chain.json, report.json} for
// each. Case failures become failed outcomes; they never abort the batch.
// Results are ordered by case index regardless of scheduling.
BatchResult run_batch(const BatchSpec& spec, const Registry& registry, const ToolHost& host,
                      const EngineOptions& opts = {});

// Write one outcome's artifacts into dir (created if needed).
void write_outcome(const RunOutcome& outcome, const std::string& dir);

}  // namespace evi
