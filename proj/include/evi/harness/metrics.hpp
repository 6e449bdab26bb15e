#pragma once

#include <vector>

#include "evi/core/trajectory.hpp"

namespace evi {

// Aggregate behaviour metrics over a set of finished trajectories.
struct AgentMetrics {
    std::size_t episodes = 0;
    double valid_rate = 0.0;        // fraction of logs ending in ReportEmitted
    double avg_tool_calls = 0.0;    // mean ToolDispatched per episode
    double format_error_rate = 0.0; // (parse failures + hallucinated tools) / planner emissions

    bool operator==(const AgentMetrics&) const = default;
};

// Counts are taken purely from the logs, so metrics can be recomputed from
// files alone. Planner emissions in the planning and acting phases form the
// format-error denominator (0 emissions => rate 0). Throws
// MetricsError(empty) on an empty list.
AgentMetrics compute_metrics(const std::vector<TrajectoryLog>& logs);

Json metrics_to_json(const AgentMetrics& m);

}  // namespace evi
