#include "evi/harness/metrics.hpp"

#include "evi/errors.hpp"

namespace evi {

AgentMetrics compute_metrics(const std::vector<TrajectoryLog>& logs) {
    if (logs.empty()) throw MetricsError("empty", "cannot compute metrics over zero episodes");

    std::size_t valid = 0;
    std::size_t tool_calls = 0;
    std::size_t parse_failures = 0;
    std::size_t hallucinated = 0;
    std::size_t emissions = 0;

    for (const auto& log : logs) {
        if (log.terminal_type() == EventType::ReportEmitted) ++valid;
        for (const auto& ev : log.events()) {
            switch (ev.type) {
                case EventType::ToolDispatched: ++tool_calls; break;
                case EventType::ParseFailure: ++parse_failures; break;
                case EventType::ToolReturned:
                    if (ev.payload.value("hallucinated", false)) ++hallucinated;
                    break;
                case EventType::PlannerRawEmission: {
                    std::string phase = ev.payload.value("phase", "");
                    if (phase == "planning" || phase == "acting") ++emissions;
                    break;
                }
                default: break;
            }
        }
    }

    AgentMetrics m;
    m.episodes = logs.size();
    m.valid_rate = static_cast<double>(valid) / static_cast<double>(logs.size());
    m.avg_tool_calls = static_cast<double>(tool_calls) / static_cast<double>(logs.size());
    m.format_error_rate =
        emissions == 0 ? 0.0
                       : static_cast<double>(parse_failures + hallucinated) /
                             static_cast<double>(emissions);
    return m;
}

Json metrics_to_json(const AgentMetrics& m) {
    return Json{
        {"episodes", m.episodes},
        {"valid_rate", m.valid_rate},
        {"avg_tool_calls", m.avg_tool_calls},
        {"format_error_rate", m.format_error_rate},
    };
}

}  // namespace evi
