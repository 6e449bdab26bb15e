#include "evi/harness/ablation.hpp"

#include <cstdio>

#include "evi/errors.hpp"

namespace evi {

const char* to_string(AblationVariant variant) {
    switch (variant) {
        case AblationVariant::full: return "full";
        case AblationVariant::no_cls: return "no_cls";
        case AblationVariant::no_loc: return "no_loc";
        case AblationVariant::no_ret: return "no_ret";
        case AblationVariant::no_planning: return "no_planning";
        case AblationVariant::no_extraction: return "no_extraction";
    }
    return "full";
}

std::optional<AblationVariant> ablation_from_string(std::string_view name) {
    for (AblationVariant v : kAllAblationVariants)
        if (name == to_string(v)) return v;
    return std::nullopt;
}

RunConfig apply_ablation(RunConfig base, AblationVariant variant) {
    switch (variant) {
        case AblationVariant::full:
            break;
        case AblationVariant::no_cls:
            base.disabled_tool_kinds.insert(EvidenceKind::classification);
            break;
        case AblationVariant::no_loc:
            base.disabled_tool_kinds.insert(EvidenceKind::posture);
            base.disabled_tool_kinds.insert(EvidenceKind::grounding);
            base.disabled_tool_kinds.insert(EvidenceKind::segmentation);
            break;
        case AblationVariant::no_ret:
            base.disabled_tool_kinds.insert(EvidenceKind::retrieval);
            break;
        case AblationVariant::no_planning:
            base.skip_planning = true;
            break;
        case AblationVariant::no_extraction:
            base.skip_extraction = true;
            break;
    }
    return base;
}

std::string AblationReport::table() const {
    std::string out;
    char line[160];
    std::snprintf(line, sizeof line, "%-14s %9s %11s %11s %11s\n", "variant", "episodes",
                  "valid_rate", "tool_calls", "fmt_errors");
    out += line;
    out += std::string(59, '-') + "\n";
    for (const auto& row : rows) {
        const AgentMetrics& m = row.result.metrics;
        std::snprintf(line, sizeof line, "%-14s %9zu %11.3f %11.3f %11.3f\n",
                      to_string(row.variant), m.episodes, m.valid_rate, m.avg_tool_calls,
                      m.format_error_rate);
        out += line;
    }
    return out;
}

Json AblationReport::to_json() const {
    Json rows_json = Json::array();
    for (const auto& row : rows)
        rows_json.push_back(
            Json{{"variant", to_string(row.variant)}, {"metrics", metrics_to_json(row.result.metrics)}});
    return Json{{"variants", std::move(rows_json)}};
}

AblationReport run_ablation(const Json& tools_config, const RunConfig& base,
                            const std::vector<AblationVariant>& variants,
                            const std::vector<BatchCase>& cases, const ToolHost& host,
                            int parallelism, const std::string& out_root,
                            const EngineOptions& opts) {
    AblationReport report;
    for (AblationVariant variant : variants) {
        BatchSpec spec;
        spec.cases = cases;
        spec.cfg = apply_ablation(base, variant);
        spec.parallelism = parallelism;
        if (!out_root.empty()) spec.output_dir = out_root + "/" + to_string(variant);
        Registry registry = load_config_json(tools_config, spec.cfg.disabled_tool_kinds);
        AblationRow row;
        row.variant = variant;
        row.result = run_batch(spec, registry, host, opts);
        report.rows.push_back(std::move(row));
    }
    return report;
}

}  // namespace evi
