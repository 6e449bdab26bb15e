#include "evi/core/types.hpp"

namespace evi {

const char* to_string(EvidenceKind kind) {
    switch (kind) {
        case EvidenceKind::classification: return "classification";
        case EvidenceKind::posture: return "posture";
        case EvidenceKind::grounding: return "grounding";
        case EvidenceKind::segmentation: return "segmentation";
        case EvidenceKind::retrieval: return "retrieval";
        case EvidenceKind::web: return "web";
        case EvidenceKind::custom: return "custom";
    }
    return "custom";
}

std::optional<EvidenceKind> evidence_kind_from_string(std::string_view name) {
    for (EvidenceKind k : kAllEvidenceKinds)
        if (name == to_string(k)) return k;
    return std::nullopt;
}

const char* to_string(ToolResultStatus status) {
    switch (status) {
        case ToolResultStatus::ok: return "ok";
        case ToolResultStatus::tool_error: return "tool_error";
        case ToolResultStatus::validation_error: return "validation_error";
        case ToolResultStatus::timeout: return "timeout";
    }
    return "tool_error";
}

std::optional<ToolResultStatus> tool_status_from_string(std::string_view name) {
    if (name == "ok") return ToolResultStatus::ok;
    if (name == "tool_error") return ToolResultStatus::tool_error;
    if (name == "validation_error") return ToolResultStatus::validation_error;
    if (name == "timeout") return ToolResultStatus::timeout;
    return std::nullopt;
}

Json report_to_json(const Report& report) {
    Json findings = Json::array();
    for (const auto& f : report.findings)
        findings.push_back(Json{{"text", f.text}, {"evidence_ids", f.evidence_ids}});
    return Json{
        {"findings", findings},
        {"impression", report.impression},
        {"raw_text", report.raw_text},
    };
}

Report report_from_json(const Json& j) {
    Report r;
    for (const auto& f : j.at("findings")) {
        Finding finding;
        finding.text = f.at("text").get<std::string>();
        finding.evidence_ids = f.at("evidence_ids").get<std::vector<int>>();
        r.findings.push_back(std::move(finding));
    }
    r.impression = j.at("impression").get<std::string>();
    r.raw_text = j.at("raw_text").get<std::string>();
    return r;
}

}  // namespace evi
