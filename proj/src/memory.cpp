#include "evi/core/memory.hpp"

#include "evi/errors.hpp"

namespace evi {

void EvidenceMemory::append(const EvidenceItem& item, const ToolResult& source) {
    if (!items_.empty() && item.evidence_id <= items_.back().evidence_id)
        throw MemoryOrderError("evidence id " + std::to_string(item.evidence_id) +
                               " is not greater than last id " +
                               std::to_string(items_.back().evidence_id));
    if (item.evidence_id < 1)
        throw MemoryOrderError("evidence ids start at 1, got " + std::to_string(item.evidence_id));
    if (source.status != ToolResultStatus::ok)
        throw InvalidEvidenceError("evidence must come from an ok result; call " +
                                   std::to_string(source.call_id) + " has status " +
                                   to_string(source.status));
    if (item.source_call_id != source.call_id)
        throw InvalidEvidenceError("evidence source_call_id " + std::to_string(item.source_call_id) +
                                   " does not match result call_id " + std::to_string(source.call_id));
    if (item.payload.is_null())
        throw InvalidEvidenceError("evidence payload must not be null");
    items_.push_back(item);
}

void append_evidence(EvidenceMemory& memory, const EvidenceItem& item, const ToolResult& source) {
    memory.append(item, source);
}

}  // namespace evi
