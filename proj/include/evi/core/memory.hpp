#pragma once

#include <vector>

#include "evi/core/types.hpp"

namespace evi {

// Append-only store of everything the tools returned during one run.
// Ids are dense from 1 in append order and never reused.
class EvidenceMemory {
public:
    const std::vector<EvidenceItem>& items() const { return items_; }
    std::size_t size() const { return items_.size(); }
    bool empty() const { return items_.empty(); }

    // Id the next appended item must carry.
    int next_id() const { return items_.empty() ? 1 : items_.back().evidence_id + 1; }

    // Throws MemoryOrderError when item.evidence_id is not strictly greater
    // than every existing id; InvalidEvidenceError when the item is tied to
    // a non-ok result, the result id does not match, or the payload is null.
    void append(const EvidenceItem& item, const ToolResult& source);

    bool operator==(const EvidenceMemory&) const = default;

private:
    std::vector<EvidenceItem> items_;
};

// Functional spelling of EvidenceMemory::append.
void append_evidence(EvidenceMemory& memory, const EvidenceItem& item, const ToolResult& source);

}  // namespace evi
