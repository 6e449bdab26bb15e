#pragma once

#include <string>
#include <vector>

#include "evi/labels.hpp"
#include "evi/retrieval/store.hpp"
#include "evi/tools/registry.hpp"

namespace evi {

// Canned expert outputs keyed by image reference; see assets/fixtures for
// the shape. Mocks are pure functions of (fixtures, arguments).
struct MockFixtures {
    Json doc = Json::object();

    static MockFixtures from_file(const std::string& path);  // ConfigError(io/parse)
};

// Builds the builtin implementations the default tool config targets:
//   classifier_mock, posture_mock, grounder_mock, segmenter_mock,
//   retrieval_tool, web_search_mock.
// `store`/`embedder` may be null: the retrieval tool then reports a
// tool_error ("knowledge store not loaded"). References must outlive the
// returned host.
ToolHost make_default_host(const MockFixtures* fixtures, const KnowledgeStore* store,
                           const Embedder* embedder, int default_top_k);

// Checks the kind-shaped payload contract (classification label/prob list,
// posture view, grounding boxes, segmentation mask, retrieval hits, web
// results). Returns human-readable violations; empty means conforming.
// `custom` payloads are unconstrained.
std::vector<std::string> check_payload_contract(EvidenceKind kind, const Json& payload,
                                                const LabelSet& labels);

}  // namespace evi
