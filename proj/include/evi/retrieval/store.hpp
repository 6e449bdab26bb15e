#pragma once

#include <string>
#include <vector>

#include "evi/labels.hpp"
#include "evi/retrieval/embedder.hpp"

namespace evi {

// One (image, report, label) record from the source corpus.
struct Triplet {
    std::string image_ref;
    std::string report_text;
    std::string label;
};

struct KnowledgeEntry {
    std::string entry_id;  // stable source id (the image_ref)
    EmbeddingVector vector;
    std::string report_text;

    bool operator==(const KnowledgeEntry&) const = default;
};

struct KnowledgeBase {
    std::string pathology;
    std::vector<KnowledgeEntry> entries;  // at most the per-base cap, input order

    bool operator==(const KnowledgeBase&) const = default;
};

// One retrieval hit, already deduplicated across bases.
struct RetrievedReport {
    std::string report_text;
    double score = 0.0;  // cosine in [-1, 1]
    std::string pathology;
    std::string entry_id;

    bool operator==(const RetrievedReport&) const = default;
};

// Pathology-partitioned vector store. Bases sit in canonical label order
// and every vocabulary label has a base (possibly empty).
class KnowledgeStore {
public:
    KnowledgeStore() = default;
    KnowledgeStore(std::vector<KnowledgeBase> bases, std::size_t dim, std::string fingerprint);

    const std::vector<KnowledgeBase>& bases() const { return bases_; }
    std::size_t dim() const { return dim_; }
    const std::string& fingerprint() const { return fingerprint_; }

    const KnowledgeBase* base_for(const std::string& label) const;
    bool has_label(const std::string& label) const { return base_for(label) != nullptr; }
    std::size_t total_entries() const;

    bool operator==(const KnowledgeStore&) const = default;

private:
    std::vector<KnowledgeBase> bases_;
    std::size_t dim_ = 0;
    std::string fingerprint_;
};

// Partitions triplets by label (each base keeps its first `per_base_cap`
// triplets in input order) and embeds each entry from (image_ref, label).
// Throws BuildError(unknown_label / degenerate_vector / duplicate_entry).
KnowledgeStore build_store(const std::vector<Triplet>& triplets, const Embedder& embedder,
                           std::size_t per_base_cap, const LabelSet& labels);

// Embeds one query per requested pathology, takes the top-k of each base by
// (score desc, entry order asc), merges across bases deduplicating by
// entry_id (max score wins; ties keep the earliest pathology in canonical
// order), and returns hits sorted by (score desc, entry_id asc).
// Empty query set => empty result. Throws StoreMismatch on fingerprint
// mismatch, QueryError(unknown_label / bad_k) on bad inputs.
std::vector<RetrievedReport> retrieve(const KnowledgeStore& store, const std::string& image_ref,
                                      const std::vector<std::string>& query_pathologies,
                                      std::size_t k, const Embedder& embedder);

// Binary persistence (little-endian, versioned; see README). Writing the
// same store twice yields identical bytes.
void persist_store(const KnowledgeStore& store, const std::string& path);
std::string serialize_store(const KnowledgeStore& store);

// Throws StoreVersionError on version mismatch, StoreCorruptError on
// malformed bytes.
KnowledgeStore load_store(const std::string& path);
KnowledgeStore deserialize_store(const std::string& bytes);

}  // namespace evi
