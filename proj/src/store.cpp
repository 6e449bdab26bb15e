#include "evi/retrieval/store.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>
#include <set>

#include "evi/errors.hpp"

namespace evi {

namespace {

constexpr char kMagic[4] = {'E', 'V', 'K', 'B'};
constexpr std::uint32_t kVersion = 1;

// ---- little-endian primitives -------------------------------------------

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out += static_cast<char>((v >> (8 * i)) & 0xFF);
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out += static_cast<char>((v >> (8 * i)) & 0xFF);
}

void put_f64(std::string& out, double d) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, sizeof bits);
    put_u64(out, bits);
}

void put_str(std::string& out, const std::string& s) {
    put_u64(out, s.size());
    out += s;
}

class Reader {
public:
    explicit Reader(const std::string& bytes) : bytes_(bytes) {}

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        pos_ += 4;
        return v;
    }

    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        pos_ += 8;
        return v;
    }

    double f64() {
        std::uint64_t bits = u64();
        double d;
        std::memcpy(&d, &bits, sizeof d);
        return d;
    }

    std::string str() {
        std::uint64_t len = u64();
        need(len);
        std::string s = bytes_.substr(pos_, len);
        pos_ += len;
        return s;
    }

    void raw(char* dst, std::size_t len) {
        need(len);
        std::memcpy(dst, bytes_.data() + pos_, len);
        pos_ += len;
    }

    bool exhausted() const { return pos_ == bytes_.size(); }

private:
    void need(std::uint64_t len) {
        if (pos_ + len > bytes_.size())
            throw StoreCorruptError("store file truncated at byte " + std::to_string(pos_));
    }

    const std::string& bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

KnowledgeStore::KnowledgeStore(std::vector<KnowledgeBase> bases, std::size_t dim,
                               std::string fingerprint)
    : bases_(std::move(bases)), dim_(dim), fingerprint_(std::move(fingerprint)) {}

const KnowledgeBase* KnowledgeStore::base_for(const std::string& label) const {
    for (const auto& b : bases_)
        if (b.pathology == label) return &b;
    return nullptr;
}

std::size_t KnowledgeStore::total_entries() const {
    std::size_t n = 0;
    for (const auto& b : bases_) n += b.entries.size();
    return n;
}

KnowledgeStore build_store(const std::vector<Triplet>& triplets, const Embedder& embedder,
                           std::size_t per_base_cap, const LabelSet& labels) {
    std::vector<KnowledgeBase> bases;
    bases.reserve(labels.size());
    for (const auto& label : labels.labels()) bases.push_back(KnowledgeBase{label, {}});

    for (std::size_t i = 0; i < triplets.size(); ++i) {
        const Triplet& t = triplets[i];
        auto idx = labels.index_of(t.label);
        if (!idx)
            throw BuildError("unknown_label", "triplet " + std::to_string(i) +
                                                  ": label '" + t.label +
                                                  "' is not in the vocabulary");
        KnowledgeBase& base = bases[*idx];
        if (base.entries.size() >= per_base_cap) continue;  // first cap wins

        for (const auto& existing : base.entries)
            if (existing.entry_id == t.image_ref)
                throw BuildError("duplicate_entry", "triplet " + std::to_string(i) +
                                                        ": entry '" + t.image_ref +
                                                        "' already present in base '" + t.label +
                                                        "'");

        KnowledgeEntry entry;
        entry.entry_id = t.image_ref;
        entry.vector = embedder.embed(t.image_ref, t.label);
        entry.report_text = t.report_text;
        if (l2_norm(entry.vector) == 0.0)
            throw BuildError("degenerate_vector",
                             "entry '" + t.image_ref + "' embedded to a zero vector");
        base.entries.push_back(std::move(entry));
    }

    std::size_t dim = 0;
    for (const auto& b : bases)
        if (!b.entries.empty()) {
            dim = b.entries.front().vector.size();
            break;
        }
    return KnowledgeStore(std::move(bases), dim, embedder.fingerprint());
}

std::vector<RetrievedReport> retrieve(const KnowledgeStore& store, const std::string& image_ref,
                                      const std::vector<std::string>& query_pathologies,
                                      std::size_t k, const Embedder& embedder) {
    if (embedder.fingerprint() != store.fingerprint())
        throw StoreMismatch("query embedder '" + embedder.fingerprint() +
                            "' does not match store embedder '" + store.fingerprint() + "'");
    if (query_pathologies.empty()) return {};
    if (k < 1) throw QueryError("bad_k", "k must be at least 1");

    std::set<std::string> wanted;
    for (const auto& label : query_pathologies) {
        if (!store.has_label(label))
            throw QueryError("unknown_label",
                             "pathology '" + label + "' is not in the store vocabulary");
        wanted.insert(label);
    }

    // entry_id -> best hit; bases iterate in canonical order, so on score
    // ties the earliest pathology wins by never being replaced.
    std::vector<RetrievedReport> merged;
    auto find_merged = [&](const std::string& id) -> RetrievedReport* {
        for (auto& r : merged)
            if (r.entry_id == id) return &r;
        return nullptr;
    };

    for (const auto& base : store.bases()) {
        if (!wanted.count(base.pathology) || base.entries.empty()) continue;
        EmbeddingVector q = embedder.embed(image_ref, base.pathology);

        std::vector<double> scores(base.entries.size());
        for (std::size_t j = 0; j < base.entries.size(); ++j)
            scores[j] = cosine(q, base.entries[j].vector);

        std::vector<std::size_t> order(base.entries.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (scores[a] != scores[b]) return scores[a] > scores[b];
            return a < b;  // tie: earlier entry wins
        });

        std::size_t take = std::min(k, order.size());
        for (std::size_t r = 0; r < take; ++r) {
            const KnowledgeEntry& e = base.entries[order[r]];
            double s = scores[order[r]];
            if (RetrievedReport* seen = find_merged(e.entry_id)) {
                if (s > seen->score) {
                    seen->score = s;
                    seen->pathology = base.pathology;
                    seen->report_text = e.report_text;
                }
                // s == seen->score keeps the earlier pathology
            } else {
                merged.push_back(RetrievedReport{e.report_text, s, base.pathology, e.entry_id});
            }
        }
    }

    std::sort(merged.begin(), merged.end(), [](const RetrievedReport& a, const RetrievedReport& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.entry_id < b.entry_id;
    });
    return merged;
}

std::string serialize_store(const KnowledgeStore& store) {
    std::string out;
    out.append(kMagic, sizeof kMagic);
    put_u32(out, kVersion);
    put_u32(out, static_cast<std::uint32_t>(store.dim()));
    put_u32(out, static_cast<std::uint32_t>(store.bases().size()));
    put_str(out, store.fingerprint());
    for (const auto& base : store.bases()) {
        put_str(out, base.pathology);
        put_u32(out, static_cast<std::uint32_t>(base.entries.size()));
        for (const auto& e : base.entries) {
            put_str(out, e.entry_id);
            for (double d : e.vector) put_f64(out, d);
            put_str(out, e.report_text);
        }
    }
    return out;
}

void persist_store(const KnowledgeStore& store, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw StoreCorruptError("cannot open store file for writing: " + path);
    std::string bytes = serialize_store(store);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw StoreCorruptError("failed writing store file: " + path);
}

KnowledgeStore deserialize_store(const std::string& bytes) {
    Reader r(bytes);
    char magic[4];
    r.raw(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0)
        throw StoreCorruptError("bad magic: not a knowledge store file");
    std::uint32_t version = r.u32();
    if (version != kVersion)
        throw StoreVersionError("store version " + std::to_string(version) +
                                " is not supported (expected " + std::to_string(kVersion) + ")");
    std::uint32_t dim = r.u32();
    std::uint32_t n_bases = r.u32();
    std::string fingerprint = r.str();

    std::vector<KnowledgeBase> bases;
    bases.reserve(n_bases);
    std::set<std::string> seen_labels;
    for (std::uint32_t b = 0; b < n_bases; ++b) {
        KnowledgeBase base;
        base.pathology = r.str();
        if (!seen_labels.insert(base.pathology).second)
            throw StoreCorruptError("duplicate base label '" + base.pathology + "'");
        std::uint32_t n_entries = r.u32();
        base.entries.reserve(n_entries);
        std::set<std::string> seen_ids;
        for (std::uint32_t e = 0; e < n_entries; ++e) {
            KnowledgeEntry entry;
            entry.entry_id = r.str();
            if (!seen_ids.insert(entry.entry_id).second)
                throw StoreCorruptError("duplicate entry '" + entry.entry_id + "' in base '" +
                                        base.pathology + "'");
            entry.vector.resize(dim);
            for (std::uint32_t d = 0; d < dim; ++d) entry.vector[d] = r.f64();
            entry.report_text = r.str();
            base.entries.push_back(std::move(entry));
        }
        bases.push_back(std::move(base));
    }
    if (!r.exhausted()) throw StoreCorruptError("trailing bytes after store payload");
    return KnowledgeStore(std::move(bases), dim, std::move(fingerprint));
}

KnowledgeStore load_store(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StoreCorruptError("cannot open store file: " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize_store(bytes);
}

}  // namespace evi
