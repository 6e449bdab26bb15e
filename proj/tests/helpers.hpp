#pragma once

// Shared test scaffolding: independent reference implementations (oracles),
// random data builders, script composers, and filesystem utilities.
//
// The oracles deliberately re-derive behaviour from the documented contracts
// with different mechanics than the library (max-scan selection instead of
// sort, insertion sort instead of std::sort, a separate type checker), so
// agreement between the two is meaningful.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <string>
#include <unistd.h>
#include <utility>
#include <vector>

#include "evi/core/trajectory.hpp"
#include "evi/core/types.hpp"
#include "evi/jsonutil.hpp"
#include "evi/retrieval/embedder.hpp"
#include "evi/retrieval/store.hpp"
#include "evi/tools/schema.hpp"

namespace evitest {

// ---------------------------------------------------------------------------
// filesystem
// ---------------------------------------------------------------------------

inline std::string source_root() {
#ifdef EVI_SOURCE_ROOT
    return EVI_SOURCE_ROOT;
#else
    return ".";
#endif
}

struct TempDir {
    std::filesystem::path path;

    TempDir() {
        static std::atomic<int> counter{0};
        auto base = std::filesystem::temp_directory_path();
        path = base / ("evi-test-" + std::to_string(::getpid()) + "-" +
                       std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::string file(const std::string& name) const { return (path / name).string(); }
};

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(static_cast<bool>(in));
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

inline void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    REQUIRE(static_cast<bool>(out));
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

// ---------------------------------------------------------------------------
// rng
// ---------------------------------------------------------------------------

struct Rng {
    std::mt19937_64 eng;

    explicit Rng(std::uint64_t seed) : eng(seed) {}

    int between(int lo, int hi) {  // inclusive
        return lo + static_cast<int>(eng() % static_cast<std::uint64_t>(hi - lo + 1));
    }
    double unit() { return static_cast<double>(eng() >> 11) * 0x1.0p-53; }
    bool chance(double p) { return unit() < p; }

    template <typename T>
    const T& pick(const std::vector<T>& v) {
        return v[static_cast<std::size_t>(eng() % v.size())];
    }

    std::string word(int min_len = 3, int max_len = 10) {
        static const char* alpha = "abcdefghijklmnopqrstuvwxyz";
        int n = between(min_len, max_len);
        std::string s;
        for (int i = 0; i < n; ++i) s += alpha[eng() % 26];
        return s;
    }
};

// ---------------------------------------------------------------------------
// independent cosine (oracle): straight restatement of the definition
// ---------------------------------------------------------------------------

inline double oracle_cosine(const std::vector<double>& a, const std::vector<double>& b) {
    REQUIRE(a.size() == b.size());
    double dot = 0.0, aa = 0.0, bb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
    for (std::size_t i = 0; i < a.size(); ++i) aa += a[i] * a[i];
    for (std::size_t i = 0; i < b.size(); ++i) bb += b[i] * b[i];
    double na = std::sqrt(aa), nb = std::sqrt(bb);
    REQUIRE(na != 0.0);
    REQUIRE(nb != 0.0);
    double c = dot / (na * nb);
    if (c > 1.0) c = 1.0;
    if (c < -1.0) c = -1.0;
    return c;
}

// ---------------------------------------------------------------------------
// independent retrieval oracle
// ---------------------------------------------------------------------------

// Re-derives the ranking contract with different mechanics: per-base top-k by
// repeated max scan, linear-scan dedup merge, insertion-sort final ordering.
inline std::vector<evi::RetrievedReport> oracle_retrieve(
    const evi::KnowledgeStore& store, const std::string& image_ref,
    const std::vector<std::string>& pathologies, std::size_t k, const evi::Embedder& embedder) {
    std::vector<evi::RetrievedReport> merged;
    if (pathologies.empty()) return merged;
    REQUIRE(embedder.fingerprint() == store.fingerprint());

    std::set<std::string> asked(pathologies.begin(), pathologies.end());
    for (const auto& base : store.bases()) {
        if (!asked.count(base.pathology)) continue;
        const std::size_t n = base.entries.size();
        if (n == 0) continue;
        auto q = embedder.embed(image_ref, base.pathology);

        std::vector<double> score(n);
        for (std::size_t i = 0; i < n; ++i) score[i] = oracle_cosine(q, base.entries[i].vector);

        std::vector<bool> taken(n, false);
        const std::size_t picks = std::min(k, n);
        for (std::size_t p = 0; p < picks; ++p) {
            std::size_t best = n;
            for (std::size_t i = 0; i < n; ++i) {
                if (taken[i]) continue;
                if (best == n || score[i] > score[best]) best = i;  // strict >: ties keep lower index
            }
            taken[best] = true;

            const auto& e = base.entries[best];
            bool seen = false;
            for (auto& r : merged) {
                if (r.entry_id != e.entry_id) continue;
                seen = true;
                if (score[best] > r.score) {  // equal scores keep the earlier pathology
                    r.score = score[best];
                    r.pathology = base.pathology;
                    r.report_text = e.report_text;
                }
                break;
            }
            if (!seen)
                merged.push_back(evi::RetrievedReport{e.report_text, score[best], base.pathology,
                                                      e.entry_id});
        }
    }

    // insertion sort by (score desc, entry_id asc)
    for (std::size_t i = 1; i < merged.size(); ++i) {
        evi::RetrievedReport key = merged[i];
        std::size_t j = i;
        while (j > 0 && (merged[j - 1].score < key.score ||
                         (merged[j - 1].score == key.score && merged[j - 1].entry_id > key.entry_id))) {
            merged[j] = merged[j - 1];
            --j;
        }
        merged[j] = key;
    }
    return merged;
}

// ---------------------------------------------------------------------------
// independent argument-validation oracle
// ---------------------------------------------------------------------------

using FlatViolation = std::pair<evi::ViolationKind, std::string>;  // (kind, field)

inline bool oracle_type_ok(const evi::Json& v, evi::ArgType t) {
    using evi::ArgType;
    switch (t) {
        case ArgType::string_t: return v.type() == evi::Json::value_t::string;
        case ArgType::boolean_t: return v.type() == evi::Json::value_t::boolean;
        case ArgType::array_t: return v.type() == evi::Json::value_t::array;
        case ArgType::object_t: return v.type() == evi::Json::value_t::object;
        case ArgType::number_t:
            return v.is_number_integer() || v.is_number_unsigned() || v.is_number_float();
        case ArgType::integer_t: {
            if (v.is_number_integer() || v.is_number_unsigned()) return true;
            if (!v.is_number_float()) return false;
            double d = v.get<double>();
            return std::isfinite(d) && d - std::trunc(d) == 0.0;
        }
    }
    return false;
}

inline std::vector<FlatViolation> oracle_validate(const evi::ArgSchema& schema,
                                                  const evi::Json& args) {
    std::vector<FlatViolation> out;
    if (!args.is_object()) {
        out.emplace_back(evi::ViolationKind::type_mismatch, "");
        return out;
    }
    for (const auto& req : schema.required)
        if (args.find(req) == args.end()) out.emplace_back(evi::ViolationKind::missing, req);

    std::vector<std::string> names;
    for (auto it = args.begin(); it != args.end(); ++it) names.push_back(it.key());
    // args iterate sorted already, but the oracle does not rely on that
    for (std::size_t i = 1; i < names.size(); ++i)
        for (std::size_t j = i; j > 0 && names[j] < names[j - 1]; --j) std::swap(names[j], names[j - 1]);

    for (const auto& name : names) {
        const evi::PropertySpec* spec = nullptr;
        for (const auto& [pname, pspec] : schema.properties)
            if (pname == name) spec = &pspec;
        if (!spec) {
            out.emplace_back(evi::ViolationKind::unknown_field, name);
            continue;
        }
        if (!oracle_type_ok(args.at(name), spec->type)) {
            out.emplace_back(evi::ViolationKind::type_mismatch, name);
            continue;
        }
        if (!spec->enum_values.empty()) {
            bool hit = false;
            for (const auto& allowed : spec->enum_values)
                if (allowed == args.at(name)) hit = true;
            if (!hit) out.emplace_back(evi::ViolationKind::enum_violation, name);
        }
    }
    return out;
}

inline std::vector<FlatViolation> flatten(const std::vector<evi::Violation>& violations) {
    std::vector<FlatViolation> out;
    for (const auto& v : violations) out.emplace_back(v.kind, v.field);
    return out;
}

// ---------------------------------------------------------------------------
// embedders for hand-constructed cases
// ---------------------------------------------------------------------------

// Looks (image_ref, text) pairs up in an explicit table; unknown pairs get
// the fallback. Lets tests pin exact vectors (hand-computed cosines, exact
// score ties) while satisfying the Embedder interface.
class FixedEmbedder : public evi::Embedder {
public:
    std::map<std::pair<std::string, std::string>, evi::EmbeddingVector> table;
    evi::EmbeddingVector fallback;
    std::string name = "fixed-embedder/v1";

    explicit FixedEmbedder(evi::EmbeddingVector fb = {1.0, 0.0}) : fallback(std::move(fb)) {}

    evi::EmbeddingVector embed(const std::string& image_ref,
                               const std::string& text) const override {
        auto it = table.find({image_ref, text});
        return it == table.end() ? fallback : it->second;
    }
    std::string fingerprint() const override { return name; }
};

// ---------------------------------------------------------------------------
// emission composers (the grammar the planner speaks)
// ---------------------------------------------------------------------------

inline std::string fenced(const evi::Json& obj) {
    return "```evi\n" + obj.dump() + "\n```";
}

inline std::string plan_emission(const std::vector<std::string>& descriptions) {
    evi::Json steps = evi::Json::array();
    for (std::size_t i = 0; i < descriptions.size(); ++i)
        steps.push_back(evi::Json{{"step", static_cast<int>(i) + 1}, {"description", descriptions[i]}});
    return fenced(evi::Json{{"plan", std::move(steps)}});
}

inline std::string action_emission(const std::string& tool, const evi::Json& args,
                                   const std::string& thought = "") {
    std::string block = fenced(evi::Json{{"action", tool}, {"args", args}});
    return thought.empty() ? block : thought + "\n" + block;
}

inline std::string final_emission(const std::string& answer = "evidence gathered") {
    return fenced(evi::Json{{"final", answer}});
}

// Report emission in the FINDINGS/IMPRESSION grammar.
inline std::string report_emission(
    const std::vector<std::pair<std::string, std::vector<int>>>& findings,
    const std::string& impression) {
    std::string out = "FINDINGS:\n";
    for (const auto& [text, ids] : findings) {
        out += "- " + text;
        for (int id : ids) out += " [E" + std::to_string(id) + "]";
        out += "\n";
    }
    out += "IMPRESSION:\n" + impression + "\n";
    return out;
}

// ---------------------------------------------------------------------------
// synthetic trajectory logs with exact known counts (for metric hand-counts)
// ---------------------------------------------------------------------------

struct SynthSpec {
    std::string study_id = "synth";
    int planning_emissions = 1;
    int acting_emissions = 0;
    int other_emissions = 0;  // extracting/reporting phases: outside the FER denominator
    int parse_failures = 0;
    int tool_calls = 0;
    int hallucinated = 0;  // of the tool_calls, how many named unknown tools
    bool valid = true;
};

inline evi::TrajectoryLog synth_log(const SynthSpec& spec) {
    using evi::EventType;
    evi::TrajectoryLog log(spec.study_id);
    for (int i = 0; i < spec.planning_emissions; ++i)
        log.record(EventType::PlannerRawEmission, evi::Json{{"phase", "planning"}, {"text", "p"}});
    for (int i = 0; i < spec.parse_failures; ++i)
        log.record(EventType::ParseFailure,
                   evi::Json{{"phase", "acting"}, {"code", "missing_block"}, {"detail", "d"}});
    for (int i = 0; i < spec.acting_emissions; ++i)
        log.record(EventType::PlannerRawEmission, evi::Json{{"phase", "acting"}, {"text", "a"}});
    for (int i = 0; i < spec.tool_calls; ++i) {
        bool bad = i < spec.hallucinated;
        log.record(EventType::ToolDispatched, evi::Json{{"call_id", i + 1},
                                                        {"round", i + 1},
                                                        {"tool", bad ? "ghost" : "echo"},
                                                        {"arguments", evi::Json::object()}});
        evi::Json ret{{"call_id", i + 1}, {"hallucinated", bad}};
        if (bad) {
            ret["status"] = "validation_error";
            ret["diagnostic"] = "unknown tool: ghost";
        } else {
            ret["status"] = "ok";
            ret["payload"] = evi::Json{{"echo", i}};
        }
        log.record(EventType::ToolReturned, std::move(ret));
    }
    for (int i = 0; i < spec.other_emissions; ++i)
        log.record(EventType::PlannerRawEmission, evi::Json{{"phase", "reporting"}, {"text", "r"}});
    if (spec.valid)
        log.record(EventType::ReportEmitted,
                   evi::Json{{"report", evi::Json{{"findings", evi::Json::array()},
                                                  {"impression", "ok"},
                                                  {"raw_text", "IMPRESSION:\nok\n"}}}});
    else
        log.record(EventType::Aborted, evi::Json{{"reason", "round_limit_reached"},
                                                 {"detail", "d"},
                                                 {"status", "invalid_exhausted"}});
    return log;
}

// ---------------------------------------------------------------------------
// random json values (fuzzing)
// ---------------------------------------------------------------------------

inline evi::Json random_json(Rng& rng, int depth = 2) {
    int roll = rng.between(0, depth > 0 ? 6 : 4);
    switch (roll) {
        case 0: return evi::Json();  // null
        case 1: return evi::Json(rng.chance(0.5));
        case 2: return evi::Json(rng.between(-1000, 1000));
        case 3: return evi::Json(rng.unit() * 100.0 - 50.0);
        case 4: return evi::Json(rng.word());
        case 5: {
            evi::Json arr = evi::Json::array();
            int n = rng.between(0, 3);
            for (int i = 0; i < n; ++i) arr.push_back(random_json(rng, depth - 1));
            return arr;
        }
        default: {
            evi::Json obj = evi::Json::object();
            int n = rng.between(0, 3);
            for (int i = 0; i < n; ++i) obj[rng.word()] = random_json(rng, depth - 1);
            return obj;
        }
    }
}

}  // namespace evitest
