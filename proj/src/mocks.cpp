#include "evi/tools/mocks.hpp"

#include <fstream>
#include <stdexcept>

#include "evi/errors.hpp"

namespace evi {

namespace {

// Thrown by mocks to signal a tool_error with a readable diagnostic.
struct MockFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

const Json& image_fixture(const MockFixtures& fx, const std::string& image_ref) {
    if (!fx.doc.contains("images") || !fx.doc["images"].contains(image_ref))
        throw MockFailure("no fixture for image: " + image_ref);
    return fx.doc["images"][image_ref];
}

const Json& expert_fixture(const MockFixtures& fx, const std::string& image_ref,
                           const char* expert) {
    const Json& img = image_fixture(fx, image_ref);
    if (!img.contains(expert))
        throw MockFailure(std::string("no ") + expert + " fixture for image: " + image_ref);
    return img[expert];
}

}  // namespace

MockFixtures MockFixtures::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("io", "cannot open fixture file: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    Json doc = parse_lenient(text);
    if (doc.is_discarded() || !doc.is_object())
        throw ConfigError("parse", "fixture file is not a JSON object: " + path);
    return MockFixtures{std::move(doc)};
}

ToolHost make_default_host(const MockFixtures* fixtures, const KnowledgeStore* store,
                           const Embedder* embedder, int default_top_k) {
    ToolHost host;

    host.builtins["classifier_mock"] = [fixtures](const Json& args) -> Json {
        if (!fixtures) throw MockFailure("no fixtures loaded");
        return expert_fixture(*fixtures, args.at("image").get<std::string>(), "classification");
    };

    host.builtins["posture_mock"] = [fixtures](const Json& args) -> Json {
        if (!fixtures) throw MockFailure("no fixtures loaded");
        return expert_fixture(*fixtures, args.at("image").get<std::string>(), "posture");
    };

    host.builtins["grounder_mock"] = [fixtures](const Json& args) -> Json {
        if (!fixtures) throw MockFailure("no fixtures loaded");
        std::string disease = args.at("disease").get<std::string>();
        const Json& table =
            expert_fixture(*fixtures, args.at("image").get<std::string>(), "grounding");
        Json boxes = table.contains(disease) ? table[disease] : Json::array();
        return Json{{"boxes", std::move(boxes)}, {"disease", disease}};
    };

    host.builtins["segmenter_mock"] = [fixtures](const Json& args) -> Json {
        if (!fixtures) throw MockFailure("no fixtures loaded");
        std::string structure = args.at("structure").get<std::string>();
        const Json& table =
            expert_fixture(*fixtures, args.at("image").get<std::string>(), "segmentation");
        if (!table.contains(structure))
            throw MockFailure("no segmentation fixture for structure: " + structure);
        Json payload = table[structure];
        payload["structure"] = structure;
        return payload;
    };

    host.builtins["retrieval_tool"] = [store, embedder, default_top_k](const Json& args) -> Json {
        if (!store || !embedder) throw MockFailure("knowledge store not loaded");
        std::vector<std::string> pathologies;
        for (const auto& p : args.at("pathologies")) {
            if (!p.is_string()) throw MockFailure("pathologies must be strings");
            pathologies.push_back(p.get<std::string>());
        }
        std::size_t k = static_cast<std::size_t>(default_top_k);
        if (args.contains("k")) k = args["k"].get<std::size_t>();
        auto hits = retrieve(*store, args.at("image").get<std::string>(), pathologies, k, *embedder);
        Json reports = Json::array();
        for (const auto& h : hits)
            reports.push_back(Json{{"report_text", h.report_text},
                                   {"score", h.score},
                                   {"source_id", h.entry_id},
                                   {"pathology", h.pathology}});
        return Json{{"reports", std::move(reports)}};
    };

    host.builtins["web_search_mock"] = [fixtures](const Json& args) -> Json {
        if (!fixtures) throw MockFailure("no fixtures loaded");
        std::string query = args.at("query").get<std::string>();
        if (fixtures->doc.contains("web") && fixtures->doc["web"].contains(query))
            return Json{{"results", fixtures->doc["web"][query]}};
        return Json{{"results", Json::array()}};
    };

    return host;
}

std::vector<std::string> check_payload_contract(EvidenceKind kind, const Json& payload,
                                                const LabelSet& labels) {
    std::vector<std::string> out;
    auto fail = [&](const std::string& m) { out.push_back(m); };

    switch (kind) {
        case EvidenceKind::classification: {
            if (!payload.is_object() || !payload.contains("findings") ||
                !payload["findings"].is_array()) {
                fail("classification payload must be {findings: [...]}");
                break;
            }
            for (const auto& f : payload["findings"]) {
                if (!f.is_object() || !f.contains("label") || !f["label"].is_string() ||
                    !f.contains("prob") || !f["prob"].is_number()) {
                    fail("classification finding must be {label, prob}");
                    continue;
                }
                if (!labels.contains(f["label"].get<std::string>()))
                    fail("classification label outside vocabulary: " +
                         f["label"].get<std::string>());
                double p = f["prob"].get<double>();
                if (p < 0.0 || p > 1.0) fail("classification prob outside [0,1]");
            }
            break;
        }
        case EvidenceKind::posture: {
            if (!payload.is_object() || !payload.contains("view") || !payload["view"].is_string()) {
                fail("posture payload must be {view}");
                break;
            }
            std::string v = payload["view"].get<std::string>();
            if (v != "AP" && v != "PA" && v != "LATERAL")
                fail("posture view must be one of AP/PA/LATERAL, got " + v);
            break;
        }
        case EvidenceKind::grounding: {
            if (!payload.is_object() || !payload.contains("boxes") || !payload["boxes"].is_array()) {
                fail("grounding payload must be {boxes: [...]}");
                break;
            }
            for (const auto& b : payload["boxes"]) {
                bool shaped = b.is_object() && b.contains("x0") && b.contains("y0") &&
                              b.contains("x1") && b.contains("y1") && b["x0"].is_number() &&
                              b["y0"].is_number() && b["x1"].is_number() && b["y1"].is_number();
                if (!shaped) {
                    fail("grounding box must carry numeric x0/y0/x1/y1");
                    continue;
                }
                double x0 = b["x0"].get<double>(), y0 = b["y0"].get<double>();
                double x1 = b["x1"].get<double>(), y1 = b["y1"].get<double>();
                if (x0 < 0 || y0 < 0 || x1 > 1 || y1 > 1)
                    fail("grounding box must be normalized to [0,1]");
                if (!(x0 < x1) || !(y0 < y1)) fail("grounding box must satisfy x0<x1 and y0<y1");
            }
            break;
        }
        case EvidenceKind::segmentation: {
            if (!payload.is_object() || !payload.contains("mask_ref") ||
                !payload["mask_ref"].is_string() || !payload.contains("area_fraction") ||
                !payload["area_fraction"].is_number()) {
                fail("segmentation payload must be {mask_ref, area_fraction}");
                break;
            }
            double a = payload["area_fraction"].get<double>();
            if (a < 0.0 || a > 1.0) fail("segmentation area_fraction outside [0,1]");
            break;
        }
        case EvidenceKind::retrieval: {
            if (!payload.is_object() || !payload.contains("reports") ||
                !payload["reports"].is_array()) {
                fail("retrieval payload must be {reports: [...]}");
                break;
            }
            for (const auto& r : payload["reports"]) {
                if (!r.is_object() || !r.contains("report_text") || !r["report_text"].is_string() ||
                    !r.contains("score") || !r["score"].is_number() || !r.contains("source_id") ||
                    !r["source_id"].is_string()) {
                    fail("retrieval hit must carry report_text/score/source_id");
                    continue;
                }
                double s = r["score"].get<double>();
                if (s < -1.0 || s > 1.0) fail("retrieval score outside [-1,1]");
            }
            break;
        }
        case EvidenceKind::web: {
            if (!payload.is_object() || !payload.contains("results") ||
                !payload["results"].is_array()) {
                fail("web payload must be {results: [...]}");
                break;
            }
            for (const auto& r : payload["results"])
                if (!r.is_object() || !r.contains("title") || !r["title"].is_string() ||
                    !r.contains("snippet") || !r["snippet"].is_string())
                    fail("web result must carry title/snippet strings");
            break;
        }
        case EvidenceKind::custom:
            break;  // unconstrained
    }
    return out;
}

}  // namespace evi
