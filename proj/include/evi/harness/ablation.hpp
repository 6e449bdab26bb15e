#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "evi/harness/batch.hpp"

namespace evi {

// Component knock-outs mirroring the study's tool/stage ablations.
enum class AblationVariant {
    full,           // baseline configuration
    no_cls,         // classification tools disabled
    no_loc,         // posture + grounding + segmentation tools disabled
    no_ret,         // retrieval tools disabled
    no_planning,    // planning stage skipped
    no_extraction,  // chain extraction skipped (raw memory pass-through)
};

inline constexpr AblationVariant kAllAblationVariants[] = {
    AblationVariant::full,       AblationVariant::no_cls,      AblationVariant::no_loc,
    AblationVariant::no_ret,     AblationVariant::no_planning, AblationVariant::no_extraction,
};

const char* to_string(AblationVariant variant);
std::optional<AblationVariant> ablation_from_string(std::string_view name);

// Applies the variant's config delta to a base config.
RunConfig apply_ablation(RunConfig base, AblationVariant variant);

struct AblationRow {
    AblationVariant variant = AblationVariant::full;
    BatchResult result;
};

struct AblationReport {
    std::vector<AblationRow> rows;

    // Aligned plain-text comparison table.
    std::string table() const;
    Json to_json() const;
};

// Runs the same cases under each variant. Per-variant registries are
// rebuilt from the raw tool config so disabled kinds vanish from the menu.
// Output (when out_root non-empty): out_root/<variant>/<study_id>/...
AblationReport run_ablation(const Json& tools_config, const RunConfig& base,
                            const std::vector<AblationVariant>& variants,
                            const std::vector<BatchCase>& cases, const ToolHost& host,
                            int parallelism = 1, const std::string& out_root = "",
                            const EngineOptions& opts = {});

}  // namespace evi
