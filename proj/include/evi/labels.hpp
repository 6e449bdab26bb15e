#pragma once

#include <optional>
#include <string>
#include <vector>

namespace evi {

// Ordered pathology vocabulary. File order defines the canonical label
// order used for knowledge-base layout and retrieval tie-breaking.
class LabelSet {
public:
    LabelSet() = default;
    explicit LabelSet(std::vector<std::string> labels);

    // The standard 14-finding chest X-ray vocabulary shipped as the default.
    static LabelSet default14();

    // One label per line; blank lines ignored. Throws ConfigError(io) when
    // unreadable, ConfigError(parse) when empty or duplicated.
    static LabelSet from_file(const std::string& path);

    const std::vector<std::string>& labels() const { return labels_; }
    std::size_t size() const { return labels_.size(); }
    bool contains(const std::string& label) const;
    // Position in canonical order.
    std::optional<std::size_t> index_of(const std::string& label) const;

private:
    std::vector<std::string> labels_;
};

}  // namespace evi
