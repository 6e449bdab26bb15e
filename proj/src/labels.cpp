#include "evi/labels.hpp"

#include <fstream>
#include <set>

#include "evi/errors.hpp"

namespace evi {

LabelSet::LabelSet(std::vector<std::string> labels) : labels_(std::move(labels)) {}

LabelSet LabelSet::default14() {
    return LabelSet({
        "Atelectasis",
        "Cardiomegaly",
        "Consolidation",
        "Edema",
        "Enlarged Cardiomediastinum",
        "Fracture",
        "Lung Lesion",
        "Lung Opacity",
        "No Finding",
        "Pleural Effusion",
        "Pleural Other",
        "Pneumonia",
        "Pneumothorax",
        "Support Devices",
    });
}

LabelSet LabelSet::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("io", "cannot open label file: " + path);
    std::vector<std::string> labels;
    std::set<std::string> seen;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        // trim outer whitespace
        auto b = line.find_first_not_of(" \t");
        if (b == std::string::npos) continue;
        auto e = line.find_last_not_of(" \t");
        std::string label = line.substr(b, e - b + 1);
        if (!seen.insert(label).second)
            throw ConfigError("parse", "duplicate label in " + path + ": " + label);
        labels.push_back(std::move(label));
    }
    if (labels.empty()) throw ConfigError("parse", "label file is empty: " + path);
    return LabelSet(std::move(labels));
}

bool LabelSet::contains(const std::string& label) const {
    return index_of(label).has_value();
}

std::optional<std::size_t> LabelSet::index_of(const std::string& label) const {
    for (std::size_t i = 0; i < labels_.size(); ++i)
        if (labels_[i] == label) return i;
    return std::nullopt;
}

}  // namespace evi
