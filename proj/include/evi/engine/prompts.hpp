#pragma once

#include <string>

namespace evi {

// The four stage prompts. builtin() returns the compiled-in defaults, which
// are byte-identical to the versioned files under assets/prompts/ (a test
// keeps them in sync); load() reads a directory with those four file names.
struct PromptSet {
    std::string planning;
    std::string acting;
    std::string extraction;
    std::string generation;

    static PromptSet builtin();
    // Reads planning.txt / acting.txt / extraction.txt / generation.txt.
    // Throws ConfigError(io) when a file is missing.
    static PromptSet load(const std::string& dir);
};

}  // namespace evi
