#include "evi/engine/prompts.hpp"

#include <fstream>

#include "evi/errors.hpp"

namespace evi {

namespace {

constexpr const char* kPlanning = R"(You are a radiology assistant orchestrating specialist tools.
Decompose the diagnostic task into a short ordered plan before any tool runs.
Respond with exactly one fenced block of this form:
```evi
{"plan": [{"step": 1, "description": "...", "tool": "optional_tool_name"}]}
```
Number steps from 1 upward. Do not call any tool yet.
)";

constexpr const char* kActing = R"(You are a radiology assistant gathering evidence with specialist tools.
Each turn, think briefly in plain text, then emit exactly one fenced block:
```evi
{"action": "<tool_name>", "args": {...}}
```
Every successful tool result is appended to the evidence memory as E1, E2, ...
When the collected evidence is sufficient, hand off with:
```evi
{"final": "evidence collection complete"}
```
)";

constexpr const char* kExtraction = R"(Summarize the evidence chain below in at most five sentences.
Mention only facts present in the evidence items; do not introduce new findings.
)";

constexpr const char* kGeneration = R"(Write the radiology report using ONLY the evidence chain provided.
Use exactly this format:
FINDINGS:
- <one finding per line, each citing its evidence like [E1] [E3]>
IMPRESSION:
<short synthesis>
Every finding line must cite at least one evidence id from the chain.
Do not invent findings that have no supporting evidence item.
)";

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("io", "cannot open prompt file: " + path);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

PromptSet PromptSet::builtin() {
    return PromptSet{kPlanning, kActing, kExtraction, kGeneration};
}

PromptSet PromptSet::load(const std::string& dir) {
    PromptSet p;
    p.planning = read_file(dir + "/planning.txt");
    p.acting = read_file(dir + "/acting.txt");
    p.extraction = read_file(dir + "/extraction.txt");
    p.generation = read_file(dir + "/generation.txt");
    return p;
}

}  // namespace evi
