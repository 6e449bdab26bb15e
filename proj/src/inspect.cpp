#include "evi/harness/inspect.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <sstream>

#include "evi/core/types.hpp"

namespace evi {

namespace {

const Json* find_terminal_report(const TrajectoryLog& log) {
    if (log.terminal_type() != EventType::ReportEmitted) return nullptr;
    const Json& payload = log.events().back().payload;
    if (!payload.contains("report")) return nullptr;
    return &payload["report"];
}

// evidence_id -> (kind, payload, source_call_id) from the ChainExtracted event
std::map<int, Json> chain_entries(const TrajectoryLog& log) {
    std::map<int, Json> out;
    for (const auto& ev : log.events()) {
        if (ev.type != EventType::ChainExtracted) continue;
        for (const auto& entry : ev.payload.value("entries", Json::array()))
            out[entry.value("evidence_id", 0)] = entry;
    }
    return out;
}

std::map<int, Json> dispatched_calls(const TrajectoryLog& log) {
    std::map<int, Json> out;
    for (const auto& ev : log.events())
        if (ev.type == EventType::ToolDispatched) out[ev.payload.value("call_id", 0)] = ev.payload;
    return out;
}

std::set<std::string> content_tokens(const std::string& text) {
    std::set<std::string> out;
    std::string token;
    for (char c : text) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            token += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        } else if (!token.empty()) {
            if (token.size() >= 5) out.insert(token);
            token.clear();
        }
    }
    if (token.size() >= 5) out.insert(token);
    return out;
}

}  // namespace

std::string render_trajectory_full(const TrajectoryLog& log) {
    std::ostringstream out;
    out << "study: " << log.study_id() << "\n";
    out << "events: " << log.events().size() << "\n\n";
    for (const auto& ev : log.events())
        out << "#" << ev.seq << " " << to_string(ev.type) << " " << ev.payload.dump() << "\n";
    return out.str();
}

std::string render_report_view(const TrajectoryLog& log) {
    std::ostringstream out;
    if (const Json* report = find_terminal_report(log)) {
        out << report->value("raw_text", "");
        if (!out.str().empty() && out.str().back() != '\n') out << "\n";
        return out.str();
    }
    const auto& last = log.events().back();
    out << "(no report) run aborted: " << last.payload.value("reason", "unknown") << " — "
        << last.payload.value("detail", "") << "\n";
    return out.str();
}

std::string render_evidence_view(const TrajectoryLog& log,
                                 const std::optional<std::string>& ground_truth) {
    std::ostringstream out;
    const Json* report = find_terminal_report(log);
    if (!report) return render_report_view(log);

    auto entries = chain_entries(log);
    auto calls = dispatched_calls(log);
    std::set<std::string> gt_tokens;
    if (ground_truth) gt_tokens = content_tokens(*ground_truth);

    out << "study: " << log.study_id() << "\n\n";
    int idx = 0;
    for (const auto& finding : report->value("findings", Json::array())) {
        ++idx;
        std::string text = finding.value("text", "");
        std::string mark;
        if (ground_truth) {
            auto tokens = content_tokens(text);
            bool hit = std::any_of(tokens.begin(), tokens.end(),
                                   [&](const std::string& t) { return gt_tokens.count(t) > 0; });
            mark = hit ? "[=] " : "[!] ";
        }
        out << mark << "finding " << idx << ": " << text << "\n";
        for (const auto& id_json : finding.value("evidence_ids", Json::array())) {
            int id = id_json.get<int>();
            auto entry_it = entries.find(id);
            if (entry_it == entries.end()) {
                out << "    E" << id << ": (not in chain)\n";
                continue;
            }
            const Json& entry = entry_it->second;
            out << "    E" << id << " [" << entry.value("kind", "?") << "] "
                << entry.value("payload", Json()).dump() << "\n";
            int call_id = entry.value("source_call_id", 0);
            auto call_it = calls.find(call_id);
            if (call_it != calls.end())
                out << "      from call " << call_id << ": " << call_it->second.value("tool", "?")
                    << " " << call_it->second.value("arguments", Json()).dump() << "\n";
        }
    }
    if (idx == 0) out << "(report has no findings)\n";
    const std::string impression = report->value("impression", "");
    if (!impression.empty()) out << "\nimpression: " << impression << "\n";
    if (ground_truth)
        out << "\nmarks: [=] finding vocabulary appears in ground truth, [!] it does not\n";
    return out.str();
}

}  // namespace evi
