#include "evi/core/trajectory.hpp"

#include <sstream>
#include <stdexcept>

#include "evi/errors.hpp"

namespace evi {

namespace {

constexpr const char* kEventNames[] = {
    "PlanEmitted",    "PlannerRawEmission", "DecisionParsed",   "ParseFailure",
    "ToolDispatched", "ToolReturned",       "EvidenceAppended", "ChainExtracted",
    "ReportEmitted",  "Aborted",
};

Json event_to_json(const TrajectoryEvent& ev, bool normalize_ts) {
    return Json{
        {"seq", ev.seq},
        {"event", to_string(ev.type)},
        {"payload", ev.payload},
        {"ts", normalize_ts ? 0 : ev.ts},
    };
}

std::string serialize_impl(const TrajectoryLog& log, bool normalize_ts) {
    if (!log.has_terminal())
        throw IncompleteTrajectoryError("log for study '" + log.study_id() +
                                        "' has no terminal event");
    std::string out;
    for (const auto& ev : log.events()) {
        out += event_to_json(ev, normalize_ts).dump();
        out += '\n';
    }
    return out;
}

}  // namespace

const char* to_string(EventType type) { return kEventNames[static_cast<int>(type)]; }

std::optional<EventType> event_type_from_string(std::string_view name) {
    for (int i = 0; i < static_cast<int>(std::size(kEventNames)); ++i)
        if (name == kEventNames[i]) return static_cast<EventType>(i);
    return std::nullopt;
}

bool is_terminal(EventType type) {
    return type == EventType::ReportEmitted || type == EventType::Aborted;
}

int TrajectoryLog::record(EventType type, Json payload, std::int64_t ts) {
    if (has_terminal())
        throw std::logic_error("trajectory already has a terminal event");
    TrajectoryEvent ev;
    ev.seq = static_cast<int>(events_.size()) + 1;
    ev.type = type;
    ev.payload = std::move(payload);
    ev.ts = ts;
    if (is_terminal(type)) {
        if (!ev.payload.is_object()) ev.payload = Json::object();
        ev.payload["study_id"] = study_id_;
    }
    events_.push_back(std::move(ev));
    return events_.back().seq;
}

bool TrajectoryLog::has_terminal() const {
    return !events_.empty() && is_terminal(events_.back().type);
}

std::optional<EventType> TrajectoryLog::terminal_type() const {
    if (!has_terminal()) return std::nullopt;
    return events_.back().type;
}

std::size_t TrajectoryLog::count(EventType type) const {
    std::size_t n = 0;
    for (const auto& ev : events_)
        if (ev.type == type) ++n;
    return n;
}

std::string serialize_trajectory(const TrajectoryLog& log) { return serialize_impl(log, false); }

std::string canonical_trajectory(const TrajectoryLog& log) { return serialize_impl(log, true); }

TrajectoryLog normalize_timestamps(const TrajectoryLog& log) {
    TrajectoryLog fresh(log.study_id());
    for (const auto& ev : log.events()) {
        Json payload = ev.payload;
        if (is_terminal(ev.type)) payload.erase("study_id");  // record() re-injects it
        fresh.record(ev.type, std::move(payload), 0);
    }
    return fresh;
}

TrajectoryLog deserialize_trajectory(const std::string& bytes) {
    std::vector<TrajectoryEvent> events;
    std::istringstream in(bytes);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        Json j = parse_lenient(line);
        if (j.is_discarded())
            throw TrajectoryParseError("line " + std::to_string(line_no) + ": not valid JSON");
        if (!j.is_object() || !j.contains("seq") || !j.contains("event") ||
            !j.contains("payload") || !j.contains("ts"))
            throw TrajectoryParseError("line " + std::to_string(line_no) +
                                       ": expected fields {seq, event, payload, ts}");
        if (!j["seq"].is_number_integer() || !j["event"].is_string() ||
            !j["ts"].is_number_integer())
            throw TrajectoryParseError("line " + std::to_string(line_no) + ": bad field types");
        auto type = event_type_from_string(j["event"].get<std::string>());
        if (!type)
            throw TrajectoryParseError("line " + std::to_string(line_no) + ": unknown event '" +
                                       j["event"].get<std::string>() + "'");
        TrajectoryEvent ev;
        ev.seq = j["seq"].get<int>();
        ev.type = *type;
        ev.payload = j["payload"];
        ev.ts = j["ts"].get<std::int64_t>();
        if (ev.seq != static_cast<int>(events.size()) + 1)
            throw TrajectoryParseError("line " + std::to_string(line_no) +
                                       ": sequence numbers must be dense from 1, got " +
                                       std::to_string(ev.seq));
        if (!events.empty() && is_terminal(events.back().type))
            throw TrajectoryParseError("line " + std::to_string(line_no) +
                                       ": event after terminal event");
        events.push_back(std::move(ev));
    }
    if (events.empty()) throw TrajectoryParseError("empty trajectory");
    if (!is_terminal(events.back().type))
        throw TrajectoryParseError("trajectory has no terminal event");

    std::string study_id;
    const Json& terminal_payload = events.back().payload;
    if (terminal_payload.is_object() && terminal_payload.contains("study_id") &&
        terminal_payload["study_id"].is_string())
        study_id = terminal_payload["study_id"].get<std::string>();

    TrajectoryLog log(study_id);
    for (auto& ev : events) {
        Json payload = std::move(ev.payload);
        if (is_terminal(ev.type)) payload.erase("study_id");  // record() re-injects
        log.record(ev.type, std::move(payload), ev.ts);
    }
    return log;
}

}  // namespace evi
