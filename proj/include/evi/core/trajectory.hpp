#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "evi/jsonutil.hpp"

namespace evi {

// Everything observable about one run, in the order it happened.
enum class EventType {
    PlanEmitted,
    PlannerRawEmission,
    DecisionParsed,
    ParseFailure,
    ToolDispatched,
    ToolReturned,
    EvidenceAppended,
    ChainExtracted,
    ReportEmitted,
    Aborted,
};

const char* to_string(EventType type);
std::optional<EventType> event_type_from_string(std::string_view name);

// ReportEmitted / Aborted close a log; nothing may be recorded afterwards.
bool is_terminal(EventType type);

struct TrajectoryEvent {
    int seq = 0;             // dense from 1
    EventType type = EventType::Aborted;
    Json payload;
    std::int64_t ts = 0;     // milliseconds; normalized to 0 in canonical form

    bool operator==(const TrajectoryEvent&) const = default;
};

class TrajectoryLog {
public:
    TrajectoryLog() = default;
    explicit TrajectoryLog(std::string study_id) : study_id_(std::move(study_id)) {}

    const std::string& study_id() const { return study_id_; }
    const std::vector<TrajectoryEvent>& events() const { return events_; }

    // Appends an event with the next sequence number and returns that seq.
    // Terminal events get a "study_id" key injected into their payload so a
    // serialized log is self-describing. Recording after a terminal event is
    // a programming error (throws std::logic_error).
    int record(EventType type, Json payload, std::int64_t ts = 0);

    bool has_terminal() const;
    // Type of the terminal event, when present.
    std::optional<EventType> terminal_type() const;

    std::size_t count(EventType type) const;

    bool operator==(const TrajectoryLog&) const = default;

private:
    std::string study_id_;
    std::vector<TrajectoryEvent> events_;
};

// One JSON object per line, fields {seq, event, payload, ts}, newline after
// every line. Requires a terminal event (IncompleteTrajectoryError).
std::string serialize_trajectory(const TrajectoryLog& log);

// serialize_trajectory with every ts replaced by the 0 sentinel; the form
// used for byte comparison (golden replay, diffing, idempotency checks).
std::string canonical_trajectory(const TrajectoryLog& log);

// Copy of `log` with all timestamps normalized to the sentinel.
TrajectoryLog normalize_timestamps(const TrajectoryLog& log);

// Inverse of serialize_trajectory. Enforces dense seq from 1 and exactly one
// terminal event in final position; anything else is TrajectoryParseError.
TrajectoryLog deserialize_trajectory(const std::string& bytes);

}  // namespace evi
