#pragma once

#include <optional>
#include <string>

#include "evi/core/trajectory.hpp"

namespace evi {

struct TrajectoryDivergence {
    int seq = 0;          // first differing sequence number
    std::string left;     // canonical event line ("(missing)" past the end)
    std::string right;
    std::string reason;
};

// nullopt => the two logs are canonically equal (timestamps ignored).
using DiffResult = std::optional<TrajectoryDivergence>;

DiffResult diff_trajectory_logs(const TrajectoryLog& left, const TrajectoryLog& right);

// File variant; throws TrajectoryParseError when either file is unreadable
// or malformed.
DiffResult diff_trajectory(const std::string& left_path, const std::string& right_path);

}  // namespace evi
