#pragma once

#include <optional>
#include <string>

#include "evi/core/trajectory.hpp"

namespace evi {

// Human-readable views over a finished trajectory. Everything is rendered
// from the log alone (chain and report ride inside their events).

// Full event-by-event listing.
std::string render_trajectory_full(const TrajectoryLog& log);

// Report text with, per finding, the cited evidence items and the tool
// calls they came from. When a ground-truth report is supplied each finding
// gets a consistency mark: [=] some finding vocabulary appears in the
// ground truth, [!] none does (a surface check, not a clinical metric).
std::string render_evidence_view(const TrajectoryLog& log,
                                 const std::optional<std::string>& ground_truth = std::nullopt);

// Just the final report (or the abort reason).
std::string render_report_view(const TrajectoryLog& log);

}  // namespace evi
