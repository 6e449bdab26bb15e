#include "evi/harness/diff.hpp"

#include <fstream>

#include "evi/errors.hpp"

namespace evi {

namespace {

std::string event_line(const TrajectoryEvent& ev) {
    return Json{{"seq", ev.seq}, {"event", to_string(ev.type)}, {"payload", ev.payload}, {"ts", 0}}
        .dump();
}

}  // namespace

DiffResult diff_trajectory_logs(const TrajectoryLog& left, const TrajectoryLog& right) {
    const auto& le = left.events();
    const auto& re = right.events();
    std::size_t n = std::max(le.size(), re.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (i >= le.size())
            return TrajectoryDivergence{re[i].seq, "(missing)", event_line(re[i]),
                                        "left log ends early"};
        if (i >= re.size())
            return TrajectoryDivergence{le[i].seq, event_line(le[i]), "(missing)",
                                        "right log ends early"};
        // canonical comparison: everything but ts
        if (le[i].type != re[i].type || le[i].payload != re[i].payload || le[i].seq != re[i].seq)
            return TrajectoryDivergence{le[i].seq, event_line(le[i]), event_line(re[i]),
                                        "event mismatch"};
    }
    if (left.study_id() != right.study_id())
        return TrajectoryDivergence{static_cast<int>(n), left.study_id(), right.study_id(),
                                    "study_id mismatch"};
    return std::nullopt;
}

DiffResult diff_trajectory(const std::string& left_path, const std::string& right_path) {
    auto read = [](const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw TrajectoryParseError("cannot open trajectory file: " + path);
        std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        return deserialize_trajectory(bytes);
    };
    return diff_trajectory_logs(read(left_path), read(right_path));
}

}  // namespace evi
