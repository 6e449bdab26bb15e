#include "evi/harness/batch.hpp"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <thread>

#include "evi/errors.hpp"

namespace evi {

namespace {

Json chain_file_json(const EvidenceChain& chain) {
    Json entries = Json::array();
    for (const auto& e : chain.entries)
        entries.push_back(Json{{"evidence_id", e.evidence_id},
                               {"kind", to_string(e.kind)},
                               {"payload", e.payload},
                               {"source_call_id", e.source_call_id}});
    Json provenance = Json::object();
    for (const auto& [id, call] : chain.provenance) provenance[std::to_string(id)] = call;
    Json j{{"grouped", chain.grouped}, {"entries", std::move(entries)},
           {"provenance", std::move(provenance)}};
    if (chain.summary) j["summary"] = *chain.summary;
    return j;
}

void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("io", "cannot open for writing: " + path);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("io", "failed writing: " + path);
}

RunOutcome run_one(const BatchSpec& spec, const Registry& registry, const ToolHost& host,
                   const EngineOptions& opts, const BatchCase& item) {
    std::unique_ptr<Backend> backend;
    if (!item.script.empty()) {
        backend = std::make_unique<ScriptedBackend>(item.script);
    } else if (spec.backend) {
        backend = make_backend(*spec.backend);
    } else {
        // No way to obtain emissions: synthesize a failed outcome through a
        // backend that reports itself unavailable.
        backend = std::make_unique<ScriptedBackend>(std::vector<std::string>{});
    }
    Gateway gateway(std::move(backend));
    Engine engine(registry, gateway, host, spec.cfg, opts);
    return engine.run(item.study);
}

}  // namespace

void write_outcome(const RunOutcome& outcome, const std::string& dir) {
    std::filesystem::create_directories(dir);
    write_file(dir + "/trajectory.traj.jsonl", canonical_trajectory(outcome.log));
    if (outcome.chain)
        write_file(dir + "/chain.json", chain_file_json(*outcome.chain).dump(2) + "\n");
    if (outcome.report)
        write_file(dir + "/report.json", report_to_json(*outcome.report).dump(2) + "\n");
}

BatchResult run_batch(const BatchSpec& spec, const Registry& registry, const ToolHost& host,
                      const EngineOptions& opts) {
    BatchResult result;
    result.outcomes.resize(spec.cases.size());
    if (spec.cases.empty()) {
        result.metrics = AgentMetrics{};
        return result;
    }

    int workers = std::max(1, spec.parallelism);
    workers = std::min<int>(workers, static_cast<int>(spec.cases.size()));

    std::atomic<std::size_t> cursor{0};
    auto worker = [&] {
        while (true) {
            std::size_t i = cursor.fetch_add(1);
            if (i >= spec.cases.size()) return;
            try {
                result.outcomes[i] = run_one(spec, registry, host, opts, spec.cases[i]);
            } catch (const std::exception& e) {
                // Engine::run is total, so this covers setup failures
                // (unreadable script file, bad backend config).
                RunOutcome failed;
                failed.status = OutcomeStatus::failed;
                TrajectoryLog log(spec.cases[i].study.study_id);
                log.record(EventType::Aborted,
                           Json{{"reason", "case_setup_failed"},
                                {"detail", e.what()},
                                {"status", "failed"}});
                failed.log = std::move(log);
                result.outcomes[i] = std::move(failed);
            }
        }
    };

    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    if (!spec.output_dir.empty()) {
        for (const auto& outcome : result.outcomes)
            write_outcome(outcome, spec.output_dir + "/" + outcome.log.study_id());
    }

    std::vector<TrajectoryLog> logs;
    logs.reserve(result.outcomes.size());
    for (const auto& o : result.outcomes) logs.push_back(o.log);
    result.metrics = compute_metrics(logs);
    return result;
}

}  // namespace evi
