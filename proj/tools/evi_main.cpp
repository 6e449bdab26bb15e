// Command-line front end: single-episode runs, batch execution, knowledge
// base construction, trajectory inspection/diffing, metrics, and ablations.
//
// Exit codes
//   run:        0 valid report, 2 evidence budget exhausted, 3 failed
//   diff:       0 identical, 1 divergent
//   everywhere: 64 usage error, 65 bad config/data, 66 missing input file,
//               70 unexpected internal error

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "evi/engine/engine.hpp"
#include "evi/errors.hpp"
#include "evi/harness/ablation.hpp"
#include "evi/harness/batch.hpp"
#include "evi/harness/diff.hpp"
#include "evi/harness/inspect.hpp"
#include "evi/harness/metrics.hpp"
#include "evi/tools/mocks.hpp"

namespace fs = std::filesystem;
using namespace evi;

namespace {

constexpr int kUsageExit = 64;
constexpr int kDataExit = 65;
constexpr int kMissingFileExit = 66;
constexpr int kInternalExit = 70;

// Raised for paths the user named that do not exist (mapped to exit 66);
// data problems inside existing files stay ConfigError (exit 65).
struct MissingInput {
    std::string path;
};

const std::string& require_file(const std::string& path) {
    if (!fs::exists(path)) throw MissingInput{path};
    return path;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("io", "cannot read: " + path);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_file(const std::string& path, const std::string& bytes) {
    fs::path parent = fs::path(path).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("io", "cannot write: " + path);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::vector<std::string> read_script_lines(const std::string& path) {
    std::istringstream in(read_file(path));
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        lines.push_back(unescape_script_line(line));
    }
    return lines;
}

TrajectoryLog load_trajectory(const std::string& path) {
    require_file(path);
    return deserialize_trajectory(read_file(path));
}

std::int64_t wall_clock_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
}

// ---------------------------------------------------------------------------
// shared wiring for commands that execute episodes (run / batch / ablate)
// ---------------------------------------------------------------------------

struct EpisodeWiring {
    // options
    std::string config_path;
    std::string fixtures_path;
    std::string kb_path;
    std::string embedder_url;
    std::vector<std::string> disable;
    bool lax = false;
    RunConfig cfg;

    // materialized state; the host holds pointers into these members, so the
    // wiring must outlive every engine built from it
    Json tools_config;
    Registry registry;
    MockFixtures fixtures;
    std::optional<KnowledgeStore> store;
    std::unique_ptr<Embedder> embedder;
    ToolHost host;

    void register_options(CLI::App* cmd) {
        cmd->add_option("--config", config_path, "tool registry config (JSON)")->required();
        cmd->add_option("--fixtures", fixtures_path, "canned expert outputs (JSON)")->required();
        cmd->add_option("--kb", kb_path, "knowledge store file for the retrieval tool");
        cmd->add_option("--embedder-url", embedder_url,
                        "embedding service URL (only needed when the store was not built "
                        "with the deterministic test embedder)");
        cmd->add_option("--disable", disable, "tool kinds to disable (comma separated)")
            ->delimiter(',');
        cmd->add_option("--t-max", cfg.t_max, "max acting rounds");
        cmd->add_option("--top-k", cfg.top_k, "retrieval depth per pathology");
        cmd->add_option("--retries", cfg.max_parse_retries_per_round,
                        "corrective re-asks per round on malformed emissions");
        cmd->add_flag("--lax", lax, "accept findings without evidence citations");
        cmd->add_flag("--skip-planning", cfg.skip_planning, "skip the planning stage");
        cmd->add_flag("--skip-extraction", cfg.skip_extraction,
                      "pass raw memory through instead of the extracted chain");
    }

    void materialize() {
        cfg.strict_evidence = !lax;
        for (const auto& name : disable) {
            auto kind = evidence_kind_from_string(name);
            if (!kind) throw ConfigError("unknown_kind", "unknown tool kind: " + name);
            cfg.disabled_tool_kinds.insert(*kind);
        }

        require_file(config_path);
        tools_config = parse_lenient(read_file(config_path));
        if (tools_config.is_discarded())
            throw ConfigError("parse", "tool config is not valid JSON: " + config_path);
        registry = load_config_json(tools_config, cfg.disabled_tool_kinds);

        require_file(fixtures_path);
        fixtures = MockFixtures::from_file(fixtures_path);

        if (!kb_path.empty()) {
            require_file(kb_path);
            store = load_store(kb_path);
            embedder = TestEmbedder::from_fingerprint(store->fingerprint());
            if (!embedder && !embedder_url.empty())
                embedder = std::make_unique<RemoteEmbedder>(embedder_url);
            if (!embedder)
                throw ConfigError("embedder",
                                  "store '" + kb_path + "' was built with embedder '" +
                                      store->fingerprint() +
                                      "'; pass --embedder-url to supply a matching one");
        }
        host = make_default_host(&fixtures, store ? &*store : nullptr, embedder.get(),
                                 cfg.top_k);
    }
};

// ---------------------------------------------------------------------------
// case files (batch / ablate)
// ---------------------------------------------------------------------------

BatchCase parse_case(const Json& c, const fs::path& base_dir) {
    if (!c.is_object()) throw ConfigError("parse", "each case must be a JSON object");
    BatchCase out;
    out.study.study_id = c.value("study_id", "");
    for (const auto& image : c.value("images", Json::array()))
        out.study.images.push_back(image.get<std::string>());
    out.study.instruction = c.value("instruction", "");
    if (c.contains("ground_truth"))
        out.study.ground_truth_report = c["ground_truth"].get<std::string>();

    if (c.contains("script") && c.contains("script_file"))
        throw ConfigError("parse", "case '" + out.study.study_id +
                                       "': script and script_file are mutually exclusive");
    for (const auto& line : c.value("script", Json::array()))
        out.script.push_back(line.get<std::string>());
    if (c.contains("script_file")) {
        fs::path p = c["script_file"].get<std::string>();
        if (p.is_relative()) p = base_dir / p;
        require_file(p.string());
        out.script = read_script_lines(p.string());
    }
    return out;
}

std::vector<BatchCase> load_cases(const std::string& path) {
    require_file(path);
    Json doc = parse_lenient(read_file(path));
    if (doc.is_discarded() || !doc.is_object() || !doc.contains("cases") ||
        !doc["cases"].is_array())
        throw ConfigError("parse",
                          "cases file must be a JSON object with a \"cases\" array: " + path);
    std::vector<BatchCase> cases;
    fs::path base_dir = fs::path(path).parent_path();
    for (const auto& c : doc["cases"]) cases.push_back(parse_case(c, base_dir));
    return cases;
}

// ---------------------------------------------------------------------------
// subcommand bodies
// ---------------------------------------------------------------------------

struct RunOpts {
    EpisodeWiring wiring;
    std::string study_id;
    std::vector<std::string> images;
    std::string instruction;
    std::string script_path;
    std::string backend_url;
    std::string model;
    int timeout_ms = 30000;
    std::string out_dir;
    std::string prompts_dir;
    bool wall_clock = false;
    bool summarize = false;
};

int do_run(RunOpts& o) {
    o.wiring.materialize();

    BackendConfig bc;
    if (!o.script_path.empty()) bc.script_path = require_file(o.script_path);
    bc.endpoint = o.backend_url;
    bc.model = o.model;
    bc.timeout_ms = o.timeout_ms;
    if (bc.script_path.empty() && bc.endpoint.empty())
        throw ConfigError("backend",
                          "no emission source: pass --script or --backend-url "
                          "(or set EVI_BACKEND_URL)");
    Gateway gateway(make_backend(bc));

    EngineOptions opts;
    if (o.wall_clock) opts.clock = wall_clock_ms;
    opts.summarize_extraction = o.summarize;
    if (!o.prompts_dir.empty()) {
        require_file(o.prompts_dir);
        opts.prompts = PromptSet::load(o.prompts_dir);
    }

    StudyInput study;
    study.study_id = o.study_id;
    study.images = o.images;
    study.instruction = o.instruction;

    Engine engine(o.wiring.registry, gateway, o.wiring.host, o.wiring.cfg, opts);
    RunOutcome out = engine.run(study);

    std::cout << render_report_view(out.log);
    if (!o.out_dir.empty()) {
        write_outcome(out, o.out_dir);
        // keep the observed timestamps on disk instead of the canonical 0s
        if (o.wall_clock)
            write_file(o.out_dir + "/trajectory.traj.jsonl", serialize_trajectory(out.log));
    }
    return exit_code(out.status);
}

struct BatchOpts {
    EpisodeWiring wiring;
    std::string cases_path;
    std::string backend_url;
    std::string model;
    int timeout_ms = 30000;
    std::string out_dir;
    int parallel = 1;
};

int do_batch(BatchOpts& o) {
    o.wiring.materialize();

    BatchSpec spec;
    spec.cases = load_cases(o.cases_path);
    spec.cfg = o.wiring.cfg;
    spec.parallelism = o.parallel;
    spec.output_dir = o.out_dir;
    if (!o.backend_url.empty()) {
        BackendConfig bc;
        bc.endpoint = o.backend_url;
        bc.model = o.model;
        bc.timeout_ms = o.timeout_ms;
        spec.backend = bc;
    }

    BatchResult result = run_batch(spec, o.wiring.registry, o.wiring.host);
    for (const auto& outcome : result.outcomes)
        std::cout << outcome.log.study_id() << ": " << to_string(outcome.status) << "\n";
    std::string metrics = metrics_to_json(result.metrics).dump(2) + "\n";
    std::cout << metrics;
    if (!o.out_dir.empty()) write_file(o.out_dir + "/metrics.json", metrics);
    return 0;
}

struct AblateOpts {
    EpisodeWiring wiring;
    std::string cases_path;
    std::vector<std::string> variants = {"full",   "no_cls",      "no_loc",
                                         "no_ret", "no_planning", "no_extraction"};
    std::string out_root;
    int parallel = 1;
};

int do_ablate(AblateOpts& o) {
    o.wiring.materialize();

    std::vector<AblationVariant> variants;
    for (const auto& name : o.variants) {
        auto v = ablation_from_string(name);
        if (!v) throw ConfigError("unknown_variant", "unknown ablation variant: " + name);
        variants.push_back(*v);
    }

    std::vector<BatchCase> cases = load_cases(o.cases_path);
    AblationReport report = run_ablation(o.wiring.tools_config, o.wiring.cfg, variants, cases,
                                         o.wiring.host, o.parallel, o.out_root);
    std::cout << report.table();
    if (!o.out_root.empty())
        write_file(o.out_root + "/ablation.json", report.to_json().dump(2) + "\n");
    return 0;
}

struct BuildKbOpts {
    std::string manifest;
    std::string out_path;
    std::string labels_path;
    std::uint64_t seed = 42;
    std::size_t dim = 16;
    std::size_t cap = 50;
};

std::vector<Triplet> load_manifest(const std::string& path) {
    fs::path base_dir = fs::path(path).parent_path();
    std::istringstream in(read_file(path));
    std::vector<Triplet> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto t1 = line.find('\t');
        auto t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
        if (t1 == std::string::npos || t2 == std::string::npos)
            throw ConfigError("parse", "manifest line " + std::to_string(lineno) +
                                           ": expected <image>\\t<label>\\t<report-file>");
        Triplet t;
        t.image_ref = line.substr(0, t1);
        t.label = line.substr(t1 + 1, t2 - t1 - 1);
        fs::path report = line.substr(t2 + 1);
        if (report.is_relative()) report = base_dir / report;
        t.report_text = read_file(report.string());
        out.push_back(std::move(t));
    }
    return out;
}

int do_build_kb(BuildKbOpts& o) {
    require_file(o.manifest);
    LabelSet labels = LabelSet::default14();
    if (!o.labels_path.empty()) {
        require_file(o.labels_path);
        labels = LabelSet::from_file(o.labels_path);
    }
    std::vector<Triplet> triplets = load_manifest(o.manifest);
    TestEmbedder embedder(o.seed, o.dim);
    KnowledgeStore store = build_store(triplets, embedder, o.cap, labels);

    fs::path parent = fs::path(o.out_path).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
    persist_store(store, o.out_path);
    std::cout << "built store: " << o.out_path << " (" << store.bases().size() << " bases, "
              << store.total_entries() << " entries, dim " << store.dim() << ")\n"
              << "fingerprint: " << store.fingerprint() << "\n";
    return 0;
}

struct ToolsValidateOpts {
    std::string config_path;
};

int do_tools_validate(ToolsValidateOpts& o) {
    require_file(o.config_path);
    Registry registry = load_config(o.config_path);
    std::cout << "ok: " << registry.size() << " tools\n\n" << tools_prompt(registry);
    return 0;
}

struct MetricsOpts {
    std::vector<std::string> files;
};

int do_metrics(MetricsOpts& o) {
    std::vector<TrajectoryLog> logs;
    for (const auto& f : o.files) logs.push_back(load_trajectory(f));
    std::cout << metrics_to_json(compute_metrics(logs)).dump(2) << "\n";
    return 0;
}

struct InspectOpts {
    std::string file;
    std::string view = "full";
    std::string ground_truth_path;
};

int do_inspect(InspectOpts& o) {
    TrajectoryLog log = load_trajectory(o.file);
    if (o.view == "report") {
        std::cout << render_report_view(log);
    } else if (o.view == "evidence") {
        std::optional<std::string> truth;
        if (!o.ground_truth_path.empty()) {
            require_file(o.ground_truth_path);
            truth = read_file(o.ground_truth_path);
        }
        std::cout << render_evidence_view(log, truth);
    } else {
        std::cout << render_trajectory_full(log);
    }
    return 0;
}

struct DiffOpts {
    std::string left;
    std::string right;
};

int do_diff(DiffOpts& o) {
    require_file(o.left);
    require_file(o.right);
    DiffResult divergence = diff_trajectory(o.left, o.right);
    if (!divergence) {
        std::cout << "identical\n";
        return 0;
    }
    std::cout << "divergence at seq " << divergence->seq << " (" << divergence->reason << ")\n"
              << "left:  " << divergence->left << "\n"
              << "right: " << divergence->right << "\n";
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"evidence-first report agent: run episodes, build knowledge bases, "
                 "and analyze trajectories"};
    app.require_subcommand(1);
    std::function<int()> action;

    auto run_opts = std::make_shared<RunOpts>();
    CLI::App* run_cmd = app.add_subcommand("run", "execute one study episode");
    run_opts->wiring.register_options(run_cmd);
    run_cmd->add_option("--study", run_opts->study_id, "study identifier")->required();
    run_cmd->add_option("--image", run_opts->images, "image reference (repeatable)")
        ->required();
    run_cmd->add_option("--instruction", run_opts->instruction, "task instruction")
        ->required();
    run_cmd->add_option("--script", run_opts->script_path,
                        "scripted emissions file (one per line, \\n escaped)");
    run_cmd->add_option("--backend-url", run_opts->backend_url, "chat-completion endpoint")
        ->envname("EVI_BACKEND_URL");
    run_cmd->add_option("--model", run_opts->model, "model name for the backend")
        ->envname("EVI_MODEL");
    run_cmd->add_option("--timeout-ms", run_opts->timeout_ms, "backend request timeout");
    run_cmd->add_option("--out", run_opts->out_dir, "directory for run artifacts");
    run_cmd->add_option("--prompts", run_opts->prompts_dir,
                        "directory overriding the builtin stage prompts");
    run_cmd->add_flag("--wall-clock", run_opts->wall_clock,
                      "record real timestamps instead of the canonical 0s");
    run_cmd->add_flag("--summarize", run_opts->summarize,
                      "ask the backend to summarize the evidence chain");
    run_cmd->callback([&action, run_opts] { action = [run_opts] { return do_run(*run_opts); }; });

    auto batch_opts = std::make_shared<BatchOpts>();
    CLI::App* batch_cmd = app.add_subcommand("batch", "execute a case file");
    batch_opts->wiring.register_options(batch_cmd);
    batch_cmd->add_option("--cases", batch_opts->cases_path, "cases file (JSON)")->required();
    batch_cmd->add_option("--backend-url", batch_opts->backend_url,
                          "chat-completion endpoint for cases without scripts")
        ->envname("EVI_BACKEND_URL");
    batch_cmd->add_option("--model", batch_opts->model, "model name for the backend")
        ->envname("EVI_MODEL");
    batch_cmd->add_option("--timeout-ms", batch_opts->timeout_ms, "backend request timeout");
    batch_cmd->add_option("--out", batch_opts->out_dir, "directory for per-case artifacts");
    batch_cmd->add_option("--parallel", batch_opts->parallel, "worker threads");
    batch_cmd->callback(
        [&action, batch_opts] { action = [batch_opts] { return do_batch(*batch_opts); }; });

    auto ablate_opts = std::make_shared<AblateOpts>();
    CLI::App* ablate_cmd = app.add_subcommand("ablate", "run cases under component knock-outs");
    ablate_opts->wiring.register_options(ablate_cmd);
    ablate_cmd->add_option("--cases", ablate_opts->cases_path, "cases file (JSON)")->required();
    ablate_cmd->add_option("--variants", ablate_opts->variants,
                           "comma-separated variants (default: all)")
        ->delimiter(',');
    ablate_cmd->add_option("--out", ablate_opts->out_root, "root directory for artifacts");
    ablate_cmd->add_option("--parallel", ablate_opts->parallel, "worker threads per variant");
    ablate_cmd->callback(
        [&action, ablate_opts] { action = [ablate_opts] { return do_ablate(*ablate_opts); }; });

    auto kb_opts = std::make_shared<BuildKbOpts>();
    CLI::App* kb_cmd = app.add_subcommand("build-kb", "build a knowledge store from a manifest");
    kb_cmd->add_option("--manifest", kb_opts->manifest,
                       "TSV manifest: <image>\\t<label>\\t<report-file>")
        ->required();
    kb_cmd->add_option("--out", kb_opts->out_path, "store file to write")->required();
    kb_cmd->add_option("--labels", kb_opts->labels_path,
                       "label vocabulary file (default: builtin 14)");
    kb_cmd->add_option("--seed", kb_opts->seed, "deterministic embedder seed");
    kb_cmd->add_option("--dim", kb_opts->dim, "embedding dimension");
    kb_cmd->add_option("--cap", kb_opts->cap, "max entries per pathology base");
    kb_cmd->callback([&action, kb_opts] { action = [kb_opts] { return do_build_kb(*kb_opts); }; });

    auto tv_opts = std::make_shared<ToolsValidateOpts>();
    CLI::App* tv_cmd = app.add_subcommand("tools-validate",
                                          "validate a tool config and print its menu");
    tv_cmd->add_option("--config", tv_opts->config_path, "tool registry config (JSON)")
        ->required();
    tv_cmd->callback(
        [&action, tv_opts] { action = [tv_opts] { return do_tools_validate(*tv_opts); }; });

    auto metrics_opts = std::make_shared<MetricsOpts>();
    CLI::App* metrics_cmd = app.add_subcommand("metrics", "recompute metrics from trajectories");
    metrics_cmd->add_option("files", metrics_opts->files, "trajectory files")->required();
    metrics_cmd->callback([&action, metrics_opts] {
        action = [metrics_opts] { return do_metrics(*metrics_opts); };
    });

    auto inspect_opts = std::make_shared<InspectOpts>();
    CLI::App* inspect_cmd = app.add_subcommand("inspect", "render a trajectory for humans");
    inspect_cmd->add_option("file", inspect_opts->file, "trajectory file")->required();
    inspect_cmd->add_option("--view", inspect_opts->view, "full | report | evidence")
        ->check(CLI::IsMember({"full", "report", "evidence"}));
    inspect_cmd->add_option("--ground-truth", inspect_opts->ground_truth_path,
                            "reference report to mark findings against (evidence view)");
    inspect_cmd->callback([&action, inspect_opts] {
        action = [inspect_opts] { return do_inspect(*inspect_opts); };
    });

    auto diff_opts = std::make_shared<DiffOpts>();
    CLI::App* diff_cmd = app.add_subcommand("diff", "compare two trajectories (timestamps ignored)");
    diff_cmd->add_option("left", diff_opts->left, "trajectory file")->required();
    diff_cmd->add_option("right", diff_opts->right, "trajectory file")->required();
    diff_cmd->callback(
        [&action, diff_opts] { action = [diff_opts] { return do_diff(*diff_opts); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return kUsageExit;
    }

    try {
        return action();
    } catch (const MissingInput& missing) {
        std::cerr << "error: no such file: " << missing.path << "\n";
        return kMissingFileExit;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kDataExit;
    } catch (const Json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kDataExit;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kInternalExit;
    }
}
