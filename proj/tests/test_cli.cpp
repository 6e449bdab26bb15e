#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "evi/gateway/backend.hpp"
#include "evi/jsonutil.hpp"

#include "helpers.hpp"

using evi::Json;
namespace fs = std::filesystem;

namespace {

struct CliResult {
    int code = -1;
    std::string out;  // stdout + stderr interleaved
};

std::string shell_quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'')
            out += "'\\''";
        else
            out += c;
    }
    out += "'";
    return out;
}

// Runs the built binary with a scrubbed environment so host settings can
// never feed a default backend into the tests.
CliResult run_cli(const std::vector<std::string>& args) {
    std::string cmd = "env -u EVI_BACKEND_URL -u EVI_MODEL " + shell_quote(EVI_CLI_BIN);
    for (const auto& a : args) cmd += " " + shell_quote(a);
    cmd += " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    CliResult result;
    char buf[4096];
    std::size_t n = 0;
    while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) result.out.append(buf, n);
    int status = pclose(pipe);
    REQUIRE(status != -1);
    result.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

void write_script(const std::string& path, const std::vector<std::string>& emissions) {
    std::string bytes;
    for (const auto& e : emissions) bytes += evi::escape_script_line(e) + "\n";
    evitest::write_file(path, bytes);
}

std::vector<std::string> wiring_args() {
    return {"--config", evitest::source_root() + "/assets/tools.json",
            "--fixtures", evitest::source_root() + "/assets/fixtures/experts.json"};
}

std::vector<std::string> run_args(const std::string& script_path,
                                  const std::string& study = "cli-1") {
    std::vector<std::string> args = {"run"};
    for (const auto& a : wiring_args()) args.push_back(a);
    for (const auto& a : {std::string("--study"), study, std::string("--image"),
                          std::string("img_f1"), std::string("--instruction"),
                          std::string("Describe the image."), std::string("--script"),
                          script_path})
        args.push_back(a);
    return args;
}

std::vector<std::string> happy_script() {
    return {
        evitest::plan_emission({"inspect the view", "classify the findings"}),
        evitest::action_emission("posture", Json{{"image", "img_f1"}}),
        evitest::action_emission("classifier", Json{{"image", "img_f1"}}),
        evitest::final_emission(),
        evitest::report_emission({{"Enlarged cardiac silhouette", {2}}, {"PA projection", {1}}},
                                 "Findings consistent with cardiomegaly."),
    };
}

const std::string kHappyReport =
    "FINDINGS:\n"
    "- Enlarged cardiac silhouette [E2]\n"
    "- PA projection [E1]\n"
    "IMPRESSION:\n"
    "Findings consistent with cardiomegaly.\n";

}  // namespace

// ---------------------------------------------------------------------------
// run
// ---------------------------------------------------------------------------

TEST_CASE("run executes a scripted episode and writes its artifacts") {
    evitest::TempDir tmp;
    write_script(tmp.file("script.txt"), happy_script());

    auto args = run_args(tmp.file("script.txt"));
    args.push_back("--out");
    args.push_back(tmp.file("out"));
    CliResult r = run_cli(args);

    CHECK(r.code == 0);
    CHECK(r.out == kHappyReport);
    REQUIRE(fs::exists(tmp.file("out") + "/trajectory.traj.jsonl"));
    CHECK(fs::exists(tmp.file("out") + "/chain.json"));
    CHECK(fs::exists(tmp.file("out") + "/report.json"));

    // default artifacts are canonical: every timestamp is the 0 sentinel
    std::string first_line = evitest::read_file(tmp.file("out") + "/trajectory.traj.jsonl");
    first_line = first_line.substr(0, first_line.find('\n'));
    Json ev = evi::parse_lenient(first_line);
    REQUIRE_FALSE(ev.is_discarded());
    CHECK(ev["ts"] == 0);

    Json report = evi::parse_lenient(evitest::read_file(tmp.file("out") + "/report.json"));
    REQUIRE_FALSE(report.is_discarded());
    CHECK(report["raw_text"] == kHappyReport);
}

TEST_CASE("identical runs produce identical artifacts") {
    evitest::TempDir tmp;
    write_script(tmp.file("script.txt"), happy_script());

    for (const char* dir : {"a", "b"}) {
        auto args = run_args(tmp.file("script.txt"));
        args.push_back("--out");
        args.push_back(tmp.file(dir));
        CHECK(run_cli(args).code == 0);
    }
    CHECK(evitest::read_file(tmp.file("a") + "/trajectory.traj.jsonl") ==
          evitest::read_file(tmp.file("b") + "/trajectory.traj.jsonl"));
    CHECK(evitest::read_file(tmp.file("a") + "/report.json") ==
          evitest::read_file(tmp.file("b") + "/report.json"));

    CliResult d = run_cli({"diff", tmp.file("a") + "/trajectory.traj.jsonl",
                           tmp.file("b") + "/trajectory.traj.jsonl"});
    CHECK(d.code == 0);
    CHECK(d.out == "identical\n");
}

TEST_CASE("wall-clock runs keep real timestamps but still diff as identical") {
    evitest::TempDir tmp;
    write_script(tmp.file("script.txt"), happy_script());

    auto canonical = run_args(tmp.file("script.txt"));
    canonical.push_back("--out");
    canonical.push_back(tmp.file("c"));
    REQUIRE(run_cli(canonical).code == 0);

    auto timed = run_args(tmp.file("script.txt"));
    for (const auto& a : {std::string("--out"), tmp.file("w"), std::string("--wall-clock")})
        timed.push_back(a);
    REQUIRE(run_cli(timed).code == 0);

    std::string first_line = evitest::read_file(tmp.file("w") + "/trajectory.traj.jsonl");
    first_line = first_line.substr(0, first_line.find('\n'));
    Json ev = evi::parse_lenient(first_line);
    REQUIRE_FALSE(ev.is_discarded());
    CHECK(ev["ts"].get<std::int64_t>() > 0);

    // bytes differ, canonical content does not
    CliResult d = run_cli({"diff", tmp.file("c") + "/trajectory.traj.jsonl",
                           tmp.file("w") + "/trajectory.traj.jsonl"});
    CHECK(d.code == 0);
    CHECK(d.out == "identical\n");
}

TEST_CASE("run exit codes distinguish exhaustion from failure") {
    evitest::TempDir tmp;

    write_script(tmp.file("loop.txt"),
                 {evitest::plan_emission({"look"}),
                  evitest::action_emission("posture", Json{{"image", "img_f1"}})});
    auto loop_args = run_args(tmp.file("loop.txt"), "cli-loop");
    loop_args.push_back("--t-max");
    loop_args.push_back("1");
    CliResult loop = run_cli(loop_args);
    CHECK(loop.code == 2);
    CHECK(loop.out.find("(no report) run aborted: round_limit_reached") == 0);

    write_script(tmp.file("noise.txt"), {"x", "y", "z"});
    CliResult noise = run_cli(run_args(tmp.file("noise.txt"), "cli-noise"));
    CHECK(noise.code == 3);
    CHECK(noise.out.find("(no report) run aborted: parse_retries_exhausted") == 0);
}

// ---------------------------------------------------------------------------
// exit-code contract for bad invocations
// ---------------------------------------------------------------------------

TEST_CASE("usage errors exit 64") {
    CHECK(run_cli({}).code == 64);
    CHECK(run_cli({"run"}).code == 64);                       // missing required options
    CHECK(run_cli({"frobnicate"}).code == 64);                // unknown subcommand
    CHECK(run_cli({"diff", "only-one-file"}).code == 64);     // missing positional
    evitest::TempDir tmp;
    evitest::write_file(tmp.file("t.jsonl"), "x\n");
    CHECK(run_cli({"inspect", tmp.file("t.jsonl"), "--view", "bogus"}).code == 64);
}

TEST_CASE("missing input files exit 66") {
    evitest::TempDir tmp;
    CliResult r = run_cli(run_args(tmp.file("nope.txt")));
    CHECK(r.code == 66);
    CHECK(r.out.find("no such file") != std::string::npos);

    std::vector<std::string> bad_config = {
        "run", "--config", tmp.file("missing.json"), "--fixtures",
        evitest::source_root() + "/assets/fixtures/experts.json", "--study", "x",
        "--image", "i", "--instruction", "t", "--script", "s"};
    CHECK(run_cli(bad_config).code == 66);

    CHECK(run_cli({"metrics", tmp.file("missing.jsonl")}).code == 66);
    CHECK(run_cli({"inspect", tmp.file("missing.jsonl")}).code == 66);
    CHECK(run_cli({"diff", tmp.file("a.jsonl"), tmp.file("b.jsonl")}).code == 66);
    CHECK(run_cli({"build-kb", "--manifest", tmp.file("missing.tsv"), "--out",
                   tmp.file("kb.bin")})
              .code == 66);
}

TEST_CASE("broken data exits 65") {
    evitest::TempDir tmp;

    evitest::write_file(tmp.file("bad.json"), "not json");
    std::vector<std::string> bad_config = {
        "run", "--config", tmp.file("bad.json"), "--fixtures",
        evitest::source_root() + "/assets/fixtures/experts.json", "--study", "x",
        "--image", "i", "--instruction", "t", "--script", tmp.file("s.txt")};
    evitest::write_file(tmp.file("s.txt"), "x\n");
    CliResult r = run_cli(bad_config);
    CHECK(r.code == 65);
    CHECK(r.out.find("not valid JSON") != std::string::npos);

    // unknown --disable kind
    write_script(tmp.file("script.txt"), happy_script());
    auto args = run_args(tmp.file("script.txt"));
    args.push_back("--disable");
    args.push_back("telepathy");
    CliResult disabled = run_cli(args);
    CHECK(disabled.code == 65);
    CHECK(disabled.out.find("unknown tool kind") != std::string::npos);

    // no emission source at all
    std::vector<std::string> sourceless = {"run"};
    for (const auto& a : wiring_args()) sourceless.push_back(a);
    for (const auto& a : {"--study", "x", "--image", "i", "--instruction", "t"})
        sourceless.push_back(a);
    CliResult dry = run_cli(sourceless);
    CHECK(dry.code == 65);
    CHECK(dry.out.find("no emission source") != std::string::npos);

    // malformed trajectory file
    evitest::write_file(tmp.file("garbage.jsonl"), "definitely not a trajectory\n");
    CHECK(run_cli({"inspect", tmp.file("garbage.jsonl")}).code == 65);
    CHECK(run_cli({"metrics", tmp.file("garbage.jsonl")}).code == 65);
}

// ---------------------------------------------------------------------------
// tools-validate
// ---------------------------------------------------------------------------

TEST_CASE("tools-validate prints the tool menu for a good config") {
    CliResult r = run_cli({"tools-validate", "--config",
                           evitest::source_root() + "/assets/tools.json"});
    CHECK(r.code == 0);
    CHECK(r.out.find("ok: 6 tools\n") == 0);
    CHECK(r.out.find("- classifier (kind: classification)") != std::string::npos);
    CHECK(r.out.find("- retrieve_reports (kind: retrieval)") != std::string::npos);
}

TEST_CASE("tools-validate rejects a bad config with details") {
    evitest::TempDir tmp;
    Json doc = {{"tools", Json::array({Json{{"name", "Bad Name"},
                                            {"kind", "web"},
                                            {"description", "x"},
                                            {"transport", Json{{"type", "builtin"}, {"mock", "w"}}},
                                            {"schema", Json{{"properties", Json::object()}}}}})}};
    evitest::write_file(tmp.file("tools.json"), doc.dump());
    CliResult r = run_cli({"tools-validate", "--config", tmp.file("tools.json")});
    CHECK(r.code == 65);
    CHECK(r.out.find("tools[0].name") != std::string::npos);
}

// ---------------------------------------------------------------------------
// build-kb + retrieval through the run command
// ---------------------------------------------------------------------------

TEST_CASE("build-kb builds a deterministic store the retrieval tool can serve") {
    evitest::TempDir tmp;
    std::string manifest = evitest::source_root() + "/assets/fixtures/kb/manifest.tsv";

    CliResult built = run_cli({"build-kb", "--manifest", manifest, "--out", tmp.file("kb.bin")});
    CHECK(built.code == 0);
    CHECK(built.out.find("15 entries") != std::string::npos);
    CHECK(built.out.find("fingerprint: test-embedder/v1/seed=42/dim=16") != std::string::npos);

    CliResult again =
        run_cli({"build-kb", "--manifest", manifest, "--out", tmp.file("kb2.bin")});
    REQUIRE(again.code == 0);
    CHECK(evitest::read_file(tmp.file("kb.bin")) == evitest::read_file(tmp.file("kb2.bin")));

    write_script(tmp.file("retrieve.txt"),
                 {evitest::plan_emission({"find similar cases"}),
                  evitest::action_emission(
                      "retrieve_reports",
                      Json{{"image", "img_f1"}, {"pathologies", Json::array({"Cardiomegaly"})},
                           {"k", 2}}),
                  evitest::final_emission(),
                  evitest::report_emission({{"Similar prior cardiomegaly reports found", {1}}},
                                           "Consistent with prior cases.")});
    auto args = run_args(tmp.file("retrieve.txt"), "cli-ret");
    args.push_back("--kb");
    args.push_back(tmp.file("kb.bin"));
    args.push_back("--out");
    args.push_back(tmp.file("out"));
    CliResult r = run_cli(args);
    CHECK(r.code == 0);
    CHECK(r.out.find("Similar prior cardiomegaly reports found [E1]") != std::string::npos);

    Json chain = evi::parse_lenient(evitest::read_file(tmp.file("out") + "/chain.json"));
    REQUIRE_FALSE(chain.is_discarded());
    REQUIRE(chain["entries"].size() == 1);
    CHECK(chain["entries"][0]["kind"] == "retrieval");
    CHECK(chain["entries"][0]["payload"]["reports"].size() == 2);
}

TEST_CASE("build-kb surfaces vocabulary violations") {
    evitest::TempDir tmp;
    evitest::write_file(tmp.file("labels.txt"), "Edema\n");
    CliResult r = run_cli({"build-kb", "--manifest",
                           evitest::source_root() + "/assets/fixtures/kb/manifest.tsv", "--out",
                           tmp.file("kb.bin"), "--labels", tmp.file("labels.txt")});
    CHECK(r.code == 65);
    CHECK(r.out.find("Cardiomegaly") != std::string::npos);
}

// ---------------------------------------------------------------------------
// metrics + inspect over written artifacts
// ---------------------------------------------------------------------------

TEST_CASE("metrics recomputes counts from trajectory files") {
    evitest::TempDir tmp;
    write_script(tmp.file("script.txt"), happy_script());
    auto ok_args = run_args(tmp.file("script.txt"), "m-ok");
    ok_args.push_back("--out");
    ok_args.push_back(tmp.file("ok"));
    REQUIRE(run_cli(ok_args).code == 0);

    CliResult single = run_cli({"metrics", tmp.file("ok") + "/trajectory.traj.jsonl"});
    CHECK(single.code == 0);
    Json m = evi::parse_lenient(single.out);
    REQUIRE_FALSE(m.is_discarded());
    CHECK(m["episodes"] == 1);
    CHECK(m["valid_rate"] == 1.0);
    CHECK(m["avg_tool_calls"] == 2.0);
    CHECK(m["format_error_rate"] == 0.0);

    write_script(tmp.file("noise.txt"), {"x", "y", "z"});
    auto bad_args = run_args(tmp.file("noise.txt"), "m-bad");
    bad_args.push_back("--out");
    bad_args.push_back(tmp.file("bad"));
    REQUIRE(run_cli(bad_args).code == 3);

    CliResult both = run_cli({"metrics", tmp.file("ok") + "/trajectory.traj.jsonl",
                              tmp.file("bad") + "/trajectory.traj.jsonl"});
    CHECK(both.code == 0);
    Json m2 = evi::parse_lenient(both.out);
    REQUIRE_FALSE(m2.is_discarded());
    CHECK(m2["episodes"] == 2);
    CHECK(m2["valid_rate"] == 0.5);
}

TEST_CASE("inspect renders all three views") {
    evitest::TempDir tmp;
    write_script(tmp.file("script.txt"), happy_script());
    auto args = run_args(tmp.file("script.txt"), "cli-view");
    args.push_back("--out");
    args.push_back(tmp.file("out"));
    REQUIRE(run_cli(args).code == 0);
    std::string traj = tmp.file("out") + "/trajectory.traj.jsonl";

    CliResult full = run_cli({"inspect", traj});
    CHECK(full.code == 0);
    CHECK(full.out.find("study: cli-view\n") == 0);
    CHECK(full.out.find("#1 PlannerRawEmission") != std::string::npos);

    CliResult report = run_cli({"inspect", traj, "--view", "report"});
    CHECK(report.code == 0);
    CHECK(report.out == kHappyReport);

    evitest::write_file(tmp.file("truth.txt"), "The cardiac silhouette is enlarged.\n");
    CliResult evidence = run_cli(
        {"inspect", traj, "--view", "evidence", "--ground-truth", tmp.file("truth.txt")});
    CHECK(evidence.code == 0);
    CHECK(evidence.out.find("[=] finding 1: Enlarged cardiac silhouette") != std::string::npos);
    CHECK(evidence.out.find("[!] finding 2: PA projection") != std::string::npos);
    CHECK(evidence.out.find("E2 [classification]") != std::string::npos);
    CHECK(evidence.out.find("from call 2: classifier") != std::string::npos);
}

TEST_CASE("diff pinpoints where two runs part ways") {
    evitest::TempDir tmp;
    write_script(tmp.file("a.txt"), happy_script());
    auto variant = happy_script();
    variant[1] = evitest::action_emission("classifier", Json{{"image", "img_f1"}});
    variant[2] = evitest::action_emission("posture", Json{{"image", "img_f1"}});
    variant[4] = evitest::report_emission(
        {{"Enlarged cardiac silhouette", {1}}, {"PA projection", {2}}},
        "Findings consistent with cardiomegaly.");
    write_script(tmp.file("b.txt"), variant);

    for (const char* name : {"a", "b"}) {
        auto args = run_args(tmp.file(std::string(name) + ".txt"), "cli-diff");
        args.push_back("--out");
        args.push_back(tmp.file(name));
        REQUIRE(run_cli(args).code == 0);
    }
    CliResult d = run_cli({"diff", tmp.file("a") + "/trajectory.traj.jsonl",
                           tmp.file("b") + "/trajectory.traj.jsonl"});
    CHECK(d.code == 1);
    CHECK(d.out.find("divergence at seq") == 0);
    CHECK(d.out.find("event mismatch") != std::string::npos);
    CHECK(d.out.find("left:  ") != std::string::npos);
    CHECK(d.out.find("right: ") != std::string::npos);
}

// ---------------------------------------------------------------------------
// batch + ablate
// ---------------------------------------------------------------------------

TEST_CASE("batch executes a case file with inline and referenced scripts") {
    evitest::TempDir tmp;
    fs::create_directories(tmp.file("scripts"));
    write_script(tmp.file("scripts/b.txt"), happy_script());

    Json cases = {
        {"cases",
         Json::array(
             {Json{{"study_id", "case-a"},
                   {"images", Json::array({"img_f1"})},
                   {"instruction", "Describe the image."},
                   {"script", [] {
                        Json lines = Json::array();
                        for (const auto& l : happy_script()) lines.push_back(l);
                        return lines;
                    }()}},
              Json{{"study_id", "case-b"},
                   {"images", Json::array({"img_f1"})},
                   {"instruction", "Describe the image."},
                   {"script_file", "scripts/b.txt"}},  // relative to the cases file
              Json{{"study_id", "case-c"},
                   {"images", Json::array({"img_f1"})},
                   {"instruction", "Describe the image."}}})}};
    evitest::write_file(tmp.file("cases.json"), cases.dump(2));

    std::vector<std::string> args = {"batch"};
    for (const auto& a : wiring_args()) args.push_back(a);
    for (const auto& a : {std::string("--cases"), tmp.file("cases.json"), std::string("--out"),
                          tmp.file("out"), std::string("--parallel"), std::string("2")})
        args.push_back(a);

    CliResult r = run_cli(args);
    CHECK(r.code == 0);
    CHECK(r.out.find("case-a: valid\n") != std::string::npos);
    CHECK(r.out.find("case-b: valid\n") != std::string::npos);
    CHECK(r.out.find("case-c: failed\n") != std::string::npos);
    CHECK(r.out.find("\"episodes\": 3") != std::string::npos);

    CHECK(fs::exists(tmp.file("out") + "/case-a/report.json"));
    CHECK(fs::exists(tmp.file("out") + "/case-b/trajectory.traj.jsonl"));
    CHECK(fs::exists(tmp.file("out") + "/case-c/trajectory.traj.jsonl"));
    REQUIRE(fs::exists(tmp.file("out") + "/metrics.json"));
    Json m = evi::parse_lenient(evitest::read_file(tmp.file("out") + "/metrics.json"));
    REQUIRE_FALSE(m.is_discarded());
    CHECK(m["episodes"] == 3);

    // the two identical scripts must leave identical canonical trajectories
    // modulo the study id, which rides in the terminal event
    std::string ta = evitest::read_file(tmp.file("out") + "/case-a/trajectory.traj.jsonl");
    std::string tb = evitest::read_file(tmp.file("out") + "/case-b/trajectory.traj.jsonl");
    CHECK(ta.size() == tb.size());
}

TEST_CASE("ablate prints the comparison table and writes its artifacts") {
    evitest::TempDir tmp;
    Json cases = {{"cases", Json::array({Json{
                      {"study_id", "abl-cli"},
                      {"images", Json::array({"img_f1"})},
                      {"instruction", "Describe the image."},
                      {"script", Json::array({evitest::plan_emission({"classify"}),
                                              evitest::action_emission(
                                                  "classifier", Json{{"image", "img_f1"}}),
                                              evitest::final_emission(),
                                              "FINDINGS:\nIMPRESSION:\nDone.\n"})}}})}};
    evitest::write_file(tmp.file("cases.json"), cases.dump(2));

    std::vector<std::string> args = {"ablate"};
    for (const auto& a : wiring_args()) args.push_back(a);
    for (const auto& a : {std::string("--cases"), tmp.file("cases.json"),
                          std::string("--variants"), std::string("full,no_cls,no_planning"),
                          std::string("--out"), tmp.file("abl")})
        args.push_back(a);

    CliResult r = run_cli(args);
    CHECK(r.code == 0);
    CHECK(r.out.find("variant") == 0);
    CHECK(r.out.find("\nfull ") != std::string::npos);
    CHECK(r.out.find("\nno_cls ") != std::string::npos);
    CHECK(r.out.find("\nno_planning ") != std::string::npos);

    REQUIRE(fs::exists(tmp.file("abl") + "/ablation.json"));
    Json doc = evi::parse_lenient(evitest::read_file(tmp.file("abl") + "/ablation.json"));
    REQUIRE_FALSE(doc.is_discarded());
    REQUIRE(doc["variants"].size() == 3);
    CHECK(doc["variants"][2]["variant"] == "no_planning");
    CHECK(fs::exists(tmp.file("abl") + "/full/abl-cli/trajectory.traj.jsonl"));
    CHECK(fs::exists(tmp.file("abl") + "/no_planning/abl-cli/trajectory.traj.jsonl"));

    CliResult bogus = run_cli([&] {
        std::vector<std::string> v = {"ablate"};
        for (const auto& a : wiring_args()) v.push_back(a);
        for (const auto& a : {std::string("--cases"), tmp.file("cases.json"),
                              std::string("--variants"), std::string("no_everything")})
            v.push_back(a);
        return v;
    }());
    CHECK(bogus.code == 65);
    CHECK(bogus.out.find("unknown ablation variant") != std::string::npos);
}
