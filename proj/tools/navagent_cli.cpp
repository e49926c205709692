// Command-line harness: runs task suites against a backend, replays
// recorded transcripts, generates seeded worlds, and recomputes reports
// from dumps.
//
// Exit codes: 0 suite completed, 1 usage error, 2 configuration/IO error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "navagent/bench.hpp"
#include "navagent/oracle.hpp"

namespace fs = std::filesystem;
using namespace navagent;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw BenchError("cannot read " + path.string());
    return std::string(std::istreambuf_iterator<char>(in), {});
}

void write_file(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw BenchError("cannot write " + path.string());
    out << content;
}

struct RunOptions {
    std::string tasks_file;
    std::string worlds_dir;
    std::string backend = "oracle";
    std::string endpoint = "http://localhost:8000";
    std::string model = "gpt-4o";
    int budget_steps = 500;
    double budget_cost = 5.00;
    std::vector<std::string> ablations;
    int parallel = 1;
    std::uint64_t seed = 0;
    std::string out_dir = "runs";
    std::string format = "table";
    std::string transcripts_dir;
    double fov = 360.0;
    double range = 5.0;
};

EpisodeConfig make_config(const RunOptions& opt) {
    EpisodeConfig cfg;
    cfg.budgets.max_reasoning_steps = opt.budget_steps;
    cfg.budgets.max_cost = opt.budget_cost;
    cfg.sensor.fov_deg = opt.fov;
    cfg.sensor.range_m = opt.range;
    for (const std::string& a : opt.ablations) {
        if (a == "nosg") cfg.ablation.no_scene_graph = true;
        else if (a == "noogm") cfg.ablation.no_ogm = true;
        else if (a == "norp") { cfg.ablation.no_raster = true; cfg.ablation.no_ogm = true; }
        else if (a == "cot") cfg.ablation.cot_only = true;
        else throw BenchError("unknown ablation '" + a + "'");
    }
    return cfg;
}

WorldLoader make_loader(const fs::path& tasks_dir, const std::string& worlds_dir) {
    return [tasks_dir, worlds_dir](const std::string& ref) -> GridWorld {
        fs::path p(ref);
        if (!p.is_absolute()) {
            if (!worlds_dir.empty() && fs::exists(fs::path(worlds_dir) / p))
                p = fs::path(worlds_dir) / p;
            else if (fs::exists(tasks_dir / p))
                p = tasks_dir / p;
            else if (!worlds_dir.empty())
                p = fs::path(worlds_dir) / p;
        }
        return load_world(read_file(p));
    };
}

void emit_report(const SuiteReport& report, const RunOptions& opt) {
    const ReportFormat fmt = opt.format == "json" ? ReportFormat::Json : ReportFormat::Table;
    std::cout << render_report(report, fmt);
    write_file(fs::path(opt.out_dir) / "report.txt", render_report(report, ReportFormat::Table));
    write_file(fs::path(opt.out_dir) / "report.json", render_report(report, ReportFormat::Json));
}

int cmd_run(const RunOptions& opt) {
    const auto tasks = load_tasks(read_file(opt.tasks_file));
    const auto loader = make_loader(fs::path(opt.tasks_file).parent_path(), opt.worlds_dir);
    const EpisodeConfig cfg = make_config(opt);

    SuiteReport report;
    if (opt.backend == "scripted") {
        if (opt.transcripts_dir.empty())
            throw BenchError("--backend scripted requires --transcripts");
        report.method = "scripted";
        report.token_counting = "approximate";
        std::vector<EpisodeResult> results;
        for (const TaskSpec& task : tasks) {
            const Transcript dump = Transcript::from_jsonl(
                read_file(fs::path(opt.transcripts_dir) / (task.id + ".jsonl")));
            EpisodeRecord rec;
            rec.task = task;
            rec.result = replay_transcript(dump);
            results.push_back(rec.result);
            report.records.push_back(std::move(rec));
        }
        report.metrics = compute_metrics(results);
    } else if (opt.backend == "oracle") {
        OracleBackend oracle;
        report = run_suite(tasks, oracle, loader, cfg, opt.parallel,
                           "oracle/" + cfg.ablation.to_string());
    } else if (opt.backend == "remote") {
        RemoteConfig rc;
        rc.base_url = opt.endpoint;
        rc.model = opt.model;
        if (const char* key = std::getenv("NAVAGENT_API_KEY")) rc.api_key = key;
        RemoteBackend remote(rc);
        report = run_suite(tasks, remote, loader, cfg, opt.parallel,
                           opt.model + "/" + cfg.ablation.to_string());
    } else {
        throw BenchError("unknown backend '" + opt.backend + "'");
    }

    for (const EpisodeRecord& rec : report.records)
        write_file(fs::path(opt.out_dir) / (rec.task.id + ".jsonl"),
                   rec.result.transcript.to_jsonl());
    emit_report(report, opt);
    return kExitOk;
}

int cmd_replay(const std::vector<std::string>& dumps, const std::string& dir) {
    std::vector<fs::path> files;
    for (const auto& d : dumps) files.emplace_back(d);
    if (!dir.empty())
        for (const auto& entry : fs::directory_iterator(dir))
            if (entry.path().extension() == ".jsonl") files.push_back(entry.path());
    if (files.empty()) throw BenchError("nothing to replay");
    std::sort(files.begin(), files.end());

    bool all_match = true;
    for (const fs::path& file : files) {
        const std::string original = read_file(file);
        const Transcript dump = Transcript::from_jsonl(original);
        const EpisodeResult replayed = replay_transcript(dump);
        const bool match = replayed.transcript.to_jsonl() == original;
        all_match = all_match && match;
        std::cout << (match ? "IDENTICAL " : "MISMATCH  ") << file.string() << " ("
                  << outcome_name(replayed.outcome) << ")\n";
    }
    return all_match ? kExitOk : kExitConfig;
}

int cmd_genworld(std::uint64_t seed, int count, const std::string& out_dir, int width,
                 int height, int rooms, int objects, double absent, double room_qualified) {
    WorldGenParams params;
    params.width = width;
    params.height = height;
    params.room_count = rooms;
    params.object_count = objects;

    std::vector<TaskSpec> tasks;
    for (int i = 0; i < count; ++i) {
        const GeneratedTask gen = generate_find_task(seed + static_cast<std::uint64_t>(i),
                                                     params, absent, room_qualified);
        write_file(fs::path(out_dir) / gen.task.world_ref, serialize_world(gen.world));
        tasks.push_back(gen.task);
    }
    write_file(fs::path(out_dir) / "tasks.json", serialize_tasks(tasks));
    std::cout << "wrote " << count << " world(s) and tasks.json to " << out_dir << "\n";
    return kExitOk;
}

int cmd_report(const std::string& dir, const std::string& format) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.path().extension() == ".jsonl") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw BenchError("no transcript dumps in " + dir);

    SuiteReport report;
    report.method = "recomputed";
    report.token_counting = "approximate";
    std::vector<EpisodeResult> results;
    for (const fs::path& file : files) {
        const Transcript dump = Transcript::from_jsonl(read_file(file));
        if (dump.events.empty() || dump.events.front().kind != "episode_start")
            throw BenchError(file.string() + ": not an episode transcript");
        const TranscriptEvent& end = dump.events.back();
        if (end.kind != "episode_end")
            throw BenchError(file.string() + ": transcript has no episode_end");

        EpisodeRecord rec;
        rec.task = TaskSpec::from_json(dump.events.front().payload.at("task"));
        EpisodeResult r;
        const std::string outcome = end.payload.at("outcome").get<std::string>();
        r.outcome = outcome == "success"   ? Outcome::Success
                    : outcome == "failure" ? Outcome::Failure
                                           : Outcome::Inconclusive;
        if (!end.payload.at("cause").is_null()) {
            const std::string cause = end.payload.at("cause").get<std::string>();
            r.cause = cause == "time_limit"   ? InconclusiveCause::TimeLimit
                      : cause == "cost_limit" ? InconclusiveCause::CostLimit
                                              : InconclusiveCause::FunctionCallError;
        }
        if (!end.payload.at("answer").is_null())
            r.answer = end.payload.at("answer").get<std::string>();
        r.path_length_m = end.payload.at("path_length_m").get<double>();
        r.prompt_tokens = end.payload.at("prompt_tokens").get<long long>();
        r.completion_tokens = end.payload.at("completion_tokens").get<long long>();
        rec.result = std::move(r);
        results.push_back(rec.result);
        report.records.push_back(std::move(rec));
    }
    report.metrics = compute_metrics(results);
    std::cout << render_report(report,
                               format == "json" ? ReportFormat::Json : ReportFormat::Table);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"grid-world navigation agent benchmark harness"};
    app.require_subcommand(1);

    RunOptions run_opt;
    CLI::App* run = app.add_subcommand("run", "run a task suite");
    run->add_option("--tasks", run_opt.tasks_file, "task file (JSON)")->required();
    run->add_option("--worlds-dir", run_opt.worlds_dir, "directory for relative world refs");
    run->add_option("--backend", run_opt.backend, "remote | scripted | oracle");
    run->add_option("--endpoint", run_opt.endpoint, "chat-completions base URL");
    run->add_option("--model", run_opt.model, "model name for the remote backend");
    run->add_option("--budget-steps", run_opt.budget_steps, "reasoning step budget");
    run->add_option("--budget-cost", run_opt.budget_cost, "cost budget in currency units");
    run->add_option("--ablation", run_opt.ablations, "nosg | noogm | norp | cot (repeatable)");
    run->add_option("--parallel", run_opt.parallel, "concurrent episodes");
    run->add_option("--seed", run_opt.seed, "suite seed (reserved)");
    run->add_option("--out-dir", run_opt.out_dir, "output directory for dumps and reports");
    run->add_option("--format", run_opt.format, "table | json");
    run->add_option("--transcripts", run_opt.transcripts_dir,
                    "transcript directory for the scripted backend");
    run->add_option("--fov", run_opt.fov, "sensor field of view (degrees)");
    run->add_option("--range", run_opt.range, "sensor range (metres)");

    std::vector<std::string> replay_dumps;
    std::string replay_dir;
    CLI::App* replay = app.add_subcommand("replay", "replay transcript dumps");
    replay->add_option("--dump", replay_dumps, "transcript file(s)");
    replay->add_option("--dir", replay_dir, "directory of transcript dumps");

    std::uint64_t gw_seed = 1;
    int gw_count = 1, gw_width = 14, gw_height = 11, gw_rooms = 2, gw_objects = 5;
    double gw_absent = 0.0, gw_room_qualified = 0.0;
    std::string gw_out = "worlds";
    CLI::App* genworld = app.add_subcommand("genworld", "generate seeded worlds and tasks");
    genworld->add_option("--seed", gw_seed, "base seed");
    genworld->add_option("--count", gw_count, "number of world/task pairs");
    genworld->add_option("--out-dir", gw_out, "output directory");
    genworld->add_option("--width", gw_width, "world width in cells");
    genworld->add_option("--height", gw_height, "world height in cells");
    genworld->add_option("--rooms", gw_rooms, "room count");
    genworld->add_option("--objects", gw_objects, "object count");
    genworld->add_option("--absent", gw_absent, "probability the target is absent");
    genworld->add_option("--room-qualified", gw_room_qualified,
                         "probability the question names a room");

    std::string report_dir, report_format = "table";
    CLI::App* report = app.add_subcommand("report", "recompute a report from dumps");
    report->add_option("--dir", report_dir, "directory of transcript dumps")->required();
    report->add_option("--format", report_format, "table | json");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);  // prints the usage message
        return code == 0 ? kExitOk : 1;
    }

    try {
        if (run->parsed()) return cmd_run(run_opt);
        if (replay->parsed()) return cmd_replay(replay_dumps, replay_dir);
        if (genworld->parsed())
            return cmd_genworld(gw_seed, gw_count, gw_out, gw_width, gw_height, gw_rooms,
                                gw_objects, gw_absent, gw_room_qualified);
        if (report->parsed()) return cmd_report(report_dir, report_format);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitOk;
}
