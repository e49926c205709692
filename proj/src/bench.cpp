#include "navagent/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <thread>

namespace navagent {

using nlohmann::json;

std::vector<TaskSpec> load_tasks(const std::string& content) {
    const json j = json::parse(content, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        throw BenchError("task file: expected a JSON object");
    if (j.value("format", 0) != 1)
        throw BenchError("task file: unsupported format (expected \"format\": 1)");
    std::vector<TaskSpec> tasks;
    for (const auto& jt : j.value("tasks", json::array())) {
        TaskSpec t = TaskSpec::from_json(jt);
        if (t.choices.size() < 2)
            throw BenchError("task '" + t.id + "': needs at least 2 choices");
        const bool key_ok = std::any_of(
            t.choices.begin(), t.choices.end(),
            [&t](const auto& c) { return c.first == t.answer_key; });
        if (!key_ok) throw BenchError("task '" + t.id + "': answer key not among choices");
        tasks.push_back(std::move(t));
    }
    return tasks;
}

std::string serialize_tasks(const std::vector<TaskSpec>& tasks) {
    json arr = json::array();
    for (const auto& t : tasks) arr.push_back(t.to_json());
    return json{{"format", 1}, {"tasks", std::move(arr)}}.dump(2);
}

namespace {

// integer percentages of `total`, adjusted by largest remainder so they
// sum exactly to target_sum (which is itself the rounded share of the
// group; sums of floors never exceed the floor of the sum, so the
// adjustment is always non-negative)
std::vector<int> largest_remainder(const std::vector<long long>& counts, long long total,
                                   int target_sum) {
    std::vector<int> pct(counts.size(), 0);
    if (total <= 0 || counts.empty()) return pct;
    std::vector<double> exact(counts.size());
    int floor_sum = 0;
    for (size_t i = 0; i < counts.size(); ++i) {
        exact[i] = static_cast<double>(counts[i]) * 100.0 / static_cast<double>(total);
        pct[i] = static_cast<int>(std::floor(exact[i] + 1e-9));
        floor_sum += pct[i];
    }
    std::vector<size_t> order(counts.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&exact, &pct](size_t a, size_t b) {
        return exact[a] - pct[a] > exact[b] - pct[b];
    });
    for (int k = 0; k < target_sum - floor_sum && k < static_cast<int>(order.size()); ++k)
        ++pct[order[k]];
    return pct;
}

std::pair<double, double> mean_and_se(const std::vector<double>& xs) {
    if (xs.empty()) return {0.0, 0.0};
    double sum = 0.0;
    for (const double x : xs) sum += x;
    const double mean = sum / static_cast<double>(xs.size());
    if (xs.size() < 2) return {mean, 0.0};
    double sq = 0.0;
    for (const double x : xs) sq += (x - mean) * (x - mean);
    const double sd = std::sqrt(sq / static_cast<double>(xs.size() - 1));
    return {mean, sd / std::sqrt(static_cast<double>(xs.size()))};
}

}  // namespace

Metrics compute_metrics(const std::vector<EpisodeResult>& results) {
    if (results.empty()) throw BenchError("empty suite");

    Metrics m;
    m.episodes = static_cast<int>(results.size());
    std::vector<double> paths, tokens_k;
    for (const EpisodeResult& r : results) {
        switch (r.outcome) {
            case Outcome::Success: ++m.success_count; break;
            case Outcome::Failure: ++m.failure_count; break;
            case Outcome::Inconclusive:
                ++m.inconclusive_count;
                if (r.cause == InconclusiveCause::TimeLimit) ++m.time_limit_count;
                else if (r.cause == InconclusiveCause::CostLimit) ++m.cost_limit_count;
                else ++m.function_call_error_count;
                break;
        }
        paths.push_back(r.path_length_m);
        tokens_k.push_back(static_cast<double>(r.prompt_tokens + r.completion_tokens) / 1000.0);
    }

    const auto accuracy = largest_remainder(
        {m.success_count, m.failure_count, m.inconclusive_count}, m.episodes, 100);
    m.correct_pct = accuracy[0];
    m.incorrect_pct = accuracy[1];
    m.inconclusive_pct = accuracy[2];

    const auto breakdown = largest_remainder(
        {m.time_limit_count, m.cost_limit_count, m.function_call_error_count}, m.episodes,
        m.inconclusive_pct);
    m.time_limit_pct = breakdown[0];
    m.cost_limit_pct = breakdown[1];
    m.function_call_error_pct = breakdown[2];

    std::tie(m.mean_path_m, m.se_path_m) = mean_and_se(paths);
    std::tie(m.mean_tokens_k, m.se_tokens_k) = mean_and_se(tokens_k);
    return m;
}

namespace {

std::string fmt2(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

json report_to_json(const SuiteReport& report) {
    const Metrics& m = report.metrics;
    json episodes = json::array();
    for (const EpisodeRecord& rec : report.records) {
        json e = {{"task_id", rec.task.id},
                  {"outcome", outcome_name(rec.result.outcome)},
                  {"answer_key", rec.task.answer_key},
                  {"path_length_m", rec.result.path_length_m},
                  {"prompt_tokens", rec.result.prompt_tokens},
                  {"completion_tokens", rec.result.completion_tokens}};
        e["cause"] = rec.result.cause ? json(cause_name(*rec.result.cause)) : json();
        e["answer"] = rec.result.answer ? json(*rec.result.answer) : json();
        episodes.push_back(std::move(e));
    }
    return json{
        {"format", 1},
        {"method", report.method},
        {"token_counting", report.token_counting},
        {"episodes", m.episodes},
        {"accuracy",
         {{"correct_pct", m.correct_pct},
          {"incorrect_pct", m.incorrect_pct},
          {"inconclusive_pct", m.inconclusive_pct}}},
        {"mean_path_length_m", {{"mean", m.mean_path_m}, {"se", m.se_path_m}}},
        {"mean_token_usage_k", {{"mean", m.mean_tokens_k}, {"se", m.se_tokens_k}}},
        {"inconclusive_breakdown_pct",
         {{"time_limit", m.time_limit_pct},
          {"cost_limit", m.cost_limit_pct},
          {"function_call_error", m.function_call_error_pct}}},
        {"episodes_detail", std::move(episodes)},
        {"notes",
         json::array({"inconclusive episodes are included in path and token means",
                      "token counts are approximate for local backends"})}};
}

}  // namespace

std::string render_report(const SuiteReport& report, ReportFormat format) {
    if (report.records.empty() || report.metrics.episodes == 0) throw BenchError("empty suite");
    if (format == ReportFormat::Json) return report_to_json(report).dump(2) + "\n";

    const Metrics& m = report.metrics;
    std::string out;
    out += "Method            Accuracy (%)   Mean Path Length (m)   Mean Token Usage (x10^3)\n";
    char row[256];
    std::snprintf(row, sizeof(row), "%-17s %d / %d        %s ± %s            %s ± %s\n",
                  report.method.c_str(), m.correct_pct, m.incorrect_pct,
                  fmt2(m.mean_path_m).c_str(), fmt2(m.se_path_m).c_str(),
                  fmt2(m.mean_tokens_k).c_str(), fmt2(m.se_tokens_k).c_str());
    out += row;
    std::snprintf(row, sizeof(row),
                  "\nInconclusive breakdown (%%): time limit %d / cost limit %d / function call "
                  "error %d\n",
                  m.time_limit_pct, m.cost_limit_pct, m.function_call_error_pct);
    out += row;
    out += "Notes: inconclusive episodes are included in path and token means; token counts\n"
           "are approximate for local backends.\n";
    return out;
}

SuiteReport run_suite(const std::vector<TaskSpec>& tasks, LlmBackend& backend,
                      const WorldLoader& loader, const EpisodeConfig& config, int parallelism,
                      const std::string& method_label) {
    if (tasks.empty()) throw BenchError("empty suite");
    for (const TaskSpec& t : tasks) loader(t.world_ref);  // fail fast on unloadable worlds

    std::vector<EpisodeRecord> records(tasks.size());
    std::atomic<size_t> next{0};
    const int workers = std::max(1, std::min<int>(parallelism, static_cast<int>(tasks.size())));

    auto work = [&]() {
        for (;;) {
            const size_t i = next.fetch_add(1);
            if (i >= tasks.size()) return;
            records[i].task = tasks[i];
            records[i].result =
                run_episode(loader(tasks[i].world_ref), tasks[i], backend, config);
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }

    std::sort(records.begin(), records.end(), [](const EpisodeRecord& a, const EpisodeRecord& b) {
        return a.task.id < b.task.id;
    });

    SuiteReport report;
    report.method = method_label;
    report.token_counting = backend.name().rfind("remote:", 0) == 0 ? "wire" : "approximate";
    report.records = std::move(records);
    std::vector<EpisodeResult> results;
    results.reserve(report.records.size());
    for (const auto& rec : report.records) results.push_back(rec.result);
    report.metrics = compute_metrics(results);

    // partition invariant, asserted on every run
    const Metrics& m = report.metrics;
    if (m.correct_pct + m.incorrect_pct + m.inconclusive_pct != 100 ||
        m.time_limit_pct + m.cost_limit_pct + m.function_call_error_pct != m.inconclusive_pct)
        throw BenchError("percentage partition invariant violated");
    return report;
}

EpisodeConfig episode_config_from_start_event(const json& payload) {
    EpisodeConfig cfg;
    const json& c = payload.at("config");
    const json& b = c.at("budgets");
    cfg.budgets.max_reasoning_steps = b.at("max_reasoning_steps").get<int>();
    cfg.budgets.max_cost = b.at("max_cost").get<double>();
    cfg.budgets.rate_in_per_mtok = b.at("rate_in_per_mtok").get<double>();
    cfg.budgets.rate_out_per_mtok = b.at("rate_out_per_mtok").get<double>();
    const std::string ablation = c.value("ablation", "none");
    cfg.ablation.no_scene_graph = ablation.find("nosg") != std::string::npos;
    cfg.ablation.no_ogm = ablation.find("noogm") != std::string::npos;
    cfg.ablation.no_raster = ablation.find("norp") != std::string::npos;
    cfg.ablation.cot_only = ablation.find("cot") != std::string::npos;
    cfg.sensor.fov_deg = c.at("sensor").at("fov_deg").get<double>();
    cfg.sensor.range_m = c.at("sensor").at("range_m").get<double>();
    cfg.max_replans = c.value("max_replans", 3);
    cfg.fault_threshold = c.value("fault_threshold", 3);
    return cfg;
}

EpisodeResult replay_transcript(const Transcript& transcript) {
    if (transcript.events.empty() || transcript.events.front().kind != "episode_start")
        throw BenchError("transcript does not begin with episode_start");
    const json& start = transcript.events.front().payload;
    const GridWorld world = load_world(start.at("world").get<std::string>());
    const TaskSpec task = TaskSpec::from_json(start.at("task"));
    const EpisodeConfig config = episode_config_from_start_event(start);
    ScriptedBackend scripted(scripted_entries_from_transcript(transcript),
                             start.value("backend", "scripted"));
    return run_episode(world, task, scripted, config);
}

GeneratedTask generate_find_task(std::uint64_t seed, const WorldGenParams& params,
                                 double absent_probability,
                                 double room_qualified_probability) {
    GeneratedTask out;
    out.world = generate_world(seed, params);
    Rng rng(seed ^ 0xA5A5A5A5DEADBEEFULL);

    const bool absent = rng.next_unit() < absent_probability;
    std::string target;
    std::string room_label;

    if (absent) {
        // a label from the pool that was not placed in this world
        for (const std::string& label : params.labels) {
            const bool placed = std::any_of(
                out.world.objects.begin(), out.world.objects.end(),
                [&label](const WorldObject& o) { return o.label == label; });
            if (!placed) {
                target = label;
                break;
            }
        }
        if (target.empty()) target = "unicorn";
    } else {
        const WorldObject& obj =
            out.world.objects[rng.next_below(out.world.objects.size())];
        target = obj.label;
        if (rng.next_unit() < room_qualified_probability && obj.room_id) {
            for (const Room& r : out.world.rooms)
                if (r.id == *obj.room_id) room_label = r.label;
        }
    }

    out.task.id = "find_" + std::to_string(seed);
    if (room_label.empty()) {
        out.task.question = "Is there a \"" + target + "\" in the environment?";
    } else {
        out.task.question = "Is there a \"" + target + "\" in the \"" + room_label + "\"?";
    }
    out.task.choices = {{"A", "yes"}, {"B", "no"}};
    out.task.answer_key = absent ? "B" : "A";
    out.task.world_ref = "world_" + std::to_string(seed) + ".json";
    return out;
}

}  // namespace navagent
