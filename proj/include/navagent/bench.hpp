#pragma once

#include <functional>
#include <string>
#include <vector>

#include "navagent/agentloop.hpp"

namespace navagent {

class BenchError : public std::runtime_error {
public:
    explicit BenchError(const std::string& msg) : std::runtime_error(msg) {}
};

// Task file: {"format": 1, "tasks": [...]} — see TaskSpec for the record
// shape.
std::vector<TaskSpec> load_tasks(const std::string& content);
std::string serialize_tasks(const std::vector<TaskSpec>& tasks);

struct Metrics {
    int episodes = 0;
    int success_count = 0;
    int failure_count = 0;
    int inconclusive_count = 0;
    int time_limit_count = 0;
    int cost_limit_count = 0;
    int function_call_error_count = 0;

    // integer percentages; the accuracy trio always sums to 100 and the
    // breakdown trio sums to the inconclusive share
    int correct_pct = 0;
    int incorrect_pct = 0;
    int inconclusive_pct = 0;
    int time_limit_pct = 0;
    int cost_limit_pct = 0;
    int function_call_error_pct = 0;

    double mean_path_m = 0.0;
    double se_path_m = 0.0;
    double mean_tokens_k = 0.0;  // x10^3 tokens
    double se_tokens_k = 0.0;
};

// Percentage rounding uses the largest-remainder method so the partition
// invariants hold exactly; inconclusive episodes are included in the path
// and token means (noted in the report footer).
Metrics compute_metrics(const std::vector<EpisodeResult>& results);

struct EpisodeRecord {
    TaskSpec task;
    EpisodeResult result;
};

struct SuiteReport {
    std::string method;
    std::string token_counting;  // "approximate" or "wire"
    Metrics metrics;
    std::vector<EpisodeRecord> records;  // sorted by task id
};

enum class ReportFormat { Table, Json };

std::string render_report(const SuiteReport& report, ReportFormat format);

using WorldLoader = std::function<GridWorld(const std::string& world_ref)>;

// Runs one episode per task, optionally across worker threads. Episode
// failures surface as outcomes, never abort the suite. Records come back
// sorted by task id so aggregation is order-independent.
SuiteReport run_suite(const std::vector<TaskSpec>& tasks, LlmBackend& backend,
                      const WorldLoader& loader, const EpisodeConfig& config, int parallelism,
                      const std::string& method_label);

// Reconstructs world, task, and config from a transcript dump and re-runs
// the episode against the recorded exchanges.
EpisodeResult replay_transcript(const Transcript& transcript);

EpisodeConfig episode_config_from_start_event(const nlohmann::json& payload);

// Seeded find-the-object task over a generated world. absent_probability
// makes the asked-about label missing (answer key B); room_qualified adds
// a room constraint to the question.
struct GeneratedTask {
    GridWorld world;
    TaskSpec task;
};

GeneratedTask generate_find_task(std::uint64_t seed, const WorldGenParams& params = {},
                                 double absent_probability = 0.0,
                                 double room_qualified_probability = 0.0);

}  // namespace navagent
