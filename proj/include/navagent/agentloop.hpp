#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "navagent/workflow.hpp"

namespace navagent {

enum class Outcome { Success, Failure, Inconclusive };

enum class InconclusiveCause { TimeLimit, CostLimit, FunctionCallError };

std::string outcome_name(Outcome o);
std::string cause_name(InconclusiveCause c);

struct AblationConfig {
    bool no_scene_graph = false;  // graph tools deregistered, graph not built
    bool no_ogm = false;          // raster stripped from memory renders
    bool no_raster = false;       // additionally strips rendered views from observations
    bool cot_only = false;        // single-call workflow generation

    bool raster_in_render() const { return !(no_ogm || no_raster); }
    std::string to_string() const;
};

struct SensorConfig {
    double fov_deg = 90.0;
    double range_m = 3.0;
};

struct EpisodeConfig {
    Budgets budgets;
    AblationConfig ablation;
    SensorConfig sensor;
    int max_replans = 3;
    int fault_threshold = 3;  // consecutive irreparable malformed invocations
    int log_tail = 20;
    // navigation control actions do not count against the reasoning-step
    // budget; only statements and backend exchanges do
    static constexpr bool count_nav_steps = false;
};

struct TaskSpec {
    std::string id;
    std::string question;
    std::vector<std::pair<std::string, std::string>> choices;  // letter -> text
    std::string answer_key;
    std::string world_ref;

    nlohmann::json to_json() const;
    static TaskSpec from_json(const nlohmann::json& j);
};

struct TranscriptEvent {
    std::string kind;
    int step = 0;  // reasoning steps consumed when the event was recorded
    nlohmann::json payload;
    long long tokens = 0;

    nlohmann::json to_json() const;
    static TranscriptEvent from_json(const nlohmann::json& j);
};

struct Transcript {
    std::vector<TranscriptEvent> events;

    std::string to_jsonl() const;
    static Transcript from_jsonl(const std::string& text);
    int count(const std::string& kind) const;
};

// Rebuilds the scripted-backend feed from a recorded episode.
std::vector<TranscriptEntry> scripted_entries_from_transcript(const Transcript& transcript);

struct EpisodeResult {
    Outcome outcome = Outcome::Inconclusive;
    std::optional<InconclusiveCause> cause;
    std::optional<std::string> answer;
    double path_length_m = 0.0;
    long long prompt_tokens = 0;
    long long completion_tokens = 0;
    Transcript transcript;
    nlohmann::json final_memory;

    nlohmann::json to_json() const;
};

struct OutcomeState {
    std::optional<std::string> committed_answer;
    std::string answer_key;
    bool steps_exhausted = false;
    bool cost_exceeded = false;
    bool fault_escalated = false;
};

// Success iff the committed answer matches the key; code-style breaches map
// to the inconclusive causes of the outcome taxonomy.
std::pair<Outcome, std::optional<InconclusiveCause>> classify_outcome(const OutcomeState& state);

struct StepChoice {
    enum class Kind { StepId, Repeat, InvokeTermination };
    Kind kind = Kind::StepId;
    int id = 0;
};

// One backend exchange (plus one retry on an unparseable reply); falls back
// to the lowest not-yet-completed step. Steps may be repeated or executed
// out of order: any valid id is accepted.
StepChoice select_step(LlmBackend& backend, const Workflow& workflow,
                       const std::set<int>& completed, AgentMemory& memory,
                       const OccupancyGrid& grid, const Cell& robot,
                       const RenderOptions& render_opts);

// Runs the whole loop: workflow generation, step selection and execution,
// the navigation sub-loop with observation buffering, memory updates,
// budget enforcement, and outcome classification. Nothing escapes except
// scripted-replay integrity errors.
EpisodeResult run_episode(const GridWorld& world, const TaskSpec& task, LlmBackend& backend,
                          const EpisodeConfig& config);

}  // namespace navagent
