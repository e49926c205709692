#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "navagent/llmlink.hpp"
#include "navagent/mapping.hpp"

namespace navagent {

enum class LogKind { ToolCall, Nav, MemoryUpdate, WorkflowEvent };

std::string log_kind_name(LogKind k);

struct LogEntry {
    int step = 0;  // strictly increasing
    LogKind kind = LogKind::ToolCall;
    std::string summary;
    long long token_cost = 0;
};

struct EditOp {
    enum class Kind { SetSection, AddFinding, AddLandmark, RemoveLandmark };
    Kind kind = Kind::AddFinding;
    std::string name;  // section name or landmark name
    std::string text;
    Cell cell;
    LandmarkSource source = LandmarkSource::QueriedObject;
};

using MemoryEdit = std::vector<EditOp>;

// Textual sections and landmarks are under the backend's control through
// constrained edit ops; the action log is append-only and never editable.
class AgentMemory {
public:
    static const std::vector<std::string>& section_names();

    AgentMemory() = default;
    explicit AgentMemory(std::string task);

    const std::string& task() const { return task_; }
    const std::string& section(const std::string& name) const;
    const std::vector<std::pair<std::string, std::string>>& sections() const { return sections_; }
    const std::vector<Landmark>& landmarks() const { return landmarks_; }
    const std::vector<LogEntry>& action_log() const { return log_; }
    int step_counter() const { return step_counter_; }

    void append_log(LogKind kind, const std::string& summary, long long token_cost);

    // Atomic: either every op applies or none do. Returns an error
    // message on rejection. Landmark cells are checked against the given
    // grid bounds.
    std::optional<std::string> apply_edit(const MemoryEdit& edit, int grid_width,
                                          int grid_height);

    bool operator==(const AgentMemory& o) const {
        return task_ == o.task_ && sections_ == o.sections_ && log_size_equal(o) &&
               landmarks_equal(o);
    }

    nlohmann::json to_json() const;

private:
    bool log_size_equal(const AgentMemory& o) const;
    bool landmarks_equal(const AgentMemory& o) const;

    std::string task_;
    std::vector<std::pair<std::string, std::string>> sections_;
    std::vector<Landmark> landmarks_;
    std::vector<LogEntry> log_;
    int step_counter_ = 0;
};

AgentMemory init_memory(const std::string& task);

struct RenderOptions {
    bool include_raster = true;
    int log_tail = 20;
};

// Deterministic prompt rendering: task, sections in fixed order, annotated
// raster, last K action-log lines. Section content lines are indented two
// spaces so section boundaries stay unambiguous.
std::string render(const AgentMemory& memory, const OccupancyGrid& grid, const Cell& robot,
                   const RenderOptions& opts = {});

// Parses the wire edit grammar (JSON array of op objects, optionally
// fenced). Returns an error instead of throwing.
std::optional<MemoryEdit> parse_memory_edit(const std::string& reply, std::string* error);

struct ApplyUpdateOutcome {
    bool applied = false;
    int op_count = 0;
    std::string error;
    Usage usage;
};

// One backend exchange: current memory render plus the latest result; the
// reply is an edit list applied atomically. A memory_update log entry is
// appended whether or not the edit was accepted.
ApplyUpdateOutcome apply_update(AgentMemory& memory, LlmBackend& backend,
                                const std::string& result_text, const OccupancyGrid& grid,
                                const Cell& robot, const RenderOptions& opts = {});

// At most 8 observations, evenly subsampled with the first and last always
// kept. detections_only drops the rendered view blocks.
std::string summarize_obs_seq(const std::vector<Observation>& obs_seq, bool detections_only);

}  // namespace navagent
