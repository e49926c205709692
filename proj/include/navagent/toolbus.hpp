#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "navagent/memory.hpp"
#include "navagent/navtools.hpp"
#include "navagent/scenegraph.hpp"
#include "navagent/worldsim.hpp"

namespace navagent {

enum class WireType { String, Number, Integer, Boolean, Cell, LabelList };

std::string wire_type_name(WireType t);

enum class ToolCategory { Perception, Reasoning, Navigation };

struct ParamSpec {
    std::string name;
    WireType type = WireType::String;
    bool required = true;
    std::string doc;

    bool operator==(const ParamSpec& o) const {
        return name == o.name && type == o.type && required == o.required && doc == o.doc;
    }
};

struct ToolSchema {
    std::string name;
    std::string description;  // usage comment shown to the backend
    std::vector<ParamSpec> params;
    std::string returns;
    ToolCategory category = ToolCategory::Reasoning;

    bool operator==(const ToolSchema& o) const {
        return name == o.name && description == o.description && params == o.params &&
               returns == o.returns && category == o.category;
    }
};

struct ToolCall {
    std::string name;
    nlohmann::json args = nlohmann::json::object();
    std::string call_id;
};

enum class ToolStatus { Ok, ArgError, RuntimeError };

std::string tool_status_name(ToolStatus s);

struct NavGoal {
    Cell cell;
    bool optimistic = false;  // frontier goals may plan through Unknown
};

struct ToolResult {
    std::string call_id;
    ToolStatus status = ToolStatus::Ok;
    std::string text;
    nlohmann::json value;  // optional structured payload
    std::optional<NavGoal> nav_goal;
    std::optional<bool> truthy_override;
};

// Condition value of a result: errors are false; a pending navigation
// goal is true (refined by the interpreter once navigation settles);
// structured values coerce by emptiness/zero; bare Ok is true.
bool tool_result_truthy(const ToolResult& result);

// Episode state visible to tool handlers. graph is null when the scene
// graph is ablated away.
struct ToolContext {
    GridWorld* world = nullptr;
    OccupancyGrid* grid = nullptr;
    SceneGraph* graph = nullptr;
    AgentMemory* memory = nullptr;
    LlmBackend* backend = nullptr;
    std::vector<Observation>* observations = nullptr;
};

using ToolHandler = std::function<ToolResult(const nlohmann::json&, ToolContext&)>;

// Presence/type checks for the declared wire types; cell values must be
// in-bounds pairs. Returns violations instead of throwing.
std::vector<std::string> validate(const ToolSchema& schema, const nlohmann::json& args,
                                  int grid_width, int grid_height);

class ToolRegistry {
public:
    // Throws on duplicate names.
    void register_tool(ToolSchema schema, ToolHandler handler);

    bool has(const std::string& name) const { return index_.count(name) > 0; }
    const ToolSchema* schema(const std::string& name) const;
    size_t size() const { return entries_.size(); }

    // One wire description per tool, in registration order.
    std::vector<nlohmann::json> describe_all() const;
    nlohmann::json describe_all_json() const;

    // Total: every input produces a ToolResult; failures are encoded in
    // the status. Each dispatch appends one tool_call entry to the
    // context's action log.
    ToolResult dispatch(const ToolCall& call, ToolContext& ctx) const;

private:
    struct Entry {
        ToolSchema schema;
        ToolHandler handler;
    };
    std::vector<Entry> entries_;
    std::map<std::string, size_t> index_;
};

nlohmann::json describe_tool(const ToolSchema& schema);
ToolSchema parse_tool_description(const nlohmann::json& wire);

struct StandardToolOptions {
    bool scene_graph = true;  // false drops the graph-coupled tools
};

// The fixed 12-tool registry: get_images, query_scene_graph,
// get_occupancy_raster, goto, rotate, follow_path, explore_frontiers,
// shortest_path_length, visibility_check, reachable, proximity,
// label_cells.
ToolRegistry make_standard_registry(const StandardToolOptions& opts = {});

}  // namespace navagent
