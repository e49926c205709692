#include "navagent/toolbus.hpp"

#include <algorithm>
#include <cstdio>

namespace navagent {

using nlohmann::json;

std::string wire_type_name(WireType t) {
    switch (t) {
        case WireType::String: return "string";
        case WireType::Number: return "number";
        case WireType::Integer: return "integer";
        case WireType::Boolean: return "boolean";
        case WireType::Cell: return "cell";
        default: return "label-list";
    }
}

std::string tool_status_name(ToolStatus s) {
    switch (s) {
        case ToolStatus::Ok: return "ok";
        case ToolStatus::ArgError: return "arg_error";
        default: return "runtime_error";
    }
}

bool tool_result_truthy(const ToolResult& result) {
    if (result.status != ToolStatus::Ok) return false;
    if (result.truthy_override) return *result.truthy_override;
    if (result.nav_goal) return true;
    if (result.value.is_boolean()) return result.value.get<bool>();
    if (result.value.is_number()) return result.value.get<double>() != 0.0;
    if (result.value.is_array()) return !result.value.empty();
    if (result.value.is_string()) {
        const std::string& s = result.value.get_ref<const std::string&>();
        return !(s.empty() || s == "no" || s == "false");
    }
    return true;
}

std::vector<std::string> validate(const ToolSchema& schema, const json& args, int grid_width,
                                  int grid_height) {
    std::vector<std::string> violations;
    if (!args.is_object()) {
        violations.push_back("arguments: expected an object");
        return violations;
    }
    for (const ParamSpec& p : schema.params) {
        if (!args.contains(p.name)) {
            if (p.required) violations.push_back("missing required param " + p.name);
            continue;
        }
        const json& v = args.at(p.name);
        switch (p.type) {
            case WireType::String:
                if (!v.is_string()) violations.push_back(p.name + ": expected string");
                break;
            case WireType::Number:
                if (!v.is_number()) violations.push_back(p.name + ": expected number");
                break;
            case WireType::Integer:
                if (!v.is_number_integer()) violations.push_back(p.name + ": expected integer");
                break;
            case WireType::Boolean:
                if (!v.is_boolean()) violations.push_back(p.name + ": expected boolean");
                break;
            case WireType::Cell: {
                if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() ||
                    !v[1].is_number_integer()) {
                    violations.push_back(p.name + ": expected cell [row,col]");
                    break;
                }
                const int r = v[0].get<int>(), c = v[1].get<int>();
                if (r < 0 || r >= grid_height || c < 0 || c >= grid_width)
                    violations.push_back(p.name + ": cell (" + std::to_string(r) + "," +
                                         std::to_string(c) + ") out of bounds");
                break;
            }
            case WireType::LabelList:
                if (!v.is_array() ||
                    !std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_string(); }))
                    violations.push_back(p.name + ": expected list of strings");
                break;
        }
    }
    for (const auto& item : args.items()) {
        const std::string& key = item.key();
        const bool known = std::any_of(schema.params.begin(), schema.params.end(),
                                       [&key](const ParamSpec& p) { return p.name == key; });
        if (!known) violations.push_back("unknown param " + key);
    }
    return violations;
}

void ToolRegistry::register_tool(ToolSchema schema, ToolHandler handler) {
    if (index_.count(schema.name))
        throw std::invalid_argument("tool '" + schema.name + "' already registered");
    index_[schema.name] = entries_.size();
    entries_.push_back(Entry{std::move(schema), std::move(handler)});
}

const ToolSchema* ToolRegistry::schema(const std::string& name) const {
    const auto it = index_.find(name);
    return it == index_.end() ? nullptr : &entries_[it->second].schema;
}

json describe_tool(const ToolSchema& schema) {
    json properties = json::object();
    json required = json::array();
    json order = json::array();  // JSON objects do not preserve key order
    for (const ParamSpec& p : schema.params) {
        order.push_back(p.name);
        json prop;
        switch (p.type) {
            case WireType::String: prop = {{"type", "string"}}; break;
            case WireType::Number: prop = {{"type", "number"}}; break;
            case WireType::Integer: prop = {{"type", "integer"}}; break;
            case WireType::Boolean: prop = {{"type", "boolean"}}; break;
            case WireType::Cell:
                prop = {{"type", "array"},
                        {"items", {{"type", "integer"}}},
                        {"minItems", 2},
                        {"maxItems", 2}};
                break;
            case WireType::LabelList:
                prop = {{"type", "array"}, {"items", {{"type", "string"}}}};
                break;
        }
        prop["description"] = p.doc;
        prop["x-wire-type"] = wire_type_name(p.type);
        properties[p.name] = std::move(prop);
        if (p.required) required.push_back(p.name);
    }
    return json{{"type", "function"},
                {"function",
                 {{"name", schema.name},
                  {"description", schema.description},
                  {"parameters",
                   {{"type", "object"}, {"properties", std::move(properties)},
                    {"required", std::move(required)}}},
                  {"x-param-order", std::move(order)},
                  {"returns", schema.returns},
                  {"x-category", schema.category == ToolCategory::Perception  ? "perception"
                                 : schema.category == ToolCategory::Navigation ? "navigation"
                                                                               : "reasoning"}}}};
}

ToolSchema parse_tool_description(const json& wire) {
    const json& fn = wire.at("function");
    ToolSchema schema;
    schema.name = fn.at("name").get<std::string>();
    schema.description = fn.at("description").get<std::string>();
    schema.returns = fn.value("returns", "");
    const std::string cat = fn.value("x-category", "reasoning");
    schema.category = cat == "perception"    ? ToolCategory::Perception
                      : cat == "navigation"  ? ToolCategory::Navigation
                                             : ToolCategory::Reasoning;

    const json& params = fn.at("parameters");
    std::vector<std::string> required;
    for (const auto& r : params.value("required", json::array()))
        required.push_back(r.get<std::string>());
    std::vector<std::string> order;
    if (fn.contains("x-param-order")) {
        for (const auto& n : fn.at("x-param-order")) order.push_back(n.get<std::string>());
    } else {
        for (const auto& [pname, prop] : params.at("properties").items()) order.push_back(pname);
    }
    for (const std::string& pname : order) {
        const json& prop = params.at("properties").at(pname);
        ParamSpec p;
        p.name = pname;
        p.doc = prop.value("description", "");
        const std::string wt = prop.value("x-wire-type", prop.value("type", "string"));
        if (wt == "string") p.type = WireType::String;
        else if (wt == "number") p.type = WireType::Number;
        else if (wt == "integer") p.type = WireType::Integer;
        else if (wt == "boolean") p.type = WireType::Boolean;
        else if (wt == "cell") p.type = WireType::Cell;
        else if (wt == "label-list") p.type = WireType::LabelList;
        else throw std::invalid_argument("unknown wire type '" + wt + "'");
        p.required = std::find(required.begin(), required.end(), pname) != required.end();
        schema.params.push_back(std::move(p));
    }
    return schema;
}

std::vector<json> ToolRegistry::describe_all() const {
    std::vector<json> out;
    out.reserve(entries_.size());
    for (const Entry& e : entries_) out.push_back(describe_tool(e.schema));
    return out;
}

json ToolRegistry::describe_all_json() const {
    json arr = json::array();
    for (const Entry& e : entries_) arr.push_back(describe_tool(e.schema));
    return arr;
}

ToolResult ToolRegistry::dispatch(const ToolCall& call, ToolContext& ctx) const {
    ToolResult result;
    result.call_id = call.call_id;

    const auto it = index_.find(call.name);
    if (it == index_.end()) {
        result.status = ToolStatus::ArgError;
        result.text = "unknown tool '" + call.name + "'";
    } else {
        const Entry& entry = entries_[it->second];
        const int w = ctx.grid ? ctx.grid->width() : 0;
        const int h = ctx.grid ? ctx.grid->height() : 0;
        const auto violations = validate(entry.schema, call.args, w, h);
        if (!violations.empty()) {
            result.status = ToolStatus::ArgError;
            std::string joined;
            for (size_t i = 0; i < violations.size(); ++i)
                joined += (i ? "; " : "") + violations[i];
            result.text = joined;
        } else {
            try {
                result = entry.handler(call.args, ctx);
                result.call_id = call.call_id;
            } catch (const std::exception& e) {
                result = ToolResult{};
                result.call_id = call.call_id;
                result.status = ToolStatus::RuntimeError;
                result.text = std::string("tool '") + call.name + "' failed: " + e.what();
            }
            if (result.nav_goal && entry.schema.category != ToolCategory::Navigation) {
                result = ToolResult{};
                result.call_id = call.call_id;
                result.status = ToolStatus::RuntimeError;
                result.text = "tool '" + call.name + "' is not a navigation tool but produced a goal";
            }
        }
    }

    if (ctx.memory) {
        std::string summary = call.name + " -> " + tool_status_name(result.status);
        if (!result.text.empty()) {
            const auto nl = result.text.find('\n');
            summary += ": " + result.text.substr(0, nl == std::string::npos ? 80 : std::min<size_t>(nl, 80));
        }
        ctx.memory->append_log(LogKind::ToolCall, summary, 0);
    }
    return result;
}

namespace {

Cell cell_arg(const json& args, const std::string& name) {
    return Cell{args.at(name).at(0).get<int>(), args.at(name).at(1).get<int>()};
}

ToolResult ok_text(std::string text) {
    ToolResult r;
    r.text = std::move(text);
    return r;
}

ToolResult arg_error(std::string text) {
    ToolResult r;
    r.status = ToolStatus::ArgError;
    r.text = std::move(text);
    return r;
}

std::string describe_observation(const Observation& obs) {
    if (!obs.rendered_view.empty()) return obs.rendered_view;
    char line[96];
    std::snprintf(line, sizeof(line), "t=%d pose=(%d,%d) detections:", obs.timestep,
                  obs.pose_cell.row, obs.pose_cell.col);
    std::string out = line;
    if (obs.detections.empty()) {
        out += " none";
    } else {
        for (size_t i = 0; i < obs.detections.size(); ++i) {
            const Detection& d = obs.detections[i];
            char db[128];
            std::snprintf(db, sizeof(db), "%s %s id=%s cell=(%d,%d) range=%.2fm",
                          i == 0 ? "" : ";", d.label.c_str(), d.object_id.c_str(), d.cell.row,
                          d.cell.col, d.range_m);
            out += db;
        }
    }
    out += '\n';
    return out;
}

std::string region_label_of(const SceneGraph& graph, const std::string& node_id) {
    for (const auto& e : graph.edges()) {
        if (e.src != node_id || e.relation != "in_region") continue;
        const SceneNode* region = graph.find(e.dst);
        if (region) return region->label;
    }
    return "none";
}

json nodes_to_value(const SceneGraph& graph, const std::vector<SceneNode>& nodes) {
    json arr = json::array();
    for (const auto& n : nodes)
        arr.push_back({{"id", n.id},
                       {"label", n.label},
                       {"cell", {n.cell.row, n.cell.col}},
                       {"region", region_label_of(graph, n.id)},
                       {"first_seen", n.first_seen}});
    return arr;
}

std::string nodes_to_text(const SceneGraph& graph, const std::vector<SceneNode>& nodes) {
    std::string out = std::to_string(nodes.size()) + " node(s)";
    out += nodes.empty() ? "" : ":";
    out += '\n';
    for (const auto& n : nodes) {
        char line[192];
        std::snprintf(line, sizeof(line), "%s label=\"%s\" cell=(%d,%d) region=%s first_seen=%d\n",
                      n.id.c_str(), n.label.c_str(), n.cell.row, n.cell.col,
                      region_label_of(graph, n.id).c_str(), n.first_seen);
        out += line;
    }
    return out;
}

}  // namespace

ToolRegistry make_standard_registry(const StandardToolOptions& opts) {
    ToolRegistry reg;

    reg.register_tool(
        ToolSchema{"get_images", "Return the stored visual record for a past timestep.",
                   {{"timestep", WireType::Integer, true, "observation timestep to fetch"}},
                   "text block for that observation", ToolCategory::Perception},
        [](const json& args, ToolContext& ctx) -> ToolResult {
            const int t = args.at("timestep").get<int>();
            if (!ctx.observations || t < 0 ||
                static_cast<size_t>(t) >= ctx.observations->size())
                return arg_error("timestep " + std::to_string(t) + " has no stored observation");
            return ok_text(describe_observation((*ctx.observations)[t]));
        });

    if (opts.scene_graph) {
        reg.register_tool(
            ToolSchema{"query_scene_graph",
                       "Look up scene-graph nodes by open-set label; matching is by token "
                       "containment. Optionally restrict to a room label.",
                       {{"label", WireType::String, true, "object or region label to search for"},
                        {"room", WireType::String, false,
                         "only return objects inside a region with this label"}},
                       "list of matching nodes", ToolCategory::Perception},
            [](const json& args, ToolContext& ctx) -> ToolResult {
                const std::string label = args.at("label").get<std::string>();
                const auto nodes =
                    args.contains("room")
                        ? ctx.graph->query_by_label_in_region(label,
                                                              args.at("room").get<std::string>())
                        : ctx.graph->query_by_label(label);
                ToolResult r = ok_text(nodes_to_text(*ctx.graph, nodes));
                r.value = nodes_to_value(*ctx.graph, nodes);
                return r;
            });
    }

    reg.register_tool(
        ToolSchema{"get_occupancy_raster",
                   "Render the current occupancy grid with landmark annotations.", {},
                   "text raster with legend", ToolCategory::Perception},
        [](const json&, ToolContext& ctx) -> ToolResult {
            return ok_text(render_raster(*ctx.grid, ctx.memory->landmarks(),
                                         ctx.world->robot_cell()));
        });

    reg.register_tool(
        ToolSchema{"goto",
                   "Navigate to grid cell (row=x, col=y). z is accepted for interface "
                   "compatibility and must be 0.",
                   {{"x", WireType::Integer, true, "target row"},
                    {"y", WireType::Integer, true, "target column"},
                    {"z", WireType::Integer, true, "must be 0 (2D world)"}},
                   "navigation goal handed to the motion stack", ToolCategory::Navigation},
        [](const json& args, ToolContext& ctx) -> ToolResult {
            if (args.at("z").get<int>() != 0) return arg_error("z must be 0");
            const Cell goal{args.at("x").get<int>(), args.at("y").get<int>()};
            if (!ctx.grid->in_bounds(goal))
                return arg_error("goal " + to_string(goal) + " out of bounds");
            ToolResult r = ok_text("navigation goal " + to_string(goal));
            r.nav_goal = NavGoal{goal, false};
            return r;
        });

    reg.register_tool(
        ToolSchema{"rotate", "Rotate in place by theta degrees (positive = clockwise).",
                   {{"theta", WireType::Number, true, "rotation in degrees"}},
                   "new heading in degrees", ToolCategory::Navigation},
        [](const json& args, ToolContext& ctx) -> ToolResult {
            const Pose p = rotate_robot(*ctx.world, args.at("theta").get<double>());
            char buf[48];
            std::snprintf(buf, sizeof(buf), "heading now %.1f", p.heading_deg);
            ToolResult r = ok_text(buf);
            r.value = p.heading_deg;
            r.truthy_override = true;
            return r;
        });

    if (opts.scene_graph) {
        reg.register_tool(
            ToolSchema{"follow_path", "Navigate to a known scene-graph node.",
                       {{"node", WireType::String, true, "scene-graph node id to travel to"}},
                       "navigation goal at the node's cell", ToolCategory::Navigation},
            [](const json& args, ToolContext& ctx) -> ToolResult {
                const std::string id = args.at("node").get<std::string>();
                const SceneNode* node = ctx.graph->find(id);
                if (!node) return arg_error("unknown node '" + id + "'");
                ToolResult r = ok_text("navigation goal " + to_string(node->cell) + " (node " +
                                       id + ")");
                r.nav_goal = NavGoal{node->cell, false};
                return r;
            });
    }

    reg.register_tool(
        ToolSchema{"explore_frontiers",
                   "Pick a frontier of unexplored space and navigate toward it. Reports "
                   "completion when no frontiers remain.",
                   {}, "navigation goal at a frontier centroid, or exploration complete",
                   ToolCategory::Navigation},
        [](const json&, ToolContext& ctx) -> ToolResult {
            const ExploreChoice choice =
                explore_frontiers(*ctx.grid, *ctx.backend, ctx.memory->landmarks());
            if (choice.complete) {
                ToolResult r = ok_text("exploration complete");
                r.value = false;
                return r;
            }
            ToolResult r = ok_text("exploring frontier " + std::to_string(choice.chosen_index) +
                                   ", centroid " + to_string(choice.goal));
            r.nav_goal = NavGoal{choice.goal, true};
            return r;
        });

    reg.register_tool(
        ToolSchema{"shortest_path_length",
                   "Length in metres of the shortest known-free path between two cells.",
                   {{"from", WireType::Cell, true, "start cell [row,col]"},
                    {"to", WireType::Cell, true, "goal cell [row,col]"}},
                   "metres, or unreachable", ToolCategory::Reasoning},
        [](const json& args, ToolContext& ctx) -> ToolResult {
            const Cell from = cell_arg(args, "from"), to = cell_arg(args, "to");
            if (ctx.grid->at(from) != BeliefState::Free)
                return arg_error("from: not a known free cell");
            const auto len = shortest_path_length(*ctx.grid, from, to);
            if (!len) {
                ToolResult r = ok_text("unreachable");
                r.value = false;
                return r;
            }
            char buf[48];
            std::snprintf(buf, sizeof(buf), "%.2fm", *len);
            ToolResult r = ok_text(buf);
            r.value = *len;
            r.truthy_override = true;
            return r;
        });

    reg.register_tool(
        ToolSchema{"visibility_check",
                   "Whether the straight segment between two cells crosses only known-free "
                   "space.",
                   {{"from", WireType::Cell, true, "first cell [row,col]"},
                    {"to", WireType::Cell, true, "second cell [row,col]"}},
                   "true or false", ToolCategory::Reasoning},
        [](const json& args, ToolContext& ctx) -> ToolResult {
            const bool vis = visibility(*ctx.grid, cell_arg(args, "from"), cell_arg(args, "to"));
            ToolResult r = ok_text(vis ? "true" : "false");
            r.value = vis;
            return r;
        });

    reg.register_tool(
        ToolSchema{"reachable", "Whether a known-free path connects two cells.",
                   {{"from", WireType::Cell, true, "start cell [row,col]"},
                    {"to", WireType::Cell, true, "goal cell [row,col]"}},
                   "true or false", ToolCategory::Reasoning},
        [](const json& args, ToolContext& ctx) -> ToolResult {
            const Cell from = cell_arg(args, "from");
            if (ctx.grid->at(from) != BeliefState::Free)
                return arg_error("from: not a known free cell");
            const bool ok = reachable(*ctx.grid, from, cell_arg(args, "to"));
            ToolResult r = ok_text(ok ? "true" : "false");
            r.value = ok;
            return r;
        });

    if (opts.scene_graph) {
        reg.register_tool(
            ToolSchema{"proximity",
                       "Scene-graph nodes within a radius of the named node, nearest first.",
                       {{"node", WireType::String, true, "anchor node id"},
                        {"radius_m", WireType::Number, true, "search radius in metres"}},
                       "list of node ids", ToolCategory::Reasoning},
            [](const json& args, ToolContext& ctx) -> ToolResult {
                const auto ids = proximity(*ctx.graph, args.at("node").get<std::string>(),
                                           args.at("radius_m").get<double>());
                std::string text = std::to_string(ids.size()) + " node(s)";
                for (const auto& id : ids) text += " " + id;
                ToolResult r = ok_text(text);
                r.value = json(ids);
                return r;
            });
    }

    reg.register_tool(
        ToolSchema{"label_cells",
                   "Attach a semantic label to a grid cell; it becomes a raster landmark.",
                   {{"cell", WireType::Cell, true, "cell [row,col] to label"},
                    {"label", WireType::String, true, "semantic label"}},
                   "confirmation", ToolCategory::Reasoning},
        [](const json& args, ToolContext& ctx) -> ToolResult {
            const Cell cell = cell_arg(args, "cell");
            const std::string label = args.at("label").get<std::string>();
            MemoryEdit ops;
            for (const auto& lm : ctx.memory->landmarks())
                if (lm.name == label) {
                    EditOp rm;
                    rm.kind = EditOp::Kind::RemoveLandmark;
                    rm.name = label;
                    ops.push_back(rm);
                    break;
                }
            EditOp add;
            add.kind = EditOp::Kind::AddLandmark;
            add.name = label;
            add.cell = cell;
            add.source = LandmarkSource::SampledImagePoint;
            ops.push_back(add);
            const auto err =
                ctx.memory->apply_edit(ops, ctx.grid->width(), ctx.grid->height());
            if (err) return arg_error(*err);
            return ok_text("labeled cell " + to_string(cell) + " as '" + label + "'");
        });

    return reg;
}

}  // namespace navagent
