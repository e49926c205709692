#include "navagent/memory.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "navagent/prompts.hpp"

namespace navagent {

using nlohmann::json;

std::string log_kind_name(LogKind k) {
    switch (k) {
        case LogKind::ToolCall: return "tool_call";
        case LogKind::Nav: return "nav";
        case LogKind::MemoryUpdate: return "memory_update";
        default: return "workflow_event";
    }
}

const std::vector<std::string>& AgentMemory::section_names() {
    static const std::vector<std::string> names = {"spatial_description", "findings", "progress"};
    return names;
}

AgentMemory::AgentMemory(std::string task) : task_(std::move(task)) {
    for (const auto& n : section_names()) sections_.emplace_back(n, "");
}

const std::string& AgentMemory::section(const std::string& name) const {
    for (const auto& [n, text] : sections_)
        if (n == name) return text;
    throw std::out_of_range("unknown memory section '" + name + "'");
}

void AgentMemory::append_log(LogKind kind, const std::string& summary, long long token_cost) {
    log_.push_back(LogEntry{++step_counter_, kind, summary, token_cost});
}

bool AgentMemory::log_size_equal(const AgentMemory& o) const {
    return log_.size() == o.log_.size();
}

bool AgentMemory::landmarks_equal(const AgentMemory& o) const {
    if (landmarks_.size() != o.landmarks_.size()) return false;
    for (size_t i = 0; i < landmarks_.size(); ++i)
        if (landmarks_[i].name != o.landmarks_[i].name ||
            landmarks_[i].cell != o.landmarks_[i].cell)
            return false;
    return true;
}

std::optional<std::string> AgentMemory::apply_edit(const MemoryEdit& edit, int grid_width,
                                                   int grid_height) {
    auto sections = sections_;
    auto landmarks = landmarks_;

    auto section_text = [&sections](const std::string& name) -> std::string* {
        for (auto& [n, text] : sections)
            if (n == name) return &text;
        return nullptr;
    };

    for (const EditOp& op : edit) {
        switch (op.kind) {
            case EditOp::Kind::SetSection: {
                if (op.name == "action_log") return "the action log is not editable";
                std::string* text = section_text(op.name);
                if (!text) return "unknown section '" + op.name + "'";
                *text = op.text;
                break;
            }
            case EditOp::Kind::AddFinding: {
                std::string* text = section_text("findings");
                if (!text) return "unknown section 'findings'";
                if (!text->empty()) *text += '\n';
                *text += "- " + op.text;
                break;
            }
            case EditOp::Kind::AddLandmark: {
                if (op.name.empty()) return "landmark name must be non-empty";
                if (landmarks.size() >= 26) return "landmark alphabet exhausted";
                for (const auto& lm : landmarks)
                    if (lm.name == op.name) return "duplicate landmark '" + op.name + "'";
                if (op.cell.row < 0 || op.cell.row >= grid_height || op.cell.col < 0 ||
                    op.cell.col >= grid_width)
                    return "landmark '" + op.name + "' cell " + to_string(op.cell) +
                           " out of bounds";
                landmarks.push_back(Landmark{op.name, op.cell, op.source});
                break;
            }
            case EditOp::Kind::RemoveLandmark: {
                const auto it = std::find_if(landmarks.begin(), landmarks.end(),
                                             [&op](const Landmark& lm) {
                                                 return lm.name == op.name;
                                             });
                if (it == landmarks.end()) return "no landmark named '" + op.name + "'";
                landmarks.erase(it);
                break;
            }
        }
    }

    sections_ = std::move(sections);
    landmarks_ = std::move(landmarks);
    return std::nullopt;
}

json AgentMemory::to_json() const {
    json sections = json::object();
    for (const auto& [n, text] : sections_) sections[n] = text;
    json landmarks = json::array();
    for (const auto& lm : landmarks_)
        landmarks.push_back({{"name", lm.name},
                             {"cell", {lm.cell.row, lm.cell.col}},
                             {"source", landmark_source_name(lm.source)}});
    json log = json::array();
    for (const auto& e : log_)
        log.push_back({{"step", e.step},
                       {"kind", log_kind_name(e.kind)},
                       {"summary", e.summary},
                       {"token_cost", e.token_cost}});
    return json{{"task", task_},
                {"sections", std::move(sections)},
                {"landmarks", std::move(landmarks)},
                {"action_log", std::move(log)},
                {"step_counter", step_counter_}};
}

AgentMemory init_memory(const std::string& task) { return AgentMemory(task); }

std::string render(const AgentMemory& memory, const OccupancyGrid& grid, const Cell& robot,
                   const RenderOptions& opts) {
    std::string out = "TASK: " + memory.task() + "\n";

    for (const auto& [name, text] : memory.sections()) {
        out += "\n[" + name + "]\n";
        if (text.empty()) {
            out += "  (empty)\n";
        } else {
            size_t pos = 0;
            while (pos <= text.size()) {
                const size_t nl = text.find('\n', pos);
                out += "  " + text.substr(pos, nl == std::string::npos ? std::string::npos
                                                                       : nl - pos) +
                       "\n";
                if (nl == std::string::npos) break;
                pos = nl + 1;
            }
        }
    }

    if (opts.include_raster) {
        out += "\n[occupancy raster]\n";
        out += render_raster(grid, memory.landmarks(), robot);
    }

    const auto& log = memory.action_log();
    const size_t tail = std::min<size_t>(log.size(), static_cast<size_t>(opts.log_tail));
    char header[64];
    std::snprintf(header, sizeof(header), "\n[action log: last %zu of %zu]\n", tail, log.size());
    out += header;
    for (size_t i = log.size() - tail; i < log.size(); ++i) {
        out += "#" + std::to_string(log[i].step) + " " + log_kind_name(log[i].kind) + ": " +
               log[i].summary + "\n";
    }
    return out;
}

std::optional<MemoryEdit> parse_memory_edit(const std::string& reply, std::string* error) {
    std::string text = reply;
    // tolerate fenced replies
    const auto fence = text.find("```");
    if (fence != std::string::npos) {
        const auto start = text.find('\n', fence);
        const auto end = text.find("```", fence + 3);
        if (start != std::string::npos && end != std::string::npos && start < end)
            text = text.substr(start + 1, end - start - 1);
    }
    const auto lo = text.find('[');
    const auto hi = text.rfind(']');
    if (lo == std::string::npos || hi == std::string::npos || hi < lo) {
        if (error) *error = "no JSON array found in reply";
        return std::nullopt;
    }
    const json parsed = json::parse(text.substr(lo, hi - lo + 1), nullptr, false);
    if (parsed.is_discarded() || !parsed.is_array()) {
        if (error) *error = "reply is not a valid JSON array";
        return std::nullopt;
    }

    MemoryEdit edit;
    for (const auto& jop : parsed) {
        if (!jop.is_object() || !jop.contains("op")) {
            if (error) *error = "edit op missing 'op' field";
            return std::nullopt;
        }
        const std::string kind = jop.at("op").get<std::string>();
        EditOp op;
        try {
            if (kind == "set_section") {
                op.kind = EditOp::Kind::SetSection;
                op.name = jop.at("name").get<std::string>();
                op.text = jop.at("text").get<std::string>();
            } else if (kind == "add_finding") {
                op.kind = EditOp::Kind::AddFinding;
                op.text = jop.at("text").get<std::string>();
            } else if (kind == "add_landmark") {
                op.kind = EditOp::Kind::AddLandmark;
                op.name = jop.at("name").get<std::string>();
                op.cell = Cell{jop.at("cell").at(0).get<int>(), jop.at("cell").at(1).get<int>()};
                op.source = landmark_source_from_name(
                    jop.value("source", std::string("queried_object")));
            } else if (kind == "remove_landmark") {
                op.kind = EditOp::Kind::RemoveLandmark;
                op.name = jop.at("name").get<std::string>();
            } else {
                if (error) *error = "unknown edit op '" + kind + "'";
                return std::nullopt;
            }
        } catch (const std::exception& e) {
            if (error) *error = "malformed '" + kind + "' op: " + e.what();
            return std::nullopt;
        }
        edit.push_back(std::move(op));
    }
    return edit;
}

ApplyUpdateOutcome apply_update(AgentMemory& memory, LlmBackend& backend,
                                const std::string& result_text, const OccupancyGrid& grid,
                                const Cell& robot, const RenderOptions& opts) {
    const std::vector<ChatTurn> turns = {
        ChatTurn::system(prompts::system_prompt(
            prompts::kMemoryUpdate,
            "Fold the latest result into your working memory.\n" + prompts::memory_edit_help())),
        ChatTurn::user("latest result:\n" + result_text + "\ncurrent memory:\n" +
                       render(memory, grid, robot, opts))};
    const BackendReply reply = backend.complete(turns, json::array());

    ApplyUpdateOutcome outcome;
    outcome.usage = reply.usage;

    std::string parse_error;
    const auto edit = parse_memory_edit(reply.text, &parse_error);
    if (!edit) {
        outcome.error = parse_error;
        memory.append_log(LogKind::MemoryUpdate, "edit rejected: " + parse_error,
                          reply.usage.prompt_tokens + reply.usage.completion_tokens);
        return outcome;
    }
    const auto apply_error = memory.apply_edit(*edit, grid.width(), grid.height());
    if (apply_error) {
        outcome.error = *apply_error;
        memory.append_log(LogKind::MemoryUpdate, "edit rejected: " + *apply_error,
                          reply.usage.prompt_tokens + reply.usage.completion_tokens);
        return outcome;
    }
    outcome.applied = true;
    outcome.op_count = static_cast<int>(edit->size());
    memory.append_log(LogKind::MemoryUpdate,
                      "applied " + std::to_string(edit->size()) + " edit op(s)",
                      reply.usage.prompt_tokens + reply.usage.completion_tokens);
    return outcome;
}

std::string summarize_obs_seq(const std::vector<Observation>& obs_seq, bool detections_only) {
    std::vector<size_t> indices;
    const size_t n = obs_seq.size();
    if (n <= 8) {
        for (size_t i = 0; i < n; ++i) indices.push_back(i);
    } else {
        std::set<size_t> chosen;
        for (int k = 0; k < 8; ++k)
            chosen.insert(static_cast<size_t>(
                std::llround(static_cast<double>(k) * (n - 1) / 7.0)));
        indices.assign(chosen.begin(), chosen.end());
    }

    char header[96];
    std::snprintf(header, sizeof(header), "navigation observations (%zu of %zu shown):\n",
                  indices.size(), n);
    std::string out = header;
    for (const size_t i : indices) {
        const Observation& obs = obs_seq[i];
        if (!detections_only && !obs.rendered_view.empty()) {
            out += obs.rendered_view;
            continue;
        }
        char line[96];
        std::snprintf(line, sizeof(line), "t=%d pose=(%d,%d) detections:", obs.timestep,
                      obs.pose_cell.row, obs.pose_cell.col);
        out += line;
        if (obs.detections.empty()) {
            out += " none";
        } else {
            for (size_t d = 0; d < obs.detections.size(); ++d) {
                const Detection& det = obs.detections[d];
                char db[128];
                std::snprintf(db, sizeof(db), "%s %s id=%s cell=(%d,%d) range=%.2fm",
                              d == 0 ? "" : ";", det.label.c_str(), det.object_id.c_str(),
                              det.cell.row, det.cell.col, det.range_m);
                out += db;
            }
        }
        out += '\n';
    }
    return out;
}

}  // namespace navagent
