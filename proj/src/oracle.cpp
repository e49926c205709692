#include "navagent/oracle.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "navagent/prompts.hpp"

namespace navagent {

using nlohmann::json;

namespace {

std::vector<std::string> quoted_strings(const std::string& text) {
    std::vector<std::string> out;
    size_t pos = 0;
    while ((pos = text.find('"', pos)) != std::string::npos) {
        const size_t end = text.find('"', pos + 1);
        if (end == std::string::npos) break;
        out.push_back(text.substr(pos + 1, end - pos - 1));
        pos = end + 1;
    }
    return out;
}

std::string lower(const std::string& s) {
    std::string out;
    for (const char c : s) out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::string line_after(const std::string& text, const std::string& prefix) {
    const auto pos = text.find(prefix);
    if (pos == std::string::npos) return "";
    const auto eol = text.find('\n', pos);
    return text.substr(pos + prefix.size(),
                       eol == std::string::npos ? std::string::npos : eol - pos - prefix.size());
}

// target object and optional room qualifier from the task sentence
struct TaskQuery {
    std::string target;
    std::string room;
};

TaskQuery parse_task_query(const std::string& task) {
    TaskQuery q;
    const auto quoted = quoted_strings(task);
    if (!quoted.empty()) {
        q.target = lower(quoted[0]);
        if (quoted.size() > 1) q.room = lower(quoted[1]);
        return q;
    }
    // pattern fallback: "is there a <target> in a/the <room>?"
    const std::string t = lower(task);
    const auto there = t.find("there a ");
    if (there != std::string::npos) {
        const size_t start = there + 8;
        const auto in_pos = t.find(" in ", start);
        const auto q_pos = t.find('?', start);
        const size_t end = std::min(in_pos == std::string::npos ? t.size() : in_pos,
                                    q_pos == std::string::npos ? t.size() : q_pos);
        q.target = t.substr(start, end - start);
        if (in_pos != std::string::npos) {
            size_t rstart = in_pos + 4;
            for (const std::string& article : {std::string("a "), std::string("the ")}) {
                if (t.compare(rstart, article.size(), article) == 0) rstart += article.size();
            }
            const auto rend = t.find('?', rstart);
            q.room = t.substr(rstart, rend == std::string::npos ? std::string::npos
                                                                : rend - rstart);
            if (q.room == "the environment" || q.room == "environment") q.room.clear();
        }
    }
    return q;
}

std::set<std::string> parse_tool_listing(const std::string& user) {
    std::set<std::string> tools;
    const auto start = user.find("available tools:\n");
    if (start == std::string::npos) return tools;
    std::istringstream in(user.substr(start + 17));
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line.find(':') != std::string::npos) break;
        tools.insert(line);
    }
    return tools;
}

std::string quote_arg(const std::string& s) { return "\"" + s + "\""; }

std::string build_plan(const TaskQuery& q, bool scene_graph) {
    const std::string target = q.target.empty() ? "target" : q.target;
    if (!scene_graph) {
        return "step 1 \"search\": while explore_frontiers() max 40 do rotate(0) end\n"
               "step 2 \"answer yes\": answer(\"A\")\n"
               "step 3 \"answer no\": answer(\"B\")\n";
    }
    std::string query_args = quote_arg(target);
    if (!q.room.empty()) query_args += ", " + quote_arg(q.room);
    const std::string query = "query_scene_graph(" + query_args + ")";
    return "step 1 \"check\": if " + query + " then answer(\"A\") end\n" +
           "step 2 \"search\": while explore_frontiers() max 40 do if " + query +
           " then answer(\"A\") end end\n" +
           "step 3 \"decide\": if " + query + " then answer(\"A\") else answer(\"B\") end\n";
}

// section body between [name] and the next block header
std::string section_body(const std::string& render, const std::string& name) {
    const std::string header = "[" + name + "]\n";
    const auto start = render.find(header);
    if (start == std::string::npos) return "";
    const auto end = render.find("\n[", start + header.size());
    return render.substr(start + header.size(),
                         end == std::string::npos ? std::string::npos
                                                  : end - start - header.size());
}

struct Sighting {
    std::string label;
    int row = 0;
    int col = 0;
};

// detection lines look like "banjo id=obj4 cell=(2,9) ..." with the label
// bounded by the previous newline, ':' or ';'
std::vector<Sighting> parse_sightings(const std::string& text) {
    std::vector<Sighting> out;
    size_t pos = 0;
    while ((pos = text.find(" id=", pos)) != std::string::npos) {
        size_t label_start = text.find_last_of("\n:;", pos);
        label_start = label_start == std::string::npos ? 0 : label_start + 1;
        std::string label = text.substr(label_start, pos - label_start);
        const auto first = label.find_first_not_of(" \t-");
        label = first == std::string::npos ? "" : label.substr(first);

        const auto cell_pos = text.find("cell=(", pos);
        pos += 4;
        if (cell_pos == std::string::npos || label.empty()) continue;
        Sighting s;
        s.label = label;
        if (std::sscanf(text.c_str() + cell_pos, "cell=(%d,%d)", &s.row, &s.col) == 2)
            out.push_back(std::move(s));
    }
    return out;
}

bool label_mentions(const std::string& label, const std::string& target) {
    if (target.empty()) return false;
    if (label == target) return true;
    std::istringstream in(label);
    std::string tok;
    while (in >> tok)
        if (tok == target) return true;
    return false;
}

std::string memory_update_reply(const std::string& user) {
    const auto memory_pos = user.find("current memory:\n");
    const std::string result_text =
        user.substr(0, memory_pos == std::string::npos ? user.size() : memory_pos);
    const std::string render_text =
        memory_pos == std::string::npos ? "" : user.substr(memory_pos);

    const TaskQuery q = parse_task_query(line_after(render_text, "TASK: "));
    const std::string findings = section_body(render_text, "findings");
    const std::string progress = section_body(render_text, "progress");

    json ops = json::array();
    if (result_text.find("exploration complete") != std::string::npos &&
        progress.find("exploration complete") == std::string::npos) {
        ops.push_back(
            {{"op", "set_section"}, {"name", "progress"}, {"text", "exploration complete"}});
    }

    std::set<std::string> noted;
    for (const Sighting& s : parse_sightings(result_text)) {
        if (!label_mentions(s.label, q.target)) continue;
        if (noted.count(s.label)) continue;
        if (findings.find(s.label + " seen") != std::string::npos) continue;
        noted.insert(s.label);
        ops.push_back({{"op", "add_finding"},
                       {"text", s.label + " seen at (" + std::to_string(s.row) + "," +
                                    std::to_string(s.col) + ")"}});
        ops.push_back({{"op", "add_landmark"},
                       {"name", s.label},
                       {"cell", {s.row, s.col}},
                       {"source", "queried_object"}});
    }
    return ops.dump();
}

std::string select_step_reply(const std::string& user) {
    const TaskQuery q = parse_task_query(line_after(user, "TASK: "));
    const std::string findings = section_body(user, "findings");
    const std::string progress = section_body(user, "progress");

    // plan listing: "  step N: title"
    std::vector<std::pair<int, std::string>> steps;
    std::istringstream in(user);
    std::string line;
    while (std::getline(in, line)) {
        int id = 0;
        char title[128] = {0};
        if (std::sscanf(line.c_str(), "  step %d: %127[^\n]", &id, title) >= 1 && id > 0)
            steps.emplace_back(id, title);
        if (line.rfind("completed steps:", 0) == 0) break;
    }
    std::set<int> completed;
    {
        const std::string completed_line = line_after(user, "completed steps:");
        std::istringstream cin(completed_line);
        std::string tok;
        while (cin >> tok)
            if (tok != "none") completed.insert(std::atoi(tok.c_str()));
    }

    auto find_titled = [&steps](const std::string& title) -> int {
        for (const auto& [id, t] : steps)
            if (t == title) return id;
        return 0;
    };

    const bool target_seen =
        !q.target.empty() && findings.find(q.target + " seen") != std::string::npos;
    const bool explored = progress.find("exploration complete") != std::string::npos;

    if (const int yes_id = find_titled("answer yes"); yes_id && target_seen)
        return "step " + std::to_string(yes_id);
    if (const int no_id = find_titled("answer no"); no_id && explored)
        return "step " + std::to_string(no_id);
    if (const int search_id = find_titled("search");
        search_id && find_titled("answer yes") && !target_seen && !explored)
        return "step " + std::to_string(search_id);

    for (const auto& [id, title] : steps)
        if (!completed.count(id)) return "step " + std::to_string(id);
    return "terminate";
}

}  // namespace

BackendReply OracleBackend::complete(const std::vector<ChatTurn>& turns, const json& tools) {
    if (turns.empty() || turns.front().role != Role::System)
        throw std::logic_error("complete: first turn must be system");
    const std::string marker = prompts::exchange_marker(turns.front().content);
    const std::string& user = turns.back().content;

    std::string reply;
    if (marker == prompts::kTargets) {
        const TaskQuery q = parse_task_query(line_after(user, "task: "));
        reply = q.target.empty() ? "[]" : json::array({q.target}).dump();
    } else if (marker == prompts::kTermination) {
        reply = R"([{"kind":"answer_committed","description":"an answer has been committed"}])";
    } else if (marker == prompts::kStage1 || marker == prompts::kFnStage1) {
        reply = "1";
    } else if (marker == prompts::kStage2 || marker == prompts::kFnStage2) {
        reply = "Check what is already known about the target first; if that does not settle "
                "the question, explore unvisited space until it does, then commit an answer.";
    } else if (marker == prompts::kStage3 || marker == prompts::kFnStage3) {
        reply = "if target already known: answer yes\n"
                "while frontiers remain: explore one frontier; if target known: answer yes\n"
                "answer from final knowledge";
    } else if (marker == prompts::kStage4 || marker == prompts::kCot ||
               marker == prompts::kPlanRepair) {
        const TaskQuery q = parse_task_query(line_after(user, "task: "));
        const auto tool_names = parse_tool_listing(user);
        reply = build_plan(q, tool_names.count("query_scene_graph") > 0);
    } else if (marker == prompts::kFnStage4 || marker == prompts::kFnRepair) {
        reply = "reachable((0,0),(0,0))";
    } else if (marker == prompts::kSelectStep) {
        reply = select_step_reply(user);
    } else if (marker == prompts::kMemoryUpdate) {
        reply = memory_update_reply(user);
    } else if (marker == prompts::kJudgeTermination) {
        reply = "no";
    } else if (marker == prompts::kChooseFrontier) {
        reply = "0";
    } else if (marker == prompts::kRepairArgs) {
        reply = "{}";
    } else {
        reply = "";
    }

    BackendReply out;
    out.text = reply;
    out.usage = approximate_usage(turns, tools, reply);
    return out;
}

}  // namespace navagent
