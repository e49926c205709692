#include "navagent/agentloop.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "navagent/prompts.hpp"

namespace navagent {

using nlohmann::json;

std::string outcome_name(Outcome o) {
    switch (o) {
        case Outcome::Success: return "success";
        case Outcome::Failure: return "failure";
        default: return "inconclusive";
    }
}

std::string cause_name(InconclusiveCause c) {
    switch (c) {
        case InconclusiveCause::TimeLimit: return "time_limit";
        case InconclusiveCause::CostLimit: return "cost_limit";
        default: return "function_call_error";
    }
}

std::string AblationConfig::to_string() const {
    std::string out;
    if (no_scene_graph) out += "nosg,";
    if (no_ogm) out += "noogm,";
    if (no_raster) out += "norp,";
    if (cot_only) out += "cot,";
    if (out.empty()) return "none";
    out.pop_back();
    return out;
}

json TaskSpec::to_json() const {
    json choices_json = json::array();
    for (const auto& [letter, text] : choices)
        choices_json.push_back({{"letter", letter}, {"text", text}});
    return json{{"id", id},
                {"question", question},
                {"choices", std::move(choices_json)},
                {"answer_key", answer_key},
                {"world", world_ref}};
}

TaskSpec TaskSpec::from_json(const json& j) {
    TaskSpec t;
    t.id = j.at("id").get<std::string>();
    t.question = j.at("question").get<std::string>();
    for (const auto& c : j.value("choices", json::array()))
        t.choices.emplace_back(c.at("letter").get<std::string>(), c.at("text").get<std::string>());
    t.answer_key = j.value("answer_key", "");
    t.world_ref = j.value("world", "");
    return t;
}

json TranscriptEvent::to_json() const {
    return json{{"kind", kind}, {"step", step}, {"payload", payload}, {"tokens", tokens}};
}

TranscriptEvent TranscriptEvent::from_json(const json& j) {
    TranscriptEvent e;
    e.kind = j.at("kind").get<std::string>();
    e.step = j.value("step", 0);
    e.payload = j.value("payload", json::object());
    e.tokens = j.value("tokens", 0LL);
    return e;
}

std::string Transcript::to_jsonl() const {
    std::string out;
    for (const auto& e : events) out += e.to_json().dump() + "\n";
    return out;
}

Transcript Transcript::from_jsonl(const std::string& text) {
    Transcript t;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        t.events.push_back(TranscriptEvent::from_json(json::parse(line)));
    }
    return t;
}

int Transcript::count(const std::string& kind) const {
    int n = 0;
    for (const auto& e : events)
        if (e.kind == kind) ++n;
    return n;
}

std::vector<TranscriptEntry> scripted_entries_from_transcript(const Transcript& transcript) {
    std::vector<TranscriptEntry> entries;
    for (const auto& e : transcript.events) {
        if (e.kind != "backend_call") continue;
        TranscriptEntry entry;
        entry.prompt_hash = e.payload.value("prompt_hash", "");
        entry.reply_text = e.payload.value("reply_text", "");
        if (e.payload.contains("reply_tool_calls")) {
            for (const auto& jc : e.payload.at("reply_tool_calls")) {
                ToolCallRequest c;
                c.call_id = jc.value("id", "");
                c.name = jc.at("name").get<std::string>();
                c.args = jc.value("args", json::object());
                entry.tool_calls.push_back(std::move(c));
            }
        }
        entry.usage.prompt_tokens = e.payload.at("usage").value("prompt", 0LL);
        entry.usage.completion_tokens = e.payload.at("usage").value("completion", 0LL);
        entries.push_back(std::move(entry));
    }
    return entries;
}

json EpisodeResult::to_json() const {
    json events = json::array();
    for (const auto& e : transcript.events) events.push_back(e.to_json());
    json j = {{"outcome", outcome_name(outcome)},
              {"path_length_m", path_length_m},
              {"prompt_tokens", prompt_tokens},
              {"completion_tokens", completion_tokens},
              {"transcript", std::move(events)},
              {"final_memory", final_memory}};
    j["cause"] = cause ? json(cause_name(*cause)) : json();
    j["answer"] = answer ? json(*answer) : json();
    return j;
}

std::pair<Outcome, std::optional<InconclusiveCause>> classify_outcome(const OutcomeState& state) {
    if (state.steps_exhausted) return {Outcome::Inconclusive, InconclusiveCause::TimeLimit};
    if (state.cost_exceeded) return {Outcome::Inconclusive, InconclusiveCause::CostLimit};
    if (state.fault_escalated)
        return {Outcome::Inconclusive, InconclusiveCause::FunctionCallError};
    if (state.committed_answer) {
        return {*state.committed_answer == state.answer_key ? Outcome::Success
                                                            : Outcome::Failure,
                std::nullopt};
    }
    // terminated without committing: counts as an incorrect answer
    return {Outcome::Failure, std::nullopt};
}

namespace {

struct BudgetBreach {
    InconclusiveCause cause;
};

struct FaultEscalation {};

struct EpisodeRuntime;

// Wraps the real backend: enforces budgets before every exchange and
// records the exchange (prompt, hash, reply, usage) into the transcript.
class RecordingBackend : public LlmBackend {
public:
    RecordingBackend(LlmBackend& inner, EpisodeRuntime& rt) : inner_(inner), rt_(rt) {}
    BackendReply complete(const std::vector<ChatTurn>& turns, const json& tools) override;
    std::string name() const override { return inner_.name(); }

private:
    LlmBackend& inner_;
    EpisodeRuntime& rt_;
};

struct EpisodeRuntime {
    GridWorld world;
    OccupancyGrid grid;
    SceneGraph graph;
    AgentMemory memory;
    ToolRegistry registry;
    std::vector<Observation> observations;
    Transcript transcript;
    UsageLedger ledger;
    EpisodeConfig cfg;
    TaskSpec task;
    Workflow workflow;

    std::unique_ptr<RecordingBackend> backend;
    ToolContext tool_ctx;

    int steps_used = 0;
    int timestep = 0;
    long long cells_moved = 0;
    long long call_counter = 0;
    int consecutive_faults = 0;
    std::optional<std::string> committed_answer;
    std::set<int> completed_steps;

    RenderOptions render_opts() const {
        return RenderOptions{cfg.ablation.raster_in_render(), cfg.log_tail};
    }

    void event(const std::string& kind, json payload, long long tokens = 0) {
        transcript.events.push_back(
            TranscriptEvent{kind, steps_used, std::move(payload), tokens});
    }

    // step check before each statement / backend exchange
    void charge_step() {
        if (steps_used >= cfg.budgets.max_reasoning_steps)
            throw BudgetBreach{InconclusiveCause::TimeLimit};
        ++steps_used;
    }

    // cost check before each backend call, then the exchange itself counts
    // as one reasoning step
    void pre_backend() {
        if (over_budget(ledger, cfg.budgets)) throw BudgetBreach{InconclusiveCause::CostLimit};
        charge_step();
    }

    void capture_observation(Observation obs) {
        if (cfg.ablation.no_raster) obs.rendered_view.clear();
        if (!cfg.ablation.no_scene_graph)
            graph.upsert_from_observation(obs, workflow.perception_targets);
        event("observation", json{{"t", obs.timestep},
                                  {"pose", {obs.pose_cell.row, obs.pose_cell.col}},
                                  {"visible", obs.visible_cells.size()},
                                  {"detections", obs.detections.size()}});
        observations.push_back(std::move(obs));
    }

    ToolResult dispatch_logged(const ToolCall& call) {
        event("tool_call", json{{"name", call.name}, {"args", call.args}, {"id", call.call_id}});
        ToolResult result = registry.dispatch(call, tool_ctx);
        json payload = {{"id", result.call_id},
                        {"status", tool_status_name(result.status)},
                        {"text", result.text.substr(0, 200)}};
        if (result.nav_goal)
            payload["nav_goal"] = {result.nav_goal->cell.row, result.nav_goal->cell.col};
        event("tool_result", std::move(payload));
        return result;
    }

    // Dispatch with the one-repair-then-fault contract. Consecutive
    // irreparable malformed invocations escalate to FunctionCallError.
    ToolResult run_tool(const std::string& name, json args) {
        ToolCall call{name, std::move(args), "c" + std::to_string(++call_counter)};
        ToolResult result = dispatch_logged(call);
        if (result.status == ToolStatus::ArgError) {
            const json repaired = repair_args(call, result.text);
            if (!repaired.is_null()) {
                ToolCall retry{name, repaired, call.call_id + "r"};
                result = dispatch_logged(retry);
            }
        }
        if (result.status == ToolStatus::ArgError) {
            if (++consecutive_faults >= cfg.fault_threshold) {
                event("fault_escalation",
                      json{{"consecutive", consecutive_faults}, {"last", result.text}});
                throw FaultEscalation{};
            }
        } else {
            consecutive_faults = 0;
        }
        return result;
    }

    // One backend round-trip asking for corrected arguments.
    json repair_args(const ToolCall& call, const std::string& violation) {
        const ToolSchema* schema = registry.schema(call.name);
        std::string description = "tool: " + call.name + "\n";
        if (schema) description += "schema: " + describe_tool(*schema).dump() + "\n";
        description += "arguments: " + call.args.dump() + "\nproblem: " + violation +
                       "\nReply with a corrected JSON arguments object only.";
        const std::vector<ChatTurn> turns = {
            ChatTurn::system(prompts::system_prompt(prompts::kRepairArgs,
                                                    "A tool invocation was malformed. Repair "
                                                    "the arguments.")),
            ChatTurn::user(description)};
        const BackendReply reply = backend->complete(turns, json::array());
        const auto lo = reply.text.find('{');
        const auto hi = reply.text.rfind('}');
        if (lo == std::string::npos || hi == std::string::npos || hi < lo) return json();
        const json parsed = json::parse(reply.text.substr(lo, hi - lo + 1), nullptr, false);
        return parsed.is_object() ? parsed : json();
    }
};

BackendReply RecordingBackend::complete(const std::vector<ChatTurn>& turns, const json& tools) {
    rt_.pre_backend();
    BackendReply reply = inner_.complete(turns, tools);
    rt_.ledger.record(reply.usage);

    json payload = {{"marker", prompts::exchange_marker(turns.front().content)},
                    {"prompt", canonical_request(turns, tools)},
                    {"prompt_hash", prompt_hash(turns, tools)},
                    {"reply_text", reply.text},
                    {"usage",
                     {{"prompt", reply.usage.prompt_tokens},
                      {"completion", reply.usage.completion_tokens}}}};
    if (!reply.tool_calls.empty()) {
        json calls = json::array();
        for (const auto& c : reply.tool_calls)
            calls.push_back({{"id", c.call_id}, {"name", c.name}, {"args", c.args}});
        payload["reply_tool_calls"] = std::move(calls);
    }
    rt_.event("backend_call", std::move(payload),
              reply.usage.prompt_tokens + reply.usage.completion_tokens);
    return reply;
}

// ---- plan interpretation ----

json plan_arg_to_json(const PlanArg& arg, const EpisodeRuntime& rt, bool want_integer) {
    switch (arg.kind) {
        case PlanArg::Kind::String: return arg.text;
        case PlanArg::Kind::Number:
            if (want_integer && arg.number == std::floor(arg.number))
                return static_cast<long long>(arg.number);
            return arg.number;
        case PlanArg::Kind::Boolean: return arg.boolean;
        case PlanArg::Kind::MemRef: {
            if (arg.text == "task") return rt.memory.task();
            for (const auto& [name, text] : rt.memory.sections())
                if (name == arg.text) return text;
            return json();  // unknown section: fails validation downstream
        }
        default: return json::array({arg.cell.row, arg.cell.col});
    }
}

json bind_call_args(const CallStmt& call, const EpisodeRuntime& rt) {
    const ToolSchema* schema = rt.registry.schema(call.name);
    json args = json::object();
    for (size_t i = 0; i < call.args.size(); ++i) {
        std::string key;
        bool want_integer = false;
        if (schema && i < schema->params.size()) {
            key = schema->params[i].name;
            want_integer = schema->params[i].type == WireType::Integer;
        } else {
            key = "arg" + std::to_string(i);
        }
        args[key] = plan_arg_to_json(call.args[i], rt, want_integer);
    }
    return args;
}

std::string stmt_brief(const Stmt& stmt) {
    const std::string text = serialize_statements({stmt});
    return text.substr(0, std::min<size_t>(text.size() - 1, 120));  // drop trailing newline
}

// Nested executor for reasoning-function bodies. Navigation goals cannot
// occur (rejected at registration), so this never suspends.
ToolResult run_fn_body(const std::vector<Stmt>& stmts, EpisodeRuntime& rt);

ToolResult run_fn_stmt(const Stmt& stmt, EpisodeRuntime& rt) {
    if (const auto* call = std::get_if<CallStmt>(&stmt.node)) {
        rt.charge_step();
        rt.event("statement", json{{"text", stmt_brief(stmt)}, {"scope", "fn"}});
        ToolResult r = rt.run_tool(call->name, bind_call_args(*call, rt));
        if (r.nav_goal) {
            r = ToolResult{};
            r.status = ToolStatus::RuntimeError;
            r.text = "navigation goals are not allowed inside reasoning functions";
        }
        return r;
    }
    if (const auto* ans = std::get_if<AnswerStmt>(&stmt.node)) {
        rt.charge_step();
        rt.event("statement", json{{"text", stmt_brief(stmt)}, {"scope", "fn"}});
        ToolResult r;
        r.text = ans->choice;
        r.value = ans->choice;
        r.truthy_override = true;
        return r;
    }
    if (const auto* ifs = std::get_if<IfStmt>(&stmt.node)) {
        rt.charge_step();
        const ToolResult cond = rt.run_tool(ifs->cond.name, bind_call_args(ifs->cond, rt));
        return run_fn_body(tool_result_truthy(cond) ? ifs->then_body : ifs->else_body, rt);
    }
    const auto& wh = std::get<WhileStmt>(stmt.node);
    ToolResult last;
    last.text = "loop finished";
    for (int i = 0; i < wh.max_iters; ++i) {
        rt.charge_step();
        const ToolResult cond = rt.run_tool(wh.cond.name, bind_call_args(wh.cond, rt));
        if (!tool_result_truthy(cond)) break;
        last = run_fn_body(wh.body, rt);
    }
    return last;
}

ToolResult run_fn_body(const std::vector<Stmt>& stmts, EpisodeRuntime& rt) {
    ToolResult last;
    last.text = "done";
    for (const Stmt& s : stmts) last = run_fn_stmt(s, rt);
    return last;
}

class StepInterpreter {
public:
    struct Outcome {
        enum class Kind { Done, NavGoal, Answered };
        Kind kind = Kind::Done;
        NavGoal goal;
        std::string answer;
        std::string last_text;
    };

    StepInterpreter(const PlanStep& step, EpisodeRuntime& rt) : rt_(rt) {
        stack_.push_back(Frame::seq(&step.body));
        last_text_ = "step executed";
    }

    Outcome run() { return loop(); }

    Outcome resume(bool nav_reached) {
        switch (pending_) {
            case Pending::StmtCall: {
                last_text_ = nav_reached ? "navigation reached the goal"
                                         : "navigation was blocked";
                seq_top().pc += 1;
                break;
            }
            case Pending::IfCond:
                stack_.push_back(
                    Frame::seq(nav_reached ? &pending_if_->then_body : &pending_if_->else_body));
                break;
            case Pending::WhileCond:
                if (nav_reached)
                    stack_.push_back(Frame::seq(&stack_.back().loop->body));
                else
                    pop_frame();
                break;
            case Pending::None:
                throw std::logic_error("resume without a pending navigation goal");
        }
        pending_ = Pending::None;
        pending_if_ = nullptr;
        return loop();
    }

private:
    struct Frame {
        enum class Kind { Seq, While } kind = Kind::Seq;
        const std::vector<Stmt>* stmts = nullptr;
        size_t pc = 0;
        const WhileStmt* loop = nullptr;
        int evals = 0;

        static Frame seq(const std::vector<Stmt>* stmts) {
            Frame f;
            f.kind = Kind::Seq;
            f.stmts = stmts;
            return f;
        }
        static Frame while_loop(const WhileStmt* loop) {
            Frame f;
            f.kind = Kind::While;
            f.loop = loop;
            return f;
        }
    };

    enum class Pending { None, StmtCall, IfCond, WhileCond };

    Frame& seq_top() { return stack_.back(); }

    void pop_frame() {
        const Frame finished = stack_.back();
        stack_.pop_back();
        if (stack_.empty()) return;
        Frame& parent = stack_.back();
        // a finished if-branch or while statement completes the parent's
        // current statement; a finished while *body* just hands control
        // back to the loop for the next condition evaluation
        if (parent.kind == Frame::Kind::Seq && finished.kind == Frame::Kind::Seq)
            ++parent.pc;
        if (parent.kind == Frame::Kind::Seq && finished.kind == Frame::Kind::While)
            ++parent.pc;
    }

    // Returns the completed result, or nullopt when suspended on a
    // navigation goal (pending_goal_ holds the goal).
    std::optional<ToolResult> eval_call(const CallStmt& call, const char* scope) {
        rt_.charge_step();
        rt_.event("statement", json{{"text", call.name}, {"scope", scope}});
        ToolResult result = rt_.run_tool(call.name, bind_call_args(call, rt_));
        if (result.nav_goal) {
            pending_goal_ = *result.nav_goal;
            return std::nullopt;
        }
        if (!result.text.empty()) last_text_ = result.text;
        return result;
    }

    Outcome loop() {
        while (!stack_.empty()) {
            Frame& f = stack_.back();
            if (f.kind == Frame::Kind::While) {
                if (f.evals >= f.loop->max_iters) {
                    pop_frame();
                    continue;
                }
                ++f.evals;
                const auto cond = eval_call(f.loop->cond, "while-cond");
                if (!cond) {
                    pending_ = Pending::WhileCond;
                    return Outcome{Outcome::Kind::NavGoal, pending_goal_, "", last_text_};
                }
                if (tool_result_truthy(*cond))
                    stack_.push_back(Frame::seq(&f.loop->body));
                else
                    pop_frame();
                continue;
            }

            if (f.pc >= f.stmts->size()) {
                pop_frame();
                continue;
            }
            const Stmt& stmt = (*f.stmts)[f.pc];

            if (const auto* call = std::get_if<CallStmt>(&stmt.node)) {
                const auto result = eval_call(*call, "stmt");
                if (!result) {
                    pending_ = Pending::StmtCall;
                    return Outcome{Outcome::Kind::NavGoal, pending_goal_, "", last_text_};
                }
                if (result->text.empty()) last_text_ = tool_status_name(result->status);
                ++f.pc;
                continue;
            }
            if (const auto* ans = std::get_if<AnswerStmt>(&stmt.node)) {
                rt_.charge_step();
                rt_.event("statement", json{{"text", stmt_brief(stmt)}, {"scope", "stmt"}});
                return Outcome{Outcome::Kind::Answered, NavGoal{}, ans->choice, last_text_};
            }
            if (const auto* ifs = std::get_if<IfStmt>(&stmt.node)) {
                const auto cond = eval_call(ifs->cond, "if-cond");
                if (!cond) {
                    pending_ = Pending::IfCond;
                    pending_if_ = ifs;
                    return Outcome{Outcome::Kind::NavGoal, pending_goal_, "", last_text_};
                }
                stack_.push_back(Frame::seq(tool_result_truthy(*cond) ? &ifs->then_body
                                                                      : &ifs->else_body));
                continue;
            }
            const auto& wh = std::get<WhileStmt>(stmt.node);
            stack_.push_back(Frame::while_loop(&wh));
        }
        return Outcome{Outcome::Kind::Done, NavGoal{}, "", last_text_};
    }

    EpisodeRuntime& rt_;
    std::vector<Frame> stack_;
    Pending pending_ = Pending::None;
    const IfStmt* pending_if_ = nullptr;
    NavGoal pending_goal_;
    std::string last_text_;
};

struct NavOutcome {
    bool reached = false;
    std::vector<Observation> obs_seq;
};

NavOutcome navigate(EpisodeRuntime& rt, const NavGoal& goal) {
    NavOutcome out;
    int replans = 0;
    int moved = 0;
    std::string status = "blocked";

    const Cell start = rt.world.robot_cell();
    const auto path = astar(rt.grid, start, goal.cell, goal.optimistic);
    if (path) {
        FollowConfig fc;
        fc.fov_deg = rt.cfg.sensor.fov_deg;
        fc.range_m = rt.cfg.sensor.range_m;
        fc.max_replans = rt.cfg.max_replans;
        fc.optimistic = goal.optimistic;
        FollowResult fr = follow_path(rt.world, rt.grid, *path, fc, rt.timestep);
        for (Observation& obs : fr.obs_seq) {
            rt.capture_observation(obs);
            out.obs_seq.push_back(rt.observations.back());
        }
        out.reached = fr.status == NavStatus::Reached;
        status = out.reached ? "reached" : "blocked";
        replans = fr.replans;
        moved = fr.cells_moved;
        rt.cells_moved += fr.cells_moved;
    }

    rt.memory.append_log(LogKind::Nav,
                         "moved " + std::to_string(moved) + " cell(s) toward " +
                             to_string(goal.cell) + ": " + status,
                         0);
    rt.event("nav", json{{"goal", {goal.cell.row, goal.cell.col}},
                         {"optimistic", goal.optimistic},
                         {"status", status},
                         {"cells_moved", moved},
                         {"replans", replans},
                         {"observations", out.obs_seq.size()}});
    return out;
}

}  // namespace

StepChoice select_step(LlmBackend& backend, const Workflow& workflow,
                       const std::set<int>& completed, AgentMemory& memory,
                       const OccupancyGrid& grid, const Cell& robot,
                       const RenderOptions& render_opts) {
    std::string listing = "plan:\n";
    for (const PlanStep& step : workflow.plan)
        listing += "  step " + std::to_string(step.id) + ": " + step.title + "\n";
    listing += "completed steps:";
    if (completed.empty()) listing += " none";
    for (const int id : completed) listing += " " + std::to_string(id);
    listing += "\nmemory:\n" + render(memory, grid, robot, render_opts);
    listing += "\nReply with 'step N', 'repeat N', or 'terminate'.";

    auto parse_reply = [&workflow, &completed](const std::string& text)
        -> std::optional<StepChoice> {
        std::string lower;
        for (const char c : text)
            lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        if (lower.find("terminate") != std::string::npos)
            return StepChoice{StepChoice::Kind::InvokeTermination, 0};
        for (size_t i = 0; i < lower.size(); ++i) {
            if (!std::isdigit(static_cast<unsigned char>(lower[i]))) continue;
            size_t end = i;
            while (end < lower.size() && std::isdigit(static_cast<unsigned char>(lower[end])))
                ++end;
            const int id = std::atoi(lower.substr(i, end - i).c_str());
            for (const PlanStep& step : workflow.plan) {
                if (step.id == id)
                    return StepChoice{completed.count(id) ? StepChoice::Kind::Repeat
                                                          : StepChoice::Kind::StepId,
                                      id};
            }
            return std::nullopt;  // integer present but not a valid step id
        }
        return std::nullopt;
    };

    for (int attempt = 0; attempt < 2; ++attempt) {
        std::string user = listing;
        if (attempt == 1) user += "\nYour previous reply could not be parsed. Reply exactly as instructed.";
        const std::vector<ChatTurn> turns = {
            ChatTurn::system(prompts::system_prompt(
                prompts::kSelectStep,
                "Choose the next plan step given your progress. Steps may be repeated or "
                "executed out of order.")),
            ChatTurn::user(user)};
        const BackendReply reply = backend.complete(turns, json::array());
        const auto choice = parse_reply(reply.text);
        if (choice) return *choice;
    }

    // fallback: lowest not-yet-completed step
    for (const PlanStep& step : workflow.plan)
        if (!completed.count(step.id)) return StepChoice{StepChoice::Kind::StepId, step.id};
    return StepChoice{StepChoice::Kind::InvokeTermination, 0};
}

EpisodeResult run_episode(const GridWorld& world, const TaskSpec& task, LlmBackend& backend,
                          const EpisodeConfig& config) {
    EpisodeRuntime rt;
    rt.world = world;
    rt.grid = OccupancyGrid(world.width, world.height, world.resolution);
    rt.graph = SceneGraph(world.width, world.height, world.resolution);
    if (!config.ablation.no_scene_graph) {
        // region layer comes from the world file (room segmentation stand-in)
        for (const Room& room : world.rooms) rt.graph.add_region(room.id, room.label, room.rect);
    }
    rt.memory = init_memory(task.question);
    rt.registry = make_standard_registry(StandardToolOptions{!config.ablation.no_scene_graph});
    rt.cfg = config;
    rt.task = task;
    rt.backend = std::make_unique<RecordingBackend>(backend, rt);
    rt.tool_ctx = ToolContext{&rt.world,
                              &rt.grid,
                              config.ablation.no_scene_graph ? nullptr : &rt.graph,
                              &rt.memory,
                              rt.backend.get(),
                              &rt.observations};

    rt.event("episode_start",
             json{{"task", task.to_json()},
                  {"world", serialize_world(world)},
                  {"backend", backend.name()},
                  {"prompts_version", prompts::kVersion},
                  {"config",
                   {{"budgets",
                     {{"max_reasoning_steps", config.budgets.max_reasoning_steps},
                      {"max_cost", config.budgets.max_cost},
                      {"rate_in_per_mtok", config.budgets.rate_in_per_mtok},
                      {"rate_out_per_mtok", config.budgets.rate_out_per_mtok}}},
                    {"ablation", config.ablation.to_string()},
                    {"sensor",
                     {{"fov_deg", config.sensor.fov_deg}, {"range_m", config.sensor.range_m}}},
                    {"max_replans", config.max_replans},
                    {"fault_threshold", config.fault_threshold}}}});

    OutcomeState state;
    state.answer_key = task.answer_key;

    const auto fn_factory = [&rt](const ReasoningFn& fn) -> ToolHandler {
        const auto body = std::make_shared<std::vector<Stmt>>(fn.body);
        EpisodeRuntime* runtime = &rt;
        return [body, runtime](const json&, ToolContext&) -> ToolResult {
            return run_fn_body(*body, *runtime);
        };
    };

    try {
        GenerationConfig gen_cfg;
        gen_cfg.cot_only = config.ablation.cot_only;
        rt.workflow =
            generate_workflow(*rt.backend, task.question, rt.registry, gen_cfg, fn_factory);
        rt.memory.append_log(LogKind::WorkflowEvent,
                             "workflow generated: " +
                                 std::to_string(rt.workflow.plan.size()) + " step(s)",
                             0);
        json fn_names = json::array();
        for (const auto& [name, fn] : rt.workflow.generated_functions) fn_names.push_back(name);
        json terminations = json::array();
        for (const auto& t : rt.workflow.terminations)
            terminations.push_back(
                {{"kind", t.kind == TerminationCondition::Kind::AnswerCommitted
                              ? "answer_committed"
                              : "backend_judged"},
                 {"description", t.description}});
        rt.event("workflow_generated", json{{"targets", rt.workflow.perception_targets},
                                            {"terminations", std::move(terminations)},
                                            {"plan", serialize_plan(rt.workflow.plan)},
                                            {"generated_functions", std::move(fn_names)}});

        // bootstrap perception so frontier exploration has a seed belief
        Observation first = observe(rt.world, config.sensor.fov_deg, config.sensor.range_m,
                                    rt.timestep++);
        integrate(rt.grid, first);
        rt.capture_observation(std::move(first));
        rt.memory.append_log(LogKind::WorkflowEvent, "initial observation integrated", 0);

        for (;;) {
            const TerminationOutcome term = check_termination(
                rt.workflow, rt.committed_answer, rt.memory, rt.grid, rt.world.robot_cell(),
                *rt.backend, rt.render_opts());
            rt.event("termination_check",
                     json{{"terminate", term.terminate},
                          {"answer", term.answer ? json(*term.answer) : json()}});
            if (term.terminate) break;

            const StepChoice choice =
                select_step(*rt.backend, rt.workflow, rt.completed_steps, rt.memory, rt.grid,
                            rt.world.robot_cell(), rt.render_opts());
            rt.event("step_selected",
                     json{{"kind", choice.kind == StepChoice::Kind::StepId ? "step"
                                   : choice.kind == StepChoice::Kind::Repeat ? "repeat"
                                                                             : "terminate"},
                          {"id", choice.id}});
            if (choice.kind == StepChoice::Kind::InvokeTermination) {
                const TerminationOutcome invoked = check_termination(
                    rt.workflow, rt.committed_answer, rt.memory, rt.grid,
                    rt.world.robot_cell(), *rt.backend, rt.render_opts());
                rt.event("termination_check",
                         json{{"terminate", invoked.terminate},
                              {"answer", invoked.answer ? json(*invoked.answer) : json()}});
                if (invoked.terminate) break;
                continue;
            }

            const PlanStep* step = nullptr;
            for (const PlanStep& s : rt.workflow.plan)
                if (s.id == choice.id) step = &s;
            if (!step) continue;

            StepInterpreter interp(*step, rt);
            StepInterpreter::Outcome outcome = interp.run();
            for (;;) {
                std::string summary;
                switch (outcome.kind) {
                    case StepInterpreter::Outcome::Kind::NavGoal:
                        summary = "step " + std::to_string(step->id) +
                                  " issued navigation goal " + to_string(outcome.goal.cell);
                        break;
                    case StepInterpreter::Outcome::Kind::Answered:
                        summary = "step " + std::to_string(step->id) + " committed answer \"" +
                                  outcome.answer + "\"";
                        break;
                    default:
                        summary = "step " + std::to_string(step->id) + " (" + step->title +
                                  ") completed; last result: " + outcome.last_text;
                }
                const ApplyUpdateOutcome upd =
                    apply_update(rt.memory, *rt.backend, summary, rt.grid,
                                 rt.world.robot_cell(), rt.render_opts());
                rt.event("memory_update", json{{"applied", upd.applied},
                                               {"ops", upd.op_count},
                                               {"error", upd.error}});

                if (outcome.kind != StepInterpreter::Outcome::Kind::NavGoal) break;

                const NavOutcome nav = navigate(rt, outcome.goal);
                const std::string obs_text = summarize_obs_seq(
                    nav.obs_seq, rt.cfg.ablation.no_raster);
                const ApplyUpdateOutcome nav_upd =
                    apply_update(rt.memory, *rt.backend, obs_text, rt.grid,
                                 rt.world.robot_cell(), rt.render_opts());
                rt.event("memory_update", json{{"applied", nav_upd.applied},
                                               {"ops", nav_upd.op_count},
                                               {"error", nav_upd.error}});
                outcome = interp.resume(nav.reached);
            }

            rt.completed_steps.insert(step->id);
            if (outcome.kind == StepInterpreter::Outcome::Kind::Answered) {
                rt.committed_answer = outcome.answer;
                rt.memory.append_log(LogKind::WorkflowEvent,
                                     "answer committed: " + outcome.answer, 0);
                rt.event("answer_committed", json{{"choice", outcome.answer}});
            }
        }
    } catch (const BudgetBreach& breach) {
        rt.event("budget_breach", json{{"cause", cause_name(breach.cause)}});
        if (breach.cause == InconclusiveCause::TimeLimit) state.steps_exhausted = true;
        else state.cost_exceeded = true;
    } catch (const FaultEscalation&) {
        state.fault_escalated = true;
    } catch (const WorkflowGenerationError& e) {
        rt.event("generation_failed",
                 json{{"stage", e.stage}, {"error", e.what()},
                      {"raw", e.raw_output.substr(0, 400)}});
        state.fault_escalated = true;
    } catch (const TransportError& e) {
        rt.event("transport_failed", json{{"error", e.what()}});
        state.fault_escalated = true;
    }

    state.committed_answer = rt.committed_answer;

    EpisodeResult result;
    const auto [outcome, cause] = classify_outcome(state);
    result.outcome = outcome;
    result.cause = cause;
    if (outcome != Outcome::Inconclusive)
        result.answer = rt.committed_answer ? *rt.committed_answer : std::string();
    result.path_length_m = static_cast<double>(rt.cells_moved) * world.resolution;
    result.prompt_tokens = rt.ledger.prompt_tokens();
    result.completion_tokens = rt.ledger.completion_tokens();
    result.final_memory = rt.memory.to_json();

    rt.event("episode_end",
             json{{"outcome", outcome_name(result.outcome)},
                  {"cause", result.cause ? json(cause_name(*result.cause)) : json()},
                  {"answer", result.answer ? json(*result.answer) : json()},
                  {"path_length_m", result.path_length_m},
                  {"prompt_tokens", result.prompt_tokens},
                  {"completion_tokens", result.completion_tokens},
                  {"scene_graph", rt.graph.to_json()}});
    result.transcript = std::move(rt.transcript);
    return result;
}

}  // namespace navagent
