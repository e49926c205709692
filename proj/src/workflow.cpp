#include "navagent/workflow.hpp"

#include <algorithm>

#include "navagent/prompts.hpp"

namespace navagent {

using nlohmann::json;

namespace {

std::string strip_fences(const std::string& text) {
    const auto fence = text.find("```");
    if (fence == std::string::npos) return text;
    const auto start = text.find('\n', fence);
    if (start == std::string::npos) return text;
    const auto end = text.find("```", start);
    if (end == std::string::npos) return text;
    return text.substr(start + 1, end - start - 1);
}

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

BackendReply exchange(LlmBackend& backend, const std::string& marker,
                      const std::string& instructions, const std::string& user,
                      const json& tools = json::array()) {
    const std::vector<ChatTurn> turns = {
        ChatTurn::system(prompts::system_prompt(marker, instructions)), ChatTurn::user(user)};
    return backend.complete(turns, tools);
}

std::vector<std::string> parse_label_list(const std::string& reply) {
    const std::string text = strip_fences(reply);
    const auto lo = text.find('[');
    const auto hi = text.rfind(']');
    if (lo != std::string::npos && hi != std::string::npos && hi > lo) {
        const json parsed = json::parse(text.substr(lo, hi - lo + 1), nullptr, false);
        if (parsed.is_array()) {
            std::vector<std::string> out;
            for (const auto& e : parsed)
                if (e.is_string()) out.push_back(normalize_label(e.get<std::string>()));
            return out;
        }
    }
    // fallback: comma/newline separated words
    std::vector<std::string> out;
    std::string cur;
    for (const char c : text + ",") {
        if (c == ',' || c == '\n') {
            const std::string t = normalize_label(trim(cur));
            if (!t.empty()) out.push_back(t);
            cur.clear();
        } else {
            cur += c;
        }
    }
    return out;
}

std::vector<TerminationCondition> parse_terminations(const std::string& reply) {
    std::vector<TerminationCondition> out;
    const std::string text = strip_fences(reply);
    const auto lo = text.find('[');
    const auto hi = text.rfind(']');
    if (lo != std::string::npos && hi != std::string::npos && hi > lo) {
        const json parsed = json::parse(text.substr(lo, hi - lo + 1), nullptr, false);
        if (parsed.is_array()) {
            for (const auto& e : parsed) {
                if (!e.is_object()) continue;
                TerminationCondition cond;
                cond.description = e.value("description", "");
                cond.kind = e.value("kind", "answer_committed") == "backend_judged"
                                ? TerminationCondition::Kind::BackendJudged
                                : TerminationCondition::Kind::AnswerCommitted;
                out.push_back(std::move(cond));
            }
        }
    }
    const bool has_committed =
        std::any_of(out.begin(), out.end(), [](const TerminationCondition& c) {
            return c.kind == TerminationCondition::Kind::AnswerCommitted;
        });
    if (!has_committed)
        out.push_back(TerminationCondition{TerminationCondition::Kind::AnswerCommitted,
                                           "an answer has been committed"});
    return out;
}

std::string tool_name_listing(const ToolRegistry& registry) {
    std::string out;
    for (const auto& desc : registry.describe_all())
        out += desc.at("function").at("name").get<std::string>() + "\n";
    return out;
}

std::string diagnostics_text(const std::vector<PlanDiagnostic>& diags) {
    std::string out;
    for (const auto& d : diags) out += d.to_string() + "\n";
    return out;
}

struct UnknownTools {
    std::vector<std::string> generated;  // gen_ prefixed, to synthesize
    std::vector<std::string> missing;    // anything else unknown
};

UnknownTools find_unknown_tools(const std::vector<PlanStep>& steps,
                                const ToolRegistry& registry) {
    UnknownTools out;
    for (const PlanStep& step : steps) {
        for (const std::string& name : collect_tool_names(step.body)) {
            if (registry.has(name)) continue;
            if (name.rfind("gen_", 0) == 0)
                out.generated.push_back(name);
            else
                out.missing.push_back(name);
        }
    }
    return out;
}

void enforce_execution_bound(const std::vector<PlanStep>& steps, long long limit) {
    long long total = 0;
    for (const PlanStep& step : steps) total += static_execution_bound(step.body);
    if (total > limit)
        throw WorkflowGenerationError(
            4, serialize_plan(steps),
            "plan static execution bound " + std::to_string(total) + " exceeds limit " +
                std::to_string(limit));
}

}  // namespace

ReasoningFn generate_reasoning_function(LlmBackend& backend, const std::string& name,
                                        const std::string& purpose, ToolRegistry& registry,
                                        const FnHandlerFactory& fn_factory, int depth) {
    if (name.rfind("gen_", 0) != 0)
        throw ContractViolation("reasoning function name '" + name +
                                "' must carry the gen_ prefix");
    if (depth > 2) throw WorkflowGenerationError(4, "", "generation depth exceeded");
    if (registry.has(name))
        throw ContractViolation("reasoning function name '" + name + "' already registered");

    const std::string scope = "function " + name + ": " + purpose;
    std::string strategies;
    for (size_t i = 0; i < prompts::strategy_set().size(); ++i)
        strategies += std::to_string(i) + ": " + prompts::strategy_set()[i] + "\n";

    const BackendReply s1 = exchange(
        backend, prompts::kFnStage1,
        "Select the problem-solving strategy best suited to implementing this helper.\nReply "
        "with the index only.",
        scope + "\nstrategies:\n" + strategies);
    const size_t idx =
        std::min<size_t>(prompts::strategy_set().size() - 1,
                         static_cast<size_t>(std::max(0, atoi(s1.text.c_str()))));

    const BackendReply s2 =
        exchange(backend, prompts::kFnStage2, "Adapt the chosen strategy to this helper.",
                 scope + "\nstrategy: " + prompts::strategy_set()[idx]);

    const BackendReply s3 = exchange(backend, prompts::kFnStage3,
                                     "Write short pseudocode for the helper.",
                                     scope + "\nadapted strategy:\n" + s2.text);

    const std::string implement_user = scope + "\navailable tools:\n" +
                                       tool_name_listing(registry) + "pseudocode:\n" + s3.text +
                                       "\n" + prompts::plan_language_help() +
                                       "Reply with the statement body only (no step headers).";
    BackendReply s4 = exchange(backend, prompts::kFnStage4,
                               "Implement the helper as plan-language statements.",
                               implement_user, registry.describe_all_json());

    auto parse_and_check = [&](const std::string& text) -> std::pair<std::vector<Stmt>, std::string> {
        ParseStmtsResult parsed = parse_statements(strip_fences(text));
        if (!parsed.ok()) return {{}, diagnostics_text(parsed.diagnostics)};
        for (const std::string& tool : collect_tool_names(parsed.stmts)) {
            if (tool.rfind("gen_", 0) == 0 && !registry.has(tool)) {
                generate_reasoning_function(backend, tool,
                                            "helper required by " + name, registry, fn_factory,
                                            depth + 1);
            }
            if (!registry.has(tool)) return {{}, "unknown tool '" + tool + "'"};
            if (registry.schema(tool)->category == ToolCategory::Navigation)
                return {{}, "reasoning function may not call navigation tool '" + tool + "'"};
        }
        return {std::move(parsed.stmts), ""};
    };

    auto [body, error] = parse_and_check(s4.text);
    if (!error.empty()) {
        const BackendReply repaired = exchange(
            backend, prompts::kFnRepair,
            "Your previous implementation was rejected. Fix it.",
            implement_user + "\nprevious output:\n" + s4.text + "\nproblems:\n" + error,
            registry.describe_all_json());
        auto [body2, error2] = parse_and_check(repaired.text);
        if (!error2.empty())
            throw WorkflowGenerationError(4, repaired.text,
                                          "reasoning function generation failed: " + error2);
        body = std::move(body2);
    }

    ReasoningFn fn;
    fn.name = name;
    fn.doc = purpose;
    fn.body = std::move(body);

    ToolHandler handler;
    if (fn_factory) {
        handler = fn_factory(fn);
    } else {
        handler = [](const json&, ToolContext&) -> ToolResult {
            ToolResult r;
            r.status = ToolStatus::RuntimeError;
            r.text = "no interpreter bound for generated functions";
            return r;
        };
    }
    registry.register_tool(ToolSchema{fn.name, fn.doc, {}, "value", ToolCategory::Reasoning},
                           std::move(handler));
    return fn;
}

Workflow generate_workflow(LlmBackend& backend, const std::string& task, ToolRegistry& registry,
                           const GenerationConfig& config, const FnHandlerFactory& fn_factory) {
    Workflow wf;

    if (config.cot_only) {
        const std::string user = "task: " + task + "\navailable tools:\n" +
                                 tool_name_listing(registry) + prompts::plan_language_help() +
                                 "Think step by step, then output only the plan.";
        const BackendReply reply =
            exchange(backend, prompts::kCot, "Write a complete plan for the task.", user,
                     registry.describe_all_json());
        ParsePlanResult parsed = parse_plan(strip_fences(reply.text));
        if (!parsed.ok())
            throw WorkflowGenerationError(0, reply.text,
                                          "chain-of-thought plan failed to parse: " +
                                              diagnostics_text(parsed.diagnostics));
        wf.plan = std::move(parsed.steps);
        wf.terminations.push_back(TerminationCondition{
            TerminationCondition::Kind::AnswerCommitted, "an answer has been committed"});
        const UnknownTools unknown = find_unknown_tools(wf.plan, registry);
        if (!unknown.generated.empty() || !unknown.missing.empty())
            throw WorkflowGenerationError(0, reply.text,
                                          "chain-of-thought plan uses unknown tools");
        enforce_execution_bound(wf.plan, config.max_execution_bound);
        return wf;
    }

    // zero-shot components
    const BackendReply targets = exchange(
        backend, prompts::kTargets,
        "Identify the objects worth perceiving for this task.\nReply with a JSON array of "
        "lowercase object labels (empty array = perceive everything).",
        "task: " + task);
    wf.perception_targets = parse_label_list(targets.text);

    const BackendReply termination = exchange(
        backend, prompts::kTermination,
        "Define the termination conditions for this task.\nReply with a JSON array of "
        "{\"kind\": \"answer_committed\"|\"backend_judged\", \"description\": \"...\"}.",
        "task: " + task);
    wf.terminations = parse_terminations(termination.text);

    // four-stage plan pipeline
    std::string strategies;
    for (size_t i = 0; i < prompts::strategy_set().size(); ++i)
        strategies += std::to_string(i) + ": " + prompts::strategy_set()[i] + "\n";
    const BackendReply s1 = exchange(backend, prompts::kStage1,
                                     "Select the problem-solving strategy best suited to the "
                                     "task.\nReply with the index only.",
                                     "task: " + task + "\nstrategies:\n" + strategies);
    const size_t idx =
        std::min<size_t>(prompts::strategy_set().size() - 1,
                         static_cast<size_t>(std::max(0, atoi(s1.text.c_str()))));

    const BackendReply s2 =
        exchange(backend, prompts::kStage2, "Adapt the chosen strategy to the task.",
                 "task: " + task + "\nstrategy: " + prompts::strategy_set()[idx]);

    const BackendReply s3 =
        exchange(backend, prompts::kStage3, "Write short pseudocode for the plan.",
                 "task: " + task + "\nadapted strategy:\n" + s2.text);

    const std::string implement_user = "task: " + task + "\navailable tools:\n" +
                                       tool_name_listing(registry) + "pseudocode:\n" + s3.text +
                                       "\n" + prompts::plan_language_help() +
                                       "Reply with the plan only.";
    const BackendReply s4 =
        exchange(backend, prompts::kStage4, "Implement the plan in the plan language.",
                 implement_user, registry.describe_all_json());

    auto process = [&](const std::string& text) -> std::pair<std::vector<PlanStep>, std::string> {
        ParsePlanResult parsed = parse_plan(strip_fences(text));
        if (!parsed.ok()) return {{}, diagnostics_text(parsed.diagnostics)};
        UnknownTools unknown = find_unknown_tools(parsed.steps, registry);
        for (const std::string& gen_name : unknown.generated) {
            if (registry.has(gen_name)) continue;
            const ReasoningFn fn = generate_reasoning_function(
                backend, gen_name, "helper required by the task: " + task, registry, fn_factory,
                1);
            wf.generated_functions[fn.name] = fn;
        }
        unknown = find_unknown_tools(parsed.steps, registry);
        if (!unknown.missing.empty()) {
            std::string msg;
            for (const auto& m : unknown.missing) msg += "unknown tool '" + m + "'\n";
            return {{}, msg};
        }
        return {std::move(parsed.steps), ""};
    };

    auto [steps, error] = process(s4.text);
    if (!error.empty()) {
        const BackendReply repaired = exchange(
            backend, prompts::kPlanRepair,
            "Your previous plan was rejected. Fix it and reply with the corrected plan only.",
            implement_user + "\nprevious output:\n" + s4.text + "\nproblems:\n" + error,
            registry.describe_all_json());
        auto [steps2, error2] = process(repaired.text);
        if (!error2.empty())
            throw WorkflowGenerationError(4, repaired.text,
                                          "plan generation failed: " + error2);
        steps = std::move(steps2);
    }
    wf.plan = std::move(steps);
    if (wf.plan.empty()) throw WorkflowGenerationError(4, s4.text, "plan is empty");
    enforce_execution_bound(wf.plan, config.max_execution_bound);
    return wf;
}

TerminationOutcome check_termination(const Workflow& workflow,
                                     const std::optional<std::string>& committed_answer,
                                     AgentMemory& memory, const OccupancyGrid& grid,
                                     const Cell& robot, LlmBackend& backend,
                                     const RenderOptions& render_opts) {
    for (const TerminationCondition& cond : workflow.terminations) {
        if (cond.kind == TerminationCondition::Kind::AnswerCommitted) {
            if (committed_answer) return TerminationOutcome{true, committed_answer};
            continue;
        }
        try {
            const BackendReply reply = exchange(
                backend, prompts::kJudgeTermination,
                "Judge whether this termination condition is met. Reply yes or no.",
                "condition: " + cond.description + "\nmemory:\n" +
                    render(memory, grid, robot, render_opts));
            std::string head;
            for (const char c : reply.text) {
                if (std::isalpha(static_cast<unsigned char>(c)))
                    head += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
                else if (!head.empty())
                    break;
                if (head.size() >= 3) break;
            }
            if (head == "yes") return TerminationOutcome{true, committed_answer};
        } catch (const TransportError& e) {
            // fail open: budgets will end the episode if this persists
            memory.append_log(LogKind::WorkflowEvent,
                              std::string("termination check failed: ") + e.what(), 0);
        }
    }
    return TerminationOutcome{false, std::nullopt};
}

}  // namespace navagent
