#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "navagent/toolbus.hpp"

namespace navagent {

// ---- plan grammar AST ----
//
// plan := step+
// step := "step" INT STRING ":" stmts
// stmt := call
//       | "if" call "then" stmts ["else" stmts] "end"
//       | "while" call "max" INT "do" stmts "end"
//       | "answer" "(" STRING ")"
// call := IDENT "(" args? ")"
// arg  := STRING | NUMBER | true | false | "mem." IDENT | "(" INT "," INT ")"

struct PlanArg {
    enum class Kind { String, Number, Boolean, MemRef, CellLit };
    Kind kind = Kind::String;
    std::string text;  // String value or MemRef section name
    double number = 0.0;
    bool boolean = false;
    Cell cell;

    bool operator==(const PlanArg& o) const;
};

struct CallStmt {
    std::string name;
    std::vector<PlanArg> args;

    bool operator==(const CallStmt& o) const { return name == o.name && args == o.args; }
};

struct Stmt;

struct IfStmt {
    CallStmt cond;
    std::vector<Stmt> then_body;
    std::vector<Stmt> else_body;

    bool operator==(const IfStmt& o) const;
};

struct WhileStmt {
    CallStmt cond;
    int max_iters = 0;  // required, 1..50
    std::vector<Stmt> body;

    bool operator==(const WhileStmt& o) const;
};

struct AnswerStmt {
    std::string choice;

    bool operator==(const AnswerStmt& o) const { return choice == o.choice; }
};

struct Stmt {
    std::variant<CallStmt, IfStmt, WhileStmt, AnswerStmt> node;

    bool operator==(const Stmt& o) const { return node == o.node; }
};

struct PlanStep {
    int id = 0;
    std::string title;
    std::vector<Stmt> body;

    bool operator==(const PlanStep& o) const {
        return id == o.id && title == o.title && body == o.body;
    }
};

struct PlanDiagnostic {
    int line = 0;
    int col = 0;
    std::string message;
    std::vector<std::string> expected;

    std::string to_string() const;
};

struct ParsePlanResult {
    std::vector<PlanStep> steps;
    std::vector<PlanDiagnostic> diagnostics;
    bool ok() const { return diagnostics.empty(); }
};

struct ParseStmtsResult {
    std::vector<Stmt> stmts;
    std::vector<PlanDiagnostic> diagnostics;
    bool ok() const { return diagnostics.empty(); }
};

// Total on arbitrary input (bounded size, bounded nesting); failures come
// back as diagnostics, never exceptions.
ParsePlanResult parse_plan(const std::string& text);

// Same statement language without step headers (reasoning-function bodies).
ParseStmtsResult parse_statements(const std::string& text);

std::string serialize_plan(const std::vector<PlanStep>& steps);
std::string serialize_statements(const std::vector<Stmt>& stmts);

// Upper bound on the number of statement executions a body can perform
// (loops multiply by their bound). Guarantees finiteness at load time.
long long static_execution_bound(const std::vector<Stmt>& stmts);

// Tool names referenced anywhere in the statements, in first-use order.
std::vector<std::string> collect_tool_names(const std::vector<Stmt>& stmts);

// ---- workflow ----

struct TerminationCondition {
    enum class Kind { AnswerCommitted, BackendJudged };
    Kind kind = Kind::AnswerCommitted;
    std::string description;
};

struct ReasoningFn {
    std::string name;  // gen_ prefix enforced
    std::string doc;
    std::vector<Stmt> body;
};

struct Workflow {
    std::vector<std::string> perception_targets;  // empty = perceive everything
    std::vector<TerminationCondition> terminations;
    std::vector<PlanStep> plan;
    std::map<std::string, ReasoningFn> generated_functions;
};

class WorkflowGenerationError : public std::runtime_error {
public:
    WorkflowGenerationError(int stage, std::string raw_output, const std::string& msg)
        : std::runtime_error(msg), stage(stage), raw_output(std::move(raw_output)) {}

    int stage;  // 0 = chain-of-thought, 1..4 = pipeline stages, 5 = zero-shot
    std::string raw_output;
};

struct GenerationConfig {
    bool cot_only = false;
    long long max_execution_bound = 100000;
    // hook for online workflow revision; deliberately off (revision trades
    // inference time for no measured gain) and outside the tested surface
    bool allow_revision = false;
};

using FnHandlerFactory = std::function<ToolHandler(const ReasoningFn&)>;

// Four-stage plan pipeline (strategy, adaptation, pseudocode,
// implementation) plus one zero-shot call each for perception targets and
// termination conditions; one repair round-trip on stage-4 parse or
// unknown-tool failures. Unknown gen_-prefixed tools trigger recursive
// reasoning-function generation. cot_only collapses everything into a
// single exchange.
Workflow generate_workflow(LlmBackend& backend, const std::string& task, ToolRegistry& registry,
                           const GenerationConfig& config, const FnHandlerFactory& fn_factory);

// Same pipeline scoped to one named function; the result is registered in
// the registry. Navigation tools are rejected in function bodies.
ReasoningFn generate_reasoning_function(LlmBackend& backend, const std::string& name,
                                        const std::string& purpose, ToolRegistry& registry,
                                        const FnHandlerFactory& fn_factory, int depth = 1);

struct TerminationOutcome {
    bool terminate = false;
    std::optional<std::string> answer;
};

// AnswerCommitted conditions are checked mechanically; backend-judged
// conditions cost one yes/no exchange each. Backend transport failures
// fail open (Continue) with a logged warning.
TerminationOutcome check_termination(const Workflow& workflow,
                                     const std::optional<std::string>& committed_answer,
                                     AgentMemory& memory, const OccupancyGrid& grid,
                                     const Cell& robot, LlmBackend& backend,
                                     const RenderOptions& render_opts);

}  // namespace navagent
