#include <cctype>
#include <cmath>
#include <cstdio>

#include "navagent/workflow.hpp"

namespace navagent {

bool PlanArg::operator==(const PlanArg& o) const {
    if (kind != o.kind) return false;
    switch (kind) {
        case Kind::String:
        case Kind::MemRef: return text == o.text;
        case Kind::Number: return number == o.number;
        case Kind::Boolean: return boolean == o.boolean;
        default: return cell == o.cell;
    }
}

bool IfStmt::operator==(const IfStmt& o) const {
    return cond == o.cond && then_body == o.then_body && else_body == o.else_body;
}

bool WhileStmt::operator==(const WhileStmt& o) const {
    return cond == o.cond && max_iters == o.max_iters && body == o.body;
}

std::string PlanDiagnostic::to_string() const {
    std::string out =
        "line " + std::to_string(line) + ", col " + std::to_string(col) + ": " + message;
    if (!expected.empty()) {
        out += " (expected ";
        for (size_t i = 0; i < expected.size(); ++i) out += (i ? ", " : "") + expected[i];
        out += ")";
    }
    return out;
}

namespace {

constexpr size_t kMaxInputBytes = 64UL * 1024;
constexpr int kMaxNestingDepth = 3;
constexpr int kMaxLoopBound = 50;

enum class Tok {
    Ident,
    Int,
    Number,
    String,
    MemRef,
    LParen,
    RParen,
    Comma,
    Colon,
    Separator,  // newline or ';'
    KwStep,
    KwIf,
    KwThen,
    KwElse,
    KwEnd,
    KwWhile,
    KwMax,
    KwDo,
    KwAnswer,
    KwTrue,
    KwFalse,
    End,
    Bad,
};

struct Token {
    Tok kind = Tok::End;
    std::string text;
    double number = 0.0;
    long long int_value = 0;
    bool is_int = false;
    int line = 1;
    int col = 1;
};

class Lexer {
public:
    explicit Lexer(const std::string& src) : src_(src) {}

    Token next() {
        skip_spaces();
        Token t;
        t.line = line_;
        t.col = col_;
        if (pos_ >= src_.size()) {
            t.kind = Tok::End;
            return t;
        }
        const char c = src_[pos_];
        if (c == '\n' || c == ';') {
            advance();
            t.kind = Tok::Separator;
            return t;
        }
        if (c == '(') {
            advance();
            t.kind = Tok::LParen;
            return t;
        }
        if (c == ')') {
            advance();
            t.kind = Tok::RParen;
            return t;
        }
        if (c == ',') {
            advance();
            t.kind = Tok::Comma;
            return t;
        }
        if (c == ':') {
            advance();
            t.kind = Tok::Colon;
            return t;
        }
        if (c == '"') return lex_string(t);
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '-' && pos_ + 1 < src_.size() &&
             std::isdigit(static_cast<unsigned char>(src_[pos_ + 1]))))
            return lex_number(t);
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return lex_ident(t);
        advance();
        t.kind = Tok::Bad;
        t.text = std::string(1, c);
        return t;
    }

private:
    void advance() {
        if (src_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }

    void skip_spaces() {
        while (pos_ < src_.size()) {
            const char c = src_[pos_];
            if (c == ' ' || c == '\t' || c == '\r') {
                advance();
            } else if (c == '#') {  // comment to end of line
                while (pos_ < src_.size() && src_[pos_] != '\n') advance();
            } else {
                break;
            }
        }
    }

    Token lex_string(Token t) {
        advance();  // opening quote
        std::string value;
        while (pos_ < src_.size()) {
            const char c = src_[pos_];
            if (c == '"') {
                advance();
                t.kind = Tok::String;
                t.text = std::move(value);
                return t;
            }
            if (c == '\n') break;
            if (c == '\\' && pos_ + 1 < src_.size()) {
                advance();
                const char esc = src_[pos_];
                value += esc == 'n' ? '\n' : esc;
                advance();
                continue;
            }
            value += c;
            advance();
        }
        t.kind = Tok::Bad;
        t.text = "unterminated string";
        return t;
    }

    Token lex_number(Token t) {
        std::string digits;
        if (src_[pos_] == '-') {
            digits += '-';
            advance();
        }
        bool is_int = true;
        while (pos_ < src_.size() &&
               (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.')) {
            if (src_[pos_] == '.') {
                if (!is_int) break;
                is_int = false;
            }
            digits += src_[pos_];
            advance();
        }
        try {
            t.number = std::stod(digits);
            if (is_int) t.int_value = std::stoll(digits);
        } catch (...) {
            t.kind = Tok::Bad;
            t.text = "bad number " + digits;
            return t;
        }
        t.kind = is_int ? Tok::Int : Tok::Number;
        t.is_int = is_int;
        t.text = std::move(digits);
        return t;
    }

    Token lex_ident(Token t) {
        std::string name;
        while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
                                      src_[pos_] == '_')) {
            name += src_[pos_];
            advance();
        }
        if (name == "mem" && pos_ < src_.size() && src_[pos_] == '.') {
            advance();
            std::string section;
            while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
                                          src_[pos_] == '_')) {
                section += src_[pos_];
                advance();
            }
            t.kind = Tok::MemRef;
            t.text = std::move(section);
            return t;
        }
        if (name == "step") t.kind = Tok::KwStep;
        else if (name == "if") t.kind = Tok::KwIf;
        else if (name == "then") t.kind = Tok::KwThen;
        else if (name == "else") t.kind = Tok::KwElse;
        else if (name == "end") t.kind = Tok::KwEnd;
        else if (name == "while") t.kind = Tok::KwWhile;
        else if (name == "max") t.kind = Tok::KwMax;
        else if (name == "do") t.kind = Tok::KwDo;
        else if (name == "answer") t.kind = Tok::KwAnswer;
        else if (name == "true") t.kind = Tok::KwTrue;
        else if (name == "false") t.kind = Tok::KwFalse;
        else t.kind = Tok::Ident;
        t.text = std::move(name);
        return t;
    }

    const std::string& src_;
    size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
};

class ParseFailure {};  // unwinds to the entry point; diagnostic already recorded

class Parser {
public:
    explicit Parser(const std::string& src, std::vector<PlanDiagnostic>& diags)
        : lexer_(src), diags_(diags) {
        cur_ = lexer_.next();
    }

    std::vector<PlanStep> parse_plan() {
        std::vector<PlanStep> steps;
        skip_separators();
        if (cur_.kind == Tok::End) fail("empty plan", {"step"});
        while (cur_.kind != Tok::End) {
            steps.push_back(parse_step());
            skip_separators();
        }
        return steps;
    }

    std::vector<Stmt> parse_bare_statements() {
        std::vector<Stmt> stmts = parse_stmts(0, /*in_block=*/false);
        if (cur_.kind != Tok::End) fail("unexpected trailing input", {"statement"});
        if (stmts.empty()) fail("no statements", {"statement"});
        return stmts;
    }

private:
    void advance() { cur_ = lexer_.next(); }

    void skip_separators() {
        while (cur_.kind == Tok::Separator) advance();
    }

    [[noreturn]] void fail(const std::string& message, std::vector<std::string> expected) {
        PlanDiagnostic d;
        d.line = cur_.line;
        d.col = cur_.col;
        d.message = message;
        d.expected = std::move(expected);
        diags_.push_back(std::move(d));
        throw ParseFailure{};
    }

    Token expect(Tok kind, const std::string& what) {
        if (cur_.kind != kind) fail("unexpected " + describe(cur_), {what});
        Token t = cur_;
        advance();
        return t;
    }

    static std::string describe(const Token& t) {
        switch (t.kind) {
            case Tok::End: return "end of input";
            case Tok::Separator: return "line break";
            case Tok::String: return "string \"" + t.text + "\"";
            case Tok::Bad: return t.text;
            default: return t.text.empty() ? "token" : "'" + t.text + "'";
        }
    }

    PlanStep parse_step() {
        expect(Tok::KwStep, "step");
        PlanStep step;
        const Token id = expect(Tok::Int, "step number");
        if (id.int_value <= 0) fail("step number must be positive", {"positive integer"});
        step.id = static_cast<int>(id.int_value);
        step.title = expect(Tok::String, "step title string").text;
        expect(Tok::Colon, "':'");
        step.body = parse_stmts(0, /*in_block=*/false);
        if (step.body.empty()) fail("step body must contain at least one statement", {"statement"});
        return step;
    }

    // in_block: stop at 'end'/'else'; otherwise stop at 'step' or EOF.
    std::vector<Stmt> parse_stmts(int depth, bool in_block) {
        std::vector<Stmt> stmts;
        for (;;) {
            skip_separators();
            if (cur_.kind == Tok::End) {
                if (in_block) fail("unterminated block", {"end"});
                return stmts;
            }
            if (in_block && (cur_.kind == Tok::KwEnd || cur_.kind == Tok::KwElse)) return stmts;
            if (!in_block && cur_.kind == Tok::KwStep) return stmts;
            stmts.push_back(parse_stmt(depth));
            if (cur_.kind != Tok::Separator && cur_.kind != Tok::End &&
                cur_.kind != Tok::KwEnd && cur_.kind != Tok::KwElse && cur_.kind != Tok::KwStep)
                fail("unexpected " + describe(cur_) + " after statement",
                     {"line break", "';'", "end"});
        }
    }

    Stmt parse_stmt(int depth) {
        if (cur_.kind == Tok::KwIf) return parse_if(depth);
        if (cur_.kind == Tok::KwWhile) return parse_while(depth);
        if (cur_.kind == Tok::KwAnswer) return parse_answer();
        if (cur_.kind == Tok::Ident) return Stmt{parse_call()};
        fail("unexpected " + describe(cur_), {"tool call", "if", "while", "answer"});
    }

    Stmt parse_if(int depth) {
        if (depth + 1 > kMaxNestingDepth)
            fail("nesting depth exceeds " + std::to_string(kMaxNestingDepth), {"flatter plan"});
        expect(Tok::KwIf, "if");
        IfStmt node;
        if (cur_.kind != Tok::Ident)
            fail("if condition must be a tool call", {"tool call"});
        node.cond = parse_call();
        expect(Tok::KwThen, "then");
        node.then_body = parse_stmts(depth + 1, /*in_block=*/true);
        if (cur_.kind == Tok::KwElse) {
            advance();
            node.else_body = parse_stmts(depth + 1, /*in_block=*/true);
        }
        expect(Tok::KwEnd, "end");
        return Stmt{std::move(node)};
    }

    Stmt parse_while(int depth) {
        if (depth + 1 > kMaxNestingDepth)
            fail("nesting depth exceeds " + std::to_string(kMaxNestingDepth), {"flatter plan"});
        expect(Tok::KwWhile, "while");
        WhileStmt node;
        if (cur_.kind != Tok::Ident)
            fail("while condition must be a tool call", {"tool call"});
        node.cond = parse_call();
        if (cur_.kind != Tok::KwMax) fail("loop bound required", {"max <int>"});
        advance();
        const Token bound = expect(Tok::Int, "loop bound integer");
        if (bound.int_value < 1 || bound.int_value > kMaxLoopBound)
            fail("loop bound must be between 1 and " + std::to_string(kMaxLoopBound),
                 {"integer 1..50"});
        node.max_iters = static_cast<int>(bound.int_value);
        expect(Tok::KwDo, "do");
        node.body = parse_stmts(depth + 1, /*in_block=*/true);
        expect(Tok::KwEnd, "end");
        return Stmt{std::move(node)};
    }

    Stmt parse_answer() {
        expect(Tok::KwAnswer, "answer");
        expect(Tok::LParen, "'('");
        AnswerStmt node;
        node.choice = expect(Tok::String, "answer string").text;
        expect(Tok::RParen, "')'");
        return Stmt{std::move(node)};
    }

    CallStmt parse_call() {
        CallStmt call;
        call.name = expect(Tok::Ident, "tool name").text;
        expect(Tok::LParen, "'('");
        if (cur_.kind != Tok::RParen) {
            call.args.push_back(parse_arg());
            while (cur_.kind == Tok::Comma) {
                advance();
                call.args.push_back(parse_arg());
            }
        }
        expect(Tok::RParen, "')'");
        return call;
    }

    PlanArg parse_arg() {
        PlanArg arg;
        switch (cur_.kind) {
            case Tok::String:
                arg.kind = PlanArg::Kind::String;
                arg.text = cur_.text;
                advance();
                return arg;
            case Tok::Int:
            case Tok::Number:
                arg.kind = PlanArg::Kind::Number;
                arg.number = cur_.number;
                advance();
                return arg;
            case Tok::KwTrue:
            case Tok::KwFalse:
                arg.kind = PlanArg::Kind::Boolean;
                arg.boolean = cur_.kind == Tok::KwTrue;
                advance();
                return arg;
            case Tok::MemRef:
                arg.kind = PlanArg::Kind::MemRef;
                arg.text = cur_.text;
                advance();
                return arg;
            case Tok::LParen: {
                advance();
                const Token r = expect(Tok::Int, "cell row integer");
                expect(Tok::Comma, "','");
                const Token c = expect(Tok::Int, "cell col integer");
                expect(Tok::RParen, "')'");
                arg.kind = PlanArg::Kind::CellLit;
                arg.cell = Cell{static_cast<int>(r.int_value), static_cast<int>(c.int_value)};
                return arg;
            }
            default:
                fail("unexpected " + describe(cur_) + " in arguments",
                     {"string", "number", "true/false", "mem.<section>", "(row,col)"});
        }
    }

    Lexer lexer_;
    std::vector<PlanDiagnostic>& diags_;
    Token cur_;
};

std::string serialize_arg(const PlanArg& arg) {
    switch (arg.kind) {
        case PlanArg::Kind::String: {
            std::string out = "\"";
            for (const char c : arg.text) {
                if (c == '"' || c == '\\') out += '\\';
                if (c == '\n') {
                    out += "\\n";
                    continue;
                }
                out += c;
            }
            return out + "\"";
        }
        case PlanArg::Kind::Number: {
            if (arg.number == std::floor(arg.number) && std::fabs(arg.number) < 1e15) {
                char buf[32];
                std::snprintf(buf, sizeof(buf), "%lld", static_cast<long long>(arg.number));
                return buf;
            }
            return nlohmann::json(arg.number).dump();
        }
        case PlanArg::Kind::Boolean: return arg.boolean ? "true" : "false";
        case PlanArg::Kind::MemRef: return "mem." + arg.text;
        default:
            return "(" + std::to_string(arg.cell.row) + "," + std::to_string(arg.cell.col) + ")";
    }
}

std::string serialize_call(const CallStmt& call) {
    std::string out = call.name + "(";
    for (size_t i = 0; i < call.args.size(); ++i)
        out += (i ? ", " : "") + serialize_arg(call.args[i]);
    return out + ")";
}

std::string serialize_stmt(const Stmt& stmt);

std::string serialize_body_inline(const std::vector<Stmt>& body) {
    std::string out;
    for (size_t i = 0; i < body.size(); ++i) out += (i ? "; " : "") + serialize_stmt(body[i]);
    return out;
}

std::string serialize_stmt(const Stmt& stmt) {
    if (const auto* call = std::get_if<CallStmt>(&stmt.node)) return serialize_call(*call);
    if (const auto* ans = std::get_if<AnswerStmt>(&stmt.node)) {
        PlanArg s;
        s.kind = PlanArg::Kind::String;
        s.text = ans->choice;
        return "answer(" + serialize_arg(s) + ")";
    }
    if (const auto* ifs = std::get_if<IfStmt>(&stmt.node)) {
        std::string out = "if " + serialize_call(ifs->cond) + " then";
        if (!ifs->then_body.empty()) out += " " + serialize_body_inline(ifs->then_body);
        if (!ifs->else_body.empty()) out += " else " + serialize_body_inline(ifs->else_body);
        return out + " end";
    }
    const auto& wh = std::get<WhileStmt>(stmt.node);
    std::string out =
        "while " + serialize_call(wh.cond) + " max " + std::to_string(wh.max_iters) + " do";
    if (!wh.body.empty()) out += " " + serialize_body_inline(wh.body);
    return out + " end";
}

void collect_from_stmts(const std::vector<Stmt>& stmts, std::vector<std::string>& out);

void note_name(const std::string& name, std::vector<std::string>& out) {
    for (const auto& n : out)
        if (n == name) return;
    out.push_back(name);
}

void collect_from_stmts(const std::vector<Stmt>& stmts, std::vector<std::string>& out) {
    for (const Stmt& s : stmts) {
        if (const auto* call = std::get_if<CallStmt>(&s.node)) {
            note_name(call->name, out);
        } else if (const auto* ifs = std::get_if<IfStmt>(&s.node)) {
            note_name(ifs->cond.name, out);
            collect_from_stmts(ifs->then_body, out);
            collect_from_stmts(ifs->else_body, out);
        } else if (const auto* wh = std::get_if<WhileStmt>(&s.node)) {
            note_name(wh->cond.name, out);
            collect_from_stmts(wh->body, out);
        }
    }
}

}  // namespace

ParsePlanResult parse_plan(const std::string& text) {
    ParsePlanResult result;
    if (text.size() > kMaxInputBytes) {
        result.diagnostics.push_back(
            PlanDiagnostic{1, 1, "plan text exceeds 64 KiB", {"shorter plan"}});
        return result;
    }
    Parser parser(text, result.diagnostics);
    try {
        result.steps = parser.parse_plan();
    } catch (const ParseFailure&) {
        result.steps.clear();
    }
    return result;
}

ParseStmtsResult parse_statements(const std::string& text) {
    ParseStmtsResult result;
    if (text.size() > kMaxInputBytes) {
        result.diagnostics.push_back(
            PlanDiagnostic{1, 1, "statement text exceeds 64 KiB", {"shorter body"}});
        return result;
    }
    Parser parser(text, result.diagnostics);
    try {
        result.stmts = parser.parse_bare_statements();
    } catch (const ParseFailure&) {
        result.stmts.clear();
    }
    return result;
}

std::string serialize_plan(const std::vector<PlanStep>& steps) {
    std::string out;
    for (const PlanStep& step : steps) {
        PlanArg title;
        title.kind = PlanArg::Kind::String;
        title.text = step.title;
        out += "step " + std::to_string(step.id) + " " + serialize_arg(title) + ":\n";
        for (const Stmt& s : step.body) out += "  " + serialize_stmt(s) + "\n";
    }
    return out;
}

std::string serialize_statements(const std::vector<Stmt>& stmts) {
    std::string out;
    for (const Stmt& s : stmts) out += serialize_stmt(s) + "\n";
    return out;
}

long long static_execution_bound(const std::vector<Stmt>& stmts) {
    long long total = 0;
    const long long cap = 1LL << 40;
    for (const Stmt& s : stmts) {
        long long cost = 1;
        if (const auto* ifs = std::get_if<IfStmt>(&s.node)) {
            cost += std::max(static_execution_bound(ifs->then_body),
                             static_execution_bound(ifs->else_body));
        } else if (const auto* wh = std::get_if<WhileStmt>(&s.node)) {
            cost += wh->max_iters * (1 + static_execution_bound(wh->body));
        }
        total += cost;
        if (total > cap) return cap;
    }
    return total;
}

std::vector<std::string> collect_tool_names(const std::vector<Stmt>& stmts) {
    std::vector<std::string> out;
    collect_from_stmts(stmts, out);
    return out;
}

}  // namespace navagent
