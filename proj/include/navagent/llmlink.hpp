#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace navagent {

enum class Role { System, User, Assistant, Tool };

std::string role_name(Role r);

struct ToolCallRequest {
    std::string call_id;
    std::string name;
    nlohmann::json args;  // decoded arguments object
};

struct ChatTurn {
    Role role = Role::User;
    std::string content;
    std::vector<ToolCallRequest> tool_calls;  // assistant turns only
    std::string tool_call_id;                 // tool turns only

    static ChatTurn system(std::string text) { return {Role::System, std::move(text), {}, {}}; }
    static ChatTurn user(std::string text) { return {Role::User, std::move(text), {}, {}}; }
    static ChatTurn assistant(std::string text) {
        return {Role::Assistant, std::move(text), {}, {}};
    }
};

struct Usage {
    long long prompt_tokens = 0;
    long long completion_tokens = 0;
};

struct BackendReply {
    std::string text;
    std::vector<ToolCallRequest> tool_calls;
    Usage usage;
};

class TransportError : public std::runtime_error {
public:
    explicit TransportError(const std::string& msg) : std::runtime_error(msg) {}
};

class TranscriptExhausted : public std::runtime_error {
public:
    explicit TranscriptExhausted(const std::string& msg) : std::runtime_error(msg) {}
};

class TranscriptMismatch : public std::runtime_error {
public:
    explicit TranscriptMismatch(const std::string& msg) : std::runtime_error(msg) {}
};

// Chat backend contract: one blocking exchange per call. Implementations
// must tolerate concurrent independent sessions (no shared mutable state).
class LlmBackend {
public:
    virtual ~LlmBackend() = default;
    // turns must be non-empty and start with a system turn.
    virtual BackendReply complete(const std::vector<ChatTurn>& turns,
                                  const nlohmann::json& tools) = 0;
    virtual std::string name() const = 0;
};

// Canonical rendering used for prompt hashing: sorted keys, runs of
// whitespace in content collapsed, so cosmetic changes are caught
// deliberately.
std::string canonical_request(const std::vector<ChatTurn>& turns, const nlohmann::json& tools);
std::string prompt_hash(const std::vector<ChatTurn>& turns, const nlohmann::json& tools);

// Whitespace-token approximation for local backends; reported as
// "approximate" wherever surfaced.
long long approx_tokens(const std::string& text);
Usage approximate_usage(const std::vector<ChatTurn>& turns, const nlohmann::json& tools,
                        const std::string& reply_text);

struct Budgets {
    int max_reasoning_steps = 500;
    double max_cost = 5.00;
    // price per million tokens (2.50 in / 10.00 out mirrors common
    // frontier-model list pricing)
    double rate_in_per_mtok = 2.50;
    double rate_out_per_mtok = 10.00;
};

class UsageLedger {
public:
    void record(const Usage& u) {
        prompt_tokens_ += u.prompt_tokens;
        completion_tokens_ += u.completion_tokens;
    }
    long long prompt_tokens() const { return prompt_tokens_; }
    long long completion_tokens() const { return completion_tokens_; }
    long long total_tokens() const { return prompt_tokens_ + completion_tokens_; }

    // recomputed from totals each time, never accumulated in floating point
    double cost(const Budgets& b) const {
        return static_cast<double>(prompt_tokens_) / 1e6 * b.rate_in_per_mtok +
               static_cast<double>(completion_tokens_) / 1e6 * b.rate_out_per_mtok;
    }

private:
    long long prompt_tokens_ = 0;
    long long completion_tokens_ = 0;
};

// Strict inequality: a run sitting exactly at the limit may continue.
inline bool over_budget(const UsageLedger& ledger, const Budgets& budgets) {
    return ledger.cost(budgets) > budgets.max_cost;
}

struct TranscriptEntry {
    std::string prompt_hash;  // empty = accept any prompt
    std::string reply_text;
    std::vector<ToolCallRequest> tool_calls;
    Usage usage;
};

// Replays recorded exchanges; fails loudly when the live prompt diverges
// from the recording.
class ScriptedBackend : public LlmBackend {
public:
    // name defaults to "scripted"; replays pass the recorded backend name
    // through so re-recorded transcripts stay byte-identical.
    explicit ScriptedBackend(std::vector<TranscriptEntry> entries,
                             std::string name = "scripted")
        : entries_(std::move(entries)), name_(std::move(name)) {}

    BackendReply complete(const std::vector<ChatTurn>& turns,
                          const nlohmann::json& tools) override;
    std::string name() const override { return name_; }

    size_t consumed() const { return next_; }
    size_t remaining() const { return entries_.size() - next_; }

private:
    std::vector<TranscriptEntry> entries_;
    std::string name_;
    size_t next_ = 0;
};

struct RemoteConfig {
    std::string base_url = "http://localhost:8000";
    std::string model = "gpt-4o";
    std::string api_key;
    int max_retries = 2;       // retries after the first attempt
    int backoff_ms = 100;      // doubled per retry
    int timeout_seconds = 120;
};

// Chat-completions wire client: POST {base}/v1/chat/completions with
// {model, messages, tools, tool_choice:"auto"}; retries transient
// failures (connection errors, 429, 5xx) with exponential backoff.
class RemoteBackend : public LlmBackend {
public:
    explicit RemoteBackend(RemoteConfig cfg) : cfg_(std::move(cfg)) {}

    BackendReply complete(const std::vector<ChatTurn>& turns,
                          const nlohmann::json& tools) override;
    std::string name() const override { return "remote:" + cfg_.model; }

    static nlohmann::json build_request_body(const std::string& model,
                                             const std::vector<ChatTurn>& turns,
                                             const nlohmann::json& tools);
    static BackendReply parse_response_body(const nlohmann::json& body);

private:
    RemoteConfig cfg_;
};

}  // namespace navagent
