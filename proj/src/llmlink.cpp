#include "navagent/llmlink.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <thread>

#include <httplib.h>

#include "navagent/geometry.hpp"

namespace navagent {

using nlohmann::json;

std::string role_name(Role r) {
    switch (r) {
        case Role::System: return "system";
        case Role::User: return "user";
        case Role::Assistant: return "assistant";
        default: return "tool";
    }
}

namespace {

std::string collapse_whitespace(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    bool pending = false;
    for (const char c : s) {
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
            pending = !out.empty();
            continue;
        }
        if (pending) {
            out += ' ';
            pending = false;
        }
        out += c;
    }
    return out;
}

json tool_calls_to_wire(const std::vector<ToolCallRequest>& calls) {
    json arr = json::array();
    for (const auto& c : calls) {
        arr.push_back({{"id", c.call_id},
                       {"type", "function"},
                       {"function", {{"name", c.name}, {"arguments", c.args.dump()}}}});
    }
    return arr;
}

std::vector<ToolCallRequest> tool_calls_from_wire(const json& arr) {
    std::vector<ToolCallRequest> out;
    for (const auto& jc : arr) {
        ToolCallRequest c;
        c.call_id = jc.value("id", "");
        const auto& fn = jc.at("function");
        c.name = fn.at("name").get<std::string>();
        const std::string raw = fn.value("arguments", "{}");
        c.args = raw.empty() ? json::object() : json::parse(raw, nullptr, false);
        if (c.args.is_discarded()) c.args = json{{"_raw", raw}};
        out.push_back(std::move(c));
    }
    return out;
}

}  // namespace

std::string canonical_request(const std::vector<ChatTurn>& turns, const json& tools) {
    json messages = json::array();
    for (const auto& t : turns) {
        json m;
        m["role"] = role_name(t.role);
        m["content"] = collapse_whitespace(t.content);
        if (!t.tool_calls.empty()) m["tool_calls"] = tool_calls_to_wire(t.tool_calls);
        if (!t.tool_call_id.empty()) m["tool_call_id"] = t.tool_call_id;
        messages.push_back(std::move(m));
    }
    // nlohmann::json objects iterate in sorted key order, so dump() is canonical
    return json{{"messages", std::move(messages)}, {"tools", tools}}.dump();
}

std::string prompt_hash(const std::vector<ChatTurn>& turns, const json& tools) {
    const std::string canon = canonical_request(turns, tools);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const unsigned char c : canon) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

long long approx_tokens(const std::string& text) {
    long long n = 0;
    bool in_token = false;
    for (const char c : text) {
        const bool ws = c == ' ' || c == '\t' || c == '\n' || c == '\r';
        if (!ws && !in_token) ++n;
        in_token = !ws;
    }
    return n;
}

Usage approximate_usage(const std::vector<ChatTurn>& turns, const json& tools,
                        const std::string& reply_text) {
    Usage u;
    for (const auto& t : turns) u.prompt_tokens += approx_tokens(t.content);
    if (tools.is_array() && !tools.empty()) u.prompt_tokens += approx_tokens(tools.dump());
    u.completion_tokens = approx_tokens(reply_text);
    return u;
}

BackendReply ScriptedBackend::complete(const std::vector<ChatTurn>& turns, const json& tools) {
    if (turns.empty() || turns.front().role != Role::System)
        throw std::logic_error("complete: first turn must be system");
    if (next_ >= entries_.size())
        throw TranscriptExhausted("scripted backend: transcript exhausted after " +
                                  std::to_string(entries_.size()) + " exchanges");
    const TranscriptEntry& e = entries_[next_];
    if (!e.prompt_hash.empty()) {
        const std::string h = prompt_hash(turns, tools);
        if (h != e.prompt_hash)
            throw TranscriptMismatch("scripted backend: prompt hash mismatch at turn " +
                                     std::to_string(next_) + " (expected " + e.prompt_hash +
                                     ", got " + h + ")");
    }
    ++next_;
    return BackendReply{e.reply_text, e.tool_calls, e.usage};
}

json RemoteBackend::build_request_body(const std::string& model,
                                       const std::vector<ChatTurn>& turns, const json& tools) {
    json messages = json::array();
    for (const auto& t : turns) {
        json m;
        m["role"] = role_name(t.role);
        if (t.role == Role::Assistant && !t.tool_calls.empty()) {
            m["content"] = t.content.empty() ? json() : json(t.content);
            m["tool_calls"] = tool_calls_to_wire(t.tool_calls);
        } else {
            m["content"] = t.content;
        }
        if (t.role == Role::Tool) m["tool_call_id"] = t.tool_call_id;
        messages.push_back(std::move(m));
    }
    json body = {{"model", model}, {"messages", std::move(messages)}};
    if (tools.is_array() && !tools.empty()) {
        body["tools"] = tools;
        body["tool_choice"] = "auto";
    }
    return body;
}

BackendReply RemoteBackend::parse_response_body(const json& body) {
    BackendReply reply;
    const auto& choices = body.at("choices");
    if (!choices.is_array() || choices.empty())
        throw TransportError("remote backend: response has no choices");
    const auto& message = choices[0].at("message");
    if (message.contains("content") && message.at("content").is_string())
        reply.text = message.at("content").get<std::string>();
    if (message.contains("tool_calls") && message.at("tool_calls").is_array())
        reply.tool_calls = tool_calls_from_wire(message.at("tool_calls"));
    if (body.contains("usage")) {
        reply.usage.prompt_tokens = std::max(0LL, body["usage"].value("prompt_tokens", 0LL));
        reply.usage.completion_tokens =
            std::max(0LL, body["usage"].value("completion_tokens", 0LL));
    }
    return reply;
}

BackendReply RemoteBackend::complete(const std::vector<ChatTurn>& turns, const json& tools) {
    if (turns.empty() || turns.front().role != Role::System)
        throw std::logic_error("complete: first turn must be system");

    // split base_url into scheme://host[:port] and a path prefix
    std::string host = cfg_.base_url, prefix;
    const auto scheme_end = host.find("://");
    const auto path_start = host.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    if (path_start != std::string::npos) {
        prefix = host.substr(path_start);
        host = host.substr(0, path_start);
        while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    }
    const std::string path = prefix + "/v1/chat/completions";
    const std::string body =
        build_request_body(cfg_.model, turns, tools).dump();

    std::string last_error;
    for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
        if (attempt > 0)
            std::this_thread::sleep_for(
                std::chrono::milliseconds(cfg_.backoff_ms * (1LL << (attempt - 1))));

        httplib::Client client(host);
        client.set_connection_timeout(cfg_.timeout_seconds);
        client.set_read_timeout(cfg_.timeout_seconds);
        httplib::Headers headers;
        if (!cfg_.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg_.api_key);

        auto res = client.Post(path, headers, body, "application/json");
        if (!res) {
            last_error = "connection failed (" + httplib::to_string(res.error()) + ")";
            continue;
        }
        if (res->status == 429 || res->status >= 500) {
            last_error = "transient status " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200)
            throw TransportError("remote backend: status " + std::to_string(res->status) + ": " +
                                 res->body);
        json parsed = json::parse(res->body, nullptr, false);
        if (parsed.is_discarded())
            throw TransportError("remote backend: response is not valid JSON");
        try {
            return parse_response_body(parsed);
        } catch (const json::exception& e) {
            throw TransportError(std::string("remote backend: malformed response: ") + e.what());
        }
    }
    throw TransportError("remote backend: retries exhausted after " +
                         std::to_string(cfg_.max_retries + 1) + " attempts: " + last_error);
}

}  // namespace navagent
