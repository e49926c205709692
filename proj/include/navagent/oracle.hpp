#pragma once

#include "navagent/llmlink.hpp"

namespace navagent {

// Deterministic rule-based stand-in for the model, used for closed-loop
// testing. Policy: explore-then-verify plans, lowest unfinished step,
// largest frontier cluster, answers derived from scene-graph queries (or
// recorded sightings when the graph is ablated). Token usage is the
// whitespace approximation.
class OracleBackend : public LlmBackend {
public:
    BackendReply complete(const std::vector<ChatTurn>& turns,
                          const nlohmann::json& tools) override;
    std::string name() const override { return "oracle"; }
};

}  // namespace navagent
