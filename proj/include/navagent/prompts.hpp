#pragma once

#include <string>
#include <vector>

namespace navagent::prompts {

// Bump when any prompt text changes; recorded transcripts pin prompts by
// hash, so edits must be deliberate.
inline constexpr const char* kVersion = "prompts-v1";

// Exchange markers. The first line of every system turn is
// "exchange: <marker>" so rule-based backends and transcript tooling can
// tell exchanges apart without guessing at wording.
inline constexpr const char* kTargets = "perception-targets";
inline constexpr const char* kTermination = "termination-conditions";
inline constexpr const char* kStage1 = "plan-stage-1-select-strategy";
inline constexpr const char* kStage2 = "plan-stage-2-adapt";
inline constexpr const char* kStage3 = "plan-stage-3-pseudocode";
inline constexpr const char* kStage4 = "plan-stage-4-implement";
inline constexpr const char* kPlanRepair = "plan-repair";
inline constexpr const char* kCot = "plan-chain-of-thought";
inline constexpr const char* kFnStage1 = "fn-stage-1-select-strategy";
inline constexpr const char* kFnStage2 = "fn-stage-2-adapt";
inline constexpr const char* kFnStage3 = "fn-stage-3-pseudocode";
inline constexpr const char* kFnStage4 = "fn-stage-4-implement";
inline constexpr const char* kFnRepair = "fn-repair";
inline constexpr const char* kSelectStep = "select-step";
inline constexpr const char* kMemoryUpdate = "memory-update";
inline constexpr const char* kJudgeTermination = "judge-termination";
inline constexpr const char* kChooseFrontier = "choose-frontier";
inline constexpr const char* kRepairArgs = "repair-args";

// The fixed strategy set stage 1 selects from.
const std::vector<std::string>& strategy_set();

std::string system_prompt(const std::string& marker, const std::string& instructions);

// Extracts the marker from a system turn, or "" when absent.
std::string exchange_marker(const std::string& system_content);

// Plain-language description of the plan statement language, shared by
// stage-4, chain-of-thought, and repair prompts.
const std::string& plan_language_help();

// Edit-operation grammar shown to the backend during memory updates.
const std::string& memory_edit_help();

}  // namespace navagent::prompts
