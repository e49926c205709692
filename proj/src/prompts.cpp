#include "navagent/prompts.hpp"

namespace navagent::prompts {

const std::vector<std::string>& strategy_set() {
    static const std::vector<std::string> strategies = {
        "systematic sweep: visit every reachable region in order until the task is settled",
        "target-first search: explore toward the most likely location of the target object",
        "region-by-region elimination: rule out rooms one at a time using their contents",
        "landmark triangulation: anchor the search around already-known landmarks",
        "frontier chase: always push the closest boundary of unexplored space",
        "perimeter first: trace the outer walls before entering interior regions",
        "query before moving: exhaust scene-graph knowledge before spending motion",
        "verify then answer: locate the target, then confirm it visually before committing",
    };
    return strategies;
}

std::string system_prompt(const std::string& marker, const std::string& instructions) {
    return "exchange: " + marker +
           "\nYou are the reasoning core of an indoor navigation robot.\n" + instructions;
}

std::string exchange_marker(const std::string& system_content) {
    const std::string prefix = "exchange: ";
    if (system_content.rfind(prefix, 0) != 0) return "";
    const auto eol = system_content.find('\n');
    return system_content.substr(prefix.size(),
                                 eol == std::string::npos ? std::string::npos
                                                          : eol - prefix.size());
}

const std::string& plan_language_help() {
    static const std::string help =
        "Plan language:\n"
        "  plan := one or more steps\n"
        "  step := step <int> \"<title>\": <statements>\n"
        "  statement := <call>\n"
        "             | if <call> then <statements> [else <statements>] end\n"
        "             | while <call> max <int> do <statements> end\n"
        "             | answer(\"<choice letter>\")\n"
        "  call := tool_name(arg, ...) where arg is a string, number, true/false,\n"
        "          mem.<section>, or a cell written (row,col)\n"
        "Statements are separated by newlines or ';'. Loops need an explicit\n"
        "max bound (at most 50); nesting depth is limited to 3.\n";
    return help;
}

const std::string& memory_edit_help() {
    static const std::string help =
        "Reply with a JSON array of edit operations (use [] for no change):\n"
        "  {\"op\":\"set_section\",\"name\":\"spatial_description|findings|progress\",\"text\":\"...\"}\n"
        "  {\"op\":\"add_finding\",\"text\":\"...\"}\n"
        "  {\"op\":\"add_landmark\",\"name\":\"...\",\"cell\":[row,col],\"source\":\"queried_object|sampled_room_point|sampled_image_point\"}\n"
        "  {\"op\":\"remove_landmark\",\"name\":\"...\"}\n"
        "The action log is maintained automatically and cannot be edited.\n";
    return help;
}

}  // namespace navagent::prompts
