#include "navagent/navtools.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <queue>
#include <unordered_map>

#include "navagent/prompts.hpp"

namespace navagent {

namespace {

bool traversable(const OccupancyGrid& grid, const Cell& c, bool optimistic) {
    if (!grid.in_bounds(c)) return false;
    const BeliefState s = grid.at(c);
    return s == BeliefState::Free || (optimistic && s == BeliefState::Unknown);
}

struct OpenEntry {
    int f;
    int h;
    long long seq;
    Cell cell;
};

struct OpenOrder {
    bool operator()(const OpenEntry& a, const OpenEntry& b) const {
        if (a.f != b.f) return a.f > b.f;
        if (a.h != b.h) return a.h > b.h;
        return a.seq > b.seq;
    }
};

}  // namespace

std::optional<Path> astar(const OccupancyGrid& grid, const Cell& start, const Cell& goal,
                          bool optimistic) {
    if (!grid.in_bounds(start) || grid.at(start) != BeliefState::Free)
        throw ContractViolation("astar: start cell " + to_string(start) + " not known-Free");
    if (!traversable(grid, goal, optimistic)) return std::nullopt;

    if (start == goal) return Path{{start}, 0.0};

    std::priority_queue<OpenEntry, std::vector<OpenEntry>, OpenOrder> open;
    std::unordered_map<Cell, int> g;
    std::unordered_map<Cell, Cell> parent;
    long long seq = 0;

    g[start] = 0;
    open.push(OpenEntry{manhattan(start, goal), manhattan(start, goal), seq++, start});

    while (!open.empty()) {
        const OpenEntry top = open.top();
        open.pop();
        const Cell cur = top.cell;
        const int gcur = g.at(cur);
        if (top.f > gcur + top.h) continue;  // stale entry
        if (cur == goal) {
            std::vector<Cell> cells{goal};
            Cell walk = goal;
            while (walk != start) {
                walk = parent.at(walk);
                cells.push_back(walk);
            }
            std::reverse(cells.begin(), cells.end());
            const double len = (static_cast<double>(cells.size()) - 1.0) * grid.resolution();
            return Path{std::move(cells), len};
        }
        for (const Cell& n : neighbors4(cur)) {
            if (!traversable(grid, n, optimistic)) continue;
            const int tentative = gcur + 1;
            const auto it = g.find(n);
            if (it != g.end() && it->second <= tentative) continue;
            g[n] = tentative;
            parent[n] = cur;
            const int h = manhattan(n, goal);
            open.push(OpenEntry{tentative + h, h, seq++, n});
        }
    }
    return std::nullopt;
}

bool reachable(const OccupancyGrid& grid, const Cell& a, const Cell& b, bool optimistic) {
    return astar(grid, a, b, optimistic).has_value();
}

std::optional<double> shortest_path_length(const OccupancyGrid& grid, const Cell& a,
                                           const Cell& b, bool optimistic) {
    const auto p = astar(grid, a, b, optimistic);
    if (!p) return std::nullopt;
    return p->length_m;
}

bool visibility(const OccupancyGrid& grid, const Cell& a, const Cell& b) {
    if (!grid.in_bounds(a) || !grid.in_bounds(b))
        throw ContractViolation("visibility: cell out of bounds");
    for (const Cell& c : supercover_line(a, b)) {
        if (c == a || c == b) continue;
        if (grid.at(c) != BeliefState::Free) return false;
    }
    return true;
}

std::vector<std::string> proximity(const SceneGraph& graph, const std::string& node_id,
                                   double radius_m) {
    const SceneNode* anchor = graph.find(node_id);
    if (!anchor) throw SceneGraphError("proximity: unknown node id '" + node_id + "'");

    std::vector<std::pair<double, std::string>> hits;
    for (const auto& [id, node] : graph.nodes()) {
        if (id == node_id) continue;
        if (node.layer != Layer::Object && node.layer != Layer::Region) continue;
        const double d = euclidean(anchor->cell, node.cell) * graph.resolution();
        if (d <= radius_m + 1e-9) hits.emplace_back(d, id);
    }
    std::sort(hits.begin(), hits.end());
    std::vector<std::string> out;
    out.reserve(hits.size());
    for (auto& [d, id] : hits) out.push_back(std::move(id));
    return out;
}

FollowResult follow_path(GridWorld& world, OccupancyGrid& grid, const Path& path,
                         const FollowConfig& cfg, int& timestep) {
    if (path.cells.empty() || path.cells.front() != world.robot_cell())
        throw ContractViolation("follow_path: path not anchored at robot cell");

    FollowResult result;
    const Cell goal = path.cells.back();
    std::vector<Cell> cells = path.cells;
    size_t i = 1;

    auto replan = [&]() -> bool {
        if (result.replans >= cfg.max_replans) return false;
        ++result.replans;
        const auto fresh = astar(grid, world.robot_cell(), goal, cfg.optimistic);
        if (!fresh) return false;
        cells = fresh->cells;
        i = 1;
        return true;
    };

    while (i < cells.size()) {
        const Cell next = cells[i];
        if (grid.in_bounds(next) && grid.at(next) == BeliefState::Occupied) {
            if (!replan()) {
                result.status = NavStatus::Blocked;
                result.final_pose = world.robot;
                return result;
            }
            continue;
        }
        const MoveResult mv = move_robot(world, next);
        if (mv.blocked) {
            grid.set(next, BeliefState::Occupied);  // contact evidence
            if (!replan()) {
                result.status = NavStatus::Blocked;
                result.final_pose = world.robot;
                return result;
            }
            continue;
        }
        ++result.cells_moved;
        Observation obs = observe(world, cfg.fov_deg, cfg.range_m, timestep++);
        integrate(grid, obs);
        result.obs_seq.push_back(std::move(obs));
        ++i;
    }

    result.status = NavStatus::Reached;
    result.final_pose = world.robot;
    return result;
}

namespace {

// first run of digits in the reply, as a frontier index
std::optional<int> parse_index(const std::string& text) {
    for (size_t i = 0; i < text.size(); ++i) {
        if (std::isdigit(static_cast<unsigned char>(text[i]))) {
            size_t end = i;
            while (end < text.size() && std::isdigit(static_cast<unsigned char>(text[end])))
                ++end;
            try {
                return std::stoi(text.substr(i, end - i));
            } catch (...) {
                return std::nullopt;
            }
        }
    }
    return std::nullopt;
}

}  // namespace

ExploreChoice explore_frontiers(const OccupancyGrid& grid, LlmBackend& backend,
                                const std::vector<Landmark>& landmarks) {
    const FrontierSet fs = extract_frontiers(grid);
    if (fs.empty()) return ExploreChoice{true, Cell{}, -1};
    if (fs.frontiers.size() == 1)
        return ExploreChoice{false, fs.frontiers[0].centroid, 0};  // forced choice

    std::string summary = "Frontier clusters (largest first):\n";
    for (size_t i = 0; i < fs.frontiers.size(); ++i) {
        const FrontierCluster& fc = fs.frontiers[i];
        char line[192];
        std::string nearest = "none";
        double best = 1e18;
        for (const auto& lm : landmarks) {
            const double d = euclidean(fc.centroid, lm.cell) * grid.resolution();
            if (d < best) {
                best = d;
                char b[96];
                std::snprintf(b, sizeof(b), "%s (%.2fm)", lm.name.c_str(), d);
                nearest = b;
            }
        }
        std::snprintf(line, sizeof(line), "frontier %zu: centroid=(%d,%d) size=%d nearest_landmark=%s\n",
                      i, fc.centroid.row, fc.centroid.col, fc.size, nearest.c_str());
        summary += line;
    }
    summary += "Reply with the index of the frontier to explore next.";

    const std::vector<ChatTurn> turns = {
        ChatTurn::system(prompts::system_prompt(
            prompts::kChooseFrontier,
            "Pick the most promising frontier cluster for the current task.")),
        ChatTurn::user(summary)};
    const BackendReply reply = backend.complete(turns, nlohmann::json::array());

    const auto idx = parse_index(reply.text);
    const size_t chosen =
        idx && *idx >= 0 && static_cast<size_t>(*idx) < fs.frontiers.size()
            ? static_cast<size_t>(*idx)
            : 0;  // fall back to the largest cluster
    return ExploreChoice{false, fs.frontiers[chosen].centroid, static_cast<int>(chosen)};
}

}  // namespace navagent
