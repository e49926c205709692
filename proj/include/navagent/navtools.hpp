#pragma once

#include <optional>
#include <string>
#include <vector>

#include "navagent/llmlink.hpp"
#include "navagent/mapping.hpp"
#include "navagent/scenegraph.hpp"
#include "navagent/worldsim.hpp"

namespace navagent {

struct Path {
    std::vector<Cell> cells;  // consecutive cells 4-adjacent, start included
    double length_m = 0.0;    // (cells.size() - 1) * resolution
};

// Minimum-cell-count path with fully deterministic tie-breaking: neighbour
// expansion order N,E,S,W; f-ties broken by lower h, then insertion order.
// Unknown cells are traversable only with optimistic = true. start must be
// known-Free.
std::optional<Path> astar(const OccupancyGrid& grid, const Cell& start, const Cell& goal,
                          bool optimistic = false);

bool reachable(const OccupancyGrid& grid, const Cell& a, const Cell& b,
               bool optimistic = false);

std::optional<double> shortest_path_length(const OccupancyGrid& grid, const Cell& a,
                                           const Cell& b, bool optimistic = false);

// Supercover segment test; Unknown counts as blocking (conservative).
// Endpoint cells themselves are not treated as blockers.
bool visibility(const OccupancyGrid& grid, const Cell& a, const Cell& b);

// Object/Region nodes within the Euclidean radius of the named node,
// sorted by distance then id. Throws on unknown ids.
std::vector<std::string> proximity(const SceneGraph& graph, const std::string& node_id,
                                   double radius_m);

enum class NavStatus { Reached, Blocked };

struct FollowConfig {
    double fov_deg = 90.0;
    double range_m = 3.0;
    int max_replans = 3;
    bool optimistic = false;  // used for replans, matching the original plan
};

struct FollowResult {
    Pose final_pose;
    std::vector<Observation> obs_seq;
    NavStatus status = NavStatus::Reached;
    int replans = 0;
    int cells_moved = 0;
};

// Walks the path cell by cell; after each step an observation is taken
// and integrated into the grid. Cells discovered Occupied trigger a
// replan toward the original goal, up to max_replans, after which control
// returns with Blocked and the partial observation sequence.
FollowResult follow_path(GridWorld& world, OccupancyGrid& grid, const Path& path,
                         const FollowConfig& cfg, int& timestep);

struct ExploreChoice {
    bool complete = false;  // no frontiers remain
    Cell goal;              // chosen cluster centroid
    int chosen_index = -1;
};

// Summarises frontier clusters (centroid, size, nearest landmark) for the
// backend, which picks one by index; an invalid reply falls back to the
// largest cluster. A single cluster is a forced choice and skips the
// backend round-trip.
ExploreChoice explore_frontiers(const OccupancyGrid& grid, LlmBackend& backend,
                                const std::vector<Landmark>& landmarks);

}  // namespace navagent
