#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "navagent/navtools.hpp"
#include "test_support.hpp"

using namespace navagent;
namespace nt = navagent::testing;

namespace {

OccupancyGrid all_free(int w, int h) {
    OccupancyGrid grid(w, h);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) grid.set(Cell{r, c}, BeliefState::Free);
    return grid;
}

OccupancyGrid belief_of(const GridWorld& world) {
    OccupancyGrid grid(world.width, world.height, world.resolution);
    for (int r = 0; r < world.height; ++r)
        for (int c = 0; c < world.width; ++c)
            grid.set(Cell{r, c}, world.at(Cell{r, c}) == CellState::Free
                                     ? BeliefState::Free
                                     : BeliefState::Occupied);
    return grid;
}

}  // namespace

TEST_CASE("astar on an empty 3x3 grid is Manhattan-forced") {
    const OccupancyGrid grid = all_free(3, 3);
    const auto path = astar(grid, Cell{0, 0}, Cell{2, 2});
    REQUIRE(path);
    CHECK(path->cells.size() == 5);
    CHECK(path->length_m == doctest::Approx(1.0));
    CHECK(path->cells.front() == Cell{0, 0});
    CHECK(path->cells.back() == Cell{2, 2});
    for (size_t i = 1; i < path->cells.size(); ++i)
        CHECK(manhattan(path->cells[i - 1], path->cells[i]) == 1);
}

TEST_CASE("astar with start == goal returns a single-cell path") {
    const OccupancyGrid grid = all_free(2, 2);
    const auto path = astar(grid, Cell{1, 1}, Cell{1, 1});
    REQUIRE(path);
    CHECK(path->cells == std::vector<Cell>{Cell{1, 1}});
    CHECK(path->length_m == 0.0);
}

TEST_CASE("astar contract and blocking rules") {
    OccupancyGrid grid = all_free(3, 3);
    grid.set(Cell{0, 0}, BeliefState::Unknown);
    CHECK_THROWS_AS(astar(grid, Cell{0, 0}, Cell{2, 2}), ContractViolation);
    // unknown goal: NoPath unless optimistic
    CHECK_FALSE(astar(grid, Cell{2, 2}, Cell{0, 0}).has_value());
    CHECK(astar(grid, Cell{2, 2}, Cell{0, 0}, true).has_value());
}

TEST_CASE("astar equals BFS oracle on random grids") {
    Rng rng(42);
    int nopath_count = 0;
    for (int trial = 0; trial < 100; ++trial) {
        OccupancyGrid grid = nt::random_belief_grid(rng, 20);
        std::vector<Cell> free_cells;
        for (int r = 0; r < grid.height(); ++r)
            for (int c = 0; c < grid.width(); ++c)
                if (grid.at(Cell{r, c}) == BeliefState::Free) free_cells.push_back(Cell{r, c});
        if (free_cells.empty()) continue;
        const Cell start = free_cells[rng.next_below(free_cells.size())];
        const Cell goal{static_cast<int>(rng.next_below(grid.height())),
                        static_cast<int>(rng.next_below(grid.width()))};
        const bool optimistic = rng.next_unit() < 0.3;

        const auto path = astar(grid, start, goal, optimistic);
        const auto bfs = nt::belief_bfs(grid, start, goal, optimistic);
        REQUIRE(path.has_value() == bfs.has_value());
        if (path) {
            CHECK(static_cast<int>(path->cells.size()) - 1 == *bfs);
            CHECK(path->length_m ==
                  doctest::Approx(*bfs * grid.resolution()));
        } else {
            ++nopath_count;
        }
    }
    CHECK(nopath_count > 0);  // the sample covered disconnected cases
}

TEST_CASE("astar is deterministic cell-for-cell") {
    Rng rng(4242);
    for (int trial = 0; trial < 20; ++trial) {
        const OccupancyGrid grid = nt::random_belief_grid(rng, 15);
        std::vector<Cell> free_cells;
        for (int r = 0; r < grid.height(); ++r)
            for (int c = 0; c < grid.width(); ++c)
                if (grid.at(Cell{r, c}) == BeliefState::Free) free_cells.push_back(Cell{r, c});
        if (free_cells.size() < 2) continue;
        const Cell start = free_cells[rng.next_below(free_cells.size())];
        const Cell goal = free_cells[rng.next_below(free_cells.size())];
        const auto a = astar(grid, start, goal);
        const auto b = astar(grid, start, goal);
        REQUIRE(a.has_value() == b.has_value());
        if (a) CHECK(a->cells == b->cells);
    }
}

TEST_CASE("follow_path walks a straight corridor, one observation per step") {
    GridWorld world = load_world(R"({"width":6,"height":1,"robot":{"cell":[0,0]}})");
    OccupancyGrid grid = belief_of(world);
    const auto path = astar(grid, Cell{0, 0}, Cell{0, 4});
    REQUIRE(path);
    int timestep = 0;
    const FollowResult fr = follow_path(world, grid, *path, FollowConfig{}, timestep);
    CHECK(fr.status == NavStatus::Reached);
    CHECK(fr.obs_seq.size() == 4);
    CHECK(fr.cells_moved == 4);
    CHECK(world.robot_cell() == Cell{0, 4});
    CHECK(timestep == 4);
}

TEST_CASE("hidden wall forces a replan that still reaches the goal") {
    // ground truth has a wall at (0,2); the belief grid thinks the top row
    // is clear, so the planned path goes straight through it
    GridWorld world = load_world(R"({"width":5,"height":2,"occupied":[[0,2]],
        "robot":{"cell":[0,0]}})");
    OccupancyGrid grid(world.width, world.height, world.resolution);
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 5; ++c) grid.set(Cell{r, c}, BeliefState::Free);

    const auto planned = astar(grid, Cell{0, 0}, Cell{0, 4});
    REQUIRE(planned);
    CHECK(planned->cells.size() == 5);  // straight line through the hidden wall

    int timestep = 0;
    FollowConfig cfg;
    cfg.fov_deg = 360.0;
    cfg.range_m = 0.3;  // very short sensing: the wall is found by contact or adjacency
    const FollowResult fr = follow_path(world, grid, *planned, cfg, timestep);
    CHECK(fr.status == NavStatus::Reached);
    CHECK(fr.replans >= 1);
    CHECK(world.robot_cell() == Cell{0, 4});
    // detour length matches ground-truth BFS around the wall
    const auto truth = nt::ground_truth_bfs(world, Cell{0, 0}, Cell{0, 4});
    REQUIRE(truth);
    CHECK(fr.cells_moved == *truth);
    CHECK(grid.at(Cell{0, 2}) == BeliefState::Occupied);
}

TEST_CASE("fully walled goal returns Blocked after exhausting replans") {
    GridWorld world = load_world(R"({"width":5,"height":3,
        "occupied":[[0,3],[1,3],[2,3]],"robot":{"cell":[1,0]}})");
    OccupancyGrid grid(world.width, world.height, world.resolution);
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 5; ++c) grid.set(Cell{r, c}, BeliefState::Free);

    const auto planned = astar(grid, Cell{1, 0}, Cell{1, 4});
    REQUIRE(planned);
    int timestep = 0;
    FollowConfig nearsighted;  // each wall cell is discovered by contact
    nearsighted.range_m = 0.25;
    const FollowResult fr = follow_path(world, grid, *planned, nearsighted, timestep);
    CHECK(fr.status == NavStatus::Blocked);
    CHECK(fr.replans == 3);  // the full replan budget before giving up
    CHECK(world.at(world.robot_cell()) == CellState::Free);

    // with normal sensing the dead end is discovered early instead
    OccupancyGrid fresh(world.width, world.height, world.resolution);
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 5; ++c) fresh.set(Cell{r, c}, BeliefState::Free);
    GridWorld world2 = load_world(R"({"width":5,"height":3,
        "occupied":[[0,3],[1,3],[2,3]],"robot":{"cell":[1,0]}})");
    int t2 = 0;
    const FollowResult sighted =
        follow_path(world2, fresh, *planned, FollowConfig{}, t2);
    CHECK(sighted.status == NavStatus::Blocked);
    CHECK(sighted.replans <= 3);
}

TEST_CASE("follow_path requires the path to start at the robot cell") {
    GridWorld world = load_world(R"({"width":3,"height":1,"robot":{"cell":[0,0]}})");
    OccupancyGrid grid = belief_of(world);
    int timestep = 0;
    Path path{{Cell{0, 1}, Cell{0, 2}}, 0.25};
    CHECK_THROWS_WITH_AS(follow_path(world, grid, path, FollowConfig{}, timestep),
                         doctest::Contains("not anchored"), ContractViolation);
}

TEST_CASE("visibility basics") {
    OccupancyGrid grid = all_free(5, 5);
    CHECK(visibility(grid, Cell{0, 0}, Cell{0, 1}));
    CHECK(visibility(grid, Cell{2, 2}, Cell{2, 2}));
    for (int c = 0; c < 5; ++c) grid.set(Cell{2, c}, BeliefState::Occupied);
    CHECK_FALSE(visibility(grid, Cell{0, 2}, Cell{4, 2}));
    // unknown blocks conservatively
    OccupancyGrid foggy = all_free(3, 3);
    foggy.set(Cell{1, 1}, BeliefState::Unknown);
    CHECK_FALSE(visibility(foggy, Cell{0, 0}, Cell{2, 2}));
    CHECK_THROWS_AS(visibility(foggy, Cell{0, 0}, Cell{9, 9}), ContractViolation);
}

TEST_CASE("visibility equals the independent supercover oracle") {
    Rng rng(31415);
    for (int trial = 0; trial < 40; ++trial) {
        const OccupancyGrid grid = nt::random_belief_grid(rng, 12);
        for (int pair = 0; pair < 50; ++pair) {
            const Cell a{static_cast<int>(rng.next_below(grid.height())),
                         static_cast<int>(rng.next_below(grid.width()))};
            const Cell b{static_cast<int>(rng.next_below(grid.height())),
                         static_cast<int>(rng.next_below(grid.width()))};
            CHECK(visibility(grid, a, b) == nt::visibility_oracle(grid, a, b));
        }
    }
}

TEST_CASE("reachable and shortest_path_length mirror astar") {
    Rng rng(271828);
    CHECK(reachable(all_free(2, 2), Cell{0, 0}, Cell{0, 0}));
    for (int trial = 0; trial < 50; ++trial) {
        const OccupancyGrid grid = nt::random_belief_grid(rng, 14);
        std::vector<Cell> free_cells;
        for (int r = 0; r < grid.height(); ++r)
            for (int c = 0; c < grid.width(); ++c)
                if (grid.at(Cell{r, c}) == BeliefState::Free) free_cells.push_back(Cell{r, c});
        if (free_cells.size() < 2) continue;
        const Cell a = free_cells[rng.next_below(free_cells.size())];
        const Cell b = free_cells[rng.next_below(free_cells.size())];
        const auto path = astar(grid, a, b);
        CHECK(reachable(grid, a, b) == path.has_value());
        const auto len = shortest_path_length(grid, a, b);
        CHECK(len.has_value() == path.has_value());
        if (len) {
            CHECK(*len == doctest::Approx(path->length_m));
            const auto bfs = nt::belief_bfs(grid, a, b, false);
            CHECK(*len == doctest::Approx(*bfs * grid.resolution()));
        }
    }
}

TEST_CASE("proximity returns nearby nodes sorted by distance") {
    SceneGraph g(20, 20, 0.25);
    Observation obs;
    obs.timestep = 0;
    obs.pose_cell = Cell{0, 0};
    auto mk = [](const std::string& id, const std::string& label, Cell cell) {
        Detection d;
        d.object_id = id;
        d.label = label;
        d.cell = cell;
        return d;
    };
    obs.detections = {mk("sofa1", "sofa", {5, 5}), mk("table1", "table", {5, 6}),
                      mk("bed1", "bed", {10, 10})};
    g.upsert_from_observation(obs, {});

    const auto near = proximity(g, "sofa1", 0.5);
    CHECK(near == std::vector<std::string>{"table1"});  // 1 cell = 0.25 m
    const auto all = proximity(g, "sofa1", 10.0);
    REQUIRE(all.size() == 2);
    CHECK(all[0] == "table1");
    CHECK(all[1] == "bed1");
    CHECK_THROWS_WITH_AS(proximity(g, "ghost", 1.0), doctest::Contains("unknown node"),
                         SceneGraphError);
    // sensor nodes are never returned
    for (const auto& id : all) CHECK(id.rfind("sensor_", 0) != 0);
}

TEST_CASE("explore_frontiers: complete, forced, and scripted choices") {
    nt::CannedBackend backend;

    SUBCASE("no frontiers -> complete") {
        const ExploreChoice choice = explore_frontiers(all_free(3, 3), backend, {});
        CHECK(choice.complete);
        CHECK(backend.calls() == 0);
    }

    SUBCASE("single cluster is a forced choice without a backend call") {
        OccupancyGrid grid(4, 4);
        grid.set(Cell{1, 1}, BeliefState::Free);
        const ExploreChoice choice = explore_frontiers(grid, backend, {});
        CHECK_FALSE(choice.complete);
        CHECK(choice.goal == Cell{1, 1});
        CHECK(backend.calls() == 0);
    }

    SUBCASE("scripted index picks that cluster; junk falls back to largest") {
        // three clusters of sizes 3, 2, 1 in otherwise-unknown space,
        // far enough apart that 8-adjacency keeps them separate
        OccupancyGrid grid(7, 4);
        for (int r = 0; r < 3; ++r) grid.set(Cell{r, 0}, BeliefState::Free);
        for (int r = 0; r < 2; ++r) grid.set(Cell{r, 3}, BeliefState::Free);
        grid.set(Cell{0, 6}, BeliefState::Free);
        const FrontierSet fs = extract_frontiers(grid);
        REQUIRE(fs.frontiers.size() == 3);

        backend.on(prompts::kChooseFrontier, "2");
        ExploreChoice choice = explore_frontiers(grid, backend, {});
        CHECK(choice.chosen_index == 2);
        CHECK(choice.goal == fs.frontiers[2].centroid);

        nt::CannedBackend junk;
        junk.on(prompts::kChooseFrontier, "banana");
        choice = explore_frontiers(grid, junk, {});
        CHECK(choice.chosen_index == 0);
        CHECK(choice.goal == fs.frontiers[0].centroid);

        nt::CannedBackend out_of_range;
        out_of_range.on(prompts::kChooseFrontier, "99");
        choice = explore_frontiers(grid, out_of_range, {});
        CHECK(choice.chosen_index == 0);
    }
}

TEST_CASE("conservative visibility implies ground-truth clearance") {
    Rng rng(55);
    for (int trial = 0; trial < 20; ++trial) {
        GridWorld world = nt::random_world(rng, 10, 0.25);
        OccupancyGrid grid(world.width, world.height, world.resolution);
        for (int t = 0; t < 5; ++t) {
            rotate_robot(world, 72.0);
            integrate(grid, observe(world, 120.0, 2.0, t));
        }
        for (int pair = 0; pair < 30; ++pair) {
            const Cell a{static_cast<int>(rng.next_below(world.height)),
                         static_cast<int>(rng.next_below(world.width))};
            const Cell b{static_cast<int>(rng.next_below(world.height)),
                         static_cast<int>(rng.next_below(world.width))};
            if (visibility(grid, a, b)) CHECK(nt::ground_truth_los_oracle(world, a, b));
        }
    }
}
