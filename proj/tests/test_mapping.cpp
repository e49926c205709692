#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "navagent/mapping.hpp"
#include "test_support.hpp"

using namespace navagent;
namespace nt = navagent::testing;

namespace {

Observation obs_of(std::vector<std::pair<Cell, CellState>> cells, int t = 0,
                   Cell pose = Cell{0, 0}) {
    Observation obs;
    obs.timestep = t;
    obs.pose_cell = pose;
    obs.visible_cells = std::move(cells);
    return obs;
}

}  // namespace

TEST_CASE("integrate writes exactly the observed cells") {
    OccupancyGrid grid(4, 4);
    integrate(grid, obs_of({{{0, 0}, CellState::Free},
                            {{0, 1}, CellState::Free},
                            {{1, 0}, CellState::Free},
                            {{1, 1}, CellState::Free},
                            {{2, 2}, CellState::Free}}));
    CHECK(grid.known_cells() == 5);
    CHECK(grid.observed_count() == 1);
    CHECK(grid.at(Cell{0, 0}) == BeliefState::Free);
    CHECK(grid.at(Cell{3, 3}) == BeliefState::Unknown);
}

TEST_CASE("integrating the same observation twice changes nothing") {
    OccupancyGrid grid(3, 3);
    const Observation obs =
        obs_of({{{0, 0}, CellState::Free}, {{1, 1}, CellState::Occupied}});
    integrate(grid, obs);
    const OccupancyGrid snapshot = grid;
    integrate(grid, obs);
    CHECK(grid == snapshot);
    CHECK(grid.observed_count() == 2);  // the counter still advances
}

TEST_CASE("integrate rejects dimension mismatches") {
    OccupancyGrid grid(2, 2);
    CHECK_THROWS_AS(integrate(grid, obs_of({{{5, 5}, CellState::Free}})),
                    ContractViolation);
}

TEST_CASE("many integrations equal the set union of visible cells") {
    Rng rng(7);
    const GridWorld w = nt::random_world(rng, 12, 0.25);
    OccupancyGrid grid(w.width, w.height, w.resolution);
    std::map<Cell, CellState> expected;
    GridWorld world = w;
    for (int t = 0; t < 20; ++t) {
        rotate_robot(world, static_cast<double>(rng.next_int(0, 359)));
        const Observation obs = observe(world, 90.0, 2.5, t);
        for (const auto& [cell, state] : obs.visible_cells) expected[cell] = state;
        integrate(grid, obs);
    }
    int known = 0;
    for (int r = 0; r < w.height; ++r) {
        for (int c = 0; c < w.width; ++c) {
            const Cell cell{r, c};
            const auto it = expected.find(cell);
            if (it == expected.end()) {
                CHECK(grid.at(cell) == BeliefState::Unknown);
            } else {
                ++known;
                CHECK(grid.at(cell) == (it->second == CellState::Free ? BeliefState::Free
                                                                      : BeliefState::Occupied));
            }
        }
    }
    CHECK(grid.known_cells() == known);
}

TEST_CASE("monotonicity: known cells never shrink under integrate") {
    Rng rng(13);
    GridWorld world = nt::random_world(rng, 10, 0.2);
    OccupancyGrid grid(world.width, world.height, world.resolution);
    int prev_known = 0;
    for (int t = 0; t < 15; ++t) {
        const auto options = neighbors4(world.robot_cell());
        move_robot(world, options[rng.next_below(options.size())]);
        integrate(grid, observe(world, 120.0, 2.0, t));
        CHECK(grid.known_cells() >= prev_known);
        CHECK(grid.observed_count() == t + 1);
        prev_known = grid.known_cells();
        // soundness: every known cell matches ground truth
        for (int r = 0; r < world.height; ++r)
            for (int c = 0; c < world.width; ++c) {
                const Cell cell{r, c};
                if (grid.at(cell) == BeliefState::Unknown) continue;
                CHECK((grid.at(cell) == BeliefState::Free) ==
                      (world.at(cell) == CellState::Free));
            }
    }
}

TEST_CASE("fully known grid has no frontiers") {
    OccupancyGrid grid(4, 3);
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 4; ++c) grid.set(Cell{r, c}, BeliefState::Free);
    CHECK(extract_frontiers(grid).empty());
}

TEST_CASE("single free cell surrounded by unknown is one singleton cluster") {
    OccupancyGrid grid(3, 3);
    grid.set(Cell{1, 1}, BeliefState::Free);
    const FrontierSet fs = extract_frontiers(grid);
    REQUIRE(fs.frontiers.size() == 1);
    CHECK(fs.frontiers[0].size == 1);
    CHECK(fs.frontiers[0].centroid == Cell{1, 1});
    CHECK(fs.frontiers[0].cells == std::vector<Cell>{Cell{1, 1}});
}

TEST_CASE("frontier extraction equals the exhaustive oracle on random grids") {
    Rng rng(31337);
    for (int trial = 0; trial < 200; ++trial) {
        const OccupancyGrid grid = nt::random_belief_grid(rng, 12);
        const FrontierSet fs = extract_frontiers(grid);
        std::set<std::vector<Cell>> got;
        for (const auto& cluster : fs.frontiers) {
            CHECK(cluster.size == static_cast<int>(cluster.cells.size()));
            got.insert(cluster.cells);
        }
        CHECK(got == nt::frontier_oracle(grid));
        // ordering: size descending, ties by centroid ascending
        for (size_t i = 1; i < fs.frontiers.size(); ++i) {
            const auto& a = fs.frontiers[i - 1];
            const auto& b = fs.frontiers[i];
            CHECK((a.size > b.size || (a.size == b.size && a.centroid < b.centroid)));
        }
        // every member is Free with an Unknown 4-neighbour
        for (const auto& cluster : fs.frontiers)
            for (const Cell& cell : cluster.cells) {
                CHECK(grid.at(cell) == BeliefState::Free);
                bool unknown_neighbor = false;
                for (const Cell& n : neighbors4(cell))
                    if (grid.in_bounds(n) && grid.at(n) == BeliefState::Unknown)
                        unknown_neighbor = true;
                CHECK(unknown_neighbor);
            }
    }
}

TEST_CASE("raster renders terrain, robot, and landmarks") {
    OccupancyGrid grid(2, 2);
    const std::string out = render_raster(grid, {}, Cell{0, 0});
    CHECK(out ==
          "rows top->bottom, cols left->right; ?=unknown .=free #=occupied R=robot\n"
          "R?\n"
          "??\n"
          "legend:\n");
}

TEST_CASE("landmark symbol and legend entry") {
    OccupancyGrid grid(3, 3);
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) grid.set(Cell{r, c}, BeliefState::Free);
    const std::string out =
        render_raster(grid, {Landmark{"sofa", Cell{1, 1}, LandmarkSource::QueriedObject}},
                      Cell{0, 0});
    CHECK(out.find("R..\n.A.\n...\n") != std::string::npos);
    CHECK(out.find("A: sofa (1,1)\n") != std::string::npos);
}

TEST_CASE("raster matches the golden fixture") {
    const GridWorld w = load_world(nt::read_file(nt::fixture_path("worlds/apartment_small.json")));
    OccupancyGrid grid(w.width, w.height, w.resolution);
    GridWorld world = w;
    for (int t = 0; t < 3; ++t) integrate(grid, observe(world, 360.0, 2.0, t));
    const std::vector<Landmark> landmarks = {
        {"sofa", Cell{2, 2}, LandmarkSource::QueriedObject},
        {"table", Cell{6, 3}, LandmarkSource::QueriedObject},
        {"door", Cell{4, 6}, LandmarkSource::SampledRoomPoint},
    };
    const std::string got = render_raster(grid, landmarks, world.robot_cell());
    CHECK(got == nt::read_file(nt::fixture_path("golden/raster_3landmarks.txt")));
}

TEST_CASE("27 landmarks exhaust the alphabet") {
    OccupancyGrid grid(6, 6);
    std::vector<Landmark> landmarks;
    for (int i = 0; i < 27; ++i)
        landmarks.push_back(Landmark{"lm" + std::to_string(i), Cell{i / 6, i % 6},
                                     LandmarkSource::SampledImagePoint});
    CHECK_THROWS_WITH_AS(render_raster(grid, landmarks, Cell{5, 5}),
                         doctest::Contains("landmark alphabet exhausted"), RasterError);
    landmarks.pop_back();
    CHECK_NOTHROW(render_raster(grid, landmarks, Cell{5, 5}));
}

TEST_CASE("raster inverse recovers terrain for plain cells") {
    Rng rng(555);
    for (int trial = 0; trial < 30; ++trial) {
        const OccupancyGrid grid = nt::random_belief_grid(rng, 10);
        const Cell robot{0, 0};
        const std::vector<Landmark> landmarks = {
            {"mark", Cell{grid.height() - 1, grid.width() - 1},
             LandmarkSource::SampledImagePoint}};
        const std::string out = render_raster(grid, landmarks, robot);

        // rows sit between the header line and the legend
        std::istringstream in(out);
        std::string line;
        std::getline(in, line);  // header
        for (int r = 0; r < grid.height(); ++r) {
            std::getline(in, line);
            REQUIRE(line.size() == static_cast<size_t>(grid.width()));
            for (int c = 0; c < grid.width(); ++c) {
                const Cell cell{r, c};
                if (cell == robot || cell == landmarks[0].cell) continue;
                const BeliefState expect = line[c] == '?'   ? BeliefState::Unknown
                                           : line[c] == '.' ? BeliefState::Free
                                                            : BeliefState::Occupied;
                CHECK(grid.at(cell) == expect);
            }
        }
    }
}
