#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "navagent/geometry.hpp"

namespace navagent {

enum class CellState : std::uint8_t { Free, Occupied };

struct WorldObject {
    std::string id;
    std::string label;  // lowercase noun phrase
    Cell cell;
    std::optional<std::string> room_id;
};

struct Room {
    std::string id;
    std::string label;
    Rect rect;
};

// Continuous pose in metres. Heading in degrees, [0, 360), 0 = north
// (decreasing row), 90 = east (increasing col).
struct Pose {
    double x = 0.0;
    double y = 0.0;
    double heading_deg = 0.0;
};

struct Detection {
    std::string object_id;
    std::string label;
    Cell cell;
    double range_m = 0.0;
    double bearing_deg = 0.0;  // relative to heading, (-180, 180]
};

struct Observation {
    int timestep = 0;
    Pose pose;
    Cell pose_cell;
    std::vector<std::pair<Cell, CellState>> visible_cells;
    std::vector<Detection> detections;
    std::string rendered_view;  // textual stand-in for a camera frame
};

struct MoveResult {
    Pose pose;
    bool blocked = false;
};

// Seeded per-detection dropout for robustness tests. Off by default.
struct DetectionNoise {
    double miss_probability = 0.0;
};

class WorldError : public std::runtime_error {
public:
    explicit WorldError(const std::string& msg) : std::runtime_error(msg) {}
};

class ContractViolation : public std::logic_error {
public:
    explicit ContractViolation(const std::string& msg) : std::logic_error(msg) {}
};

class GridWorld {
public:
    int width = 0;
    int height = 0;
    double resolution = 0.25;  // metres per cell
    std::vector<CellState> cells;  // row-major
    std::vector<WorldObject> objects;
    std::vector<Room> rooms;
    Pose robot;
    std::uint64_t rng_seed = 0;

    bool in_bounds(const Cell& c) const {
        return c.row >= 0 && c.row < height && c.col >= 0 && c.col < width;
    }
    CellState at(const Cell& c) const { return cells[static_cast<size_t>(c.row) * width + c.col]; }
    void set(const Cell& c, CellState s) { cells[static_cast<size_t>(c.row) * width + c.col] = s; }

    Cell cell_of(double x, double y) const {
        return Cell{static_cast<int>(y / resolution), static_cast<int>(x / resolution)};
    }
    Cell robot_cell() const { return cell_of(robot.x, robot.y); }
    double center_x(int col) const { return (col + 0.5) * resolution; }
    double center_y(int row) const { return (row + 0.5) * resolution; }

    const WorldObject* find_object(const std::string& id) const;

    // Throws WorldError naming the first violated invariant.
    void validate() const;
};

// Parses the JSON world-file format. Diagnostics carry the offending
// field; invariant violations are named explicitly.
GridWorld load_world(const std::string& document);

// Canonical serialization; load(serialize(w)) reproduces w exactly and
// serialize is a fixed point over load.
std::string serialize_world(const GridWorld& world);

// Line-of-sight between cell centres: blocked when any supercover cell
// strictly before the target is Occupied.
bool ground_truth_los(const GridWorld& world, const Cell& from, const Cell& to);

// Absolute bearing from cell a to cell b, degrees in [0, 360), 0 = north.
double absolute_bearing(const Cell& a, const Cell& b);

// Normalises any angle into (-180, 180].
double relative_angle(double deg);

Observation observe(const GridWorld& world, double fov_degrees, double max_range_m,
                    int timestep, const DetectionNoise& noise = {});

// target must be 4-adjacent to the robot cell; moving into an Occupied
// cell leaves the pose unchanged and reports blocked.
MoveResult move_robot(GridWorld& world, const Cell& target);

Pose rotate_robot(GridWorld& world, double delta_deg);

// Seeded room-and-door world generator used by the CLI and property tests.
struct WorldGenParams {
    int width = 14;
    int height = 11;
    int room_count = 2;
    int object_count = 5;
    std::vector<std::string> labels = {"sofa", "table", "bed", "banjo", "lamp",
                                       "plant", "desk", "piano", "mirror", "rug"};
};

GridWorld generate_world(std::uint64_t seed, const WorldGenParams& params = {});

}  // namespace navagent
