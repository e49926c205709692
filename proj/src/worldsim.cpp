#include "navagent/worldsim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <unordered_set>

#include <nlohmann/json.hpp>

namespace navagent {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

const WorldObject* GridWorld::find_object(const std::string& id) const {
    for (const auto& o : objects)
        if (o.id == id) return &o;
    return nullptr;
}

void GridWorld::validate() const {
    if (width <= 0 || height <= 0) throw WorldError("world: non-positive dimensions");
    if (resolution <= 0.0) throw WorldError("world: non-positive resolution");
    if (cells.size() != static_cast<size_t>(width) * height)
        throw WorldError("world: cell count does not match dimensions");

    std::unordered_set<std::string> ids;
    for (const auto& o : objects) {
        if (o.id.empty()) throw WorldError("object: empty id");
        if (!ids.insert(o.id).second) throw WorldError("object '" + o.id + "': duplicate id");
        if (o.label.empty()) throw WorldError("object '" + o.id + "': empty label");
        if (!in_bounds(o.cell))
            throw WorldError("object '" + o.id + "': cell " + to_string(o.cell) + " out of bounds");
        if (at(o.cell) == CellState::Occupied)
            throw WorldError("object '" + o.id + "': object on occupied cell " + to_string(o.cell));
    }

    std::unordered_set<std::string> room_ids;
    for (size_t i = 0; i < rooms.size(); ++i) {
        const Room& r = rooms[i];
        if (!room_ids.insert(r.id).second) throw WorldError("room '" + r.id + "': duplicate id");
        if (r.rect.r0 > r.rect.r1 || r.rect.c0 > r.rect.c1)
            throw WorldError("room '" + r.id + "': degenerate rect");
        if (!in_bounds(Cell{r.rect.r0, r.rect.c0}) || !in_bounds(Cell{r.rect.r1, r.rect.c1}))
            throw WorldError("room '" + r.id + "': rect out of bounds");
        for (size_t j = 0; j < i; ++j)
            if (rooms[j].rect.overlaps(r.rect))
                throw WorldError("room '" + r.id + "': rooms overlap ('" + rooms[j].id + "')");
    }

    const Cell rc = robot_cell();
    if (!in_bounds(rc)) throw WorldError("robot: cell " + to_string(rc) + " out of bounds");
    if (at(rc) == CellState::Occupied)
        throw WorldError("robot: robot on occupied cell " + to_string(rc));
}

namespace {

Cell parse_cell(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer())
        throw WorldError(where + ": expected [row, col]");
    return Cell{j[0].get<int>(), j[1].get<int>()};
}

}  // namespace

namespace {

GridWorld load_world_fields(const json& j);

}  // namespace

GridWorld load_world(const std::string& document) {
    json j;
    try {
        j = json::parse(document);
    } catch (const json::parse_error& e) {
        throw WorldError(std::string("world file: ") + e.what());
    }
    if (!j.is_object()) throw WorldError("world file: expected a JSON object");
    try {
        return load_world_fields(j);
    } catch (const json::exception& e) {
        throw WorldError(std::string("world file: ") + e.what());
    }
}

namespace {

GridWorld load_world_fields(const json& j) {
    GridWorld w;
    try {
        w.width = j.at("width").get<int>();
        w.height = j.at("height").get<int>();
    } catch (const json::exception&) {
        throw WorldError("world file: 'width'/'height' must be integers");
    }
    if (w.width <= 0 || w.height <= 0) throw WorldError("world file: non-positive dimensions");
    w.resolution = j.value("resolution", 0.25);
    if (w.resolution <= 0.0) throw WorldError("world file: non-positive resolution");
    w.cells.assign(static_cast<size_t>(w.width) * w.height, CellState::Free);

    for (const auto& oc : j.value("occupied", json::array())) {
        const Cell c = parse_cell(oc, "occupied entry");
        if (!w.in_bounds(c)) throw WorldError("occupied entry: cell " + to_string(c) + " out of bounds");
        w.set(c, CellState::Occupied);
    }

    for (const auto& jo : j.value("objects", json::array())) {
        WorldObject o;
        if (!jo.is_object() || !jo.contains("id") || !jo.contains("label") || !jo.contains("cell"))
            throw WorldError("object entry: requires id, label, cell");
        o.id = jo.at("id").get<std::string>();
        o.label = jo.at("label").get<std::string>();
        o.cell = parse_cell(jo.at("cell"), "object '" + o.id + "' cell");
        if (jo.contains("room") && !jo.at("room").is_null())
            o.room_id = jo.at("room").get<std::string>();
        w.objects.push_back(std::move(o));
    }

    for (const auto& jr : j.value("rooms", json::array())) {
        Room r;
        if (!jr.is_object() || !jr.contains("id") || !jr.contains("rect"))
            throw WorldError("room entry: requires id, rect");
        r.id = jr.at("id").get<std::string>();
        r.label = jr.value("label", r.id);
        const auto& rect = jr.at("rect");
        if (!rect.is_array() || rect.size() != 4)
            throw WorldError("room '" + r.id + "': rect must be [r0,c0,r1,c1]");
        r.rect = Rect{rect[0].get<int>(), rect[1].get<int>(), rect[2].get<int>(), rect[3].get<int>()};
        w.rooms.push_back(std::move(r));
    }

    if (!j.contains("robot")) throw WorldError("world file: missing 'robot'");
    const Cell rc = parse_cell(j.at("robot").at("cell"), "robot cell");
    if (!w.in_bounds(rc)) throw WorldError("robot: cell " + to_string(rc) + " out of bounds");
    w.robot.x = w.center_x(rc.col);
    w.robot.y = w.center_y(rc.row);
    w.robot.heading_deg = j.at("robot").value("heading", 0.0);
    w.robot.heading_deg = std::fmod(w.robot.heading_deg, 360.0);
    if (w.robot.heading_deg < 0) w.robot.heading_deg += 360.0;

    w.rng_seed = j.value("seed", 0ULL);

    w.validate();
    return w;
}

}  // namespace

std::string serialize_world(const GridWorld& world) {
    ordered_json j;
    j["width"] = world.width;
    j["height"] = world.height;
    j["resolution"] = world.resolution;
    ordered_json occ = ordered_json::array();
    for (int r = 0; r < world.height; ++r)
        for (int c = 0; c < world.width; ++c)
            if (world.at(Cell{r, c}) == CellState::Occupied) occ.push_back({r, c});
    j["occupied"] = std::move(occ);
    ordered_json objs = ordered_json::array();
    for (const auto& o : world.objects) {
        ordered_json jo;
        jo["id"] = o.id;
        jo["label"] = o.label;
        jo["cell"] = {o.cell.row, o.cell.col};
        if (o.room_id) jo["room"] = *o.room_id;
        objs.push_back(std::move(jo));
    }
    j["objects"] = std::move(objs);
    ordered_json rms = ordered_json::array();
    for (const auto& r : world.rooms) {
        ordered_json jr;
        jr["id"] = r.id;
        jr["label"] = r.label;
        jr["rect"] = {r.rect.r0, r.rect.c0, r.rect.r1, r.rect.c1};
        rms.push_back(std::move(jr));
    }
    j["rooms"] = std::move(rms);
    const Cell rc = world.robot_cell();
    j["robot"] = {{"cell", {rc.row, rc.col}}, {"heading", world.robot.heading_deg}};
    j["seed"] = world.rng_seed;
    return j.dump();
}

bool ground_truth_los(const GridWorld& world, const Cell& from, const Cell& to) {
    for (const Cell& c : supercover_line(from, to)) {
        if (c == from || c == to) continue;
        if (world.at(c) == CellState::Occupied) return false;
    }
    return true;
}

double absolute_bearing(const Cell& a, const Cell& b) {
    const double east = b.col - a.col;
    const double north = a.row - b.row;
    double deg = std::atan2(east, north) * 180.0 / M_PI;
    if (deg < 0) deg += 360.0;
    return deg;
}

double relative_angle(double deg) {
    deg = std::fmod(deg, 360.0);
    if (deg <= -180.0) deg += 360.0;
    if (deg > 180.0) deg -= 360.0;
    return deg;
}

namespace {

std::string render_view(const Observation& obs) {
    char buf[160];
    std::string out;
    std::snprintf(buf, sizeof(buf), "view t=%d pose=(%d,%d) heading=%.1f\n", obs.timestep,
                  obs.pose_cell.row, obs.pose_cell.col, obs.pose.heading_deg);
    out += buf;
    std::snprintf(buf, sizeof(buf), "detections (%zu):\n", obs.detections.size());
    out += buf;
    for (const auto& d : obs.detections) {
        std::snprintf(buf, sizeof(buf), "  %s id=%s cell=(%d,%d) range=%.2fm bearing=%.1fdeg\n",
                      d.label.c_str(), d.object_id.c_str(), d.cell.row, d.cell.col, d.range_m,
                      d.bearing_deg);
        out += buf;
    }
    return out;
}

}  // namespace

Observation observe(const GridWorld& world, double fov_degrees, double max_range_m, int timestep,
                    const DetectionNoise& noise) {
    if (fov_degrees <= 0.0 || fov_degrees > 360.0)
        throw ContractViolation("observe: fov must be in (0, 360]");
    if (max_range_m <= 0.0) throw ContractViolation("observe: max_range must be positive");

    Observation obs;
    obs.timestep = timestep;
    obs.pose = world.robot;
    obs.pose_cell = world.robot_cell();

    const Cell rc = obs.pose_cell;
    const double range_cells_sq =
        (max_range_m / world.resolution) * (max_range_m / world.resolution) + 1e-9;
    const bool full_circle = fov_degrees >= 360.0;

    std::unordered_set<Cell> visible;
    for (int r = 0; r < world.height; ++r) {
        for (int c = 0; c < world.width; ++c) {
            const Cell cell{r, c};
            if (cell == rc) {
                visible.insert(cell);
                obs.visible_cells.emplace_back(cell, world.at(cell));
                continue;
            }
            const double dr = r - rc.row, dc = c - rc.col;
            if (dr * dr + dc * dc > range_cells_sq) continue;
            if (!full_circle) {
                const double diff =
                    std::fabs(relative_angle(absolute_bearing(rc, cell) - world.robot.heading_deg));
                if (diff > fov_degrees / 2.0 + 1e-9) continue;
            }
            if (!ground_truth_los(world, rc, cell)) continue;
            visible.insert(cell);
            obs.visible_cells.emplace_back(cell, world.at(cell));
        }
    }

    for (const auto& o : world.objects) {
        if (!visible.count(o.cell)) continue;
        if (noise.miss_probability > 0.0) {
            const double u =
                static_cast<double>(mix_hash(world.rng_seed, static_cast<std::uint64_t>(timestep),
                                             o.id) >>
                                    11) *
                0x1.0p-53;
            if (u < noise.miss_probability) continue;
        }
        Detection d;
        d.object_id = o.id;
        d.label = o.label;
        d.cell = o.cell;
        d.range_m = euclidean(rc, o.cell) * world.resolution;
        d.bearing_deg =
            o.cell == rc ? 0.0 : relative_angle(absolute_bearing(rc, o.cell) - world.robot.heading_deg);
        obs.detections.push_back(std::move(d));
    }
    std::sort(obs.detections.begin(), obs.detections.end(),
              [](const Detection& a, const Detection& b) {
                  if (a.range_m != b.range_m) return a.range_m < b.range_m;
                  if (a.bearing_deg != b.bearing_deg) return a.bearing_deg < b.bearing_deg;
                  return a.object_id < b.object_id;
              });

    obs.rendered_view = render_view(obs);
    return obs;
}

MoveResult move_robot(GridWorld& world, const Cell& target) {
    const Cell cur = world.robot_cell();
    if (manhattan(cur, target) != 1)
        throw ContractViolation("move_robot: non-adjacent motion " + to_string(cur) + " -> " +
                                to_string(target));
    if (!world.in_bounds(target) || world.at(target) == CellState::Occupied)
        return MoveResult{world.robot, true};

    world.robot.x = world.center_x(target.col);
    world.robot.y = world.center_y(target.row);
    if (target.row < cur.row)
        world.robot.heading_deg = 0.0;
    else if (target.col > cur.col)
        world.robot.heading_deg = 90.0;
    else if (target.row > cur.row)
        world.robot.heading_deg = 180.0;
    else
        world.robot.heading_deg = 270.0;
    return MoveResult{world.robot, false};
}

Pose rotate_robot(GridWorld& world, double delta_deg) {
    double h = std::fmod(world.robot.heading_deg + delta_deg, 360.0);
    if (h < 0) h += 360.0;
    world.robot.heading_deg = h;
    return world.robot;
}

GridWorld generate_world(std::uint64_t seed, const WorldGenParams& params) {
    Rng rng(seed * 0x9E3779B97F4A7C15ULL + 1);
    GridWorld w;
    w.width = params.width;
    w.height = params.height;
    w.resolution = 0.25;
    w.rng_seed = seed;
    w.cells.assign(static_cast<size_t>(w.width) * w.height, CellState::Free);

    static const char* kRoomLabels[] = {"living room", "bedroom", "kitchen",
                                        "hallway",     "study",   "bathroom"};

    std::vector<Rect> rects = {Rect{0, 0, w.height - 1, w.width - 1}};
    const int splits = std::max(0, std::min(params.room_count, 5) - 1);
    for (int s = 0; s < splits; ++s) {
        // split the largest rect along its longer axis, leaving a 2-cell door
        size_t best = 0;
        long best_area = -1;
        for (size_t i = 0; i < rects.size(); ++i) {
            const long area = static_cast<long>(rects[i].r1 - rects[i].r0 + 1) *
                              (rects[i].c1 - rects[i].c0 + 1);
            if (area > best_area) {
                best_area = area;
                best = i;
            }
        }
        Rect r = rects[best];
        const int rows = r.r1 - r.r0 + 1, cols = r.c1 - r.c0 + 1;
        if (rows < 7 && cols < 7) break;  // too small to split further
        if (cols >= rows) {
            const int m = rng.next_int(r.c0 + 3, r.c1 - 3);
            const int door = rng.next_int(r.r0, r.r1 - 1);
            for (int row = r.r0; row <= r.r1; ++row)
                if (row != door && row != door + 1) w.set(Cell{row, m}, CellState::Occupied);
            rects[best] = Rect{r.r0, r.c0, r.r1, m - 1};
            rects.push_back(Rect{r.r0, m + 1, r.r1, r.c1});
        } else {
            const int m = rng.next_int(r.r0 + 3, r.r1 - 3);
            const int door = rng.next_int(r.c0, r.c1 - 1);
            for (int col = r.c0; col <= r.c1; ++col)
                if (col != door && col != door + 1) w.set(Cell{m, col}, CellState::Occupied);
            rects[best] = Rect{r.r0, r.c0, m - 1, r.c1};
            rects.push_back(Rect{m + 1, r.c0, r.r1, r.c1});
        }
    }

    for (size_t i = 0; i < rects.size(); ++i) {
        Room room;
        room.id = "room" + std::to_string(i + 1);
        room.label = kRoomLabels[i % 6];
        room.rect = rects[i];
        w.rooms.push_back(std::move(room));
    }

    auto sample_free = [&](const Rect& r, const std::set<Cell>& used) -> Cell {
        for (int tries = 0; tries < 200; ++tries) {
            const Cell c{rng.next_int(r.r0, r.r1), rng.next_int(r.c0, r.c1)};
            if (w.at(c) == CellState::Free && !used.count(c)) return c;
        }
        throw WorldError("generate_world: could not place entity");
    };

    std::set<Cell> used;
    const int n_objects = std::min<int>(params.object_count, params.labels.size());
    for (int i = 0; i < n_objects; ++i) {
        const size_t room_idx = rng.next_below(w.rooms.size());
        WorldObject o;
        o.id = "obj" + std::to_string(i + 1);
        o.label = params.labels[i];
        o.cell = sample_free(w.rooms[room_idx].rect, used);
        o.room_id = w.rooms[room_idx].id;
        used.insert(o.cell);
        w.objects.push_back(std::move(o));
    }

    const Cell start = sample_free(w.rooms[rng.next_below(w.rooms.size())].rect, used);
    w.robot.x = w.center_x(start.col);
    w.robot.y = w.center_y(start.row);
    w.robot.heading_deg = 0.0;

    w.validate();
    return w;
}

}  // namespace navagent
