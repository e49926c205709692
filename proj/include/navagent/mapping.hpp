#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "navagent/worldsim.hpp"

namespace navagent {

enum class BeliefState : std::uint8_t { Unknown, Free, Occupied };

enum class LandmarkSource { QueriedObject, SampledRoomPoint, SampledImagePoint };

struct Landmark {
    std::string name;
    Cell cell;
    LandmarkSource source = LandmarkSource::QueriedObject;
};

class RasterError : public std::runtime_error {
public:
    explicit RasterError(const std::string& msg) : std::runtime_error(msg) {}
};

// The agent's belief map. Cells never revert to Unknown.
class OccupancyGrid {
public:
    OccupancyGrid() = default;
    OccupancyGrid(int width, int height, double resolution = 0.25)
        : width_(width), height_(height), resolution_(resolution),
          cells_(static_cast<size_t>(width) * height, BeliefState::Unknown) {}

    int width() const { return width_; }
    int height() const { return height_; }
    double resolution() const { return resolution_; }
    int observed_count() const { return observed_count_; }

    bool in_bounds(const Cell& c) const {
        return c.row >= 0 && c.row < height_ && c.col >= 0 && c.col < width_;
    }
    BeliefState at(const Cell& c) const {
        return cells_[static_cast<size_t>(c.row) * width_ + c.col];
    }
    void set(const Cell& c, BeliefState s) {
        cells_[static_cast<size_t>(c.row) * width_ + c.col] = s;
    }

    int known_cells() const;

    bool operator==(const OccupancyGrid& o) const {
        return width_ == o.width_ && height_ == o.height_ && cells_ == o.cells_;
    }

    void bump_observed() { ++observed_count_; }

private:
    int width_ = 0;
    int height_ = 0;
    double resolution_ = 0.25;
    std::vector<BeliefState> cells_;
    int observed_count_ = 0;
};

struct FrontierCluster {
    std::vector<Cell> cells;  // sorted (row, col)
    Cell centroid;            // member cell nearest the cluster mean
    int size = 0;
};

struct FrontierSet {
    std::vector<FrontierCluster> frontiers;  // size desc, ties by centroid
    bool empty() const { return frontiers.empty(); }
};

// Writes every visible cell of the observation into the grid.
void integrate(OccupancyGrid& grid, const Observation& obs);

// Frontier cell: Free with at least one Unknown 4-neighbour. Clusters are
// 8-adjacency connected components.
FrontierSet extract_frontiers(const OccupancyGrid& grid);

// One character per cell: '?' Unknown, '.' Free, '#' Occupied, 'R' robot,
// 'A'..'Z' landmarks. Landmarks win over terrain, the robot wins over all.
// Throws RasterError after 26 landmarks.
std::string render_raster(const OccupancyGrid& grid, const std::vector<Landmark>& landmarks,
                          const Cell& robot);

std::string landmark_source_name(LandmarkSource s);
LandmarkSource landmark_source_from_name(const std::string& name);

}  // namespace navagent
