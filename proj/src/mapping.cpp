#include "navagent/mapping.hpp"

#include <algorithm>
#include <cstdio>
#include <deque>
#include <unordered_map>

namespace navagent {

int OccupancyGrid::known_cells() const {
    int n = 0;
    for (const auto s : cells_)
        if (s != BeliefState::Unknown) ++n;
    return n;
}

void integrate(OccupancyGrid& grid, const Observation& obs) {
    if (!grid.in_bounds(obs.pose_cell))
        throw ContractViolation("integrate: observation outside grid dimensions");
    for (const auto& [cell, state] : obs.visible_cells) {
        if (!grid.in_bounds(cell))
            throw ContractViolation("integrate: visible cell out of grid bounds");
        grid.set(cell, state == CellState::Free ? BeliefState::Free : BeliefState::Occupied);
    }
    grid.bump_observed();
}

FrontierSet extract_frontiers(const OccupancyGrid& grid) {
    const int h = grid.height(), w = grid.width();
    auto is_frontier = [&](const Cell& c) {
        if (grid.at(c) != BeliefState::Free) return false;
        for (const Cell& n : neighbors4(c))
            if (grid.in_bounds(n) && grid.at(n) == BeliefState::Unknown) return true;
        return false;
    };

    std::vector<char> seen(static_cast<size_t>(h) * w, 0);
    auto idx = [w](const Cell& c) { return static_cast<size_t>(c.row) * w + c.col; };

    FrontierSet out;
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const Cell start{r, c};
            if (seen[idx(start)] || !is_frontier(start)) continue;
            FrontierCluster cluster;
            std::deque<Cell> queue{start};
            seen[idx(start)] = 1;
            while (!queue.empty()) {
                const Cell cur = queue.front();
                queue.pop_front();
                cluster.cells.push_back(cur);
                for (const Cell& n : neighbors8(cur)) {
                    if (!grid.in_bounds(n) || seen[idx(n)] || !is_frontier(n)) continue;
                    seen[idx(n)] = 1;
                    queue.push_back(n);
                }
            }
            std::sort(cluster.cells.begin(), cluster.cells.end());
            cluster.size = static_cast<int>(cluster.cells.size());

            double mr = 0, mc = 0;
            for (const Cell& m : cluster.cells) {
                mr += m.row;
                mc += m.col;
            }
            mr /= cluster.size;
            mc /= cluster.size;
            double best = 1e18;
            for (const Cell& m : cluster.cells) {
                const double d = (m.row - mr) * (m.row - mr) + (m.col - mc) * (m.col - mc);
                if (d < best - 1e-12) {
                    best = d;
                    cluster.centroid = m;
                }
            }
            out.frontiers.push_back(std::move(cluster));
        }
    }

    std::sort(out.frontiers.begin(), out.frontiers.end(),
              [](const FrontierCluster& a, const FrontierCluster& b) {
                  if (a.size != b.size) return a.size > b.size;
                  return a.centroid < b.centroid;
              });
    return out;
}

std::string render_raster(const OccupancyGrid& grid, const std::vector<Landmark>& landmarks,
                          const Cell& robot) {
    if (landmarks.size() > 26) throw RasterError("landmark alphabet exhausted");

    std::string out = "rows top->bottom, cols left->right; ?=unknown .=free #=occupied R=robot\n";
    std::unordered_map<Cell, char> symbol_at;
    for (size_t i = 0; i < landmarks.size(); ++i)
        symbol_at[landmarks[i].cell] = static_cast<char>('A' + i);

    for (int r = 0; r < grid.height(); ++r) {
        for (int c = 0; c < grid.width(); ++c) {
            const Cell cell{r, c};
            char ch;
            switch (grid.at(cell)) {
                case BeliefState::Unknown: ch = '?'; break;
                case BeliefState::Free: ch = '.'; break;
                default: ch = '#'; break;
            }
            const auto it = symbol_at.find(cell);
            if (it != symbol_at.end()) ch = it->second;
            if (cell == robot) ch = 'R';
            out += ch;
        }
        out += '\n';
    }

    out += "legend:\n";
    for (size_t i = 0; i < landmarks.size(); ++i) {
        char buf[128];
        std::snprintf(buf, sizeof(buf), "%c: %s (%d,%d)\n", static_cast<char>('A' + i),
                      landmarks[i].name.c_str(), landmarks[i].cell.row, landmarks[i].cell.col);
        out += buf;
    }
    return out;
}

std::string landmark_source_name(LandmarkSource s) {
    switch (s) {
        case LandmarkSource::QueriedObject: return "queried_object";
        case LandmarkSource::SampledRoomPoint: return "sampled_room_point";
        default: return "sampled_image_point";
    }
}

LandmarkSource landmark_source_from_name(const std::string& name) {
    if (name == "queried_object") return LandmarkSource::QueriedObject;
    if (name == "sampled_room_point") return LandmarkSource::SampledRoomPoint;
    if (name == "sampled_image_point") return LandmarkSource::SampledImagePoint;
    throw std::invalid_argument("unknown landmark source '" + name + "'");
}

}  // namespace navagent
