#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "navagent/worldsim.hpp"

namespace navagent {

enum class Layer { Object, Traversable, Region, Sensor };

std::string layer_name(Layer l);

struct SceneNode {
    std::string id;
    Layer layer = Layer::Object;
    std::string label;  // lowercase-normalized, open set
    Cell cell;          // anchor; for regions, the rect centre
    std::optional<Rect> rect;
    int first_seen = 0;
    std::vector<int> observation_refs;
};

struct SceneEdge {
    std::string src;
    std::string dst;
    std::string relation;

    bool operator==(const SceneEdge& o) const {
        return src == o.src && dst == o.dst && relation == o.relation;
    }
};

class SceneGraphError : public std::runtime_error {
public:
    explicit SceneGraphError(const std::string& msg) : std::runtime_error(msg) {}
};

std::string normalize_label(const std::string& label);

// Directed layered graph accumulated during exploration. Object nodes are
// keyed by simulator object id (perfect data association); regions come
// from the world file or agent-added rects.
class SceneGraph {
public:
    SceneGraph() = default;
    SceneGraph(int width, int height, double resolution)
        : width_(width), height_(height), resolution_(resolution) {}

    int width() const { return width_; }
    int height() const { return height_; }
    double resolution() const { return resolution_; }

    const std::map<std::string, SceneNode>& nodes() const { return nodes_; }
    const std::vector<SceneEdge>& edges() const { return edges_; }
    const SceneNode* find(const std::string& id) const;

    // Detections matching a target label (all, when targets is empty)
    // become Object nodes; a Sensor node for the observation timestep is
    // linked to each. Returns ids of touched Object nodes.
    std::vector<std::string> upsert_from_observation(const Observation& obs,
                                                     const std::vector<std::string>& targets);

    std::string add_region(const std::string& id, const std::string& label, const Rect& rect);

    // Equality or token-wise containment of the normalized query; sorted
    // by first_seen, then id.
    std::vector<SceneNode> query_by_label(const std::string& label) const;

    // As above, restricted to Object nodes with an in_region edge to a
    // Region whose label matches region_label.
    std::vector<SceneNode> query_by_label_in_region(const std::string& label,
                                                    const std::string& region_label) const;

    // Uninterpreted relation labels are accepted pass-through.
    void add_edge(const std::string& src, const std::string& dst, const std::string& relation);

    nlohmann::json to_json() const;

private:
    bool has_edge(const std::string& src, const std::string& dst,
                  const std::string& relation) const;
    void link_region_if_inside(const SceneNode& object_node);

    int width_ = 0;
    int height_ = 0;
    double resolution_ = 0.25;
    std::map<std::string, SceneNode> nodes_;
    std::vector<SceneEdge> edges_;
};

}  // namespace navagent
