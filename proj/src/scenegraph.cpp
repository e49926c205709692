#include "navagent/scenegraph.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace navagent {

using nlohmann::json;

std::string layer_name(Layer l) {
    switch (l) {
        case Layer::Object: return "object";
        case Layer::Traversable: return "traversable";
        case Layer::Region: return "region";
        default: return "sensor";
    }
}

std::string normalize_label(const std::string& label) {
    std::string out;
    out.reserve(label.size());
    bool pending_space = false;
    for (const char raw : label) {
        const char c = static_cast<char>(std::tolower(static_cast<unsigned char>(raw)));
        if (std::isspace(static_cast<unsigned char>(c))) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out += ' ';
            pending_space = false;
        }
        out += c;
    }
    return out;
}

namespace {

std::vector<std::string> tokens_of(const std::string& normalized) {
    std::vector<std::string> toks;
    std::istringstream in(normalized);
    std::string t;
    while (in >> t) toks.push_back(t);
    return toks;
}

// every query token must appear among the node label's tokens
bool label_matches(const std::string& node_label, const std::string& query) {
    if (node_label == query) return true;
    const auto node_toks = tokens_of(node_label);
    for (const auto& q : tokens_of(query)) {
        if (std::find(node_toks.begin(), node_toks.end(), q) == node_toks.end()) return false;
    }
    return true;
}

}  // namespace

const SceneNode* SceneGraph::find(const std::string& id) const {
    const auto it = nodes_.find(id);
    return it == nodes_.end() ? nullptr : &it->second;
}

bool SceneGraph::has_edge(const std::string& src, const std::string& dst,
                          const std::string& relation) const {
    return std::find(edges_.begin(), edges_.end(), SceneEdge{src, dst, relation}) != edges_.end();
}

void SceneGraph::add_edge(const std::string& src, const std::string& dst,
                          const std::string& relation) {
    if (!nodes_.count(src)) throw SceneGraphError("edge source '" + src + "' does not exist");
    if (!nodes_.count(dst)) throw SceneGraphError("edge target '" + dst + "' does not exist");
    if (relation == "in_region") {
        if (nodes_.at(src).layer != Layer::Object || nodes_.at(dst).layer != Layer::Region)
            throw SceneGraphError("in_region edges connect Object to Region nodes only");
    }
    if (!has_edge(src, dst, relation)) edges_.push_back(SceneEdge{src, dst, relation});
}

void SceneGraph::link_region_if_inside(const SceneNode& object_node) {
    for (const auto& [id, node] : nodes_) {
        if (node.layer != Layer::Region || !node.rect) continue;
        if (node.rect->contains(object_node.cell) &&
            !has_edge(object_node.id, id, "in_region"))
            edges_.push_back(SceneEdge{object_node.id, id, "in_region"});
    }
}

std::vector<std::string> SceneGraph::upsert_from_observation(
    const Observation& obs, const std::vector<std::string>& targets) {
    std::vector<std::string> normalized_targets;
    normalized_targets.reserve(targets.size());
    for (const auto& t : targets) normalized_targets.push_back(normalize_label(t));

    const std::string sensor_id = "sensor_t" + std::to_string(obs.timestep);
    if (!nodes_.count(sensor_id)) {
        SceneNode s;
        s.id = sensor_id;
        s.layer = Layer::Sensor;
        s.label = "observation";
        s.cell = obs.pose_cell;
        s.first_seen = obs.timestep;
        s.observation_refs = {obs.timestep};
        nodes_.emplace(sensor_id, std::move(s));
    }

    std::vector<std::string> touched;
    for (const auto& det : obs.detections) {
        const std::string det_label = normalize_label(det.label);
        if (!normalized_targets.empty()) {
            bool wanted = false;
            for (const auto& t : normalized_targets)
                if (label_matches(det_label, t)) {
                    wanted = true;
                    break;
                }
            if (!wanted) continue;
        }
        auto it = nodes_.find(det.object_id);
        if (it == nodes_.end()) {
            SceneNode n;
            n.id = det.object_id;
            n.layer = Layer::Object;
            n.label = det_label;
            n.cell = det.cell;
            n.first_seen = obs.timestep;
            it = nodes_.emplace(det.object_id, std::move(n)).first;
        }
        SceneNode& node = it->second;
        if (node.observation_refs.empty() || node.observation_refs.back() != obs.timestep)
            node.observation_refs.push_back(obs.timestep);
        if (!has_edge(node.id, sensor_id, "observed_in"))
            edges_.push_back(SceneEdge{node.id, sensor_id, "observed_in"});
        link_region_if_inside(node);
        touched.push_back(node.id);
    }
    return touched;
}

std::string SceneGraph::add_region(const std::string& id, const std::string& label,
                                   const Rect& rect) {
    if (nodes_.count(id)) throw SceneGraphError("region '" + id + "': duplicate id");
    if (rect.r0 < 0 || rect.c0 < 0 || rect.r1 >= height_ || rect.c1 >= width_ ||
        rect.r0 > rect.r1 || rect.c0 > rect.c1)
        throw SceneGraphError("region '" + id + "': rect out of bounds");

    SceneNode n;
    n.id = id;
    n.layer = Layer::Region;
    n.label = normalize_label(label);
    n.rect = rect;
    n.cell = rect.center();
    nodes_.emplace(id, n);

    for (const auto& [nid, node] : nodes_) {
        if (node.layer != Layer::Object || !rect.contains(node.cell)) continue;
        if (!has_edge(nid, id, "in_region")) edges_.push_back(SceneEdge{nid, id, "in_region"});
    }
    return id;
}

std::vector<SceneNode> SceneGraph::query_by_label(const std::string& label) const {
    const std::string q = normalize_label(label);
    std::vector<SceneNode> out;
    for (const auto& [id, node] : nodes_) {
        if (node.layer == Layer::Sensor) continue;
        if (label_matches(node.label, q)) out.push_back(node);
    }
    std::sort(out.begin(), out.end(), [](const SceneNode& a, const SceneNode& b) {
        if (a.first_seen != b.first_seen) return a.first_seen < b.first_seen;
        return a.id < b.id;
    });
    return out;
}

std::vector<SceneNode> SceneGraph::query_by_label_in_region(const std::string& label,
                                                            const std::string& region_label)
    const {
    const std::string rq = normalize_label(region_label);
    std::vector<SceneNode> out;
    for (const auto& node : query_by_label(label)) {
        if (node.layer != Layer::Object) continue;
        for (const auto& e : edges_) {
            if (e.src != node.id || e.relation != "in_region") continue;
            const SceneNode* region = find(e.dst);
            if (region && label_matches(region->label, rq)) {
                out.push_back(node);
                break;
            }
        }
    }
    return out;
}

json SceneGraph::to_json() const {
    json nodes = json::array();
    for (const auto& [id, n] : nodes_) {
        json jn = {{"id", n.id},
                   {"layer", layer_name(n.layer)},
                   {"label", n.label},
                   {"cell", {n.cell.row, n.cell.col}},
                   {"first_seen", n.first_seen},
                   {"observation_refs", n.observation_refs}};
        if (n.rect) jn["rect"] = {n.rect->r0, n.rect->c0, n.rect->r1, n.rect->c1};
        nodes.push_back(std::move(jn));
    }
    json edges = json::array();
    for (const auto& e : edges_)
        edges.push_back({{"src", e.src}, {"dst", e.dst}, {"relation", e.relation}});

    json layers = json::array();
    for (const Layer l : {Layer::Object, Layer::Traversable, Layer::Region, Layer::Sensor}) {
        json ids = json::array();
        for (const auto& [id, n] : nodes_)
            if (n.layer == l) ids.push_back(id);
        layers.push_back({{"layer", layer_name(l)}, {"nodes", std::move(ids)}});
    }
    return json{{"nodes", std::move(nodes)}, {"edges", std::move(edges)},
                {"layers", std::move(layers)}};
}

}  // namespace navagent
