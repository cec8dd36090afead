#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "stgraph/annotations.hpp"
#include "stgraph/assignment.hpp"
#include "stgraph/errors.hpp"
#include "stgraph/geometry.hpp"

namespace stgraph {

struct GraphNode {
  std::string id;
  std::string category;
  Point loc;
};

// Inter-object relation graph for one frame: one node per object, and an
// implicit complete edge set whose attributes (distance, direction) are
// derived from node locations on demand. Locations are normalized
// coordinates for pixel scenes and meters for metric scenes.
class SceneGraph {
 public:
  explicit SceneGraph(std::vector<GraphNode> nodes) : nodes_(std::move(nodes)) {
    if (nodes_.empty()) throw InvariantError("scene graph requires at least one node");
    dim_ = nodes_.front().loc.dim;
    for (const auto& n : nodes_) {
      if (n.loc.dim != dim_)
        throw DimensionError("mixed node dimensionality in scene graph", n.id);
    }
  }

  const std::vector<GraphNode>& nodes() const { return nodes_; }
  std::size_t size() const { return nodes_.size(); }
  int dim() const { return dim_; }
  const GraphNode& node(std::size_t i) const { return nodes_[i]; }

  Point displacement(std::size_t i, std::size_t j) const {
    return nodes_[j].loc - nodes_[i].loc;
  }

  double edge_distance(std::size_t i, std::size_t j) const {
    return norm(displacement(i, j));
  }

  // Planar direction angle of the displacement from node i to node j, in
  // (-pi, pi]. For 3D graphs this is the azimuth of the displacement's
  // horizontal projection.
  double edge_angle(std::size_t i, std::size_t j) const {
    const Point d = displacement(i, j);
    double a = std::atan2(d.y(), d.x());
    if (a <= -std::acos(-1.0)) a = std::acos(-1.0);  // pin -pi to +pi
    return a;
  }

 private:
  std::vector<GraphNode> nodes_;
  int dim_ = 2;
};

// Category-consistent correspondence between predicted and ground-truth
// nodes: index pairs plus the surplus on either side.
struct GraphMatch {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (pred index, gt index)
  std::vector<std::string> unmatched_pred;
  std::vector<std::string> unmatched_gt;
};

struct EdgeRewardResult {
  double value = 0.0;
  bool no_edges = true;  // fewer than two matched pairs, nothing to score
};

inline SceneGraph graph_from_frame(const SceneAnnotation& scene, std::int64_t frame) {
  std::vector<GraphNode> nodes;
  for (const auto& track : scene.tracks) {
    if (const Observation* obs = track.observation_at(frame)) {
      nodes.push_back(GraphNode{track.object_id, track.category,
                                normalize_point(obs->center, scene)});
    }
  }
  if (nodes.empty())
    throw EmptyFrameError("no track observes frame " + std::to_string(frame), scene.scene_id);
  return SceneGraph(std::move(nodes));
}

// Within each category, a minimum-total-distance assignment between
// predicted and ground-truth nodes. Small groups are solved exhaustively,
// larger ones with the Hungarian routine; both are exact.
inline GraphMatch match_graphs(const SceneGraph& pred, const SceneGraph& gt) {
  std::map<std::string, std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> by_category;
  for (std::size_t i = 0; i < pred.size(); ++i) by_category[pred.node(i).category].first.push_back(i);
  for (std::size_t i = 0; i < gt.size(); ++i) by_category[gt.node(i).category].second.push_back(i);

  GraphMatch match;
  for (const auto& [category, groups] : by_category) {
    const auto& pred_idx = groups.first;
    const auto& gt_idx = groups.second;
    if (pred_idx.empty() || gt_idx.empty()) {
      for (std::size_t i : pred_idx) match.unmatched_pred.push_back(pred.node(i).id);
      for (std::size_t i : gt_idx) match.unmatched_gt.push_back(gt.node(i).id);
      continue;
    }

    const bool pred_rows = pred_idx.size() <= gt_idx.size();
    const auto& rows = pred_rows ? pred_idx : gt_idx;
    const auto& cols = pred_rows ? gt_idx : pred_idx;

    std::vector<std::vector<double>> cost(rows.size(), std::vector<double>(cols.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      for (std::size_t c = 0; c < cols.size(); ++c) {
        const Point& a = pred_rows ? pred.node(rows[r]).loc : gt.node(rows[r]).loc;
        const Point& b = pred_rows ? gt.node(cols[c]).loc : pred.node(cols[c]).loc;
        cost[r][c] = ::stgraph::distance(a, b);
      }
    }

    const std::vector<int> assigned = cols.size() <= 6 ? min_cost_assignment_exhaustive(cost)
                                                       : min_cost_assignment(cost);

    std::vector<bool> col_used(cols.size(), false);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const std::size_t c = static_cast<std::size_t>(assigned[r]);
      col_used[c] = true;
      const std::size_t pi = pred_rows ? rows[r] : cols[c];
      const std::size_t gi = pred_rows ? cols[c] : rows[r];
      match.pairs.emplace_back(pi, gi);
    }
    for (std::size_t c = 0; c < cols.size(); ++c) {
      if (col_used[c]) continue;
      if (pred_rows) match.unmatched_gt.push_back(gt.node(cols[c]).id);
      else match.unmatched_pred.push_back(pred.node(cols[c]).id);
    }
  }

  std::sort(match.pairs.begin(), match.pairs.end());
  std::sort(match.unmatched_pred.begin(), match.unmatched_pred.end());
  std::sort(match.unmatched_gt.begin(), match.unmatched_gt.end());
  return match;
}

// Node-position agreement in [0, 1]: each matched pair contributes
// exp(-lambda * ||x - x'||), category-count weighting reduces to a flat
// average over ground-truth nodes, and unmatched ground truth dilutes
// the score.
inline double node_reward(const SceneGraph& pred, const SceneGraph& gt, const GraphMatch& match,
                          double lambda_node = 1.0) {
  double total = 0.0;
  for (const auto& [pi, gi] : match.pairs)
    total += std::exp(-lambda_node * ::stgraph::distance(pred.node(pi).loc, gt.node(gi).loc));
  return total / static_cast<double>(gt.size());
}

// Pairwise relation agreement in [0, 1]: for each unordered pair of
// matched nodes, half of exp(-lambda * |d - d'|) plus exp(-dtheta), where
// dtheta in [0, pi] is the angle between the predicted and ground-truth
// displacement vectors. Mean over pairs; fewer than two matched pairs
// yields the no_edges flag.
inline EdgeRewardResult edge_reward(const SceneGraph& pred, const SceneGraph& gt,
                                    const GraphMatch& match, double lambda_dist = 1.0) {
  if (match.pairs.size() < 2) return {0.0, true};
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t a = 0; a < match.pairs.size(); ++a) {
    for (std::size_t b = a + 1; b < match.pairs.size(); ++b) {
      const auto& [pa, ga] = match.pairs[a];
      const auto& [pb, gb] = match.pairs[b];
      const double dp = pred.edge_distance(pa, pb);
      const double dg = gt.edge_distance(ga, gb);
      const Point up = pred.displacement(pa, pb);
      const Point ug = gt.displacement(ga, gb);
      const double dtheta = angle_between(up, ug);
      total += 0.5 * (std::exp(-lambda_dist * std::abs(dp - dg)) + std::exp(-dtheta));
      ++count;
    }
  }
  return {total / static_cast<double>(count), false};
}

// Combined per-frame similarity in [0, 1]. When the match yields no
// scorable edges (single-node frames included) the node score stands alone.
inline double frame_graph_score(const SceneGraph& pred, const SceneGraph& gt,
                                double lambda_node = 1.0, double lambda_dist = 1.0) {
  const GraphMatch match = match_graphs(pred, gt);
  const double rn = node_reward(pred, gt, match, lambda_node);
  const EdgeRewardResult re = edge_reward(pred, gt, match, lambda_dist);
  return re.no_edges ? rn : 0.5 * (rn + re.value);
}

// Mean per-frame score over k frame-aligned graph pairs.
inline double graph_reward(const std::vector<SceneGraph>& pred_frames,
                           const std::vector<SceneGraph>& gt_frames, double lambda_node = 1.0,
                           double lambda_dist = 1.0) {
  if (pred_frames.size() != gt_frames.size()) {
    throw LengthMismatchError("predicted and ground-truth frame lists differ in length (" +
                              std::to_string(pred_frames.size()) + " vs " +
                              std::to_string(gt_frames.size()) + ")");
  }
  if (gt_frames.empty()) throw LengthMismatchError("graph reward requires at least one frame");
  double total = 0.0;
  for (std::size_t f = 0; f < gt_frames.size(); ++f)
    total += frame_graph_score(pred_frames[f], gt_frames[f], lambda_node, lambda_dist);
  return total / static_cast<double>(gt_frames.size());
}

inline SceneGraph rotate_graph(const SceneGraph& g, const Rotation& rotation) {
  rotation.validate();
  std::vector<GraphNode> nodes = g.nodes();
  for (auto& n : nodes) n.loc = rotation.apply(n.loc);
  return SceneGraph(std::move(nodes));
}

// Wire format {"nodes":[{"id","category","loc":[..]}]}. Edges are always
// derived from locations, never transmitted.
inline SceneGraph graph_from_wire(const nlohmann::json& j, const std::string& origin = "graph") {
  using detail::point_from_json;
  using detail::require_array;
  using detail::require_field;
  using detail::require_string;
  if (!j.is_object()) throw SchemaError("graph must be a JSON object", origin);
  const auto& nodes_json = require_array(require_field(j, "nodes", origin), origin + ".nodes");
  std::vector<GraphNode> nodes;
  for (std::size_t i = 0; i < nodes_json.size(); ++i) {
    const std::string npath = origin + ".nodes[" + std::to_string(i) + "]";
    const auto& nj = nodes_json[i];
    if (!nj.is_object()) throw SchemaError("node must be a JSON object", npath);
    GraphNode node;
    node.id = require_string(require_field(nj, "id", npath), npath + ".id");
    node.category = require_string(require_field(nj, "category", npath), npath + ".category");
    node.loc = point_from_json(require_field(nj, "loc", npath), npath + ".loc");
    nodes.push_back(std::move(node));
  }
  if (nodes.empty()) throw SchemaError("graph has no nodes", origin);
  return SceneGraph(std::move(nodes));
}

inline nlohmann::ordered_json graph_to_wire(const SceneGraph& g) {
  nlohmann::ordered_json j;
  j["nodes"] = nlohmann::ordered_json::array();
  for (const auto& n : g.nodes()) {
    nlohmann::ordered_json nj;
    nj["id"] = n.id;
    nj["category"] = n.category;
    nj["loc"] = detail::point_to_json(n.loc);
    j["nodes"].push_back(std::move(nj));
  }
  return j;
}

}  // namespace stgraph
