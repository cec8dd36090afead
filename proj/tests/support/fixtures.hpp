// Test-only helpers: deterministic synthetic scenes, random graphs and
// rotations for property tests, and slow reference implementations kept
// independent of the library code paths they check.
#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "stgraph/stgraph.hpp"

namespace testsupport {

using namespace stgraph;

inline const std::vector<std::string>& category_pool() {
  static const std::vector<std::string> pool = {
      "car", "chair", "table", "person", "dog", "bicycle", "lamp",
      "sofa", "monitor", "plant", "truck", "door", "shelf", "cup"};
  return pool;
}

// A valid-by-construction random scene: staggered track entries (distinct
// first frames), moving centers, boxes that stay inside the frame.
inline SceneAnnotation make_synthetic_scene(std::uint64_t seed, Space space, Modality modality,
                                            std::size_t n_tracks, std::int64_t n_frames) {
  Rng rng(mix_seed(seed, "synthetic_scene"));
  SceneAnnotation scene;
  scene.scene_id = "synth_" + std::string(to_string(space)) + "_" + std::to_string(seed);
  scene.space = space;
  scene.modality = modality;
  scene.frame_count = modality == Modality::image ? 1 : n_frames;
  if (space == Space::pixel2d) scene.frame_size = {{1280.0, 720.0}};
  else if (rng.next() % 2 == 0) scene.room_area_m2 = rng.uniform(18.0, 80.0);

  const auto& pool = category_pool();
  for (std::size_t t = 0; t < n_tracks; ++t) {
    ObjectTrack track;
    track.object_id = "obj_" + std::string(t < 10 ? "0" : "") + std::to_string(t);
    // mostly distinct categories, occasional repeats for counting variety
    track.category = pool[(t + (rng.next() % 3 == 0 ? 1 : 0)) % pool.size()];

    const std::int64_t first = modality == Modality::image
                                   ? 0
                                   : std::min<std::int64_t>(static_cast<std::int64_t>(t) * 2,
                                                            scene.frame_count - 1);
    const std::int64_t last =
        modality == Modality::image
            ? 0
            : rng.uniform_int(first, scene.frame_count - 1);

    Point pos = space == Space::pixel2d
                    ? make_point2(rng.uniform(100, 1180), rng.uniform(100, 620))
                    : make_point3(rng.uniform(-4, 4), rng.uniform(-4, 4), rng.uniform(0, 2));
    const bool with_dims = space == Space::metric3d && rng.next() % 2 == 0;
    std::array<double, 3> dims{rng.uniform(0.3, 3.0), rng.uniform(0.3, 2.0), rng.uniform(0.3, 2.0)};

    for (std::int64_t frame = first; frame <= last; ++frame) {
      if (frame != first && rng.uniform() < 0.2) continue;  // gaps in the track
      Observation obs;
      obs.frame = frame;
      if (space == Space::pixel2d) {
        pos = make_point2(std::clamp(pos.x() + rng.uniform(-30, 30), 60.0, 1220.0),
                          std::clamp(pos.y() + rng.uniform(-20, 20), 60.0, 660.0));
        const double half_w = rng.uniform(10, 50);
        const double half_h = rng.uniform(10, 50);
        obs.center = pos;
        obs.box.lo = make_point2(std::max(0.0, pos.x() - half_w), std::max(0.0, pos.y() - half_h));
        obs.box.hi = make_point2(std::min(1280.0, pos.x() + half_w), std::min(720.0, pos.y() + half_h));
      } else {
        pos = make_point3(pos.x() + rng.uniform(-0.3, 0.3), pos.y() + rng.uniform(-0.3, 0.3),
                          std::clamp(pos.z() + rng.uniform(-0.1, 0.1), 0.0, 2.5));
        obs.center = pos;
        obs.box.lo = make_point3(pos.x() - dims[0] / 2, pos.y() - dims[1] / 2, pos.z() - dims[2] / 2);
        obs.box.hi = make_point3(pos.x() + dims[0] / 2, pos.y() + dims[1] / 2, pos.z() + dims[2] / 2);
        if (with_dims) obs.dims_3d = dims;
      }
      track.observations.push_back(obs);
    }
    if (!track.observations.empty()) scene.tracks.push_back(std::move(track));
  }

  std::sort(scene.tracks.begin(), scene.tracks.end(),
            [](const ObjectTrack& a, const ObjectTrack& b) { return a.object_id < b.object_id; });
  validate_scene(scene);
  return scene;
}

inline SceneGraph random_graph(Rng& rng, std::size_t n_nodes, int dim) {
  const auto& pool = category_pool();
  std::vector<GraphNode> nodes;
  for (std::size_t i = 0; i < n_nodes; ++i) {
    GraphNode node;
    node.id = "n" + std::to_string(i);
    node.category = pool[rng.index(std::min<std::size_t>(pool.size(), n_nodes + 2))];
    node.loc = dim == 2 ? make_point2(rng.uniform(-2, 2), rng.uniform(-2, 2))
                        : make_point3(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2));
    nodes.push_back(std::move(node));
  }
  return SceneGraph(std::move(nodes));
}

// Same ids/categories, perturbed locations.
inline SceneGraph jitter_graph(const SceneGraph& g, Rng& rng, double scale) {
  std::vector<GraphNode> nodes = g.nodes();
  for (auto& n : nodes) {
    for (int a = 0; a < n.loc.dim; ++a) n.loc[a] += rng.uniform(-scale, scale);
  }
  return SceneGraph(std::move(nodes));
}

inline Rotation random_rotation(Rng& rng, int dim) {
  if (dim == 2) return Rotation::planar(rng.uniform(0, 2 * std::acos(-1.0)));
  const Point axis = make_point3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
  if (norm(axis) < 1e-3) return Rotation::axis_angle(make_point3(0, 0, 1), rng.uniform(0, 3.0));
  return Rotation::axis_angle(axis, rng.uniform(0, 2 * std::acos(-1.0)));
}

// --- slow reference implementations ---------------------------------------

// Reference tag-format predicate: literal restatement of the rule.
inline bool ref_format_ok(const std::string& raw) {
  auto find_all = [&](const std::string& needle) {
    std::vector<std::size_t> hits;
    std::size_t pos = raw.find(needle);
    while (pos != std::string::npos) {
      hits.push_back(pos);
      pos = raw.find(needle, pos + needle.size());
    }
    return hits;
  };
  const auto to = find_all("<think>");
  const auto tc = find_all("</think>");
  const auto ao = find_all("<answer>");
  const auto ac = find_all("</answer>");
  if (to.size() != 1 || tc.size() != 1 || ao.size() != 1 || ac.size() != 1) return false;
  return to[0] + 7 <= tc[0] && tc[0] < ao[0] && ao[0] + 8 <= ac[0];
}

inline std::int64_t ref_token_count(const std::string& raw) {
  std::istringstream stream(raw);
  std::string token;
  std::int64_t count = 0;
  while (stream >> token) ++count;
  return count;
}

// Grid-counting IoU oracle for 2D boxes.
inline double ref_iou_grid(const Box& a, const Box& b, int cells = 400) {
  const double lo_x = std::min(a.lo.x(), b.lo.x());
  const double lo_y = std::min(a.lo.y(), b.lo.y());
  const double hi_x = std::max(a.hi.x(), b.hi.x());
  const double hi_y = std::max(a.hi.y(), b.hi.y());
  const double dx = (hi_x - lo_x) / cells;
  const double dy = (hi_y - lo_y) / cells;
  std::int64_t in_a = 0, in_b = 0, in_both = 0;
  for (int i = 0; i < cells; ++i) {
    for (int j = 0; j < cells; ++j) {
      const double x = lo_x + (i + 0.5) * dx;
      const double y = lo_y + (j + 0.5) * dy;
      const bool inside_a = x >= a.lo.x() && x <= a.hi.x() && y >= a.lo.y() && y <= a.hi.y();
      const bool inside_b = x >= b.lo.x() && x <= b.hi.x() && y >= b.lo.y() && y <= b.hi.y();
      in_a += inside_a;
      in_b += inside_b;
      in_both += inside_a && inside_b;
    }
  }
  const std::int64_t in_union = in_a + in_b - in_both;
  return in_union == 0 ? 0.0 : static_cast<double>(in_both) / static_cast<double>(in_union);
}

// Straight-line restatement of the clipped group objective with the KL
// penalty, evaluated term by term.
inline double ref_surrogate(const std::vector<double>& p_new, const std::vector<double>& p_old,
                            const std::vector<double>& p_ref,
                            const std::vector<std::size_t>& samples,
                            const std::vector<double>& advantages, double epsilon, double beta) {
  double sum = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double rho = p_new[samples[i]] / p_old[samples[i]];
    double clipped = rho;
    if (clipped < 1.0 - epsilon) clipped = 1.0 - epsilon;
    if (clipped > 1.0 + epsilon) clipped = 1.0 + epsilon;
    const double unclipped_term = rho * advantages[i];
    const double clipped_term = clipped * advantages[i];
    sum += unclipped_term < clipped_term ? unclipped_term : clipped_term;
  }
  double kl = 0.0;
  for (std::size_t a = 0; a < p_new.size(); ++a)
    if (p_new[a] > 0) kl += p_new[a] * std::log(p_new[a] / p_ref[a]);
  return sum / static_cast<double>(samples.size()) - beta * kl;
}

}  // namespace testsupport
