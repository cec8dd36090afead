#pragma once

#include <cassert>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stgraph/annotations.hpp"
#include "stgraph/errors.hpp"
#include "stgraph/qa.hpp"
#include "stgraph/response.hpp"
#include "stgraph/scene_graph.hpp"

namespace stgraph {

struct RewardConfig {
  double omega = 0.2;              // length bonus
  std::int64_t length_min = 320;   // preferred response length window
  std::int64_t length_max = 512;
  int frames_k = 4;                // frames scored by the graph reward
  double lambda_node = 1.0;        // node distance decay
  double lambda_dist = 1.0;        // edge distance decay

  void validate() const {
    if (omega < 0) throw ConfigError("omega must be >= 0");
    if (length_min > length_max) throw ConfigError("length window min exceeds max");
    if (frames_k < 1) throw ConfigError("frames_k must be >= 1");
    if (lambda_node <= 0 || lambda_dist <= 0) throw ConfigError("decay scales must be positive");
  }
};

struct RewardBreakdown {
  double r_format = 0.0;   // 0 or 1
  double r_ans = 0.0;      // [0, 1]
  double r_graph = 0.0;    // [0, 1]
  double r_length = 0.0;   // 0 or omega
  double r_total = 0.0;    // sum of the above
  AnswerType ans_kind = AnswerType::multi_choice;
  bool extraction_ok = false;  // answer parsed; false means r_ans fell to 0
};

inline double reward_format(const ParsedResponse& resp) { return resp.format_ok ? 1.0 : 0.0; }

inline double reward_multichoice(int pred, int gt) { return pred == gt ? 1.0 : 0.0; }

// Relative accuracy, clamped at zero. Callers guarantee gt > 0.
inline double reward_numerical(double pred, double gt) {
  assert(gt > 0);
  if (!std::isfinite(pred)) return 0.0;
  return std::max(0.0, 1.0 - std::abs(pred - gt) / std::abs(gt));
}

// Same exponential kernel the graph node reward uses, so a localization
// answer scores identically to a single-node graph.
inline double reward_point(const Point& pred, const Point& gt, double lambda_node = 1.0) {
  if (pred.dim != gt.dim)
    throw DimensionError("predicted point is " + std::to_string(pred.dim) + "D, ground truth is " +
                         std::to_string(gt.dim) + "D");
  return std::exp(-lambda_node * distance(pred, gt));
}

// Mean IoU over ground-truth frames; a frame the prediction misses
// contributes zero.
inline double reward_iou_track(const std::vector<TrackEntry>& pred,
                               const std::vector<TrackEntry>& gt) {
  if (gt.empty()) throw InvariantError("ground-truth track must be non-empty");
  std::map<std::int64_t, const Box*> pred_by_frame;
  for (const auto& e : pred) pred_by_frame.emplace(e.frame, &e.box);

  double total = 0.0;
  for (const auto& e : gt) {
    auto it = pred_by_frame.find(e.frame);
    if (it == pred_by_frame.end()) continue;
    if (it->second->dim() != e.box.dim()) continue;  // wrong dimensionality scores 0
    total += box_iou(*it->second, e.box);
  }
  return total / static_cast<double>(gt.size());
}

inline double reward_length(const ParsedResponse& resp, double r_ans, const RewardConfig& cfg) {
  if (r_ans <= 0.8) return 0.0;
  if (resp.token_length < cfg.length_min || resp.token_length > cfg.length_max) return 0.0;
  return cfg.omega;
}

// Ground-truth graphs for the k reward frames: uniformly spaced over the
// scene's annotated frames, endpoints included.
inline std::vector<PredictedGraph> select_reward_frames(const SceneAnnotation& scene, int k) {
  if (k < 1) throw ConfigError("frames_k must be >= 1");
  const std::vector<std::int64_t> frames = scene.annotated_frames();
  if (frames.empty()) throw EmptyFrameError("scene has no annotated frames", scene.scene_id);

  std::vector<std::int64_t> chosen;
  const std::size_t n = frames.size();
  if (n <= static_cast<std::size_t>(k)) {
    chosen = frames;
  } else {
    for (int i = 0; i < k; ++i) {
      const std::size_t idx =
          k == 1 ? 0
                 : static_cast<std::size_t>(std::llround(static_cast<double>(i) *
                                                         static_cast<double>(n - 1) /
                                                         static_cast<double>(k - 1)));
      if (chosen.empty() || chosen.back() != frames[idx]) chosen.push_back(frames[idx]);
    }
  }

  std::vector<PredictedGraph> out;
  for (std::int64_t f : chosen) out.push_back(PredictedGraph{f, graph_from_frame(scene, f)});
  return out;
}

namespace detail {

// Aligns predicted graph blocks with the selected ground-truth frames by
// declared frame index. A response carrying exactly one block is scored as
// a one-frame graph answer; otherwise every selected frame lacking a
// prediction contributes zero.
inline double graph_component(const std::vector<PredictedGraph>& pred,
                              const std::vector<PredictedGraph>& gt_frames,
                              const RewardConfig& cfg) {
  if (pred.empty() || gt_frames.empty()) return 0.0;

  std::map<std::int64_t, const SceneGraph*> pred_by_frame;
  for (const auto& p : pred) pred_by_frame.emplace(p.frame, &p.graph);

  if (pred.size() == 1) {
    for (const auto& g : gt_frames) {
      if (g.frame == pred.front().frame)
        return frame_graph_score(pred.front().graph, g.graph, cfg.lambda_node, cfg.lambda_dist);
    }
    return 0.0;
  }

  double total = 0.0;
  for (const auto& g : gt_frames) {
    auto it = pred_by_frame.find(g.frame);
    if (it == pred_by_frame.end()) continue;
    total += frame_graph_score(*it->second, g.graph, cfg.lambda_node, cfg.lambda_dist);
  }
  return total / static_cast<double>(gt_frames.size());
}

}  // namespace detail

// Full reward stack over one response. Total over arbitrary model output:
// extraction failures and absent graphs score zero, never throw.
inline RewardBreakdown reward_total(const ParsedResponse& resp, const QAPair& qa,
                                    const std::vector<PredictedGraph>& gt_graphs,
                                    const RewardConfig& cfg) {
  RewardBreakdown b;
  b.ans_kind = qa.answer_type;
  b.r_format = reward_format(resp);

  if (resp.answer_text) {
    try {
      const AnswerValue value = parse_answer(*resp.answer_text, qa.answer_type);
      b.extraction_ok = true;
      switch (qa.answer_type) {
        case AnswerType::multi_choice:
          b.r_ans = reward_multichoice(std::get<int>(value), *qa.gt_choice);
          break;
        case AnswerType::numerical:
          b.r_ans = reward_numerical(std::get<double>(value), *qa.gt_number);
          break;
        case AnswerType::point:
          try {
            b.r_ans = reward_point(std::get<Point>(value), *qa.gt_point, cfg.lambda_node);
          } catch (const DimensionError&) {
            b.r_ans = 0.0;
          }
          break;
        case AnswerType::iou_track:
          b.r_ans = reward_iou_track(std::get<std::vector<TrackEntry>>(value), *qa.gt_track);
          break;
      }
    } catch (const ExtractionError&) {
      b.extraction_ok = false;
    }
  }

  try {
    b.r_graph = detail::graph_component(resp.pred_graphs, gt_graphs, cfg);
  } catch (const Error&) {
    b.r_graph = 0.0;
  }

  b.r_length = reward_length(resp, b.r_ans, cfg);
  b.r_total = b.r_format + b.r_ans + b.r_graph + b.r_length;
  return b;
}

inline nlohmann::ordered_json breakdown_to_json(const RewardBreakdown& b) {
  nlohmann::ordered_json j;
  j["r_format"] = b.r_format;
  j["r_ans"] = b.r_ans;
  j["r_graph"] = b.r_graph;
  j["r_length"] = b.r_length;
  j["r_total"] = b.r_total;
  j["ans_kind"] = to_string(b.ans_kind);
  j["extraction_ok"] = b.extraction_ok;
  return j;
}

}  // namespace stgraph
