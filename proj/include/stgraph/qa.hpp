#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "stgraph/annotations.hpp"
#include "stgraph/errors.hpp"
#include "stgraph/geometry.hpp"
#include "stgraph/response.hpp"

namespace stgraph {

enum class Task {
  counting,
  relative_direction,
  relative_distance,
  appearance_order,
  object_size,
  motion_tracking,
  localization,
  displacement,
};

inline constexpr std::array<Task, 8> kAllTasks = {
    Task::counting,        Task::relative_direction, Task::relative_distance,
    Task::appearance_order, Task::object_size,       Task::motion_tracking,
    Task::localization,    Task::displacement,
};

inline const char* to_string(Task t) {
  switch (t) {
    case Task::counting: return "counting";
    case Task::relative_direction: return "relative_direction";
    case Task::relative_distance: return "relative_distance";
    case Task::appearance_order: return "appearance_order";
    case Task::object_size: return "object_size";
    case Task::motion_tracking: return "motion_tracking";
    case Task::localization: return "localization";
    case Task::displacement: return "displacement";
  }
  return "unknown";
}

inline Task task_from_string(const std::string& s) {
  for (Task t : kAllTasks)
    if (s == to_string(t)) return t;
  throw SchemaError("unknown task '" + s + "'");
}

inline AnswerType answer_type_from_string(const std::string& s) {
  for (AnswerType t : {AnswerType::multi_choice, AnswerType::numerical, AnswerType::point,
                       AnswerType::iou_track})
    if (s == to_string(t)) return t;
  throw SchemaError("unknown answer_type '" + s + "'");
}

// Where a QA came from: enough to recompute its ground truth from the
// scene without consulting generator internals.
struct Provenance {
  std::string generator;
  std::string template_id;
  std::uint64_t seed = 0;
  std::vector<std::string> object_ids;  // objects the question refers to
  std::vector<std::int64_t> frames;     // frame parameters, generator-specific
  std::string detail;                   // e.g. counted category or dimension name
};

struct QAPair {
  std::string qa_id;
  std::string scene_id;
  Task task = Task::counting;
  AnswerType answer_type = AnswerType::numerical;
  std::string question;

  std::optional<std::array<std::string, 4>> options;
  std::optional<int> gt_choice;
  std::optional<double> gt_number;
  std::string unit;  // accompanies gt_number: count | m | m2 | norm | diag
  std::optional<NormalizedPoint> gt_point;
  std::optional<std::vector<TrackEntry>> gt_track;

  Provenance provenance;
};

// Exactly one gt_* field, consistent with answer_type, and the documented
// numeric constraints. Generators call this on every pair they emit.
inline void validate_qa(const QAPair& qa) {
  const std::string where = "qa '" + qa.qa_id + "'";
  const int populated = (qa.gt_choice ? 1 : 0) + (qa.gt_number ? 1 : 0) + (qa.gt_point ? 1 : 0) +
                        (qa.gt_track ? 1 : 0);
  if (populated != 1) throw InvariantError("exactly one gt_* field must be populated", where);

  switch (qa.answer_type) {
    case AnswerType::multi_choice:
      if (!qa.gt_choice) throw InvariantError("multi_choice requires gt_choice", where);
      if (!qa.options) throw InvariantError("multi_choice requires options", where);
      if (*qa.gt_choice < 0 || *qa.gt_choice >= 4)
        throw InvariantError("gt_choice out of range [0,4)", where);
      for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = i + 1; j < 4; ++j)
          if ((*qa.options)[i] == (*qa.options)[j])
            throw InvariantError("options must be distinct", where);
      break;
    case AnswerType::numerical:
      if (!qa.gt_number) throw InvariantError("numerical requires gt_number", where);
      if (!std::isfinite(*qa.gt_number)) throw InvariantError("gt_number must be finite", where);
      if (*qa.gt_number <= 0) throw InvariantError("gt_number must be positive", where);
      break;
    case AnswerType::point:
      if (!qa.gt_point) throw InvariantError("point requires gt_point", where);
      break;
    case AnswerType::iou_track:
      if (!qa.gt_track) throw InvariantError("iou_track requires gt_track", where);
      if (qa.gt_track->empty()) throw InvariantError("gt_track must be non-empty", where);
      for (std::size_t i = 1; i < qa.gt_track->size(); ++i)
        if ((*qa.gt_track)[i].frame <= (*qa.gt_track)[i - 1].frame)
          throw InvariantError("gt_track frames must be strictly increasing", where);
      break;
  }
}

namespace detail {

inline nlohmann::ordered_json box_to_json(const Box& b) {
  return {point_to_json(b.lo), point_to_json(b.hi)};
}

inline Box box_from_json(const nlohmann::json& j, const std::string& path) {
  require_array(j, path);
  if (j.size() != 2) throw SchemaError("box must be [min-corner, max-corner]", path);
  return Box{point_from_json(j[0], path + "[0]"), point_from_json(j[1], path + "[1]")};
}

}  // namespace detail

inline nlohmann::ordered_json qa_to_json(const QAPair& qa) {
  using detail::point_to_json;
  nlohmann::ordered_json j;
  j["qa_id"] = qa.qa_id;
  j["scene_id"] = qa.scene_id;
  j["task"] = to_string(qa.task);
  j["answer_type"] = to_string(qa.answer_type);
  j["question"] = qa.question;
  if (qa.options) {
    j["options"] = nlohmann::ordered_json::array();
    for (const auto& o : *qa.options) j["options"].push_back(o);
  }
  if (qa.gt_choice) j["gt_choice"] = *qa.gt_choice;
  if (qa.gt_number) {
    j["gt_number"] = *qa.gt_number;
    j["unit"] = qa.unit;
  }
  if (qa.gt_point) j["gt_point"] = point_to_json(*qa.gt_point);
  if (qa.gt_track) {
    j["gt_track"] = nlohmann::ordered_json::array();
    for (const auto& e : *qa.gt_track) {
      nlohmann::ordered_json ej;
      ej["frame"] = e.frame;
      ej["box"] = detail::box_to_json(e.box);
      j["gt_track"].push_back(std::move(ej));
    }
  }
  nlohmann::ordered_json pj;
  pj["generator"] = qa.provenance.generator;
  pj["template_id"] = qa.provenance.template_id;
  pj["seed"] = qa.provenance.seed;
  pj["object_ids"] = qa.provenance.object_ids;
  pj["frames"] = qa.provenance.frames;
  pj["detail"] = qa.provenance.detail;
  j["provenance"] = std::move(pj);
  return j;
}

inline QAPair qa_from_json(const nlohmann::json& j, const std::string& origin = "qa") {
  using namespace detail;
  if (!j.is_object()) throw SchemaError("qa must be a JSON object", origin);
  QAPair qa;
  qa.qa_id = require_string(require_field(j, "qa_id", origin), origin + ".qa_id");
  qa.scene_id = require_string(require_field(j, "scene_id", origin), origin + ".scene_id");
  qa.task = task_from_string(require_string(require_field(j, "task", origin), origin + ".task"));
  qa.answer_type = answer_type_from_string(
      require_string(require_field(j, "answer_type", origin), origin + ".answer_type"));
  qa.question = require_string(require_field(j, "question", origin), origin + ".question");

  if (auto it = j.find("options"); it != j.end() && !it->is_null()) {
    const auto& oj = require_array(*it, origin + ".options");
    if (oj.size() != 4) throw SchemaError("options must have 4 entries", origin + ".options");
    std::array<std::string, 4> options;
    for (std::size_t i = 0; i < 4; ++i)
      options[i] = require_string(oj[i], origin + ".options[" + std::to_string(i) + "]");
    qa.options = options;
  }
  if (auto it = j.find("gt_choice"); it != j.end() && !it->is_null())
    qa.gt_choice = static_cast<int>(require_int(*it, origin + ".gt_choice"));
  if (auto it = j.find("gt_number"); it != j.end() && !it->is_null()) {
    qa.gt_number = require_number(*it, origin + ".gt_number");
    qa.unit = require_string(require_field(j, "unit", origin), origin + ".unit");
  }
  if (auto it = j.find("gt_point"); it != j.end() && !it->is_null())
    qa.gt_point = point_from_json(*it, origin + ".gt_point");
  if (auto it = j.find("gt_track"); it != j.end() && !it->is_null()) {
    const auto& tj = require_array(*it, origin + ".gt_track");
    std::vector<TrackEntry> track;
    for (std::size_t i = 0; i < tj.size(); ++i) {
      const std::string epath = origin + ".gt_track[" + std::to_string(i) + "]";
      TrackEntry e;
      e.frame = require_int(require_field(tj[i], "frame", epath), epath + ".frame");
      e.box = box_from_json(require_field(tj[i], "box", epath), epath + ".box");
      track.push_back(std::move(e));
    }
    qa.gt_track = std::move(track);
  }

  if (auto it = j.find("provenance"); it != j.end() && it->is_object()) {
    const auto& pj = *it;
    const std::string ppath = origin + ".provenance";
    qa.provenance.generator = require_string(require_field(pj, "generator", ppath), ppath + ".generator");
    qa.provenance.template_id =
        require_string(require_field(pj, "template_id", ppath), ppath + ".template_id");
    qa.provenance.seed = require_field(pj, "seed", ppath).get<std::uint64_t>();
    for (const auto& o : require_array(require_field(pj, "object_ids", ppath), ppath + ".object_ids"))
      qa.provenance.object_ids.push_back(require_string(o, ppath + ".object_ids[]"));
    for (const auto& f : require_array(require_field(pj, "frames", ppath), ppath + ".frames"))
      qa.provenance.frames.push_back(require_int(f, ppath + ".frames[]"));
    qa.provenance.detail = require_string(require_field(pj, "detail", ppath), ppath + ".detail");
  }

  validate_qa(qa);
  return qa;
}

}  // namespace stgraph
