#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "stgraph/errors.hpp"
#include "stgraph/geometry.hpp"

namespace stgraph {

enum class Modality { image, video };
enum class Space { pixel2d, metric3d };

inline const char* to_string(Modality m) { return m == Modality::image ? "image" : "video"; }
inline const char* to_string(Space s) { return s == Space::pixel2d ? "pixel2d" : "metric3d"; }

struct Observation {
  std::int64_t frame = 0;
  Point center;
  Box box;
  std::optional<std::array<double, 3>> dims_3d;  // (length, width, height) in meters
};

struct ObjectTrack {
  std::string object_id;
  std::string category;
  std::vector<Observation> observations;  // strictly increasing frame indices

  const Observation* observation_at(std::int64_t frame) const {
    for (const auto& o : observations)
      if (o.frame == frame) return &o;
    return nullptr;
  }
};

// Frame-indexed multi-object annotations for one scene. Immutable after
// ingest; all generators and reward code share const references.
struct SceneAnnotation {
  std::string scene_id;
  Modality modality = Modality::image;
  Space space = Space::pixel2d;
  std::int64_t frame_count = 1;
  std::optional<std::array<double, 2>> frame_size;  // (width, height), pixel2d only
  std::optional<double> room_area_m2;               // metric3d indoor scenes only
  std::vector<ObjectTrack> tracks;                  // sorted by object_id

  int point_dim() const { return space == Space::pixel2d ? 2 : 3; }

  const ObjectTrack* find_track(const std::string& object_id) const {
    for (const auto& t : tracks)
      if (t.object_id == object_id) return &t;
    return nullptr;
  }

  // Sorted distinct frame indices with at least one observation.
  std::vector<std::int64_t> annotated_frames() const {
    std::vector<std::int64_t> frames;
    for (const auto& t : tracks)
      for (const auto& o : t.observations) frames.push_back(o.frame);
    std::sort(frames.begin(), frames.end());
    frames.erase(std::unique(frames.begin(), frames.end()), frames.end());
    return frames;
  }
};

// Points in normalized convention: pixel coordinates divided by frame size
// (unit square), metric coordinates unchanged. Same representation, the
// alias marks intent at interfaces.
using NormalizedPoint = Point;

namespace detail {

inline std::string json_type_name(const nlohmann::json& j) { return j.type_name(); }

inline const nlohmann::json& require_field(const nlohmann::json& j, const char* key,
                                           const std::string& path) {
  auto it = j.find(key);
  if (it == j.end()) throw SchemaError("missing field '" + std::string(key) + "'", path);
  return *it;
}

inline double require_number(const nlohmann::json& j, const std::string& path) {
  if (!j.is_number()) throw SchemaError("expected a number, got " + json_type_name(j), path);
  return j.get<double>();
}

inline std::int64_t require_int(const nlohmann::json& j, const std::string& path) {
  if (!j.is_number_integer()) throw SchemaError("expected an integer, got " + json_type_name(j), path);
  return j.get<std::int64_t>();
}

inline std::string require_string(const nlohmann::json& j, const std::string& path) {
  if (!j.is_string()) throw SchemaError("expected a string, got " + json_type_name(j), path);
  return j.get<std::string>();
}

inline const nlohmann::json& require_array(const nlohmann::json& j, const std::string& path) {
  if (!j.is_array()) throw SchemaError("expected an array, got " + json_type_name(j), path);
  return j;
}

inline Point point_from_json(const nlohmann::json& j, const std::string& path) {
  require_array(j, path);
  if (j.size() != 2 && j.size() != 3)
    throw SchemaError("point must have 2 or 3 coordinates, got " + std::to_string(j.size()), path);
  Point p;
  p.dim = static_cast<int>(j.size());
  for (std::size_t i = 0; i < j.size(); ++i)
    p.v[i] = require_number(j[i], path + "[" + std::to_string(i) + "]");
  return p;
}

inline nlohmann::ordered_json point_to_json(const Point& p) {
  nlohmann::ordered_json a = nlohmann::ordered_json::array();
  for (int i = 0; i < p.dim; ++i) a.push_back(p[i]);
  return a;
}

}  // namespace detail

// Checks every documented invariant; throws InvariantError naming the
// offending path. Ingest calls this, and hand-built scenes in tests can too.
inline void validate_scene(const SceneAnnotation& scene) {
  const std::string base = "scene '" + scene.scene_id + "'";
  if (scene.frame_count <= 0) throw InvariantError("frame_count must be positive", base);
  if (scene.modality == Modality::image && scene.frame_count != 1)
    throw InvariantError("modality=image requires frame_count=1", base);
  if (scene.space == Space::pixel2d) {
    if (!scene.frame_size) throw InvariantError("space=pixel2d requires frame_size", base);
    if ((*scene.frame_size)[0] <= 0 || (*scene.frame_size)[1] <= 0)
      throw InvariantError("frame_size components must be positive", base);
    if (scene.room_area_m2)
      throw InvariantError("room_area_m2 is only valid for metric3d scenes", base);
  }
  if (scene.room_area_m2 && *scene.room_area_m2 <= 0)
    throw InvariantError("room_area_m2 must be positive", base);

  const int dim = scene.point_dim();
  for (std::size_t ti = 0; ti < scene.tracks.size(); ++ti) {
    const auto& track = scene.tracks[ti];
    const std::string tpath = base + ".tracks[" + std::to_string(ti) + "]('" + track.object_id + "')";
    if (track.object_id.empty()) throw InvariantError("empty object_id", tpath);
    if (ti > 0 && !(scene.tracks[ti - 1].object_id < track.object_id))
      throw InvariantError("duplicate or unsorted object_id '" + track.object_id + "'", tpath);

    std::int64_t prev_frame = -1;
    for (std::size_t oi = 0; oi < track.observations.size(); ++oi) {
      const auto& obs = track.observations[oi];
      const std::string opath = tpath + ".observations[" + std::to_string(oi) + "]";
      if (obs.frame < 0) throw InvariantError("frame_index must be non-negative", opath);
      if (obs.frame >= scene.frame_count)
        throw InvariantError("frame_index " + std::to_string(obs.frame) +
                                 " >= frame_count " + std::to_string(scene.frame_count),
                             opath);
      if (oi > 0 && obs.frame <= prev_frame)
        throw InvariantError("frame_index not strictly increasing", opath);
      prev_frame = obs.frame;

      if (obs.center.dim != dim || obs.box.lo.dim != dim || obs.box.hi.dim != dim)
        throw InvariantError("expected " + std::to_string(dim) + "D geometry for space " +
                                 to_string(scene.space),
                             opath);
      for (int a = 0; a < dim; ++a) {
        if (obs.box.lo[a] > obs.box.hi[a])
          throw InvariantError("box min-corner exceeds max-corner on axis " + std::to_string(a), opath);
        if (obs.center[a] < obs.box.lo[a] || obs.center[a] > obs.box.hi[a])
          throw InvariantError("center outside box on axis " + std::to_string(a), opath);
      }
      if (scene.space == Space::pixel2d) {
        const auto& fs = *scene.frame_size;
        for (int a = 0; a < 2; ++a) {
          if (obs.box.lo[a] < 0 || obs.box.hi[a] > fs[static_cast<std::size_t>(a)])
            throw InvariantError("box outside frame bounds on axis " + std::to_string(a), opath);
        }
      }
      if (obs.dims_3d) {
        for (double d : *obs.dims_3d)
          if (!(d > 0)) throw InvariantError("dims_3d components must be positive", opath);
      }
    }
  }
}

inline SceneAnnotation scene_from_json(const nlohmann::json& j, const std::string& origin = "scene") {
  using namespace detail;
  if (!j.is_object()) throw SchemaError("scene must be a JSON object", origin);

  SceneAnnotation scene;
  scene.scene_id = require_string(require_field(j, "scene_id", origin), origin + ".scene_id");

  const std::string modality = require_string(require_field(j, "modality", origin), origin + ".modality");
  if (modality == "image") scene.modality = Modality::image;
  else if (modality == "video") scene.modality = Modality::video;
  else throw SchemaError("modality must be 'image' or 'video', got '" + modality + "'", origin + ".modality");

  const std::string space = require_string(require_field(j, "space", origin), origin + ".space");
  if (space == "pixel2d") scene.space = Space::pixel2d;
  else if (space == "metric3d") scene.space = Space::metric3d;
  else throw SchemaError("space must be 'pixel2d' or 'metric3d', got '" + space + "'", origin + ".space");

  scene.frame_count = require_int(require_field(j, "frame_count", origin), origin + ".frame_count");

  if (auto it = j.find("frame_size"); it != j.end() && !it->is_null()) {
    const auto& fs = require_array(*it, origin + ".frame_size");
    if (fs.size() != 2) throw SchemaError("frame_size must be [width, height]", origin + ".frame_size");
    scene.frame_size = {{require_number(fs[0], origin + ".frame_size[0]"),
                         require_number(fs[1], origin + ".frame_size[1]")}};
  }
  if (auto it = j.find("room_area_m2"); it != j.end() && !it->is_null())
    scene.room_area_m2 = require_number(*it, origin + ".room_area_m2");

  const auto& tracks = require_array(require_field(j, "tracks", origin), origin + ".tracks");
  for (std::size_t ti = 0; ti < tracks.size(); ++ti) {
    const std::string tpath = origin + ".tracks[" + std::to_string(ti) + "]";
    const auto& tj = tracks[ti];
    if (!tj.is_object()) throw SchemaError("track must be a JSON object", tpath);

    ObjectTrack track;
    track.object_id = require_string(require_field(tj, "object_id", tpath), tpath + ".object_id");
    track.category = require_string(require_field(tj, "category", tpath), tpath + ".category");

    const auto& obs_list = require_array(require_field(tj, "observations", tpath), tpath + ".observations");
    for (std::size_t oi = 0; oi < obs_list.size(); ++oi) {
      const std::string opath = tpath + ".observations[" + std::to_string(oi) + "]";
      const auto& oj = obs_list[oi];
      if (!oj.is_object()) throw SchemaError("observation must be a JSON object", opath);

      Observation obs;
      obs.frame = require_int(require_field(oj, "frame", opath), opath + ".frame");
      obs.center = point_from_json(require_field(oj, "center", opath), opath + ".center");
      const auto& bj = require_array(require_field(oj, "box", opath), opath + ".box");
      if (bj.size() != 2) throw SchemaError("box must be [min-corner, max-corner]", opath + ".box");
      obs.box.lo = point_from_json(bj[0], opath + ".box[0]");
      obs.box.hi = point_from_json(bj[1], opath + ".box[1]");
      if (auto it = oj.find("dims_3d"); it != oj.end() && !it->is_null()) {
        const auto& dj = require_array(*it, opath + ".dims_3d");
        if (dj.size() != 3) throw SchemaError("dims_3d must be [length, width, height]", opath + ".dims_3d");
        obs.dims_3d = {{require_number(dj[0], opath + ".dims_3d[0]"),
                        require_number(dj[1], opath + ".dims_3d[1]"),
                        require_number(dj[2], opath + ".dims_3d[2]")}};
      }
      track.observations.push_back(std::move(obs));
    }
    scene.tracks.push_back(std::move(track));
  }

  std::sort(scene.tracks.begin(), scene.tracks.end(),
            [](const ObjectTrack& a, const ObjectTrack& b) { return a.object_id < b.object_id; });

  validate_scene(scene);
  return scene;
}

inline SceneAnnotation ingest_scene(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open scene file", path.string());
  nlohmann::json j = nlohmann::json::parse(in, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) throw ParseError("malformed JSON", path.string());
  return scene_from_json(j, path.string());
}

inline nlohmann::ordered_json scene_to_json(const SceneAnnotation& scene) {
  using detail::point_to_json;
  nlohmann::ordered_json j;
  j["scene_id"] = scene.scene_id;
  j["modality"] = to_string(scene.modality);
  j["space"] = to_string(scene.space);
  j["frame_count"] = scene.frame_count;
  if (scene.frame_size) j["frame_size"] = {(*scene.frame_size)[0], (*scene.frame_size)[1]};
  if (scene.room_area_m2) j["room_area_m2"] = *scene.room_area_m2;
  j["tracks"] = nlohmann::ordered_json::array();
  for (const auto& track : scene.tracks) {
    nlohmann::ordered_json tj;
    tj["object_id"] = track.object_id;
    tj["category"] = track.category;
    tj["observations"] = nlohmann::ordered_json::array();
    for (const auto& obs : track.observations) {
      nlohmann::ordered_json oj;
      oj["frame"] = obs.frame;
      oj["center"] = point_to_json(obs.center);
      oj["box"] = {point_to_json(obs.box.lo), point_to_json(obs.box.hi)};
      if (obs.dims_3d) oj["dims_3d"] = {(*obs.dims_3d)[0], (*obs.dims_3d)[1], (*obs.dims_3d)[2]};
      tj["observations"].push_back(std::move(oj));
    }
    j["tracks"].push_back(std::move(tj));
  }
  return j;
}

// pixel2d: componentwise division by frame size; metric3d: identity.
inline NormalizedPoint normalize_point(const Point& p, const SceneAnnotation& scene) {
  if (p.dim != scene.point_dim()) {
    throw DimensionError("point dimension " + std::to_string(p.dim) + " does not match space " +
                         to_string(scene.space));
  }
  if (scene.space == Space::metric3d) return p;
  const auto& fs = *scene.frame_size;
  return make_point2(p.x() / fs[0], p.y() / fs[1]);
}

inline Box normalize_box(const Box& b, const SceneAnnotation& scene) {
  return Box{normalize_point(b.lo, scene), normalize_point(b.hi, scene)};
}

inline std::int64_t first_appearance(const ObjectTrack& track) {
  if (track.observations.empty())
    throw EmptyTrackError("track has no observations", track.object_id);
  return track.observations.front().frame;  // observations sorted by frame
}

}  // namespace stgraph
