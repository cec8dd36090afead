#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "stgraph/annotations.hpp"
#include "stgraph/errors.hpp"
#include "stgraph/qa.hpp"
#include "stgraph/random.hpp"

namespace stgraph {

struct GenerationConfig {
  std::uint64_t seed = 0;
  std::map<Task, std::size_t> quotas;   // absent task -> default_quota
  std::size_t default_quota = 10;
  std::string direction_scheme = "compass8";
  double min_pair_separation = 0.02;    // normalized units / meters
  std::size_t paraphrase_pool_size = 0; // 0 = use the full pool

  std::size_t quota_for(Task t) const {
    auto it = quotas.find(t);
    return it == quotas.end() ? default_quota : it->second;
  }

  void validate() const {
    if (direction_scheme != "compass8")
      throw ConfigError("unsupported direction_scheme '" + direction_scheme + "'");
    if (min_pair_separation < 0) throw ConfigError("min_pair_separation must be >= 0");
  }
};

// Eight compass sectors over the image-plane displacement angle, 45 deg
// wide, centered on the axes and diagonals. The y axis points down (pixel
// convention), so +y maps to "down".
inline constexpr std::array<const char*, 8> kCompassLabels = {
    "right", "right-down", "down", "left-down", "left", "left-up", "up", "right-up"};

inline std::size_t direction_sector(double dx, double dy) {
  const double angle = std::atan2(dy, dx);
  const long long k = std::llround(angle / (std::acos(-1.0) / 4.0));
  return static_cast<std::size_t>(((k % 8) + 8) % 8);
}

inline const char* direction_label(double dx, double dy) {
  return kCompassLabels[direction_sector(dx, dy)];
}

namespace qa_detail {

struct TemplatePool {
  const char* name;
  std::vector<const char*> variants;
};

inline const TemplatePool& pool_for(Task task, bool room_variant = false) {
  static const TemplatePool counting{
      "counting",
      {"How many objects of category \"{category}\" appear in the {media}?",
       "Count the distinct \"{category}\" instances visible in the {media}.",
       "What is the total number of \"{category}\" objects present in the {media}?"}};
  static const TemplatePool direction{
      "relative_direction",
      {"In which direction is {b} located relative to {a}{when}?",
       "Where does {b} lie with respect to {a}{when}?",
       "Relative to {a}, which way is {b}{when}?"}};
  static const TemplatePool dist{
      "relative_distance",
      {"How far apart are the centers of {a} and {b}{when}? Answer in {unit_name}.",
       "What is the Euclidean distance between the centers of {a} and {b}{when}? Answer in {unit_name}.",
       "Measure the center-to-center distance between {a} and {b}{when}, in {unit_name}."}};
  static const TemplatePool order{
      "appearance_order",
      {"In what order do the following objects first appear in the video: {objects}?",
       "Rank these objects by the time of their first appearance in the video: {objects}.",
       "Which ordering matches when {objects} first show up in the video?"}};
  static const TemplatePool size{
      "object_size",
      {"What is the {dimension} of {obj}{when}, in {unit_name}?",
       "Give the {dimension} of {obj}{when} in {unit_name}.",
       "How large is {obj}{when} along its {dimension}, in {unit_name}?"}};
  static const TemplatePool room{
      "object_size_room",
      {"What is the floor area of the room, in square meters?",
       "How many square meters does the indoor space cover?",
       "Give the total area of the room in square meters."}};
  static const TemplatePool motion{
      "motion_tracking",
      {"Provide the bounding box of {obj} for each annotated frame from {a} to {b}, as a JSON "
       "list of {\"frame\": f, \"box\": [[..],[..]]} entries.",
       "Track {obj} from frame {a} through frame {b} and output its per-frame bounding boxes as "
       "a JSON list of {\"frame\": f, \"box\": [[..],[..]]} entries.",
       "List the bounding boxes of {obj} between frames {a} and {b} as JSON entries "
       "{\"frame\": f, \"box\": [[..],[..]]}."}};
  static const TemplatePool loc{
      "localization",
      {"What is the center position of {obj}{when}, in {unit_name}? Answer as a coordinate tuple.",
       "Give the coordinates of the center of {obj}{when}, in {unit_name}.",
       "Where is {obj} centered{when}? Respond with a coordinate tuple in {unit_name}."}};
  static const TemplatePool disp{
      "displacement",
      {"How far does {obj} travel between frame {a} and frame {b}? Answer in {unit_name}.",
       "What distance does {obj} cover from frame {a} to frame {b}, in {unit_name}?",
       "Compute the total path length of {obj} between frames {a} and {b}, in {unit_name}."}};

  switch (task) {
    case Task::counting: return counting;
    case Task::relative_direction: return direction;
    case Task::relative_distance: return dist;
    case Task::appearance_order: return order;
    case Task::object_size: return room_variant ? room : size;
    case Task::motion_tracking: return motion;
    case Task::localization: return loc;
    case Task::displacement: return disp;
  }
  return counting;
}

inline std::string fill(std::string text,
                        const std::vector<std::pair<std::string, std::string>>& subs) {
  for (const auto& [key, value] : subs) {
    std::size_t pos = 0;
    while ((pos = text.find(key, pos)) != std::string::npos) {
      text.replace(pos, key.size(), value);
      pos += value.size();
    }
  }
  return text;
}

// Picks a paraphrase variant and records its template id.
inline std::string pick_template(const TemplatePool& pool, const GenerationConfig& cfg, Rng& rng,
                                 std::string& template_id) {
  std::size_t limit = pool.variants.size();
  if (cfg.paraphrase_pool_size > 0) limit = std::min(limit, cfg.paraphrase_pool_size);
  const std::size_t pick = rng.index(limit);
  template_id = std::string(pool.name) + "/v" + std::to_string(pick);
  return pool.variants[pick];
}

inline std::string ordinal(std::size_t n) {
  const std::size_t mod100 = n % 100;
  const char* suffix = "th";
  if (mod100 < 11 || mod100 > 13) {
    switch (n % 10) {
      case 1: suffix = "st"; break;
      case 2: suffix = "nd"; break;
      case 3: suffix = "rd"; break;
      default: break;
    }
  }
  return std::to_string(n) + suffix;
}

// "the car", or "the 2nd chair" when the category is ambiguous in-scene.
inline std::string object_name(const SceneAnnotation& scene, const ObjectTrack& track) {
  std::size_t same = 0;
  std::size_t rank = 0;
  for (const auto& t : scene.tracks) {
    if (t.category != track.category) continue;
    ++same;
    if (t.object_id <= track.object_id) ++rank;
  }
  if (same <= 1) return "the " + track.category;
  return "the " + ordinal(rank) + " " + track.category;
}

inline std::string when_clause(const SceneAnnotation& scene, std::int64_t frame) {
  return scene.modality == Modality::image ? std::string{}
                                           : " at frame " + std::to_string(frame);
}

inline std::string media_name(const SceneAnnotation& scene) {
  return scene.modality == Modality::image ? "image" : "video";
}

inline std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

inline std::string make_qa_id(const QAPair& qa) {
  std::string key = qa.scene_id;
  key += '|';
  key += to_string(qa.task);
  for (const auto& id : qa.provenance.object_ids) {
    key += '|';
    key += id;
  }
  for (std::int64_t f : qa.provenance.frames) {
    key += '|';
    key += std::to_string(f);
  }
  key += '|';
  key += qa.provenance.detail;
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(key)));
  return std::string(to_string(qa.task)) + "-" + buf;
}

inline Rng generator_rng(const GenerationConfig& cfg, const SceneAnnotation& scene, Task task) {
  return Rng(mix_seed(mix_seed(cfg.seed, scene.scene_id), to_string(task)));
}

inline void finalize(QAPair& qa, const GenerationConfig& cfg) {
  qa.provenance.seed = cfg.seed;
  qa.qa_id = make_qa_id(qa);
  validate_qa(qa);
}

// Places the correct option at `position` and the distractors around it.
inline void set_options(QAPair& qa, const std::string& correct,
                        const std::array<std::string, 3>& distractors, int position) {
  std::array<std::string, 4> options;
  std::size_t d = 0;
  for (int i = 0; i < 4; ++i) {
    if (i == position) options[static_cast<std::size_t>(i)] = correct;
    else options[static_cast<std::size_t>(i)] = distractors[d++];
  }
  qa.options = options;
  qa.gt_choice = position;
}

// Unordered distinct-object pairs observed together in at least one frame,
// each with a deterministically sampled co-visible frame.
struct CoVisiblePair {
  std::size_t track_a = 0;
  std::size_t track_b = 0;
  std::int64_t frame = 0;
};

inline std::vector<CoVisiblePair> covisible_pairs(const SceneAnnotation& scene, Rng& rng) {
  std::vector<CoVisiblePair> pairs;
  for (std::size_t i = 0; i < scene.tracks.size(); ++i) {
    for (std::size_t j = i + 1; j < scene.tracks.size(); ++j) {
      std::vector<std::int64_t> shared;
      for (const auto& obs : scene.tracks[i].observations)
        if (scene.tracks[j].observation_at(obs.frame)) shared.push_back(obs.frame);
      if (shared.empty()) continue;
      pairs.push_back(CoVisiblePair{i, j, shared[rng.index(shared.size())]});
    }
  }
  return pairs;
}

}  // namespace qa_detail

inline std::vector<QAPair> gen_counting(const SceneAnnotation& scene, const GenerationConfig& cfg) {
  using namespace qa_detail;
  Rng rng = generator_rng(cfg, scene, Task::counting);

  std::map<std::string, std::vector<std::string>> by_category;
  for (const auto& track : scene.tracks)
    if (!track.observations.empty()) by_category[track.category].push_back(track.object_id);

  std::vector<QAPair> out;
  for (const auto& [category, ids] : by_category) {
    QAPair qa;
    qa.scene_id = scene.scene_id;
    qa.task = Task::counting;
    qa.answer_type = AnswerType::numerical;
    qa.provenance.generator = "counting";
    qa.provenance.object_ids = ids;
    qa.provenance.detail = category;
    qa.question = fill(pick_template(pool_for(Task::counting), cfg, rng, qa.provenance.template_id),
                       {{"{category}", category}, {"{media}", media_name(scene)}});
    qa.gt_number = static_cast<double>(ids.size());
    qa.unit = "count";
    finalize(qa, cfg);
    out.push_back(std::move(qa));
  }
  return out;
}

inline std::vector<QAPair> gen_relative_direction(const SceneAnnotation& scene,
                                                  const GenerationConfig& cfg) {
  using namespace qa_detail;
  Rng rng = generator_rng(cfg, scene, Task::relative_direction);

  std::vector<QAPair> out;
  for (const CoVisiblePair& pair : covisible_pairs(scene, rng)) {
    const bool flip = rng.next() % 2 == 1;
    const ObjectTrack& ref = scene.tracks[flip ? pair.track_b : pair.track_a];
    const ObjectTrack& subject = scene.tracks[flip ? pair.track_a : pair.track_b];
    const std::size_t distractor_draw = rng.next();  // keep draw count stable across skips
    const std::size_t position_draw = rng.index(4);

    const Point a = normalize_point(ref.observation_at(pair.frame)->center, scene);
    const Point b = normalize_point(subject.observation_at(pair.frame)->center, scene);
    const double dx = b.x() - a.x();
    const double dy = b.y() - a.y();
    if (std::hypot(dx, dy) < cfg.min_pair_separation) continue;

    const std::size_t correct_sector = direction_sector(dx, dy);
    std::vector<std::string> others;
    for (std::size_t s = 0; s < kCompassLabels.size(); ++s)
      if (s != correct_sector) others.emplace_back(kCompassLabels[s]);
    Rng distractor_rng(distractor_draw);
    distractor_rng.shuffle(others);

    QAPair qa;
    qa.scene_id = scene.scene_id;
    qa.task = Task::relative_direction;
    qa.answer_type = AnswerType::multi_choice;
    qa.provenance.generator = "relative_direction";
    qa.provenance.object_ids = {ref.object_id, subject.object_id};
    qa.provenance.frames = {pair.frame};
    qa.provenance.detail = kCompassLabels[correct_sector];
    qa.question = fill(
        pick_template(pool_for(Task::relative_direction), cfg, rng, qa.provenance.template_id),
        {{"{a}", object_name(scene, ref)},
         {"{b}", object_name(scene, subject)},
         {"{when}", when_clause(scene, pair.frame)}});
    set_options(qa, kCompassLabels[correct_sector], {others[0], others[1], others[2]},
                static_cast<int>(position_draw));
    finalize(qa, cfg);
    out.push_back(std::move(qa));
  }
  return out;
}

inline std::vector<QAPair> gen_relative_distance(const SceneAnnotation& scene,
                                                 const GenerationConfig& cfg) {
  using namespace qa_detail;
  Rng rng = generator_rng(cfg, scene, Task::relative_distance);

  std::vector<QAPair> out;
  for (const CoVisiblePair& pair : covisible_pairs(scene, rng)) {
    const ObjectTrack& ta = scene.tracks[pair.track_a];
    const ObjectTrack& tb = scene.tracks[pair.track_b];

    double gt = 0.0;
    std::string unit;
    std::string unit_name;
    if (scene.space == Space::metric3d) {
      gt = distance(ta.observation_at(pair.frame)->center, tb.observation_at(pair.frame)->center);
      unit = "m";
      unit_name = "meters";
    } else {
      const Point a = normalize_point(ta.observation_at(pair.frame)->center, scene);
      const Point b = normalize_point(tb.observation_at(pair.frame)->center, scene);
      gt = std::hypot(b.x() - a.x(), b.y() - a.y()) / std::sqrt(2.0);
      unit = "diag";
      unit_name = "fractions of the frame diagonal";
    }
    if (!(gt > 0)) continue;  // coincident centers

    QAPair qa;
    qa.scene_id = scene.scene_id;
    qa.task = Task::relative_distance;
    qa.answer_type = AnswerType::numerical;
    qa.provenance.generator = "relative_distance";
    qa.provenance.object_ids = {ta.object_id, tb.object_id};
    qa.provenance.frames = {pair.frame};
    qa.question = fill(
        pick_template(pool_for(Task::relative_distance), cfg, rng, qa.provenance.template_id),
        {{"{a}", object_name(scene, ta)},
         {"{b}", object_name(scene, tb)},
         {"{when}", when_clause(scene, pair.frame)},
         {"{unit_name}", unit_name}});
    qa.gt_number = gt;
    qa.unit = unit;
    finalize(qa, cfg);
    out.push_back(std::move(qa));
  }
  return out;
}

inline std::vector<QAPair> gen_appearance_order(const SceneAnnotation& scene,
                                                const GenerationConfig& cfg) {
  using namespace qa_detail;
  if (scene.modality != Modality::video) return {};
  Rng rng = generator_rng(cfg, scene, Task::appearance_order);

  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < scene.tracks.size(); ++i)
    if (!scene.tracks[i].observations.empty()) eligible.push_back(i);

  std::vector<QAPair> out;
  std::vector<std::vector<std::size_t>> combos;
  std::vector<std::size_t> pick;
  std::function<void(std::size_t, std::size_t)> enumerate = [&](std::size_t from, std::size_t want) {
    if (want == 0) {
      combos.push_back(pick);
      return;
    }
    for (std::size_t i = from; i + want <= eligible.size(); ++i) {
      pick.push_back(eligible[i]);
      enumerate(i + 1, want - 1);
      pick.pop_back();
    }
  };
  for (std::size_t set_size : {std::size_t{3}, std::size_t{4}}) {
    if (eligible.size() >= set_size) enumerate(0, set_size);
  }

  for (const auto& combo : combos) {
    std::set<std::int64_t> firsts;
    bool ok = true;
    for (std::size_t idx : combo)
      ok = ok && firsts.insert(first_appearance(scene.tracks[idx])).second;
    const std::uint64_t presentation_seed = rng.next();
    const std::uint64_t distractor_seed = rng.next();
    const std::size_t position_draw = rng.index(4);
    std::string template_id;
    const std::string tmpl =
        pick_template(pool_for(Task::appearance_order), cfg, rng, template_id);
    if (!ok) continue;  // tied first appearances are never co-sampled

    std::vector<std::size_t> presented = combo;
    Rng present_rng(presentation_seed);
    present_rng.shuffle(presented);

    std::vector<std::size_t> sorted = combo;
    std::sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) {
      return first_appearance(scene.tracks[a]) < first_appearance(scene.tracks[b]);
    });

    auto render = [&](const std::vector<std::size_t>& order) {
      std::vector<std::string> names;
      for (std::size_t idx : order) names.push_back(object_name(scene, scene.tracks[idx]));
      return join(names, ", ");
    };

    const std::string correct = render(sorted);
    Rng drng(distractor_seed);
    std::set<std::string> seen{correct};
    std::array<std::string, 3> distractors;
    std::size_t found = 0;
    std::vector<std::size_t> perm = sorted;
    for (int attempt = 0; attempt < 256 && found < 3; ++attempt) {
      drng.shuffle(perm);
      const std::string rendered = render(perm);
      if (seen.insert(rendered).second) distractors[found++] = rendered;
    }
    if (found < 3) continue;

    QAPair qa;
    qa.scene_id = scene.scene_id;
    qa.task = Task::appearance_order;
    qa.answer_type = AnswerType::multi_choice;
    qa.provenance.generator = "appearance_order";
    for (std::size_t idx : presented) qa.provenance.object_ids.push_back(scene.tracks[idx].object_id);
    qa.provenance.template_id = template_id;
    qa.question = fill(tmpl, {{"{objects}", render(presented)}});
    set_options(qa, correct, distractors, static_cast<int>(position_draw));
    finalize(qa, cfg);
    out.push_back(std::move(qa));
  }
  return out;
}

inline std::vector<QAPair> gen_object_size(const SceneAnnotation& scene,
                                           const GenerationConfig& cfg) {
  using namespace qa_detail;
  Rng rng = generator_rng(cfg, scene, Task::object_size);

  std::vector<QAPair> out;
  for (const auto& track : scene.tracks) {
    if (track.observations.empty()) continue;

    QAPair qa;
    qa.scene_id = scene.scene_id;
    qa.task = Task::object_size;
    qa.answer_type = AnswerType::numerical;
    qa.provenance.generator = "object_size";
    qa.provenance.object_ids = {track.object_id};

    if (scene.space == Space::metric3d) {
      std::vector<std::size_t> with_dims;
      for (std::size_t i = 0; i < track.observations.size(); ++i)
        if (track.observations[i].dims_3d) with_dims.push_back(i);
      const std::uint64_t obs_draw = rng.next();
      const std::size_t dim_idx = rng.index(3);
      if (with_dims.empty()) continue;
      const Observation& obs = track.observations[with_dims[obs_draw % with_dims.size()]];
      static constexpr std::array<const char*, 3> kDims = {"length", "width", "height"};
      qa.gt_number = (*obs.dims_3d)[dim_idx];
      qa.unit = "m";
      qa.provenance.frames = {obs.frame};
      qa.provenance.detail = kDims[dim_idx];
      qa.question =
          fill(pick_template(pool_for(Task::object_size), cfg, rng, qa.provenance.template_id),
               {{"{obj}", object_name(scene, track)},
                {"{when}", ""},
                {"{dimension}", kDims[dim_idx]},
                {"{unit_name}", "meters"}});
    } else {
      const std::size_t obs_idx = rng.index(track.observations.size());
      const std::size_t dim_idx = rng.index(2);
      const Observation& obs = track.observations[obs_idx];
      const Box nbox = normalize_box(obs.box, scene);
      const double side = nbox.side(static_cast<int>(dim_idx));
      if (!(side > 0)) continue;  // degenerate box
      static constexpr std::array<const char*, 2> kSides = {"width", "height"};
      qa.gt_number = side;
      qa.unit = "norm";
      qa.provenance.frames = {obs.frame};
      qa.provenance.detail = std::string("box_") + kSides[dim_idx];
      qa.question =
          fill(pick_template(pool_for(Task::object_size), cfg, rng, qa.provenance.template_id),
               {{"{obj}", "the bounding box of " + object_name(scene, track)},
                {"{when}", when_clause(scene, obs.frame)},
                {"{dimension}", kSides[dim_idx]},
                {"{unit_name}", "normalized units"}});
    }
    finalize(qa, cfg);
    out.push_back(std::move(qa));
  }

  if (scene.room_area_m2) {
    QAPair qa;
    qa.scene_id = scene.scene_id;
    qa.task = Task::object_size;
    qa.answer_type = AnswerType::numerical;
    qa.provenance.generator = "object_size";
    qa.provenance.detail = "room_area";
    qa.question = pick_template(pool_for(Task::object_size, /*room_variant=*/true), cfg, rng,
                                qa.provenance.template_id);
    qa.gt_number = *scene.room_area_m2;
    qa.unit = "m2";
    finalize(qa, cfg);
    out.push_back(std::move(qa));
  }
  return out;
}

inline std::vector<QAPair> gen_motion_tracking(const SceneAnnotation& scene,
                                               const GenerationConfig& cfg) {
  using namespace qa_detail;
  if (scene.modality != Modality::video) return {};
  Rng rng = generator_rng(cfg, scene, Task::motion_tracking);

  std::vector<QAPair> out;
  for (const auto& track : scene.tracks) {
    const std::size_t n = track.observations.size();
    if (n < 3) continue;
    const std::size_t start = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(n - 3)));
    const std::size_t max_len = std::min<std::size_t>(8, n - start);
    const std::size_t len =
        static_cast<std::size_t>(rng.uniform_int(3, static_cast<std::int64_t>(max_len)));

    std::vector<TrackEntry> gt;
    for (std::size_t i = start; i < start + len; ++i)
      gt.push_back(TrackEntry{track.observations[i].frame, track.observations[i].box});

    QAPair qa;
    qa.scene_id = scene.scene_id;
    qa.task = Task::motion_tracking;
    qa.answer_type = AnswerType::iou_track;
    qa.provenance.generator = "motion_tracking";
    qa.provenance.object_ids = {track.object_id};
    qa.provenance.frames = {gt.front().frame, gt.back().frame};
    qa.question =
        fill(pick_template(pool_for(Task::motion_tracking), cfg, rng, qa.provenance.template_id),
             {{"{obj}", object_name(scene, track)},
              {"{a}", std::to_string(gt.front().frame)},
              {"{b}", std::to_string(gt.back().frame)}});
    qa.gt_track = std::move(gt);
    finalize(qa, cfg);
    out.push_back(std::move(qa));
  }
  return out;
}

inline std::vector<QAPair> gen_localization(const SceneAnnotation& scene,
                                            const GenerationConfig& cfg) {
  using namespace qa_detail;
  Rng rng = generator_rng(cfg, scene, Task::localization);

  std::vector<QAPair> out;
  for (const auto& track : scene.tracks) {
    if (track.observations.empty()) continue;
    const Observation& obs = track.observations[rng.index(track.observations.size())];

    QAPair qa;
    qa.scene_id = scene.scene_id;
    qa.task = Task::localization;
    qa.answer_type = AnswerType::point;
    qa.provenance.generator = "localization";
    qa.provenance.object_ids = {track.object_id};
    qa.provenance.frames = {obs.frame};
    qa.question =
        fill(pick_template(pool_for(Task::localization), cfg, rng, qa.provenance.template_id),
             {{"{obj}", object_name(scene, track)},
              {"{when}", when_clause(scene, obs.frame)},
              {"{unit_name}",
               scene.space == Space::pixel2d ? "normalized image coordinates" : "meters"}});
    qa.gt_point = normalize_point(obs.center, scene);
    finalize(qa, cfg);
    out.push_back(std::move(qa));
  }
  return out;
}

inline std::vector<QAPair> gen_displacement(const SceneAnnotation& scene,
                                            const GenerationConfig& cfg) {
  using namespace qa_detail;
  if (scene.modality != Modality::video) return {};
  Rng rng = generator_rng(cfg, scene, Task::displacement);

  std::vector<QAPair> out;
  for (const auto& track : scene.tracks) {
    const std::size_t n = track.observations.size();
    if (n < 2) continue;
    const std::size_t i = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(n - 2)));
    const std::size_t j = static_cast<std::size_t>(
        rng.uniform_int(static_cast<std::int64_t>(i + 1), static_cast<std::int64_t>(n - 1)));

    double path = 0.0;
    for (std::size_t t = i; t < j; ++t) {
      const Point from = scene.space == Space::pixel2d
                             ? normalize_point(track.observations[t].center, scene)
                             : track.observations[t].center;
      const Point to = scene.space == Space::pixel2d
                           ? normalize_point(track.observations[t + 1].center, scene)
                           : track.observations[t + 1].center;
      path += distance(from, to);
    }
    if (!(path > 1e-12)) continue;  // stationary object

    QAPair qa;
    qa.scene_id = scene.scene_id;
    qa.task = Task::displacement;
    qa.answer_type = AnswerType::numerical;
    qa.provenance.generator = "displacement";
    qa.provenance.object_ids = {track.object_id};
    qa.provenance.frames = {track.observations[i].frame, track.observations[j].frame};
    qa.question =
        fill(pick_template(pool_for(Task::displacement), cfg, rng, qa.provenance.template_id),
             {{"{obj}", object_name(scene, track)},
              {"{a}", std::to_string(track.observations[i].frame)},
              {"{b}", std::to_string(track.observations[j].frame)},
              {"{unit_name}", scene.space == Space::metric3d ? "meters" : "normalized units"}});
    qa.gt_number = path;
    qa.unit = scene.space == Space::metric3d ? "m" : "norm";
    finalize(qa, cfg);
    out.push_back(std::move(qa));
  }
  return out;
}

inline std::vector<QAPair> generate_for_task(const SceneAnnotation& scene,
                                             const GenerationConfig& cfg, Task task) {
  switch (task) {
    case Task::counting: return gen_counting(scene, cfg);
    case Task::relative_direction: return gen_relative_direction(scene, cfg);
    case Task::relative_distance: return gen_relative_distance(scene, cfg);
    case Task::appearance_order: return gen_appearance_order(scene, cfg);
    case Task::object_size: return gen_object_size(scene, cfg);
    case Task::motion_tracking: return gen_motion_tracking(scene, cfg);
    case Task::localization: return gen_localization(scene, cfg);
    case Task::displacement: return gen_displacement(scene, cfg);
  }
  return {};
}

struct DatasetStats {
  std::size_t total = 0;
  std::map<std::string, std::size_t> per_task;
  std::map<std::string, std::array<std::size_t, 4>> position_histogram;
  std::array<std::size_t, 4> overall_positions{0, 0, 0, 0};
};

struct DatasetBuildResult {
  std::vector<QAPair> qas;
  DatasetStats stats;
};

inline nlohmann::ordered_json stats_to_json(const DatasetStats& stats) {
  nlohmann::ordered_json j;
  j["total"] = stats.total;
  j["per_task"] = nlohmann::ordered_json::object();
  for (const auto& [task, count] : stats.per_task) j["per_task"][task] = count;
  j["answer_position_histogram"] = nlohmann::ordered_json::object();
  for (const auto& [task, hist] : stats.position_histogram)
    j["answer_position_histogram"][task] = {hist[0], hist[1], hist[2], hist[3]};
  j["overall_positions"] = {stats.overall_positions[0], stats.overall_positions[1],
                            stats.overall_positions[2], stats.overall_positions[3]};
  return j;
}

namespace qa_detail {

// Draws correct-answer positions for one task until every position lands
// within 5 percentage points of the 25% target. Falls back to an evenly
// dealt deck when the band is unreachable at tiny counts.
inline std::vector<int> balanced_positions(std::size_t n, Rng& rng) {
  for (int attempt = 0; attempt < 10000; ++attempt) {
    std::vector<int> positions(n);
    std::array<std::size_t, 4> hist{0, 0, 0, 0};
    for (auto& p : positions) {
      p = static_cast<int>(rng.index(4));
      ++hist[static_cast<std::size_t>(p)];
    }
    bool ok = true;
    for (std::size_t c : hist) {
      const double f = static_cast<double>(c) / static_cast<double>(n);
      ok = ok && f >= 0.20 && f <= 0.30;
    }
    if (ok) return positions;
  }
  std::vector<int> positions(n);
  for (std::size_t i = 0; i < n; ++i) positions[i] = static_cast<int>(i % 4);
  rng.shuffle(positions);
  return positions;
}

inline void reassign_position(QAPair& qa, int position) {
  const std::string correct = (*qa.options)[static_cast<std::size_t>(*qa.gt_choice)];
  std::array<std::string, 3> distractors;
  std::size_t d = 0;
  for (int i = 0; i < 4; ++i)
    if (i != *qa.gt_choice) distractors[d++] = (*qa.options)[static_cast<std::size_t>(i)];
  set_options(qa, correct, distractors, position);
}

}  // namespace qa_detail

// Runs every generator over every scene, removes duplicate questions,
// enforces per-task quotas, and rebalances multi-choice answer positions.
// Deterministic for a fixed (scenes, config) input.
inline DatasetBuildResult build_dataset(std::vector<SceneAnnotation> scenes,
                                        const GenerationConfig& cfg) {
  cfg.validate();
  std::sort(scenes.begin(), scenes.end(),
            [](const SceneAnnotation& a, const SceneAnnotation& b) { return a.scene_id < b.scene_id; });

  DatasetBuildResult result;
  for (Task task : kAllTasks) {
    std::vector<QAPair> candidates;
    std::set<std::string> seen;
    for (const auto& scene : scenes) {
      for (auto& qa : generate_for_task(scene, cfg, task)) {
        std::vector<std::string> ids = qa.provenance.object_ids;
        std::sort(ids.begin(), ids.end());
        const std::string key = qa.scene_id + "|" + qa_detail::join(ids, ",");
        if (seen.insert(key).second) candidates.push_back(std::move(qa));
      }
    }

    const std::size_t quota = cfg.quota_for(task);
    if (candidates.size() < quota) {
      throw QuotaUnsatisfiableError("task " + std::string(to_string(task)) + ": " +
                                    std::to_string(candidates.size()) +
                                    " candidates cannot satisfy quota " + std::to_string(quota));
    }

    Rng select_rng(mix_seed(cfg.seed, std::string("select|") + to_string(task)));
    std::vector<std::size_t> picked = select_rng.sample_indices(candidates.size(), quota);
    std::sort(picked.begin(), picked.end());

    std::vector<QAPair> selected;
    for (std::size_t idx : picked) selected.push_back(std::move(candidates[idx]));

    if (!selected.empty() && selected.front().answer_type == AnswerType::multi_choice) {
      Rng balance_rng(mix_seed(cfg.seed, std::string("balance|") + to_string(task)));
      const std::vector<int> positions = qa_detail::balanced_positions(selected.size(), balance_rng);
      for (std::size_t i = 0; i < selected.size(); ++i)
        qa_detail::reassign_position(selected[i], positions[i]);
    }
    for (auto& qa : selected) result.qas.push_back(std::move(qa));
  }

  std::sort(result.qas.begin(), result.qas.end(), [](const QAPair& a, const QAPair& b) {
    if (a.task != b.task) return static_cast<int>(a.task) < static_cast<int>(b.task);
    if (a.scene_id != b.scene_id) return a.scene_id < b.scene_id;
    return a.qa_id < b.qa_id;
  });

  result.stats.total = result.qas.size();
  for (const auto& qa : result.qas) {
    ++result.stats.per_task[to_string(qa.task)];
    if (qa.answer_type == AnswerType::multi_choice) {
      auto& hist = result.stats.position_histogram[to_string(qa.task)];
      ++hist[static_cast<std::size_t>(*qa.gt_choice)];
      ++result.stats.overall_positions[static_cast<std::size_t>(*qa.gt_choice)];
    }
  }
  return result;
}

}  // namespace stgraph
