#pragma once

#include <cctype>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "stgraph/errors.hpp"
#include "stgraph/geometry.hpp"
#include "stgraph/scene_graph.hpp"

namespace stgraph {

enum class AnswerType { multi_choice, numerical, point, iou_track };

inline const char* to_string(AnswerType t) {
  switch (t) {
    case AnswerType::multi_choice: return "multi_choice";
    case AnswerType::numerical: return "numerical";
    case AnswerType::point: return "point";
    case AnswerType::iou_track: return "iou_track";
  }
  return "unknown";
}

struct TrackEntry {
  std::int64_t frame = 0;
  Box box;
};

struct PredictedGraph {
  std::int64_t frame = 0;
  SceneGraph graph;
};

// Structured view of raw model output. Parsing is total: malformed input
// yields format_ok=false and empty optionals, never a throw.
struct ParsedResponse {
  std::string raw;
  bool format_ok = false;
  std::optional<std::string> think;
  std::optional<std::string> answer_text;
  std::vector<PredictedGraph> pred_graphs;
  std::int64_t token_length = 0;
};

// choice index 0..3 | number | point | box track
using AnswerValue = std::variant<int, double, Point, std::vector<TrackEntry>>;

namespace detail {

inline std::size_t count_occurrences(std::string_view text, std::string_view needle) {
  std::size_t count = 0;
  std::size_t pos = text.find(needle);
  while (pos != std::string_view::npos) {
    ++count;
    pos = text.find(needle, pos + needle.size());
  }
  return count;
}

inline std::int64_t whitespace_token_count(std::string_view text) {
  std::int64_t count = 0;
  bool in_token = false;
  for (unsigned char c : text) {
    const bool ws = std::isspace(c) != 0;
    if (!ws && !in_token) ++count;
    in_token = !ws;
  }
  return count;
}

inline bool is_word_char(unsigned char c) { return std::isalnum(c) != 0; }

}  // namespace detail

// Extracts zero or more <graph frame=K>{json}</graph> blocks. Blocks that
// fail to parse are dropped; a frame declared twice keeps its first block.
inline std::vector<PredictedGraph> parse_graph_blocks(std::string_view think) {
  static constexpr std::string_view kOpen = "<graph frame=";
  static constexpr std::string_view kClose = "</graph>";

  std::vector<PredictedGraph> graphs;
  std::set<std::int64_t> seen;
  std::size_t pos = 0;
  while (true) {
    const std::size_t open = think.find(kOpen, pos);
    if (open == std::string_view::npos) break;
    std::size_t cursor = open + kOpen.size();

    std::int64_t frame = 0;
    bool has_digit = false;
    while (cursor < think.size() && std::isdigit(static_cast<unsigned char>(think[cursor]))) {
      frame = frame * 10 + (think[cursor] - '0');
      has_digit = true;
      ++cursor;
    }
    if (!has_digit || cursor >= think.size() || think[cursor] != '>') {
      pos = open + kOpen.size();
      continue;
    }
    ++cursor;  // past '>'

    const std::size_t close = think.find(kClose, cursor);
    if (close == std::string_view::npos) break;
    const std::string_view body = think.substr(cursor, close - cursor);
    pos = close + kClose.size();

    nlohmann::json j = nlohmann::json::parse(body, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded()) continue;
    try {
      SceneGraph graph = graph_from_wire(j);
      if (seen.insert(frame).second) graphs.push_back(PredictedGraph{frame, std::move(graph)});
    } catch (const Error&) {
      // malformed block: drop this frame, keep the rest
    }
  }
  return graphs;
}

// Total over arbitrary byte strings. format_ok requires exactly one
// <think>..</think> followed by exactly one <answer>..</answer>; inner
// texts are extracted verbatim whenever their own tag pair is unambiguous,
// even if the overall format check fails.
inline ParsedResponse parse_format(std::string_view raw) {
  using detail::count_occurrences;

  ParsedResponse resp;
  resp.raw = std::string(raw);
  resp.token_length = detail::whitespace_token_count(raw);

  static constexpr std::string_view kThinkOpen = "<think>";
  static constexpr std::string_view kThinkClose = "</think>";
  static constexpr std::string_view kAnswerOpen = "<answer>";
  static constexpr std::string_view kAnswerClose = "</answer>";

  const std::size_t n_to = count_occurrences(raw, kThinkOpen);
  const std::size_t n_tc = count_occurrences(raw, kThinkClose);
  const std::size_t n_ao = count_occurrences(raw, kAnswerOpen);
  const std::size_t n_ac = count_occurrences(raw, kAnswerClose);

  const std::size_t to = raw.find(kThinkOpen);
  const std::size_t tc = raw.find(kThinkClose);
  const std::size_t ao = raw.find(kAnswerOpen);
  const std::size_t ac = raw.find(kAnswerClose);

  const bool think_ok = n_to == 1 && n_tc == 1 && to + kThinkOpen.size() <= tc;
  const bool answer_ok = n_ao == 1 && n_ac == 1 && ao + kAnswerOpen.size() <= ac;

  if (think_ok)
    resp.think = std::string(raw.substr(to + kThinkOpen.size(), tc - to - kThinkOpen.size()));
  if (answer_ok)
    resp.answer_text = std::string(raw.substr(ao + kAnswerOpen.size(), ac - ao - kAnswerOpen.size()));

  resp.format_ok = think_ok && answer_ok && tc < ao;
  if (resp.think) resp.pred_graphs = parse_graph_blocks(*resp.think);
  return resp;
}

namespace detail {

inline std::vector<double> extract_numbers(std::string_view text, std::size_t max_count) {
  std::vector<double> numbers;
  std::size_t i = 0;
  while (i < text.size() && numbers.size() < max_count) {
    const char c = text[i];
    const bool sign_start = (c == '+' || c == '-') && i + 1 < text.size() &&
                            (std::isdigit(static_cast<unsigned char>(text[i + 1])) ||
                             (text[i + 1] == '.' && i + 2 < text.size() &&
                              std::isdigit(static_cast<unsigned char>(text[i + 2]))));
    const bool dot_start = c == '.' && i + 1 < text.size() &&
                           std::isdigit(static_cast<unsigned char>(text[i + 1]));
    if (std::isdigit(static_cast<unsigned char>(c)) || sign_start || dot_start) {
      const std::string chunk(text.substr(i, std::min<std::size_t>(64, text.size() - i)));
      char* end = nullptr;
      const double value = std::strtod(chunk.c_str(), &end);
      const std::size_t consumed = static_cast<std::size_t>(end - chunk.c_str());
      if (consumed > 0) {
        numbers.push_back(value);
        i += consumed;
        continue;
      }
    }
    ++i;
  }
  return numbers;
}

}  // namespace detail

// Pulls a typed answer out of the <answer> text. Throws ExtractionError
// when no unambiguous candidate exists; the reward layer maps that to a
// zero score but keeps the diagnostic.
inline AnswerValue parse_answer(std::string_view answer_text, AnswerType expected) {
  using detail::is_word_char;

  switch (expected) {
    case AnswerType::multi_choice: {
      // Standalone option letters only; distinct letters mean the response
      // hedged and is rejected.
      std::optional<char> letter;
      for (std::size_t i = 0; i < answer_text.size(); ++i) {
        const char c = static_cast<char>(std::toupper(static_cast<unsigned char>(answer_text[i])));
        if (c < 'A' || c > 'D') continue;
        const bool left_ok = i == 0 || !is_word_char(static_cast<unsigned char>(answer_text[i - 1]));
        const bool right_ok = i + 1 == answer_text.size() ||
                              !is_word_char(static_cast<unsigned char>(answer_text[i + 1]));
        if (!left_ok || !right_ok) continue;
        if (letter && *letter != c)
          throw ExtractionError("ambiguous multi-choice answer: multiple option letters");
        letter = c;
      }
      if (!letter) throw ExtractionError("no option letter A-D found");
      return AnswerValue{static_cast<int>(*letter - 'A')};
    }

    case AnswerType::numerical: {
      const auto numbers = detail::extract_numbers(answer_text, 1);
      if (numbers.empty()) throw ExtractionError("no number found");
      return AnswerValue{numbers.front()};
    }

    case AnswerType::point: {
      const std::size_t open = answer_text.find('(');
      const std::size_t close = open == std::string_view::npos
                                    ? std::string_view::npos
                                    : answer_text.find(')', open);
      if (open == std::string_view::npos || close == std::string_view::npos)
        throw ExtractionError("no (x, y[, z]) tuple found");
      const auto numbers = detail::extract_numbers(answer_text.substr(open + 1, close - open - 1), 4);
      if (numbers.size() != 2 && numbers.size() != 3)
        throw ExtractionError("point tuple must have 2 or 3 coordinates");
      Point p;
      p.dim = static_cast<int>(numbers.size());
      for (std::size_t i = 0; i < numbers.size(); ++i) p.v[i] = numbers[i];
      return AnswerValue{p};
    }

    case AnswerType::iou_track: {
      const std::size_t open = answer_text.find('[');
      const std::size_t close = answer_text.rfind(']');
      if (open == std::string_view::npos || close == std::string_view::npos || close < open)
        throw ExtractionError("no JSON track list found");
      nlohmann::json j = nlohmann::json::parse(answer_text.substr(open, close - open + 1), nullptr,
                                               /*allow_exceptions=*/false);
      if (j.is_discarded() || !j.is_array()) throw ExtractionError("track list is not valid JSON");
      std::vector<TrackEntry> track;
      for (const auto& ej : j) {
        if (!ej.is_object() || !ej.contains("frame") || !ej.contains("box"))
          throw ExtractionError("track entry must be {frame, box}");
        const auto& fj = ej["frame"];
        const auto& bj = ej["box"];
        if (!fj.is_number_integer() || !bj.is_array() || bj.size() != 2)
          throw ExtractionError("track entry must be {frame, box:[[..],[..]]}");
        TrackEntry entry;
        entry.frame = fj.get<std::int64_t>();
        try {
          entry.box.lo = detail::point_from_json(bj[0], "box[0]");
          entry.box.hi = detail::point_from_json(bj[1], "box[1]");
        } catch (const Error& e) {
          throw ExtractionError(e.what());
        }
        if (entry.box.lo.dim != entry.box.hi.dim)
          throw ExtractionError("box corners differ in dimensionality");
        track.push_back(std::move(entry));
      }
      if (track.empty()) throw ExtractionError("track list is empty");
      return AnswerValue{std::move(track)};
    }
  }
  throw ExtractionError("unknown answer type");
}

}  // namespace stgraph
