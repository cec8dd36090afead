#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "stgraph/errors.hpp"

namespace stgraph {

struct JsonlLine {
  std::size_t line_no = 0;  // 1-based
  std::string text;
  nlohmann::json value;     // discarded when the line is not valid JSON
};

// Reads every non-empty line; invalid JSON is preserved with a discarded
// value so callers can flag it instead of aborting.
inline std::vector<JsonlLine> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open file", path.string());
  std::vector<JsonlLine> lines;
  std::string text;
  std::size_t line_no = 0;
  while (std::getline(in, text)) {
    ++line_no;
    if (text.empty()) continue;
    JsonlLine line;
    line.line_no = line_no;
    line.value = nlohmann::json::parse(text, nullptr, /*allow_exceptions=*/false);
    line.text = std::move(text);
    lines.push_back(std::move(line));
  }
  return lines;
}

// Write-then-rename so a failed command never leaves a partial output file.
inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ParseError("cannot open file for writing", tmp.string());
    out << content;
    if (!out) throw ParseError("write failed", tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline void write_jsonl(const std::filesystem::path& path,
                        const std::vector<nlohmann::ordered_json>& rows) {
  std::string content;
  for (const auto& row : rows) {
    content += row.dump();
    content += '\n';
  }
  atomic_write(path, content);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open file", path.string());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace stgraph
