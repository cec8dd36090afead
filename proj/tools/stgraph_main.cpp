// Command-line front end: dataset generation, response scoring, toy GRPO
// training, and dataset statistics. All file outputs are written atomically
// (write-then-rename) so failed commands leave nothing behind.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stgraph/stgraph.hpp"

namespace fs = std::filesystem;

namespace {

struct FlagOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> frames_k;
  std::optional<double> omega;
  std::vector<std::int64_t> length_window;
  std::optional<double> epsilon;
  std::optional<double> beta;
  std::optional<int> group_size;
  std::optional<double> learning_rate;
  std::optional<int> iterations;
  std::optional<std::size_t> default_quota;
  std::vector<std::string> quotas;  // task=N
};

// Precedence: command-line flag > config file > built-in default.
stgraph::AppConfig resolve_config(const std::string& config_path, const FlagOverrides& flags) {
  stgraph::AppConfig cfg;
  if (!config_path.empty()) cfg = stgraph::load_app_config(config_path);

  if (flags.seed) cfg.set_seed(*flags.seed);
  if (flags.frames_k) cfg.reward.frames_k = *flags.frames_k;
  if (flags.omega) cfg.reward.omega = *flags.omega;
  if (!flags.length_window.empty()) {
    if (flags.length_window.size() != 2)
      throw stgraph::ConfigError("--length-window expects MIN MAX");
    cfg.reward.length_min = flags.length_window[0];
    cfg.reward.length_max = flags.length_window[1];
  }
  if (flags.epsilon) cfg.grpo.epsilon = *flags.epsilon;
  if (flags.beta) cfg.grpo.beta = *flags.beta;
  if (flags.group_size) cfg.grpo.group_size = *flags.group_size;
  if (flags.learning_rate) cfg.grpo.learning_rate = *flags.learning_rate;
  if (flags.iterations) cfg.grpo.iterations = *flags.iterations;
  if (flags.default_quota) cfg.generation.default_quota = *flags.default_quota;
  for (const std::string& spec : flags.quotas) {
    const std::size_t eq = spec.find('=');
    if (eq == std::string::npos)
      throw stgraph::ConfigError("--quota expects TASK=COUNT, got '" + spec + "'");
    const stgraph::Task task = stgraph::task_from_string(spec.substr(0, eq));
    cfg.generation.quotas[task] =
        static_cast<std::size_t>(std::stoull(spec.substr(eq + 1)));
  }

  cfg.validate();
  return cfg;
}

std::vector<stgraph::SceneAnnotation> load_scene_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw stgraph::ParseError("not a directory", dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json")
      files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<stgraph::SceneAnnotation> scenes;
  for (const auto& file : files) scenes.push_back(stgraph::ingest_scene(file));
  if (scenes.empty()) throw stgraph::ParseError("no scene files (*.json) found", dir.string());
  return scenes;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

int cmd_generate(const std::string& scenes_dir, const std::string& out_path,
                 const std::string& stats_path, const stgraph::AppConfig& cfg) {
  const auto scenes = load_scene_dir(scenes_dir);
  const stgraph::DatasetBuildResult result = stgraph::build_dataset(scenes, cfg.generation);

  std::vector<nlohmann::ordered_json> rows;
  for (const auto& qa : result.qas) rows.push_back(stgraph::qa_to_json(qa));
  stgraph::write_jsonl(out_path, rows);
  if (!stats_path.empty())
    stgraph::atomic_write(stats_path, stgraph::stats_to_json(result.stats).dump(2) + "\n");

  std::cout << "generated " << result.stats.total << " qa pairs\n";
  for (const auto& [task, count] : result.stats.per_task)
    std::cout << "  " << task << ": " << count << "\n";
  return 0;
}

int cmd_score(const std::string& dataset_path, const std::string& responses_path,
              const std::string& out_path, const std::string& scenes_dir,
              const stgraph::AppConfig& cfg) {
  std::map<std::string, stgraph::QAPair> dataset;
  for (const auto& line : stgraph::read_jsonl(dataset_path)) {
    if (line.value.is_discarded())
      throw stgraph::ParseError("malformed dataset line " + std::to_string(line.line_no),
                                dataset_path);
    stgraph::QAPair qa = stgraph::qa_from_json(line.value);
    dataset.emplace(qa.qa_id, std::move(qa));
  }

  const auto responses = stgraph::read_jsonl(responses_path);
  if (responses.empty()) {
    std::cerr << "error: responses file is empty: " << responses_path << "\n";
    return 1;
  }

  std::vector<std::string> unknown;
  for (const auto& line : responses) {
    if (line.value.is_discarded() || !line.value.is_object()) continue;
    if (auto it = line.value.find("qa_id"); it != line.value.end() && it->is_string()) {
      if (!dataset.count(it->get<std::string>())) unknown.push_back(it->get<std::string>());
    }
  }
  if (!unknown.empty()) {
    std::cerr << "error: unknown qa_id(s):";
    for (const auto& id : unknown) std::cerr << " " << id;
    std::cerr << "\n";
    return 1;
  }

  std::map<std::string, stgraph::SceneAnnotation> scenes;
  if (!scenes_dir.empty()) {
    for (auto& scene : load_scene_dir(scenes_dir)) scenes.emplace(scene.scene_id, std::move(scene));
  }
  // Ground-truth graphs for the reward frames, cached per scene.
  std::map<std::string, std::vector<stgraph::PredictedGraph>> gt_graph_cache;
  auto gt_graphs_for = [&](const stgraph::QAPair& qa)
      -> const std::vector<stgraph::PredictedGraph>& {
    static const std::vector<stgraph::PredictedGraph> kEmpty;
    auto scene_it = scenes.find(qa.scene_id);
    if (scene_it == scenes.end()) return kEmpty;
    auto cached = gt_graph_cache.find(qa.scene_id);
    if (cached == gt_graph_cache.end()) {
      cached = gt_graph_cache
                   .emplace(qa.scene_id,
                            stgraph::select_reward_frames(scene_it->second, cfg.reward.frames_k))
                   .first;
    }
    return cached->second;
  };

  std::vector<nlohmann::ordered_json> rows;
  double total = 0.0;
  std::size_t flagged = 0;
  for (const auto& line : responses) {
    nlohmann::ordered_json row;
    row["line"] = line.line_no;
    const bool malformed = line.value.is_discarded() || !line.value.is_object() ||
                           !line.value.contains("qa_id") || !line.value["qa_id"].is_string() ||
                           !line.value.contains("response_text") ||
                           !line.value["response_text"].is_string();
    if (malformed) {
      row["qa_id"] = nullptr;
      row["malformed"] = true;
      row["r_total"] = 0.0;
      ++flagged;
      rows.push_back(std::move(row));
      continue;
    }
    const std::string qa_id = line.value["qa_id"].get<std::string>();
    const stgraph::QAPair& qa = dataset.at(qa_id);
    const stgraph::ParsedResponse resp =
        stgraph::parse_format(line.value["response_text"].get<std::string>());
    const stgraph::RewardBreakdown b =
        stgraph::reward_total(resp, qa, gt_graphs_for(qa), cfg.reward);
    row["qa_id"] = qa_id;
    const nlohmann::ordered_json bj = stgraph::breakdown_to_json(b);
    for (const auto& [key, value] : bj.items()) row[key] = value;
    total += b.r_total;
    rows.push_back(std::move(row));
  }

  stgraph::write_jsonl(out_path, rows);
  std::cout << "scored " << rows.size() << " responses, mean r_total = "
            << format_double(total / static_cast<double>(rows.size())) << "\n";
  if (flagged) std::cout << "flagged " << flagged << " malformed line(s), scored 0\n";
  return 0;
}

int cmd_train_toy(const std::string& dataset_path, const std::string& trace_path,
                  const stgraph::AppConfig& cfg) {
  std::vector<stgraph::QAPair> dataset;
  for (const auto& line : stgraph::read_jsonl(dataset_path)) {
    if (line.value.is_discarded())
      throw stgraph::ParseError("malformed dataset line " + std::to_string(line.line_no),
                                dataset_path);
    dataset.push_back(stgraph::qa_from_json(line.value));
  }

  const stgraph::TrainingTrace trace = stgraph::train_toy(dataset, cfg.grpo, cfg.reward);

  std::string csv = "iteration,mean_reward,kl,objective\n";
  for (const auto& row : trace.rows) {
    csv += std::to_string(row.iteration);
    csv += ',';
    csv += format_double(row.mean_reward);
    csv += ',';
    csv += format_double(row.kl);
    csv += ',';
    csv += format_double(row.objective);
    csv += '\n';
  }
  stgraph::atomic_write(trace_path, csv);

  std::cout << "trained " << trace.rows.size() << " iterations, final mean reward = "
            << format_double(trace.rows.back().mean_reward)
            << ", final kl = " << format_double(trace.rows.back().kl) << "\n";
  return 0;
}

int cmd_stats(const std::string& dataset_path, const std::string& out_path) {
  stgraph::DatasetStats stats;
  for (const auto& line : stgraph::read_jsonl(dataset_path)) {
    if (line.value.is_discarded())
      throw stgraph::ParseError("malformed dataset line " + std::to_string(line.line_no),
                                dataset_path);
    const stgraph::QAPair qa = stgraph::qa_from_json(line.value);
    ++stats.total;
    ++stats.per_task[stgraph::to_string(qa.task)];
    if (qa.answer_type == stgraph::AnswerType::multi_choice) {
      ++stats.position_histogram[stgraph::to_string(qa.task)][static_cast<std::size_t>(*qa.gt_choice)];
      ++stats.overall_positions[static_cast<std::size_t>(*qa.gt_choice)];
    }
  }
  const std::string rendered = stgraph::stats_to_json(stats).dump(2) + "\n";
  if (out_path.empty()) std::cout << rendered;
  else stgraph::atomic_write(out_path, rendered);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"scene-graph rewards and GRPO tooling for video spatio-temporal QA"};
  app.require_subcommand(1);

  std::string config_path;
  FlagOverrides flags;
  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--seed", flags.seed, "master seed");
  app.add_option("--frames-k", flags.frames_k, "frames scored by the graph reward");
  app.add_option("--omega", flags.omega, "length bonus value");
  app.add_option("--length-window", flags.length_window, "preferred token window MIN MAX")
      ->expected(2);
  app.add_option("--epsilon", flags.epsilon, "clip radius");
  app.add_option("--beta", flags.beta, "KL coefficient");
  app.add_option("--group-size", flags.group_size, "GRPO group size");
  app.add_option("--learning-rate", flags.learning_rate, "toy trainer learning rate");
  app.add_option("--iterations", flags.iterations, "toy trainer iterations");
  app.add_option("--default-quota", flags.default_quota, "per-task quota fallback");
  app.add_option("--quota", flags.quotas, "per-task quota override, TASK=COUNT");

  auto* generate = app.add_subcommand("generate", "build a QA dataset from scene annotations");
  generate->fallthrough();
  std::string scenes_dir, out_path, stats_path;
  generate->add_option("--scenes", scenes_dir, "directory of scene JSON files")->required();
  generate->add_option("--out", out_path, "output dataset JSONL")->required();
  generate->add_option("--stats", stats_path, "output stats JSON");

  auto* score = app.add_subcommand("score", "score responses against a dataset");
  score->fallthrough();
  std::string dataset_path, responses_path, score_out, score_scenes;
  score->add_option("--dataset", dataset_path, "dataset JSONL")->required();
  score->add_option("--responses", responses_path, "responses JSONL of {qa_id, response_text}")
      ->required();
  score->add_option("--out", score_out, "output breakdown JSONL")->required();
  score->add_option("--scenes", score_scenes,
                    "scene directory for graph rewards (omitted: r_graph = 0)");

  auto* train = app.add_subcommand("train-toy", "run GRPO on the softmax toy policy");
  train->fallthrough();
  std::string train_dataset, trace_path;
  train->add_option("--dataset", train_dataset, "dataset JSONL")->required();
  train->add_option("--trace", trace_path, "output CSV trace")->required();

  auto* stats = app.add_subcommand("stats", "recompute statistics for a dataset");
  stats->fallthrough();
  std::string stats_dataset, stats_out;
  stats->add_option("--dataset", stats_dataset, "dataset JSONL")->required();
  stats->add_option("--out", stats_out, "output stats JSON (default: stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    const stgraph::AppConfig cfg = resolve_config(config_path, flags);
    if (generate->parsed()) return cmd_generate(scenes_dir, out_path, stats_path, cfg);
    if (score->parsed()) return cmd_score(dataset_path, responses_path, score_out, score_scenes, cfg);
    if (train->parsed()) return cmd_train_toy(train_dataset, trace_path, cfg);
    if (stats->parsed()) return cmd_stats(stats_dataset, stats_out);
  } catch (const stgraph::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
