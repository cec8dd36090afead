#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "stgraph/errors.hpp"
#include "stgraph/grpo.hpp"
#include "stgraph/qa_gen.hpp"
#include "stgraph/rewards.hpp"

namespace stgraph {

// Merged configuration for the CLI. Precedence: command-line flag over
// config file over built-in default; the CLI applies flags after load.
struct AppConfig {
  GenerationConfig generation;
  RewardConfig reward;
  GrpoConfig grpo;

  void validate() const {
    generation.validate();
    reward.validate();
    grpo.validate();
  }

  // Keeps the three seed fields in lockstep; the CLI exposes one --seed.
  void set_seed(std::uint64_t seed) {
    generation.seed = seed;
    grpo.seed = seed;
  }
};

namespace config_detail {

inline double number_field(const nlohmann::json& j, const char* key, double fallback,
                           const std::string& section) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  if (!it->is_number()) throw ConfigError("expected a number", section + "." + key);
  return it->get<double>();
}

inline std::int64_t int_field(const nlohmann::json& j, const char* key, std::int64_t fallback,
                              const std::string& section) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  if (!it->is_number_integer()) throw ConfigError("expected an integer", section + "." + key);
  return it->get<std::int64_t>();
}

}  // namespace config_detail

inline AppConfig app_config_from_json(const nlohmann::json& j) {
  using config_detail::int_field;
  using config_detail::number_field;
  if (!j.is_object()) throw ConfigError("config must be a JSON object");

  AppConfig cfg;
  if (auto it = j.find("seed"); it != j.end() && !it->is_null()) {
    if (!it->is_number_integer()) throw ConfigError("expected an integer", "seed");
    cfg.set_seed(it->get<std::uint64_t>());
  }

  if (auto it = j.find("generation"); it != j.end() && !it->is_null()) {
    const auto& g = *it;
    if (!g.is_object()) throw ConfigError("expected an object", "generation");
    cfg.generation.default_quota = static_cast<std::size_t>(
        int_field(g, "default_quota", static_cast<std::int64_t>(cfg.generation.default_quota),
                  "generation"));
    cfg.generation.min_pair_separation =
        number_field(g, "min_pair_separation", cfg.generation.min_pair_separation, "generation");
    cfg.generation.paraphrase_pool_size = static_cast<std::size_t>(int_field(
        g, "paraphrase_pool_size", static_cast<std::int64_t>(cfg.generation.paraphrase_pool_size),
        "generation"));
    if (auto d = g.find("direction_scheme"); d != g.end() && !d->is_null()) {
      if (!d->is_string()) throw ConfigError("expected a string", "generation.direction_scheme");
      cfg.generation.direction_scheme = d->get<std::string>();
    }
    if (auto q = g.find("quotas"); q != g.end() && !q->is_null()) {
      if (!q->is_object()) throw ConfigError("expected an object", "generation.quotas");
      for (const auto& [task_name, count] : q->items()) {
        if (!count.is_number_integer() || count.get<std::int64_t>() < 0)
          throw ConfigError("quota must be a non-negative integer", "generation.quotas." + task_name);
        cfg.generation.quotas[task_from_string(task_name)] =
            static_cast<std::size_t>(count.get<std::int64_t>());
      }
    }
  }

  if (auto it = j.find("reward"); it != j.end() && !it->is_null()) {
    const auto& r = *it;
    if (!r.is_object()) throw ConfigError("expected an object", "reward");
    cfg.reward.omega = number_field(r, "omega", cfg.reward.omega, "reward");
    cfg.reward.frames_k =
        static_cast<int>(int_field(r, "frames_k", cfg.reward.frames_k, "reward"));
    cfg.reward.lambda_node = number_field(r, "lambda_node", cfg.reward.lambda_node, "reward");
    cfg.reward.lambda_dist = number_field(r, "lambda_dist", cfg.reward.lambda_dist, "reward");
    if (auto w = r.find("length_window"); w != r.end() && !w->is_null()) {
      if (!w->is_array() || w->size() != 2 || !(*w)[0].is_number_integer() ||
          !(*w)[1].is_number_integer())
        throw ConfigError("expected [min, max] integers", "reward.length_window");
      cfg.reward.length_min = (*w)[0].get<std::int64_t>();
      cfg.reward.length_max = (*w)[1].get<std::int64_t>();
    }
  }

  if (auto it = j.find("grpo"); it != j.end() && !it->is_null()) {
    const auto& g = *it;
    if (!g.is_object()) throw ConfigError("expected an object", "grpo");
    cfg.grpo.epsilon = number_field(g, "epsilon", cfg.grpo.epsilon, "grpo");
    cfg.grpo.beta = number_field(g, "beta", cfg.grpo.beta, "grpo");
    cfg.grpo.learning_rate = number_field(g, "learning_rate", cfg.grpo.learning_rate, "grpo");
    cfg.grpo.iterations = static_cast<int>(int_field(g, "iterations", cfg.grpo.iterations, "grpo"));
    cfg.grpo.group_size = static_cast<int>(int_field(g, "group_size", cfg.grpo.group_size, "grpo"));
  }

  cfg.validate();
  return cfg;
}

inline AppConfig load_app_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file", path.string());
  nlohmann::json j = nlohmann::json::parse(in, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) throw ConfigError("malformed JSON", path.string());
  return app_config_from_json(j);
}

}  // namespace stgraph
