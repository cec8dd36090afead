#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "stgraph/errors.hpp"
#include "stgraph/qa.hpp"
#include "stgraph/random.hpp"
#include "stgraph/response.hpp"
#include "stgraph/rewards.hpp"

namespace stgraph {

struct GroupScores {
  std::vector<double> rewards;
  std::vector<double> advantages;
  std::size_t group_size() const { return rewards.size(); }
};

struct GrpoConfig {
  double epsilon = 0.2;        // clip radius (not specified upstream; standard default)
  double beta = 0.04;          // KL coefficient
  double learning_rate = 0.5;
  int iterations = 500;
  int group_size = 8;
  std::uint64_t seed = 0;

  void validate() const {
    if (epsilon <= 0) throw ConfigError("epsilon must be > 0");
    if (beta < 0) throw ConfigError("beta must be >= 0");
    if (learning_rate < 0) throw ConfigError("learning_rate must be >= 0");
    if (iterations < 1) throw ConfigError("iterations must be >= 1");
    if (group_size < 2) throw ConfigError("group_size must be >= 2");
  }
};

// Group-standardized advantages with population std. Rewards are centered
// on the group minimum before the moments are taken, so any shift of the
// whole group that stays exact in floating point leaves the advantages
// bit-identical. A constant group yields all-zero advantages.
inline GroupScores compute_advantages(const std::vector<double>& rewards) {
  if (rewards.size() < 2)
    throw GroupTooSmallError("advantage normalization needs a group of at least 2, got " +
                             std::to_string(rewards.size()));
  GroupScores scores;
  scores.rewards = rewards;
  scores.advantages.assign(rewards.size(), 0.0);

  const double base = *std::min_element(rewards.begin(), rewards.end());
  bool constant = true;
  for (double r : rewards) constant = constant && r == base;
  if (constant) return scores;

  const double n = static_cast<double>(rewards.size());
  std::vector<double> shifted(rewards.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    shifted[i] = rewards[i] - base;
    sum += shifted[i];
  }
  const double mean = sum / n;
  double var = 0.0;
  for (double s : shifted) var += (s - mean) * (s - mean);
  var /= n;
  const double std_dev = std::sqrt(var);
  if (std_dev == 0.0) return scores;

  for (std::size_t i = 0; i < rewards.size(); ++i)
    scores.advantages[i] = (shifted[i] - mean) / std_dev;
  return scores;
}

// Exact KL over a finite support: sum p log(p/q). q must be strictly
// positive wherever p is.
inline double kl_divergence(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size())
    throw SupportMismatchError("distributions differ in support size (" + std::to_string(p.size()) +
                               " vs " + std::to_string(q.size()) + ")");
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] <= 0.0) throw SupportMismatchError("q has a zero where p is positive");
    kl += p[i] * std::log(p[i] / q[i]);
  }
  return kl;
}

// Softmax policy over a finite per-context response vocabulary. Stands in
// for the sampled model during desk-scale training, keeping ratios, KL and
// gradients exact.
struct ToyPolicy {
  std::map<std::string, std::vector<double>> logits;  // context -> per-response logit
  double temperature = 1.0;

  const std::vector<double>& context_logits(const std::string& context) const {
    auto it = logits.find(context);
    if (it == logits.end()) throw SupportMismatchError("unknown context '" + context + "'");
    return it->second;
  }

  std::vector<double> probs(const std::string& context) const {
    if (temperature <= 0) throw ConfigError("policy temperature must be positive");
    const auto& z = context_logits(context);
    std::vector<double> p(z.size());
    const double zmax = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      p[i] = std::exp((z[i] - zmax) / temperature);
      sum += p[i];
    }
    for (double& v : p) v /= sum;
    return p;
  }

  std::size_t sample(const std::string& context, Rng& rng) const {
    const std::vector<double> p = probs(context);
    const double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      acc += p[i];
      if (u < acc) return i;
    }
    return p.size() - 1;
  }
};

namespace detail {

inline void check_same_support(const std::vector<double>& a, const std::vector<double>& b,
                               const std::vector<double>& c) {
  if (a.size() != b.size() || a.size() != c.size())
    throw SupportMismatchError("policies disagree on vocabulary size");
}

}  // namespace detail

// Clipped group surrogate with a KL penalty against the reference policy:
// mean_i min(rho_i A_i, clip(rho_i, 1-eps, 1+eps) A_i) - beta KL(new||ref).
inline double surrogate_objective(const ToyPolicy& policy_new, const ToyPolicy& policy_old,
                                  const ToyPolicy& policy_ref, const std::string& context,
                                  const std::vector<std::size_t>& samples,
                                  const std::vector<double>& advantages, const GrpoConfig& cfg) {
  if (samples.size() != advantages.size())
    throw SupportMismatchError("samples and advantages differ in length");
  const std::vector<double> p_new = policy_new.probs(context);
  const std::vector<double> p_old = policy_old.probs(context);
  const std::vector<double> p_ref = policy_ref.probs(context);
  detail::check_same_support(p_new, p_old, p_ref);

  double surrogate = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const std::size_t o = samples[i];
    if (o >= p_new.size()) throw SupportMismatchError("sample index outside vocabulary");
    const double rho = p_new[o] / p_old[o];
    const double clipped = std::clamp(rho, 1.0 - cfg.epsilon, 1.0 + cfg.epsilon);
    surrogate += std::min(rho * advantages[i], clipped * advantages[i]);
  }
  surrogate /= static_cast<double>(samples.size());
  return surrogate - cfg.beta * kl_divergence(p_new, p_ref);
}

// Analytic gradient of the surrogate with respect to the new policy's
// logits for `context`. The min picks the unclipped branch whenever it is
// no larger, and that branch's derivative is A_i * d(rho_i)/dz; a clipped
// branch is constant in z.
inline std::vector<double> surrogate_gradient(const ToyPolicy& policy_new,
                                              const ToyPolicy& policy_old,
                                              const ToyPolicy& policy_ref,
                                              const std::string& context,
                                              const std::vector<std::size_t>& samples,
                                              const std::vector<double>& advantages,
                                              const GrpoConfig& cfg) {
  if (samples.size() != advantages.size())
    throw SupportMismatchError("samples and advantages differ in length");
  const std::vector<double> p_new = policy_new.probs(context);
  const std::vector<double> p_old = policy_old.probs(context);
  const std::vector<double> p_ref = policy_ref.probs(context);
  detail::check_same_support(p_new, p_old, p_ref);

  const double tau = policy_new.temperature;
  const double group = static_cast<double>(samples.size());
  std::vector<double> grad(p_new.size(), 0.0);

  for (std::size_t i = 0; i < samples.size(); ++i) {
    const std::size_t o = samples[i];
    if (o >= p_new.size()) throw SupportMismatchError("sample index outside vocabulary");
    const double rho = p_new[o] / p_old[o];
    const double clipped = std::clamp(rho, 1.0 - cfg.epsilon, 1.0 + cfg.epsilon);
    const double a = advantages[i];
    if (rho * a > clipped * a) continue;  // clipped branch active, zero gradient
    const double scale = a * rho / (group * tau);
    for (std::size_t b = 0; b < grad.size(); ++b)
      grad[b] += scale * ((b == o ? 1.0 : 0.0) - p_new[b]);
  }

  if (cfg.beta > 0) {
    const double kl = kl_divergence(p_new, p_ref);
    for (std::size_t b = 0; b < grad.size(); ++b)
      grad[b] -= cfg.beta / tau * p_new[b] * (std::log(p_new[b] / p_ref[b]) - kl);
  }
  return grad;
}

// Candidate responses for one multi-choice question: the option letter
// wrapped in answer tags, so the reward stack can extract it. Kept minimal
// on purpose; the learning signal is the answer reward alone.
inline std::vector<std::string> toy_vocabulary(const QAPair& qa) {
  if (qa.answer_type != AnswerType::multi_choice)
    throw ConfigError("toy training supports multi-choice questions, got " +
                          std::string(to_string(qa.answer_type)),
                      qa.qa_id);
  std::vector<std::string> vocab;
  for (char letter : {'A', 'B', 'C', 'D'})
    vocab.push_back(std::string("<answer>") + letter + "</answer>");
  return vocab;
}

struct TraceRow {
  int iteration = 0;
  double mean_reward = 0.0;  // mean total reward of the sampled groups
  double kl = 0.0;           // mean KL(policy || reference) after the update
  double objective = 0.0;    // surrogate evaluated after the update
};

struct TrainingTrace {
  std::vector<TraceRow> rows;
  ToyPolicy policy;
  ToyPolicy reference;
};

// Desk-scale GRPO on the softmax toy policy: per question, sample a group
// from the frozen policy, score it through the reward stack, standardize
// advantages, and ascend the surrogate by its analytic gradient. One epoch
// per sampled group.
inline TrainingTrace train_toy(const std::vector<QAPair>& dataset, const GrpoConfig& cfg,
                               const RewardConfig& reward_cfg) {
  cfg.validate();
  reward_cfg.validate();

  struct Context {
    std::string id;
    std::vector<double> response_rewards;
  };
  std::vector<Context> contexts;
  for (const auto& qa : dataset) {
    if (qa.answer_type != AnswerType::multi_choice) continue;
    Context ctx;
    ctx.id = qa.qa_id;
    for (const std::string& text : toy_vocabulary(qa)) {
      const ParsedResponse resp = parse_format(text);
      ctx.response_rewards.push_back(reward_total(resp, qa, {}, reward_cfg).r_total);
    }
    const double best = *std::max_element(ctx.response_rewards.begin(), ctx.response_rewards.end());
    if (best <= 0)
      throw ConfigError("vocabulary has no positive-reward response", qa.qa_id);
    contexts.push_back(std::move(ctx));
  }
  if (contexts.empty()) throw ConfigError("dataset has no multi-choice questions to train on");
  std::sort(contexts.begin(), contexts.end(),
            [](const Context& a, const Context& b) { return a.id < b.id; });

  TrainingTrace trace;
  for (const auto& ctx : contexts) {
    trace.policy.logits[ctx.id] = std::vector<double>(ctx.response_rewards.size(), 0.0);
    trace.reference.logits[ctx.id] = std::vector<double>(ctx.response_rewards.size(), 0.0);
  }

  Rng rng(mix_seed(cfg.seed, "train_toy"));
  for (int iter = 0; iter < cfg.iterations; ++iter) {
    double iter_reward = 0.0;
    double iter_kl = 0.0;
    double iter_objective = 0.0;

    for (const auto& ctx : contexts) {
      ToyPolicy old_policy;
      old_policy.temperature = trace.policy.temperature;
      old_policy.logits[ctx.id] = trace.policy.logits[ctx.id];

      std::vector<std::size_t> samples(static_cast<std::size_t>(cfg.group_size));
      std::vector<double> rewards(static_cast<std::size_t>(cfg.group_size));
      for (int g = 0; g < cfg.group_size; ++g) {
        samples[static_cast<std::size_t>(g)] = old_policy.sample(ctx.id, rng);
        rewards[static_cast<std::size_t>(g)] =
            ctx.response_rewards[samples[static_cast<std::size_t>(g)]];
      }
      const GroupScores scores = compute_advantages(rewards);

      const std::vector<double> grad = surrogate_gradient(trace.policy, old_policy,
                                                          trace.reference, ctx.id, samples,
                                                          scores.advantages, cfg);
      auto& z = trace.policy.logits[ctx.id];
      for (std::size_t b = 0; b < z.size(); ++b) z[b] += cfg.learning_rate * grad[b];

      double group_mean = 0.0;
      for (double r : rewards) group_mean += r;
      iter_reward += group_mean / static_cast<double>(cfg.group_size);
      iter_kl += kl_divergence(trace.policy.probs(ctx.id), trace.reference.probs(ctx.id));
      iter_objective += surrogate_objective(trace.policy, old_policy, trace.reference, ctx.id,
                                            samples, scores.advantages, cfg);
    }

    const double n = static_cast<double>(contexts.size());
    trace.rows.push_back(TraceRow{iter, iter_reward / n, iter_kl / n, iter_objective / n});
  }
  return trace;
}

}  // namespace stgraph
