#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "stgraph/grpo.hpp"
#include "support/fixtures.hpp"

using namespace stgraph;

namespace {

QAPair bandit_qa(int correct, const std::string& id = "bandit") {
  QAPair qa;
  qa.qa_id = id;
  qa.scene_id = "s";
  qa.task = Task::relative_direction;
  qa.answer_type = AnswerType::multi_choice;
  qa.question = "?";
  qa.options = {{"right", "left", "up", "down"}};
  qa.gt_choice = correct;
  return qa;
}

ToyPolicy policy_from_logits(const std::string& ctx, std::vector<double> z) {
  ToyPolicy p;
  p.logits[ctx] = std::move(z);
  return p;
}

// Central finite differences of the surrogate objective over the new
// policy's logits.
std::vector<double> fd_gradient(const ToyPolicy& policy_new, const ToyPolicy& policy_old,
                                const ToyPolicy& policy_ref, const std::string& ctx,
                                const std::vector<std::size_t>& samples,
                                const std::vector<double>& advantages, const GrpoConfig& cfg,
                                double h = 1e-6) {
  std::vector<double> grad(policy_new.context_logits(ctx).size());
  for (std::size_t b = 0; b < grad.size(); ++b) {
    ToyPolicy plus = policy_new;
    ToyPolicy minus = policy_new;
    plus.logits[ctx][b] += h;
    minus.logits[ctx][b] -= h;
    grad[b] = (surrogate_objective(plus, policy_old, policy_ref, ctx, samples, advantages, cfg) -
               surrogate_objective(minus, policy_old, policy_ref, ctx, samples, advantages, cfg)) /
              (2 * h);
  }
  return grad;
}

double rel_error(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    scale += b[i] * b[i];
  }
  return std::sqrt(diff) / std::max(1e-12, std::sqrt(scale));
}

}  // namespace

TEST_CASE("advantages: hand values and degenerate groups") {
  const GroupScores alt = compute_advantages({1, 0, 1, 0});
  CHECK(alt.advantages == std::vector<double>{1, -1, 1, -1});

  const GroupScores flat = compute_advantages({0.7, 0.7, 0.7});
  CHECK(flat.advantages == std::vector<double>{0, 0, 0});

  CHECK_THROWS_AS(compute_advantages({1.0}), GroupTooSmallError);
  CHECK_THROWS_AS(compute_advantages({}), GroupTooSmallError);
}

TEST_CASE("advantages: normalized moments on random groups") {
  Rng rng(71);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t g = 2 + rng.index(15);
    std::vector<double> rewards(g);
    for (auto& r : rewards) r = rng.uniform(0, 3);
    const GroupScores scores = compute_advantages(rewards);

    long double mean = 0.0L, var = 0.0L;
    for (double a : scores.advantages) mean += a;
    mean /= static_cast<long double>(g);
    for (double a : scores.advantages) var += (a - mean) * (a - mean);
    var /= static_cast<long double>(g);
    CHECK(std::abs(static_cast<double>(mean)) < 1e-9);
    CHECK(std::abs(std::sqrt(static_cast<double>(var)) - 1.0) < 1e-9);
  }
}

TEST_CASE("advantages: exact shift invariance on exactness-preserving inputs") {
  Rng rng(73);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t g = 2 + rng.index(15);
    std::vector<double> rewards(g), shifted(g);
    const double c = static_cast<double>(rng.uniform_int(-4096, 4096)) / 256.0;
    for (std::size_t i = 0; i < g; ++i) {
      rewards[i] = static_cast<double>(rng.uniform_int(0, 1 << 20)) / 256.0;
      shifted[i] = rewards[i] + c;  // dyadic values: the addition is exact
    }
    const GroupScores bottom = compute_advantages(rewards);
    const GroupScores top = compute_advantages(shifted);
    for (std::size_t i = 0; i < g; ++i) CHECK(top.advantages[i] == bottom.advantages[i]);
  }
}

TEST_CASE("kl divergence: closed forms, non-negativity, and support checks") {
  CHECK(kl_divergence({0.3, 0.7}, {0.3, 0.7}) == 0.0);
  CHECK(kl_divergence({1.0, 0.0}, {0.5, 0.5}) == Catch::Approx(std::log(2.0)).margin(1e-15));
  CHECK_THROWS_AS(kl_divergence({0.5, 0.5}, {1.0, 0.0}), SupportMismatchError);
  CHECK_THROWS_AS(kl_divergence({0.5, 0.5}, {0.3, 0.3, 0.4}), SupportMismatchError);

  Rng rng(77);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 2 + rng.index(6);
    std::vector<double> p(n), q(n);
    double sp = 0, sq = 0;
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = rng.uniform(0.01, 1);
      q[i] = rng.uniform(0.01, 1);
      sp += p[i];
      sq += q[i];
    }
    for (std::size_t i = 0; i < n; ++i) {
      p[i] /= sp;
      q[i] /= sq;
    }
    const double kl = kl_divergence(p, q);
    CHECK(kl >= -1e-15);  // Gibbs' inequality

    double max_gap = 0.0;
    for (std::size_t i = 0; i < n; ++i) max_gap = std::max(max_gap, std::abs(p[i] - q[i]));
    if (max_gap > 1e-6) CHECK(kl > 0.0);  // zero only at equality

    double by_hand = 0.0;
    for (std::size_t i = 0; i < n; ++i) by_hand += p[i] * (std::log(p[i]) - std::log(q[i]));
    CHECK(kl == Catch::Approx(by_hand).margin(1e-12));
  }
}

TEST_CASE("toy policy probabilities are a proper softmax") {
  ToyPolicy p = policy_from_logits("q", {0.0, 1.0, -2.0, 0.5});
  const auto probs = p.probs("q");
  double sum = 0.0;
  for (double v : probs) {
    CHECK(v > 0.0);
    sum += v;
  }
  CHECK(sum == Catch::Approx(1.0).margin(1e-12));
  CHECK_THROWS_AS(p.probs("unknown"), SupportMismatchError);
}

TEST_CASE("surrogate: identical policies give zero, clip arithmetic engages at rho=2") {
  GrpoConfig cfg;
  const ToyPolicy pi = policy_from_logits("q", {0.4, -0.3, 0.1, 0.0});
  const std::vector<std::size_t> samples = {0, 1, 2, 3};
  const GroupScores scores = compute_advantages({1, 0, 1, 0});
  CHECK(surrogate_objective(pi, pi, pi, "q", samples, scores.advantages, cfg) ==
        Catch::Approx(0.0).margin(1e-12));

  // two-response vocabulary engineered so rho_0 = 2
  const ToyPolicy old_policy = policy_from_logits("q", {std::log(0.25), std::log(0.75)});
  const ToyPolicy new_policy = policy_from_logits("q", {std::log(0.5), std::log(0.5)});
  GrpoConfig nokl = cfg;
  nokl.beta = 0.0;
  const double objective =
      surrogate_objective(new_policy, old_policy, old_policy, "q", {0}, {1.0}, nokl);
  CHECK(objective == Catch::Approx(1.2).margin(1e-12));
}

TEST_CASE("surrogate matches the straight-line restatement on random states") {
  Rng rng(83);
  GrpoConfig cfg;
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t vocab = 2 + rng.index(6);
    ToyPolicy pn, po, pr;
    for (auto* p : {&pn, &po, &pr}) {
      std::vector<double> z(vocab);
      for (auto& v : z) v = rng.uniform(-2, 2);
      p->logits["q"] = std::move(z);
    }
    const std::size_t g = 2 + rng.index(10);
    std::vector<std::size_t> samples(g);
    std::vector<double> rewards(g);
    for (std::size_t i = 0; i < g; ++i) {
      samples[i] = rng.index(vocab);
      rewards[i] = rng.uniform(0, 2);
    }
    const auto advantages = compute_advantages(rewards).advantages;
    const double lib = surrogate_objective(pn, po, pr, "q", samples, advantages, cfg);
    const double ref = testsupport::ref_surrogate(pn.probs("q"), po.probs("q"), pr.probs("q"),
                                                  samples, advantages, cfg.epsilon, cfg.beta);
    CHECK(lib == Catch::Approx(ref).margin(1e-12));
  }
}

TEST_CASE("analytic gradient matches central finite differences") {
  Rng rng(91);
  GrpoConfig cfg;
  int checked = 0;
  while (checked < 60) {
    const std::size_t vocab = 3 + rng.index(5);
    ToyPolicy pn, po, pr;
    for (auto* p : {&pn, &po, &pr}) {
      std::vector<double> z(vocab);
      for (auto& v : z) v = rng.uniform(-1.5, 1.5);
      p->logits["q"] = std::move(z);
    }
    const std::size_t g = 4 + rng.index(8);
    std::vector<std::size_t> samples(g);
    std::vector<double> rewards(g);
    for (std::size_t i = 0; i < g; ++i) {
      samples[i] = rng.index(vocab);
      rewards[i] = rng.uniform(0, 2);
    }
    const auto advantages = compute_advantages(rewards).advantages;

    // stay away from the clip kinks where the objective is not differentiable
    bool near_kink = false;
    const auto p_new = pn.probs("q");
    const auto p_old = po.probs("q");
    for (std::size_t s : samples) {
      const double rho = p_new[s] / p_old[s];
      near_kink = near_kink || std::abs(rho - (1 - cfg.epsilon)) < 1e-3 ||
                  std::abs(rho - (1 + cfg.epsilon)) < 1e-3;
    }
    if (near_kink) continue;

    const auto analytic = surrogate_gradient(pn, po, pr, "q", samples, advantages, cfg);
    const auto numeric = fd_gradient(pn, po, pr, "q", samples, advantages, cfg);
    CHECK(rel_error(analytic, numeric) < 1e-5);
    ++checked;
  }
}

TEST_CASE("at pi = pi_old the gradient equals the unclipped policy-gradient estimator") {
  Rng rng(97);
  GrpoConfig cfg;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t vocab = 4;
    std::vector<double> z(vocab);
    for (auto& v : z) v = rng.uniform(-1, 1);
    const ToyPolicy pi = policy_from_logits("q", z);
    const ToyPolicy ref = policy_from_logits("q", {0, 0, 0, 0});

    const std::size_t g = 8;
    std::vector<std::size_t> samples(g);
    std::vector<double> rewards(g);
    for (std::size_t i = 0; i < g; ++i) {
      samples[i] = rng.index(vocab);
      rewards[i] = rng.uniform(0, 1);
    }
    const auto advantages = compute_advantages(rewards).advantages;
    const auto grad = surrogate_gradient(pi, pi, ref, "q", samples, advantages, cfg);

    // REINFORCE with baseline: (1/G) sum_i A_i (delta - p) - beta grad KL
    const auto p = pi.probs("q");
    const double kl = kl_divergence(p, ref.probs("q"));
    std::vector<double> expected(vocab, 0.0);
    for (std::size_t i = 0; i < g; ++i)
      for (std::size_t b = 0; b < vocab; ++b)
        expected[b] += advantages[i] * ((b == samples[i] ? 1.0 : 0.0) - p[b]) / static_cast<double>(g);
    for (std::size_t b = 0; b < vocab; ++b)
      expected[b] -= cfg.beta * p[b] * (std::log(p[b] / 0.25) - kl);

    CHECK(rel_error(grad, expected) < 1e-12);
  }
}

TEST_CASE("toy training learns the 4-option bandit") {
  const std::vector<QAPair> dataset = {bandit_qa(2)};
  GrpoConfig cfg;
  cfg.seed = 7;
  RewardConfig reward_cfg;

  const TrainingTrace trace = train_toy(dataset, cfg, reward_cfg);
  REQUIRE(trace.rows.size() == 500);

  double best = 0.0;
  for (const auto& row : trace.rows) best = std::max(best, row.mean_reward);
  CHECK(best >= 0.95);

  // the trend is up: trailing window beats the leading window
  double head = 0.0, tail = 0.0;
  for (int i = 0; i < 50; ++i) {
    head += trace.rows[static_cast<std::size_t>(i)].mean_reward;
    tail += trace.rows[trace.rows.size() - 1 - static_cast<std::size_t>(i)].mean_reward;
  }
  CHECK(tail / 50.0 > head / 50.0);

  // the learned policy concentrates on the rewarded response
  const auto probs = trace.policy.probs("bandit");
  CHECK(probs[2] > 0.9);
}

TEST_CASE("huge beta pins the policy to the reference") {
  const std::vector<QAPair> dataset = {bandit_qa(1)};
  GrpoConfig cfg;
  cfg.seed = 11;
  cfg.beta = 100.0;
  cfg.learning_rate = 0.005;  // keep the stiff KL term stable
  const TrainingTrace trace = train_toy(dataset, cfg, RewardConfig{});
  CHECK(trace.rows.back().kl <= 0.01);
}

TEST_CASE("zero learning rate leaves the trace constant") {
  const std::vector<QAPair> dataset = {bandit_qa(0)};
  GrpoConfig cfg;
  cfg.seed = 3;
  cfg.learning_rate = 0.0;
  cfg.iterations = 50;
  const TrainingTrace trace = train_toy(dataset, cfg, RewardConfig{});
  for (const auto& row : trace.rows) {
    CHECK(row.kl == 0.0);
    CHECK(row.objective == Catch::Approx(0.0).margin(1e-12));
  }
  const auto probs = trace.policy.probs("bandit");
  for (double p : probs) CHECK(p == 0.25);
}

TEST_CASE("learning signal holds across 20 seeds") {
  int improved = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const std::vector<QAPair> dataset = {bandit_qa(static_cast<int>(seed % 4))};
    GrpoConfig cfg;
    cfg.seed = seed;
    const TrainingTrace trace = train_toy(dataset, cfg, RewardConfig{});
    double head = 0.0, tail = 0.0;
    for (int i = 0; i < 20; ++i) {
      head += trace.rows[static_cast<std::size_t>(i)].mean_reward;
      tail += trace.rows[trace.rows.size() - 1 - static_cast<std::size_t>(i)].mean_reward;
    }
    if (tail > head) ++improved;
  }
  CHECK(improved >= 19);
}

TEST_CASE("configuration validation rejects bad hyperparameters") {
  GrpoConfig cfg;
  cfg.epsilon = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.group_size = 1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.iterations = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  // dataset without multi-choice questions cannot train
  QAPair numeric;
  numeric.qa_id = "n";
  numeric.scene_id = "s";
  numeric.task = Task::relative_distance;
  numeric.answer_type = AnswerType::numerical;
  numeric.question = "?";
  numeric.gt_number = 5.0;
  numeric.unit = "m";
  CHECK_THROWS_AS(train_toy({numeric}, GrpoConfig{}, RewardConfig{}), ConfigError);
  CHECK_THROWS_AS(train_toy({}, GrpoConfig{}, RewardConfig{}), ConfigError);
}
