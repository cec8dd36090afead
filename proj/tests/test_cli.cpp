// End-to-end checks of the command-line surface: exit codes, atomic
// outputs, determinism under a fixed seed, and config precedence.
#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "stgraph/jsonl.hpp"
#include "stgraph/qa.hpp"

using namespace stgraph;
namespace fs = std::filesystem;

namespace {

const std::string kCli = CLI_PATH;
const std::string kFixtures = FIXTURES_DIR;

int run(const std::string& args) {
  const std::string cmd = kCli + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

fs::path scratch() {
  const fs::path dir = fs::temp_directory_path() / "stgraph_cli_test";
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) { return read_file(p); }

}  // namespace

TEST_CASE("generate: fixture scenes produce all eight task types") {
  const fs::path dir = scratch();
  const fs::path out = dir / "ds.jsonl";
  const fs::path stats = dir / "stats.json";
  REQUIRE(run("generate --scenes " + kFixtures + "/scenes --out " + out.string() + " --stats " +
              stats.string() + " --seed 7") == 0);

  const auto stats_json = nlohmann::json::parse(slurp(stats));
  CHECK(stats_json["per_task"].size() == 8);
  std::size_t total = 0;
  for (const auto& [task, count] : stats_json["per_task"].items()) total += count.get<std::size_t>();
  CHECK(total == stats_json["total"].get<std::size_t>());

  // stats recount: the stats file agrees with a rescan of the dataset
  std::map<std::string, std::size_t> recount;
  for (const auto& line : read_jsonl(out)) {
    REQUIRE_FALSE(line.value.is_discarded());
    ++recount[to_string(qa_from_json(line.value).task)];
  }
  for (const auto& [task, count] : stats_json["per_task"].items())
    CHECK(recount[task] == count.get<std::size_t>());
}

TEST_CASE("generate: empty scene directory fails without output") {
  const fs::path dir = scratch();
  const fs::path empty = dir / "empty_scenes";
  fs::create_directories(empty);
  const fs::path out = dir / "never.jsonl";
  fs::remove(out);
  CHECK(run("generate --scenes " + empty.string() + " --out " + out.string()) == 1);
  CHECK_FALSE(fs::exists(out));
}

TEST_CASE("generate: same seed is byte-identical, different seed is not") {
  const fs::path dir = scratch();
  const fs::path a = dir / "a.jsonl";
  const fs::path b = dir / "b.jsonl";
  const fs::path c = dir / "c.jsonl";
  const std::string base = "generate --scenes " + kFixtures + "/scenes --out ";
  REQUIRE(run(base + a.string() + " --seed 99") == 0);
  REQUIRE(run(base + b.string() + " --seed 99") == 0);
  REQUIRE(run(base + c.string() + " --seed 100") == 0);
  CHECK(slurp(a) == slurp(b));
  CHECK(slurp(a) != slurp(c));
}

TEST_CASE("score: golden fixture reproduces the hand-computed mean") {
  const fs::path dir = scratch();
  const fs::path out = dir / "scores.jsonl";
  REQUIRE(run("score --dataset " + kFixtures + "/golden/golden_dataset.jsonl --responses " +
              kFixtures + "/golden/golden_responses.jsonl --out " + out.string()) == 0);

  double total = 0.0;
  std::size_t n = 0;
  for (const auto& line : read_jsonl(out)) {
    REQUIRE_FALSE(line.value.is_discarded());
    total += line.value["r_total"].get<double>();
    ++n;
  }
  REQUIRE(n == 10);
  const double expected = (12.1 + 4.0 / 3.0 + 1.0 + std::exp(-1.0)) / 10.0;
  CHECK(total / 10.0 == Catch::Approx(expected).margin(1e-12));
}

TEST_CASE("score: empty responses fail, malformed lines are flagged but scored") {
  const fs::path dir = scratch();
  const fs::path empty = dir / "empty_responses.jsonl";
  std::ofstream(empty.string()).close();
  const fs::path out = dir / "never_scores.jsonl";
  fs::remove(out);
  CHECK(run("score --dataset " + kFixtures + "/golden/golden_dataset.jsonl --responses " +
            empty.string() + " --out " + out.string()) == 1);
  CHECK_FALSE(fs::exists(out));

  const fs::path mixed = dir / "mixed_responses.jsonl";
  {
    std::ofstream f(mixed.string());
    f << R"({"qa_id": "g01", "response_text": "<think>x</think><answer>B</answer>"})" << "\n";
    f << "this is not json\n";
    f << R"({"qa_id": "g02"})" << "\n";  // missing response_text
  }
  const fs::path mixed_out = dir / "mixed_scores.jsonl";
  CHECK(run("score --dataset " + kFixtures + "/golden/golden_dataset.jsonl --responses " +
            mixed.string() + " --out " + mixed_out.string()) == 0);
  const auto rows = read_jsonl(mixed_out);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].value["r_total"].get<double>() == 2.0);
  CHECK(rows[1].value["malformed"].get<bool>());
  CHECK(rows[1].value["r_total"].get<double>() == 0.0);
  CHECK(rows[2].value["malformed"].get<bool>());
}

TEST_CASE("score: unknown qa_id fails and lists the offender") {
  const fs::path dir = scratch();
  const fs::path bad = dir / "bad_responses.jsonl";
  {
    std::ofstream f(bad.string());
    f << R"({"qa_id": "nope-123", "response_text": "<answer>A</answer>"})" << "\n";
  }
  const fs::path out = dir / "never2.jsonl";
  fs::remove(out);
  const std::string cmd = kCli + " score --dataset " + kFixtures +
                          "/golden/golden_dataset.jsonl --responses " + bad.string() + " --out " +
                          out.string() + " 2> " + (dir / "err.txt").string();
  CHECK(WEXITSTATUS(std::system(cmd.c_str())) == 1);
  CHECK_FALSE(fs::exists(out));
  CHECK(slurp(dir / "err.txt").find("nope-123") != std::string::npos);
}

TEST_CASE("train-toy: trace rows equal iterations; seed changes the trace; lr=0 is flat") {
  const fs::path dir = scratch();
  const fs::path ds = dir / "train_ds.jsonl";
  REQUIRE(run("generate --scenes " + kFixtures + "/scenes --out " + ds.string() + " --seed 5") == 0);

  const fs::path t1 = dir / "t1.csv";
  const fs::path t2 = dir / "t2.csv";
  const fs::path t3 = dir / "t3.csv";
  const std::string base = "train-toy --dataset " + ds.string() + " --iterations 40 --trace ";
  REQUIRE(run(base + t1.string() + " --seed 1") == 0);
  REQUIRE(run(base + t2.string() + " --seed 1") == 0);
  REQUIRE(run(base + t3.string() + " --seed 2") == 0);
  CHECK(slurp(t1) == slurp(t2));
  CHECK(slurp(t1) != slurp(t3));

  std::size_t lines = 0;
  std::istringstream stream(slurp(t1));
  for (std::string line; std::getline(stream, line);) ++lines;
  CHECK(lines == 41);  // header + one row per iteration

  const fs::path flat = dir / "flat.csv";
  REQUIRE(run(base + flat.string() + " --seed 1 --learning-rate 0") == 0);
  std::istringstream fstream(slurp(flat));
  std::string header;
  std::getline(fstream, header);
  std::set<std::string> kl_values;
  for (std::string line; std::getline(fstream, line);) {
    const auto first_comma = line.find(',');
    const auto second_comma = line.find(',', first_comma + 1);
    const auto third_comma = line.find(',', second_comma + 1);
    kl_values.insert(line.substr(second_comma + 1, third_comma - second_comma - 1));
  }
  CHECK(kl_values == std::set<std::string>{"0"});
}

TEST_CASE("stats subcommand recounts a dataset") {
  const fs::path dir = scratch();
  const fs::path ds = dir / "stats_ds.jsonl";
  const fs::path direct = dir / "direct_stats.json";
  REQUIRE(run("generate --scenes " + kFixtures + "/scenes --out " + ds.string() + " --stats " +
              direct.string() + " --seed 11") == 0);
  const fs::path recount = dir / "recount_stats.json";
  REQUIRE(run("stats --dataset " + ds.string() + " --out " + recount.string()) == 0);
  CHECK(slurp(direct) == slurp(recount));
}

TEST_CASE("config file is honored and flags take precedence") {
  const fs::path dir = scratch();
  // golden item g04 answers exactly with 402 tokens; move the window around it
  const fs::path cfg = dir / "cfg.json";
  {
    std::ofstream f(cfg.string());
    f << R"({"reward": {"length_window": [400, 403], "omega": 0.5}})";
  }
  const fs::path out = dir / "cfg_scores.jsonl";
  REQUIRE(run("score --config " + cfg.string() + " --dataset " + kFixtures +
              "/golden/golden_dataset.jsonl --responses " + kFixtures +
              "/golden/golden_responses.jsonl --out " + out.string()) == 0);
  for (const auto& line : read_jsonl(out)) {
    if (line.value["qa_id"] == "g04") CHECK(line.value["r_length"].get<double>() == 0.5);
  }

  // flag overrides the file: shrink the window so the bonus disappears
  const fs::path out2 = dir / "cfg_scores2.jsonl";
  REQUIRE(run("score --config " + cfg.string() + " --length-window 1 2 --dataset " + kFixtures +
              "/golden/golden_dataset.jsonl --responses " + kFixtures +
              "/golden/golden_responses.jsonl --out " + out2.string()) == 0);
  for (const auto& line : read_jsonl(out2)) {
    if (line.value["qa_id"] == "g04") CHECK(line.value["r_length"].get<double>() == 0.0);
  }

  // invalid config aborts with a field-level message
  const fs::path broken = dir / "broken.json";
  {
    std::ofstream f(broken.string());
    f << R"({"grpo": {"epsilon": -1}})";
  }
  CHECK(run("stats --config " + broken.string() + " --dataset " + kFixtures +
            "/golden/golden_dataset.jsonl") == 1);
}
