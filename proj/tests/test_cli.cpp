#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "cli.hpp"
#include "goex/coupon.hpp"

namespace fs = std::filesystem;
using namespace goex;
using nlohmann::json;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("goex_cli_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

json small_config(const fs::path& out) {
  return json{{"problem", {{"name", "rastrigin"}, {"N", 2}, {"domain", {-2, 3}}}},
              {"engine", {{"L", 6}, {"T", 12}, {"K", 2}, {"M", 150}, {"mu", 16}}},
              {"seed", 4},
              {"output_dir", out.string()}};
}

fs::path write_config(const fs::path& dir, const json& doc) {
  const fs::path p = dir / "config.json";
  std::ofstream(p) << doc.dump(2);
  return p;
}

int run_quiet(const fs::path& config, const cli::Overrides& o = {}) {
  std::ostringstream out, err;
  return cli::cmd_run(config, o, true, out, err);
}

}  // namespace

TEST_CASE("config parsing") {
  const auto cfg = cli::parse_config(small_config("x"));
  CHECK(cfg.problem.name == "rastrigin");
  CHECK(cfg.engine.num_initial == 12);
  CHECK(cfg.engine.budget == 150);
  CHECK(cfg.engine.seed == 4);
  CHECK(cfg.output_dir == "x");

  json no_t = small_config("x");
  no_t["engine"].erase("T");
  no_t["engine"]["L"] = 15;
  CHECK(cli::parse_config(no_t).engine.num_initial == default_initial_states(15));

  json unknown = small_config("x");
  unknown["engine"]["bogus"] = 1;
  CHECK_THROWS_AS(cli::parse_config(unknown), cli::ConfigError);
  json small_budget = small_config("x");
  small_budget["engine"]["M"] = 5;
  CHECK_THROWS_AS(cli::parse_config(small_budget), cli::ConfigError);
  json bad_algo = small_config("x");
  bad_algo["engine"]["algorithm"] = "magic";
  CHECK_THROWS_AS(cli::parse_config(bad_algo), cli::ConfigError);

  // Round trip through the echo form.
  const auto back = cli::parse_config(cli::to_json(cfg));
  CHECK(cli::to_json(back) == cli::to_json(cfg));
}

TEST_CASE("history records round trip") {
  HistoryEntry e;
  e.state = {0.1, -2.5};
  e.cell = CellId{{3, 1}};
  e.birth = 2;
  e.reign = 5;
  e.objective = 1.0 / 3.0;
  const auto rec = cli::history_record(7, e);
  std::vector<std::string> keys;
  for (const auto& [k, v] : rec.items()) keys.push_back(k);
  CHECK(keys == std::vector<std::string>{"index", "state", "cell", "birth", "reign", "objective"});
  const HistoryEntry back = cli::parse_history_record(json::parse(rec.dump()));
  CHECK(back.state == e.state);
  CHECK(back.cell == e.cell);
  CHECK(back.birth == e.birth);
  CHECK(back.reign == e.reign);
  CHECK(back.objective == e.objective);
}

TEST_CASE("run writes its outputs deterministically") {
  const fs::path dir = scratch("run");
  const fs::path a = dir / "a", b = dir / "b";
  const fs::path config = write_config(dir, small_config(a));
  REQUIRE(run_quiet(config) == cli::kOk);
  cli::Overrides o;
  o.output_dir = b.string();
  o.workers = 3;
  REQUIRE(run_quiet(config, o) == cli::kOk);
  for (const char* f : {"history.jsonl", "landmarks.json", "config.echo.json", "run_manifest.json"}) {
    CHECK(fs::exists(a / f));
  }
  CHECK(slurp(a / "history.jsonl") == slurp(b / "history.jsonl"));
  CHECK(slurp(a / "landmarks.json") == slurp(b / "landmarks.json"));
  const auto history = cli::read_history(a / "history.jsonl");
  CHECK(history.size() == 150);
  const json manifest = json::parse(slurp(a / "run_manifest.json"));
  CHECK(manifest["evaluations"] == 150);
  CHECK(manifest["seed"] == 4);

  o.seed = 5;
  o.output_dir = (dir / "c").string();
  REQUIRE(run_quiet(config, o) == cli::kOk);
  CHECK(slurp(a / "history.jsonl") != slurp(dir / "c" / "history.jsonl"));
}

TEST_CASE("run rejects bad configs") {
  const fs::path dir = scratch("bad");
  json doc = small_config(dir / "out");
  doc["engine"]["M"] = 3;
  std::ostringstream out, err;
  CHECK(cli::cmd_run(write_config(dir, doc), {}, true, out, err) == cli::kConfigError);
  CHECK(err.str().find("M must be >= T") != std::string::npos);
  CHECK(run_quiet(dir / "missing.json") == cli::kConfigError);
  cli::Overrides o;
  o.L = 1;
  o.K = 2;
  CHECK(run_quiet(write_config(dir, small_config(dir / "out")), o) == cli::kConfigError);
}

TEST_CASE("score output") {
  const fs::path dir = scratch("score");
  const fs::path full = dir / "full", base = dir / "base";
  const fs::path config = write_config(dir, small_config(full));
  REQUIRE(run_quiet(config) == cli::kOk);
  cli::Overrides o;
  o.output_dir = base.string();
  o.algorithm = "baseline";
  REQUIRE(run_quiet(config, o) == cli::kOk);

  std::ostringstream out, err;
  REQUIRE(cli::cmd_score({full}, {}, out, err) == cli::kOk);
  const std::string first = slurp(full / "scores.csv");
  REQUIRE(cli::cmd_score({full}, {}, out, err) == cli::kOk);
  CHECK(slurp(full / "scores.csv") == first);

  const json manifest = json::parse(slurp(full / "run_manifest.json"));
  std::istringstream rows(first);
  std::string line;
  std::getline(rows, line);
  CHECK(line == "epoch,num_evals,qd,wqd,magnitude");
  int count = 0;
  while (std::getline(rows, line)) ++count;
  CHECK(count == manifest["epochs"].get<int>());
  CHECK(out.str().empty());

  std::ostringstream summary;
  cli::ScoreOptions shared;
  shared.shared_bounds = true;
  REQUIRE(cli::cmd_score({full, base}, shared, summary, err) == cli::kOk);
  CHECK(summary.str().rfind("algorithm,runs,qd_mean,qd_sd,wqd_mean,wqd_sd\n", 0) == 0);
  CHECK(summary.str().find("baseline,1,") != std::string::npos);
  CHECK(summary.str().find("full,1,") != std::string::npos);

  CHECK(cli::cmd_score({dir / "nothing"}, {}, out, err) != cli::kOk);
}

TEST_CASE("distribution parsing") {
  CHECK(cli::parse_distribution("uniform", 4) == std::vector<double>(4, 0.25));
  const auto z = cli::parse_distribution("zipf:1", 3);
  CHECK(z[0] == doctest::Approx(6.0 / 11.0));
  CHECK(z[2] == doctest::Approx(2.0 / 11.0));
  const auto g = cli::parse_distribution("geometric:0.5", 2);
  CHECK(g[0] == doctest::Approx(2.0 / 3.0));
  CHECK(cli::parse_distribution("explicit:1,3", 0) == std::vector<double>{0.25, 0.75});
  CHECK_THROWS_AS(cli::parse_distribution("explicit:1,3", 3), cli::ConfigError);
  CHECK_THROWS_AS(cli::parse_distribution("pareto:2", 3), cli::ConfigError);
}

TEST_CASE("bounds command") {
  std::ostringstream out, err;
  REQUIRE(cli::cmd_bounds(16, 8, 16, "uniform", true, out, err) == cli::kOk);
  const json sweep = json::parse(out.str());
  REQUIRE(sweep.size() == 16);
  for (std::size_t m = 1; m <= 16; ++m) {
    const json& row = sweep[m - 1];
    CHECK(row["m"] == m);
    CHECK(row["lower"].get<double>() == doctest::Approx(harmonic_lower_bound(16, m)));
    CHECK(row["harmonic"].get<double>() == doctest::Approx(harmonic_lower_bound(16, m)));
    CHECK(row.contains("exact"));
  }
  std::ostringstream big;
  REQUIRE(cli::cmd_bounds(20, 10, 16, "zipf:1", false, big, err) == cli::kOk);
  CHECK_FALSE(json::parse(big.str()).contains("exact"));
  std::ostringstream bad;
  CHECK(cli::cmd_bounds(4, 9, 4, "uniform", false, bad, err) == cli::kConfigError);
}

TEST_CASE("binary exit codes") {
  const char* bin = std::getenv("GOEX_BIN");
  if (bin == nullptr) return;
  const fs::path dir = scratch("bin");
  json doc = small_config(dir / "out");
  doc["engine"]["M"] = 3;
  const fs::path config = write_config(dir, doc);
  auto status = [&](const std::string& args) {
    const int raw = std::system((std::string(bin) + " " + args + " > /dev/null 2>&1").c_str());
    return WEXITSTATUS(raw);
  };
  CHECK(status("--version") == 0);
  CHECK(status("run " + config.string()) == cli::kConfigError);
  CHECK(status("frobnicate") == cli::kUsage);
  CHECK(status("bounds --n 8 --m 4") == cli::kOk);
}
