#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "stablerules/csv.hpp"
#include "stablerules/mining.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::string g_cli;
fs::path g_dir;

int run(const std::string& args, const std::string& env = "") {
  const std::string cmd = "cd " + g_dir.string() + " && " + env + " " + g_cli + " " + args +
                          " >cli_stdout.txt 2>cli_stderr.txt";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& name) {
  std::ifstream in(g_dir / name, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const std::string& name, const std::string& text) {
  std::ofstream out(g_dir / name, std::ios::binary);
  out << text;
}

}  // namespace

TEST_CASE("synth writes data plus a sidecar and is deterministic") {
  REQUIRE(run("synth --env nonlinear --n 50 --p 6 --seed 7 --out d.csv") == 0);
  CHECK(fs::exists(g_dir / "d.csv"));
  CHECK(fs::exists(g_dir / "d.json"));
  const json side = json::parse(slurp("d.json"));
  CHECK(side["config"]["seed"] == 7);
  CHECK(side["config"]["env"] == "nonlinear");
  const std::string first = slurp("d.csv");
  const stablerules::CsvTable t = stablerules::parse_csv(first);
  CHECK(t.rows.size() == 50);
  CHECK(t.header.back() == "Y");
  CHECK(t.header.front() == "S_0");

  REQUIRE(run("synth --env nonlinear --n 50 --p 6 --seed 7 --out d2.csv") == 0);
  CHECK(first == slurp("d2.csv"));
}

TEST_CASE("unknown flags exit 1 with a synopsis on stderr") {
  CHECK(run("synth --frobnicate 3 --out x.csv") == 1);
  const std::string err = slurp("cli_stderr.txt");
  CHECK(err.find("--frobnicate") != std::string::npos);
  CHECK(err.find("help") != std::string::npos);
}

TEST_CASE("biased synth keeps the requested row count") {
  REQUIRE(run("synth --env linear --n 40 --p 5 --seed 3 --bias-r 2.5 --pool-factor 5 "
              "--out b.csv") == 0);
  const stablerules::CsvTable t = stablerules::parse_csv(slurp("b.csv"));
  CHECK(t.rows.size() == 40);
}

TEST_CASE("config file fills defaults and CLI flags win") {
  spit("cfg.json", "{\"gamma\": 800.0}\n");
  REQUIRE(run("synth --n 30 --p 5 --seed 1 --out c0.csv") == 0);

  // gamma comes from the file when the flag is absent
  REQUIRE(run("--config cfg.json decorrelate --data c0.csv --max-iters 5 --out w0.csv") == 3);
  json side = json::parse(slurp("w0.json"));
  CHECK(side["config"]["gamma"] == 800.0);

  // an explicit flag beats the file
  REQUIRE(run("--config cfg.json decorrelate --data c0.csv --gamma 600 --max-iters 5 "
              "--out w1.csv") == 3);
  side = json::parse(slurp("w1.json"));
  CHECK(side["config"]["gamma"] == 600.0);

  // empty config file keeps every default
  spit("empty.json", "\n");
  REQUIRE(run("--config empty.json decorrelate --data c0.csv --max-iters 5 --out w2.csv") == 3);
  side = json::parse(slurp("w2.json"));
  CHECK(side["config"]["gamma"] == 600.0);

  // unknown keys are typos
  spit("typo.json", "{\"gama\": 600.0}\n");
  CHECK(run("--config typo.json decorrelate --data c0.csv --max-iters 5 --out w3.csv") == 1);
  CHECK(slurp("cli_stderr.txt").find("gama") != std::string::npos);
}

TEST_CASE("decorrelate emits a weight per sample") {
  REQUIRE(run("synth --n 60 --p 4 --seed 11 --out dd.csv") == 0);
  const int status = run("decorrelate --data dd.csv --max-iters 400 --out ww.csv");
  CHECK((status == 0 || status == 3));  // non-convergence still writes results
  const stablerules::CsvTable t = stablerules::parse_csv(slurp("ww.csv"));
  CHECK(t.header == std::vector<std::string>{"weight"});
  CHECK(t.rows.size() == 60);
}

TEST_CASE("train and evaluate round trip") {
  REQUIRE(run("synth --n 120 --p 5 --seed 5 --out tr.csv") == 0);
  REQUIRE(run("train --model ols --data tr.csv --out m.json") == 0);
  const json model = json::parse(slurp("m.json"));
  CHECK(model["kind"] == "ols");
  CHECK(model["beta"].size() == 5);
  CHECK(model["training_meta"]["n"] == 120);

  REQUIRE(run("evaluate --model m.json --data tr.csv --task regression --out met.json") == 0);
  const json met = json::parse(slurp("met.json"));
  CHECK(met["rmse"].get<double>() >= 0.0);
  CHECK(met["rmse"].get<double>() < 10.0);
}

TEST_CASE("weighted training consumes a weight file") {
  REQUIRE(run("synth --n 80 --p 4 --seed 9 --out wd.csv") == 0);
  std::string weights = "weight\n";
  for (int i = 0; i < 80; ++i) weights += "1.0\n";
  spit("uw.csv", weights);
  REQUIRE(run("train --model wsvr --data wd.csv --weights uw.csv --C 0.5 --out wm.json") == 0);
  const json model = json::parse(slurp("wm.json"));
  CHECK(model["kind"] == "wsvr");
}

TEST_CASE("spearman over supplied rating files") {
  spit("a.csv", "score\n1\n2\n3\n4\n");
  spit("b.csv", "score\n1\n3\n2\n4\n");
  REQUIRE(run("evaluate --task spearman --scores-a a.csv --scores-b b.csv --out s.json") == 0);
  const json s = json::parse(slurp("s.json"));
  CHECK(s["spearman"].get<double>() == doctest::Approx(0.8));
}

TEST_CASE("mine and select run on a one-hot csv") {
  // A marks the positive class, B mostly marks the negative class
  std::string csv = "A,B,C,Y\n";
  for (int i = 0; i < 40; ++i) {
    const bool pos = i % 2 == 0;
    const bool b = pos ? (i % 10 == 0) : (i % 5 != 4);
    csv += std::string(pos ? "1" : "0") + "," + (b ? "1" : "0") + ",0," +
           (pos ? "+1" : "-1") + "\n";
  }
  spit("mine.csv", csv);
  REQUIRE(run("mine --data mine.csv --min-support 0.2 --min-confidence 0.6 "
              "--out rules.txt") == 0);
  const auto rules = stablerules::rules_from_text(slurp("rules.txt"));
  CHECK(rules.size() >= 2);
  const json side = json::parse(slurp("rules.json"));
  CHECK(side["rules"].size() == rules.size());

  REQUIRE(run("select --data mine.csv --rules rules.txt --lambda2 1 --seed 3 "
              "--out selected.txt") == 0);
  const auto kept = stablerules::rules_from_text(slurp("selected.txt"));
  CHECK(kept.size() >= 1);
  CHECK(kept.size() <= rules.size());
  const json prov = json::parse(slurp("selected.json"));
  CHECK(prov.contains("history"));
}

TEST_CASE("STABLERULES_SEED overrides the base seed") {
  REQUIRE(run("synth --n 30 --p 5 --seed 1 --out e1.csv", "STABLERULES_SEED=99") == 0);
  const json side = json::parse(slurp("e1.json"));
  CHECK(side["config"]["seed"] == 99);
  REQUIRE(run("synth --n 30 --p 5 --seed 99 --out e2.csv") == 0);
  CHECK(slurp("e1.csv") == slurp("e2.csv"));
}

TEST_CASE("reproduce-table1 writes the per-method report deterministically") {
  const std::string args =
      "reproduce-table1 --n 120 --m 6 --repeats 2 --seed 4 --no-rmse --jobs 2 --out t1.csv";
  REQUIRE(run(args) == 0);
  const std::string first = slurp("t1.csv");
  const stablerules::CsvTable t = stablerules::parse_csv(first);
  CHECK(t.rows.size() == 7);  // one row per method
  CHECK(t.header[0] == "env");
  REQUIRE(run("reproduce-table1 --n 120 --m 6 --repeats 2 --seed 4 --no-rmse --jobs 2 "
              "--out t1b.csv") == 0);
  CHECK(first == slurp("t1b.csv"));
  const json side = json::parse(slurp("t1.json"));
  CHECK(side["report"]["cells"][0]["methods"].size() == 7);
}

int main(int argc, char** argv) {
  doctest::Context context;
  for (int i = 1; i < argc; ++i) {
    if (std::string(argv[i]) == "--cli" && i + 1 < argc) g_cli = argv[i + 1];
    if (g_cli.empty() && argv[i][0] != '-') g_cli = argv[i];
  }
  if (g_cli.empty()) {
    std::fprintf(stderr, "usage: test_cli <path-to-cli>\n");
    return 1;
  }
  g_cli = fs::absolute(g_cli).string();
  g_dir = fs::temp_directory_path() / "stablerules_cli_test";
  fs::remove_all(g_dir);
  fs::create_directories(g_dir);
  context.applyCommandLine(1, argv);
  const int rc = context.run();
  fs::remove_all(g_dir);
  return rc;
}
