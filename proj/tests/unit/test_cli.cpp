#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Scratch {
  fs::path path;
  Scratch() {
    std::string tmpl = (fs::temp_directory_path() / "convohate-cli-XXXXXX").string();
    REQUIRE(mkdtemp(tmpl.data()) != nullptr);
    path = tmpl;
  }
  ~Scratch() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

// Runs the CLI with stdout and stderr captured into `log`.
int run(const std::string& args, const fs::path& log) {
  const std::string cmd =
      std::string("\"") + CONVOHATE_CLI + "\" " + args + " >\"" + log.string() + "\" 2>&1";
  const int raw = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(raw));
  return WEXITSTATUS(raw);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void save(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

}  // namespace

TEST_CASE("usage errors exit with 2") {
  Scratch dir;
  const auto log = dir.path / "log.txt";
  CHECK(run("", log) == 2);
  CHECK(run("frobnicate", log) == 2);
  CHECK(run("prepare --bogus", log) == 2);
  CHECK(run("prepare", log) == 2);
  CHECK(run("prepare --config " + (dir.path / "absent.conf").string(), log) == 2);
  CHECK(run("ensemble --config x --methods median", log) == 2);
  CHECK(run("--help", log) == 0);
  CHECK(slurp(log).find("reproduce") != std::string::npos);
}

TEST_CASE("a config naming a missing corpus exits with 2") {
  Scratch dir;
  save(dir.path / "bad.conf", "corpus.train = nowhere.json\nworkdir = w\nmodels = a\n");
  const auto log = dir.path / "log.txt";
  CHECK(run("prepare --config " + (dir.path / "bad.conf").string(), log) == 2);
  CHECK(slurp(log).find("nowhere.json") != std::string::npos);
}

TEST_CASE("synth then staged run then reproduce") {
  Scratch dir;
  const auto log = dir.path / "log.txt";
  REQUIRE(run("synth --out " + (dir.path / "train.json").string() + " --csv-out " +
                  (dir.path / "train.csv").string(),
              log) == 0);
  REQUIRE(fs::exists(dir.path / "train.json"));
  CHECK(slurp(dir.path / "train.csv").rfind("chain_id,", 0) == 0);
  save(dir.path / "exp.conf",
       "corpus.train = train.json\nworkdir = work\nmodels = a, b, c\n"
       "model.a.learning_rate = 0.01\nmodel.b.learning_rate = 0.01\nmodel.c.learning_rate = 0.01\n"
       "model.b.encoder.seed = 2\nmodel.c.encoder.seed = 3\n");
  const std::string conf = " --config " + (dir.path / "exp.conf").string();

  CHECK(run("train" + conf, log) == 1);
  CHECK(slurp(log).find("prepare") != std::string::npos);

  for (const char* stage : {"prepare", "train", "predict", "ensemble", "evaluate", "report"}) {
    INFO(stage);
    CHECK(run(std::string(stage) + conf, log) == 0);
  }
  const std::string staged = slurp(dir.path / "work" / "predictions" / "val" / "ensemble-soft.tsv");
  CHECK_FALSE(staged.empty());
  CHECK(slurp(dir.path / "work" / "report" / "val" / "report.txt").find("ensemble-hard") != std::string::npos);

  CHECK(run("reproduce" + conf + " --workdir " + (dir.path / "other").string(), log) == 0);
  CHECK(slurp(dir.path / "other" / "predictions" / "val" / "ensemble-soft.tsv") == staged);

  CHECK(run("predict" + conf + " --seed 5", log) == 1);
  CHECK(slurp(log).find("stale") != std::string::npos);

  CHECK(run("ensemble" + conf + " --models a,b --methods hard", log) == 2);
  CHECK(run("report" + conf + " --figures", log) == 0);
  CHECK(fs::exists(dir.path / "work" / "report" / "val" / "macro_f1.svg"));

  fs::create_directories(dir.path / "work");
  save(dir.path / "work" / ".lock", "");
  CHECK(run("evaluate" + conf, log) == 1);
  CHECK(slurp(log).find("lock") != std::string::npos);
}

TEST_CASE("the shipped sample config runs end to end") {
  Scratch dir;
  const auto log = dir.path / "log.txt";
  const fs::path conf = fs::path(CONVOHATE_CONFIGS) / "synthetic.conf";
  CHECK(run("reproduce --config " + conf.string() + " --workdir " + (dir.path / "w").string(), log) == 0);
  CHECK(fs::exists(dir.path / "w" / "report" / "test" / "report.json"));
}
