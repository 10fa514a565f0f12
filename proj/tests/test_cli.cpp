#include <gtest/gtest.h>
#include <sys/wait.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "vinenav/config.hpp"

#ifndef VINENAV_CLI_PATH
#error "VINENAV_CLI_PATH must point at the vinenav executable"
#endif

namespace fs = std::filesystem;
using namespace vinenav;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = fs::temp_directory_path() / "vinenav_test_cli";
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    // Small camera and short episodes keep training runs to seconds.
    const json tiny = {{"env", {{"camera", {{"width", 16}, {"height", 16}}}, {"episode", {{"max_steps", 15}}}}},
                       {"sac", {{"warmup_steps", 10}, {"batch_size", 4}, {"checkpoint_every", 1}}},
                       {"eval", {{"runs_per_row", 2}, {"sweep_runs", 2}, {"swap_runs", 2}}}};
    write_json(tiny, (dir_ / "tiny.json").string());
  }

  /// Runs the CLI in the scratch directory; returns its exit status.
  static int run(const std::string& args, const std::string& env = "") {
    const std::string cmd = "cd '" + dir_.string() + "' && " + env + " '" + VINENAV_CLI_PATH + "' " + args +
                            " > last.out 2> last.err";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  static std::string last_out() { return slurp(dir_ / "last.out"); }
  static fs::path path(const std::string& p) { return dir_ / p; }

  static void ensure_worlds() {
    if (!fs::exists(path("train.world"))) {
      ASSERT_EQ(run("gen-world --preset train --seed 7 -o train.world"), 0);
    }
    if (!fs::exists(path("test.world"))) {
      ASSERT_EQ(run("gen-world --preset test --seed 7 -o test.world"), 0);
    }
  }

  static void ensure_checkpoint() {
    ensure_worlds();
    if (!fs::exists(path("t1/final.ckpt"))) {
      ASSERT_EQ(run("train --config tiny.json --world train.world --episodes 2 --seed 3 --out t1"), 0);
    }
  }

  static inline fs::path dir_;
};

}  // namespace

TEST_F(Cli, HelpAndUsageErrors) {
  EXPECT_EQ(run("--help"), 0);
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("fly"), 2);
  EXPECT_EQ(run("gen-world --preset moon -o x.world"), 2);
  EXPECT_EQ(run("bench --trials 0"), 2);
}

TEST_F(Cli, GenWorldReloadIsBitIdentical) {
  ensure_worlds();
  const VineyardWorld w = load_world(path("train.world").string());
  save_world(w, path("resaved.world").string());
  EXPECT_EQ(slurp(path("train.world")), slurp(path("resaved.world")));
  EXPECT_EQ(w.seed(), 7u);
  EXPECT_NE(last_out().find("corridor"), std::string::npos);
}

TEST_F(Cli, GenWorldTestPresetHasLabeledCorridors) {
  ensure_worlds();
  const VineyardWorld w = load_world(path("test.world").string());
  EXPECT_EQ(w.corridor_count(), 5u);
  EXPECT_EQ(w.corridor_labels(), (std::vector<std::string>{"straight", "straight", "hybrid", "curved", "curved"}));
}

TEST_F(Cli, GenWorldConflictingFlagsAreUsageErrors) {
  ensure_worlds();
  write_json(json(train_world_config()), path("wc.json").string());
  EXPECT_EQ(run("gen-world --preset test --world-config wc.json -o x.world"), 2);
  EXPECT_FALSE(fs::exists(path("x.world")));
  EXPECT_EQ(run("gen-world --world-config wc.json --seed 2 -o custom.world"), 0);
  EXPECT_EQ(load_world(path("custom.world").string()).rows().size(), 6u);
}

TEST_F(Cli, GenWorldReproducesFromSnapshot) {
  ensure_worlds();
  ASSERT_EQ(run("gen-world --config test.world.config.json -o again.world"), 0);
  EXPECT_EQ(slurp(path("test.world")), slurp(path("again.world")));
}

TEST_F(Cli, TrainWritesLogCheckpointsAndSnapshot) {
  ensure_checkpoint();
  std::ifstream log(path("t1/train.jsonl"));
  int lines = 0;
  for (std::string line; std::getline(log, line); ++lines) EXPECT_EQ(json::parse(line)["episode"], lines);
  EXPECT_EQ(lines, 2);
  EXPECT_TRUE(fs::exists(path("t1/checkpoints/ep00001.ckpt")));
  EXPECT_TRUE(fs::exists(path("t1/checkpoints/ep00002.ckpt")));
  EXPECT_EQ(slurp(path("t1/checkpoints/ep00002.ckpt")), slurp(path("t1/final.ckpt")));
  const json snap = read_json(path("t1/config.json").string());
  EXPECT_EQ(snap["seed"], 3);
  EXPECT_EQ(snap["sac"]["episodes"], 2);
  const json prov = read_json(path("t1/provenance.json").string());
  EXPECT_EQ(prov["sac.episodes"], "flag");
  EXPECT_EQ(prov["sac.batch_size"], "file");
  EXPECT_EQ(prov["sac.gamma"], "default");
}

TEST_F(Cli, TrainRerunsIdentically) {
  ensure_checkpoint();
  ASSERT_EQ(run("train --config tiny.json --world train.world --episodes 2 --seed 3 --out t2"), 0);
  EXPECT_EQ(slurp(path("t1/train.jsonl")), slurp(path("t2/train.jsonl")));
  ASSERT_EQ(run("train --config t1/config.json --out t3"), 0);
  for (const char* f : {"train.jsonl", "final.ckpt", "config.json"}) EXPECT_EQ(slurp(path("t1") / f), slurp(path("t3") / f)) << f;
}

TEST_F(Cli, TrainNeedsAWorld) {
  EXPECT_EQ(run("train --config tiny.json --episodes 1 --out nt"), 2);
  EXPECT_EQ(run("train --world missing.world --episodes 1"), 2);
}

TEST_F(Cli, DivergenceHasItsOwnExitCode) {
  ensure_worlds();
  write_json(json{{"env", {{"camera", {{"width", 16}, {"height", 16}}}, {"episode", {{"max_steps", 15}}}}},
                  {"sac", {{"warmup_steps", 5}, {"batch_size", 4}, {"critic_loss_ceiling", 1e-12}, {"divergence_patience", 1}}}},
             path("div.json").string());
  EXPECT_EQ(run("train --config div.json --world train.world --episodes 1 --out div"), 3);
}

TEST_F(Cli, EvalTableAndReports) {
  ensure_checkpoint();
  ASSERT_EQ(run("eval --config tiny.json --world test.world --checkpoint t1/final.ckpt --runs-per-row 2 --seed 4 "
                "--out e1 --workers 2"),
            0);
  const std::string table = slurp(path("e1/table.txt"));
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 13);
  EXPECT_NE(table.find("Overall"), std::string::npos);
  EXPECT_EQ(last_out(), table);
  EXPECT_EQ(read_json(path("e1/report.json").string())["rows"].size(), 11u);
  int csvs = 0;
  for (const auto& entry : fs::directory_iterator(path("e1/trajectories"))) csvs += entry.path().extension() == ".csv";
  EXPECT_EQ(csvs, 10);
}

TEST_F(Cli, EvalRerunFromSnapshotIsBitIdentical) {
  ensure_checkpoint();
  ASSERT_EQ(run("eval --config tiny.json --world test.world --checkpoint t1/final.ckpt --seed 4 --out e2"), 0);
  ASSERT_EQ(run("eval --config e2/config.json --out e3", "VINENAV_WORKERS=3"), 0);
  for (const char* f : {"config.json", "report.json", "table.txt", "trajectories/row4_R_00.csv"})
    EXPECT_EQ(slurp(path("e2") / f), slurp(path("e3") / f)) << f;
}

TEST_F(Cli, ArchitectureMismatchHasItsOwnExitCode) {
  ensure_checkpoint();
  // Default 112 px camera against a checkpoint trained at 16 px.
  EXPECT_EQ(run("eval --world test.world --checkpoint t1/final.ckpt --out mm"), 4);
  EXPECT_EQ(run("eval --config tiny.json --world test.world --out nock"), 2);
}

TEST_F(Cli, SweepSwapAndBench) {
  ensure_checkpoint();
  ASSERT_EQ(run("sweep-noise --config tiny.json --world test.world --checkpoint t1/final.ckpt --factors 2,4 --runs 2 "
                "--out sw"),
            0);
  EXPECT_EQ(read_json(path("sw/report.json").string())["rows"].size(), 4u);
  EXPECT_TRUE(fs::exists(path("sw/trajectories/factor_4/row4_R_01.csv")));
  EXPECT_EQ(read_json(path("sw/config.json").string())["eval"]["noise_factors"], json({2.0, 4.0}));

  ASSERT_EQ(run("swap-platform --config tiny.json --world test.world --checkpoint t1/final.ckpt "
                "--platforms jackal,husky --out sp"),
            0);
  const std::string table = slurp(path("sp/table.txt"));
  EXPECT_NE(table.find("husky"), std::string::npos);
  EXPECT_NE(table.find("T_avg"), std::string::npos);
  EXPECT_EQ(run("swap-platform --config tiny.json --world test.world --checkpoint t1/final.ckpt --platforms tank"), 2);

  ASSERT_EQ(run("bench --config tiny.json --checkpoint t1/final.ckpt --trials 5", "VINENAV_OUTPUT_ROOT=root"), 0);
  const json bench = read_json(path("root/bench/report.json").string());
  EXPECT_EQ(bench["trials"], 5);
  EXPECT_GE(bench["std_ms"].get<double>(), 0.0);
  EXPECT_NE(last_out().find("+-"), std::string::npos);
}

TEST_F(Cli, BadWorkerOverrideIsAUsageError) {
  ensure_checkpoint();
  EXPECT_EQ(run("eval --config tiny.json --world test.world --checkpoint t1/final.ckpt --out bw", "VINENAV_WORKERS=zero"), 2);
}

TEST_F(Cli, FiveEpisodeSmokeRunUnderAMinute) {
  ensure_worlds();
  const auto t0 = std::chrono::steady_clock::now();
  ASSERT_EQ(run("train --world train.world --episodes 5 --seed 1 --out smoke"), 0);
  EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), 60.0);
  EXPECT_TRUE(fs::exists(path("smoke/final.ckpt")));
}
