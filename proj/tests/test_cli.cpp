#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "testutil.hpp"

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string output;
};

std::string binary() {
  const char* bin = std::getenv("DIFFPLAN_BIN");
  REQUIRE(bin != nullptr);
  return bin;
}

RunResult run(const std::string& args) {
  const std::string cmd = binary() + " " + args + " 2>&1";
  std::array<char, 4096> chunk{};
  RunResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  while (std::fgets(chunk.data(), chunk.size(), pipe))
    r.output += chunk.data();
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string data(const std::string& name) {
  return diffplan::testutil::data_path(name);
}

const std::string kTaskFlags =
    " --term-depth 3 --max-subs 200000 --max-atoms 200000";

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("diffplan_cli_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static inline int counter = 0;
};

}  // namespace

TEST_CASE("parse validates and reprints programs; bad files exit 1") {
  auto ok = run("parse " + data("doorkey.lp") + " --print");
  CHECK(ok.exit_code == 0);
  CHECK(ok.output.find("clauses=4") != std::string::npos);
  CHECK(ok.output.find("reach_goal :- go_through_door, go_to_goal.") !=
        std::string::npos);

  auto missing = run("parse /tmp/definitely_not_a_file.lp");
  CHECK(missing.exit_code == 1);

  TempDir tmp;
  std::ofstream(tmp.path / "bad.lp") << "pred p/1 [obj]\nq(a).\n";
  auto bad = run("parse " + (tmp.path / "bad.lp").string());
  CHECK(bad.exit_code == 1);
  CHECK(bad.output.find("error") != std::string::npos);
}

TEST_CASE("ground reports tensor dimensions and dumps CSVs") {
  auto r = run("ground " + data("loop.lp"));
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("G=8 S=1 L=2 C=4") != std::string::npos);

  TempDir tmp;
  const auto table_csv = (tmp.path / "table.csv").string();
  const auto enc_csv = (tmp.path / "enc.csv").string();
  auto dump = run("ground " + data("loop.lp") + " --dump-table " + table_csv +
                  " --dump-encoding " + enc_csv);
  CHECK(dump.exit_code == 0);
  const auto table = diffplan::testutil::slurp(table_csv);
  CHECK(table.find("0,false") != std::string::npos);
  CHECK(table.find("1,true") != std::string::npos);
  const auto enc = diffplan::testutil::slurp(enc_csv);
  CHECK(enc.find("clause_id,j,k,l,atom_index") != std::string::npos);
}

TEST_CASE("infer answers queries; reserved atoms behave; missing files fail") {
  // Default weights emulate the whole program.
  auto r = run("infer " + data("search_task1.lp") + " --query 'plan(a,h)'" +
               kTaskFlags + " --steps 3");
  CHECK(r.exit_code == 0);
  CHECK(std::stod(r.output) >= 0.99);

  auto t = run("infer " + data("loop.lp") + " --query true --steps 1");
  CHECK(t.exit_code == 0);
  CHECK(std::stod(t.output) == 1.0);
  auto f = run("infer " + data("loop.lp") + " --query false --steps 1");
  CHECK(std::stod(f.output) == 0.0);

  auto missing = run("infer /tmp/nope.lp --query 'x'");
  CHECK(missing.exit_code == 1);
  CHECK(missing.output.find("error") != std::string::npos);
}

TEST_CASE("learn-planner writes loss traces, weights, and a manifest per seed") {
  TempDir tmp;
  const auto out = (tmp.path / "learn").string();
  auto r = run("learn-planner " + data("search_tasks.cfg") +
               " --steps 40 --seeds 1,2,3 --out " + out);
  CHECK(r.exit_code == 0);
  for (const char* seed : {"1", "2", "3"}) {
    CHECK(fs::exists(out + "/loss_seed" + std::string(seed) + ".csv"));
    CHECK(fs::exists(out + "/weights_seed" + std::string(seed) + ".csv"));
  }
  const auto trace = diffplan::testutil::slurp(out + "/loss_seed1.csv");
  CHECK(trace.starts_with("step,task_id,loss\n"));
  CHECK(trace.find("\n0,0,") != std::string::npos);
  CHECK(trace.find("\n0,1,") != std::string::npos);
  const auto manifest = diffplan::testutil::slurp(out + "/manifest.txt");
  CHECK(manifest.find("rng = pcg32") != std::string::npos);

  // steps = 0: header-only traces.
  const auto out0 = (tmp.path / "learn0").string();
  auto r0 = run("learn-planner " + data("search_tasks.cfg") +
                " --steps 0 --seeds 1 --out " + out0);
  CHECK(r0.exit_code == 0);
  CHECK(diffplan::testutil::slurp(out0 + "/loss_seed1.csv") ==
        "step,task_id,loss\n");
}

TEST_CASE("plan lists both doorkey plans and picks the scored best") {
  auto r = run("plan " + data("doorkey.lp") +
               " --init initial --goal reach_goal"
               " --distances go_red_key=5,go_open_red_door=5,go_blue_door=2,go_to_goal=2");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("plan 0") != std::string::npos);
  CHECK(r.output.find("plan 1") != std::string::npos);
  CHECK(r.output.find("move(go_blue_door, initial, go_through_door)") !=
        std::string::npos);
  CHECK(r.output.find("best=0") != std::string::npos);
}

TEST_CASE("train produces curves, checkpoints, manifests; eval consumes them") {
  TempDir tmp;
  std::ofstream(tmp.path / "exp.cfg")
      << "[env]\nsize = 8\nvariant = reach_goal\nlayout_seed = 0\n"
      << "[train]\nalgo = ppo\nreward_model = static\ntotal_frames = 1024\n"
      << "seeds = 7\nrules = " << data("doorkey.lp") << "\nlog_rewards = true\n";
  const auto out = (tmp.path / "run").string();
  auto r = run("train " + (tmp.path / "exp.cfg").string() + " --out " + out);
  CHECK(r.exit_code == 0);

  const auto curve_path = out + "/curve_ppo_static_seed7.csv";
  REQUIRE(fs::exists(curve_path));
  const auto curve = diffplan::testutil::slurp(curve_path);
  CHECK(curve.starts_with(
      "frames,update,return_mean,return_min,return_max,policy_loss,"
      "value_loss,entropy\n"));
  // Monotone frame column.
  CHECK(curve.find("\n512,1,") != std::string::npos);
  CHECK(curve.find("\n1024,2,") != std::string::npos);
  CHECK(fs::exists(out + "/manifest.txt"));

  // The reward-breakdown log has the documented columns and some nonzero
  // reasoner entries (the probe rollout runs after 1024 frames of training).
  const auto rewards = diffplan::testutil::slurp(out + "/rewards_ppo_static_seed7.csv");
  CHECK(rewards.starts_with("env_reward,reasoner_reward,adaptive_term,shaped_total\n"));

  auto eval = run("eval --checkpoint " + out + "/policy_ppo_static_seed7.csv" +
                  " --size 8 --variant key_retrieval --episodes 2 --seed 1");
  CHECK(eval.exit_code == 0);
  CHECK(eval.output.find("success_rate=") != std::string::npos);
  CHECK(eval.output.find("episodes=2") != std::string::npos);

  auto planner_eval = run("eval --planner --rules " + data("doorkey.lp") +
                          " --size 8 --variant reach_goal --episodes 3");
  CHECK(planner_eval.exit_code == 0);
  CHECK(planner_eval.output.find("success_rate=100") != std::string::npos);

  auto no_ckpt = run("eval --checkpoint /tmp/nope.csv --size 8");
  CHECK(no_ckpt.exit_code == 2);  // surfaces as an internal read failure
}

TEST_CASE("train rejects malformed config keys by name") {
  TempDir tmp;
  std::ofstream(tmp.path / "exp.cfg")
      << "[env]\nsize = 8\n[train]\nalgo = ppo\nbanana = 3\n";
  auto r = run("train " + (tmp.path / "exp.cfg").string() + " --out " +
               (tmp.path / "o").string());
  CHECK(r.exit_code == 1);
  CHECK(r.output.find("train.banana") != std::string::npos);
}

TEST_CASE("identical seeds reproduce output files bit-exactly") {
  TempDir tmp;
  std::ofstream(tmp.path / "exp.cfg")
      << "[env]\nsize = 8\nvariant = reach_goal\nlayout_seed = 0\n"
      << "[train]\nalgo = a2c\nreward_model = none\ntotal_frames = 1024\n"
      << "seeds = 3\n";
  const auto out1 = (tmp.path / "r1").string();
  const auto out2 = (tmp.path / "r2").string();
  CHECK(run("train " + (tmp.path / "exp.cfg").string() + " --out " + out1).exit_code == 0);
  CHECK(run("train " + (tmp.path / "exp.cfg").string() + " --out " + out2).exit_code == 0);
  CHECK(diffplan::testutil::slurp(out1 + "/curve_a2c_none_seed3.csv") ==
        diffplan::testutil::slurp(out2 + "/curve_a2c_none_seed3.csv"));
  CHECK(diffplan::testutil::slurp(out1 + "/policy_a2c_none_seed3.csv") ==
        diffplan::testutil::slurp(out2 + "/policy_a2c_none_seed3.csv"));

  const auto learn1 = (tmp.path / "l1").string();
  const auto learn2 = (tmp.path / "l2").string();
  CHECK(run("learn-planner " + data("search_tasks.cfg") +
            " --steps 25 --seeds 5 --out " + learn1).exit_code == 0);
  CHECK(run("learn-planner " + data("search_tasks.cfg") +
            " --steps 25 --seeds 5 --out " + learn2).exit_code == 0);
  CHECK(diffplan::testutil::slurp(learn1 + "/loss_seed5.csv") ==
        diffplan::testutil::slurp(learn2 + "/loss_seed5.csv"));
  CHECK(diffplan::testutil::slurp(learn1 + "/weights_seed5.csv") ==
        diffplan::testutil::slurp(learn2 + "/weights_seed5.csv"));
}

TEST_CASE("plot-data applies the EMA recursion and aggregates seeds") {
  TempDir tmp;
  auto write_curve = [&](const std::string& name, std::vector<double> vals) {
    std::ofstream out(tmp.path / name);
    out << "frames,update,return_mean,return_min,return_max,policy_loss,"
           "value_loss,entropy\n";
    long frames = 0;
    for (std::size_t i = 0; i < vals.size(); ++i) {
      frames += 100;
      out << frames << ',' << (i + 1) << ',' << vals[i] << ",0,0,0,0,0\n";
    }
  };
  write_curve("a.csv", {0.0, 1.0, 1.0});
  write_curve("b.csv", {0.0, 0.0, 1.0});

  // alpha = 1 is the identity.
  auto ident = run("plot-data " + (tmp.path / "a.csv").string() + " --alpha 1");
  CHECK(ident.exit_code == 0);
  CHECK(ident.output.find("100,0,0,0") != std::string::npos);
  CHECK(ident.output.find("200,1,1,1") != std::string::npos);

  // Constant series stay unchanged under any alpha.
  write_curve("c.csv", {0.5, 0.5, 0.5});
  auto constant = run("plot-data " + (tmp.path / "c.csv").string() + " --alpha 0.3");
  CHECK(constant.output.find("300,0.5,0.5,0.5") != std::string::npos);

  // Step series: s1 = 0, s2 = 0.1*1 + 0.9*0 = 0.1, s3 = 0.1 + 0.9*0.1 = 0.19.
  auto step = run("plot-data " + (tmp.path / "a.csv").string() + " --alpha 0.1");
  CHECK(step.output.find("200,0.1,0.1,0.1") != std::string::npos);
  CHECK(step.output.find("300,0.19,0.19,0.19") != std::string::npos);

  // Multi-seed mean/min/max at the smoothed values.
  auto multi = run("plot-data " + (tmp.path / "a.csv").string() + " " +
                   (tmp.path / "b.csv").string() + " --alpha 1 --out " +
                   (tmp.path / "agg.csv").string());
  CHECK(multi.exit_code == 0);
  const auto agg = diffplan::testutil::slurp((tmp.path / "agg.csv").string());
  CHECK(agg.find("frames,mean,min,max") != std::string::npos);
  CHECK(agg.find("200,0.5,0,1") != std::string::npos);
}
