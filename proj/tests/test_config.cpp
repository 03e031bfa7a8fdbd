#include <gtest/gtest.h>

#include <cstdlib>

#include "mfpod/config.hpp"

using namespace mfpod;

namespace {

ErrorKind kind_of(const std::string& text) {
  try {
    parse_run_config(text);
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "accepted: " << text;
  return ErrorKind::Data;
}

}  // namespace

TEST(RunConfig, DefaultsPerProblem) {
  const RunConfig rd = parse_run_config(R"({"problem": "rd"})");
  EXPECT_EQ(rd.problem.problem, Problem::ReactionDiffusion);
  EXPECT_EQ(rd.hf.n, 100);
  EXPECT_EQ(rd.lf.n, 32);
  EXPECT_EQ(rd.lf.d, 0.1);
  EXPECT_EQ(rd.train_mus.size(), 10u);
  EXPECT_EQ(rd.offline.pod_rule.count, 9);
  EXPECT_EQ(rd.offline.lift_mode, InterpMode::Nearest);
  EXPECT_EQ(rd.T_train, 40.0);
  EXPECT_EQ(rd.T_test, 80.0);

  const RunConfig sw = parse_run_config(R"({"problem": "sw"})");
  EXPECT_EQ(sw.hf.n, 200);
  EXPECT_EQ(sw.lf.n, 50);
  EXPECT_EQ(sw.lf.dt, 1.0);
  EXPECT_EQ(rd.problem.rd_initial, RdInitial::Equal);
  EXPECT_EQ(sw.offline.pod_rule.count, 17);
  EXPECT_EQ(sw.offline.lift_mode, InterpMode::Bilinear);
  EXPECT_EQ(sw.test_mus, (std::vector<double>{1.5, 2.5, 3.5, 4.5}));
}

TEST(RunConfig, OverridesAndParameterForms) {
  const RunConfig c = parse_run_config(R"({
    "problem": "rd",
    "hf": {"n": 64, "save_every": 10},
    "train_params": {"lo": 0.5, "hi": 1.5, "count": 3},
    "test_params": [0.7, 1.1],
    "pod": {"eps": 0.05, "center": true},
    "domain": {"rd_initial": "spiral"},
    "lift": "bilinear",
    "model": "static",
    "train": {"hidden": 12, "layers": 2, "epochs": 7},
    "search": {"budget": 3, "hidden": [8, 16]},
    "paths": {"out_dir": "results"},
    "seed": 42
  })");
  EXPECT_EQ(c.hf.n, 64);
  EXPECT_EQ(c.hf.save_every, 10);
  EXPECT_EQ(c.problem.rd_initial, RdInitial::Spiral);
  EXPECT_EQ(c.hf.dt, 0.05);
  EXPECT_EQ(c.train_mus, (std::vector<double>{0.5, 1.0, 1.5}));
  EXPECT_EQ(c.test_mus, (std::vector<double>{0.7, 1.1}));
  EXPECT_EQ(c.offline.pod_rule.kind, TruncationRule::Kind::Tolerance);
  EXPECT_EQ(c.offline.pod_rule.eps, 0.05);
  EXPECT_TRUE(c.offline.center);
  EXPECT_EQ(c.offline.kind, MapKind::Static);
  EXPECT_EQ(c.offline.train.hidden, 12);
  EXPECT_EQ(c.offline.train.seed, 42u);
  EXPECT_EQ(c.search_budget, 3);
  EXPECT_EQ(c.search_space.hidden, (std::vector<int>{8, 16}));
  EXPECT_EQ(c.out_dir, "results");
  const Provenance p = c.provenance();
  EXPECT_EQ(p.param_lo(0), 0.5);
  EXPECT_EQ(p.param_hi(0), 1.5);
  EXPECT_EQ(p.T_train, 40.0);
}

TEST(RunConfig, RejectsUnknownKeysAndBadValues) {
  EXPECT_EQ(kind_of(R"({"problm": "rd"})"), ErrorKind::Validation);
  EXPECT_EQ(kind_of(R"({"hf": {"n": 64, "nn": 2}})"), ErrorKind::Validation);
  EXPECT_EQ(kind_of(R"({"train": {"hiden": 3}})"), ErrorKind::Validation);
  EXPECT_EQ(kind_of(R"({"problem": "ns"})"), ErrorKind::Validation);
  EXPECT_EQ(kind_of(R"({"hf": {"n": 63}})"), ErrorKind::Validation);
  EXPECT_EQ(kind_of(R"({"hf": {"n": "big"}})"), ErrorKind::Validation);
  EXPECT_EQ(kind_of(R"({"pod": {"eps": 0.1, "modes": 3}})"), ErrorKind::Validation);
  EXPECT_EQ(kind_of(R"({"train": {"learning_rate": -1}})"), ErrorKind::Validation);
  EXPECT_EQ(kind_of(R"({"train_params": {"lo": 1, "hi": 1, "count": 3}})"), ErrorKind::Validation);
  EXPECT_EQ(kind_of(R"({"lift": "cubic"})"), ErrorKind::Validation);
  EXPECT_EQ(kind_of(R"({"domain": {"rd_initial": "ring"}})"), ErrorKind::Validation);
  EXPECT_EQ(kind_of("{not json"), ErrorKind::Validation);
}

TEST(RunConfig, MissingFileNamesPath) {
  try {
    load_run_config("/nonexistent/mfpod.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Validation);
    EXPECT_NE(std::string(e.what()).find("/nonexistent/mfpod.json"), std::string::npos);
  }
}

TEST(RunConfig, SeedFromEnvironment) {
  RunConfig c = parse_run_config(R"({"seed": 3})");
  ::setenv("MFPOD_SEED", "99", 1);
  apply_environment(c);
  EXPECT_EQ(c.seed, 99u);
  EXPECT_EQ(c.offline.train.seed, 99u);
  ::setenv("MFPOD_SEED", "9x", 1);
  EXPECT_THROW(apply_environment(c), Error);
  ::unsetenv("MFPOD_SEED");
  RunConfig d = parse_run_config(R"({"seed": 3})");
  apply_environment(d);
  EXPECT_EQ(d.seed, 3u);
}
