#include <gtest/gtest.h>

#include <fstream>

#include "edgtyper/driver.hpp"
#include "edgtyper/error.hpp"
#include "graph_oracle.hpp"
#include "scripted_oracle.hpp"

using namespace edgtyper;
using namespace edgtyper::testing;
namespace fs = std::filesystem;

namespace {

SourceRepo fixture(const std::string& name) { return load_repo(fixtures_dir() / "repos" / name); }

// Answers nothing, so no slot ever makes progress.
class SilentOracle : public Oracle {
 public:
  OracleResponse complete(const OracleRequest&) override { return {}; }
  std::string name() const override { return "silent"; }
};

class DownOracle : public Oracle {
 public:
  OracleResponse complete(const OracleRequest& r) override {
    if (r.task == OracleTask::InferTypes) throw Error(ErrorKind::OracleUnavailable, "down");
    return {};
  }
  std::string name() const override { return "down"; }
};

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no Error thrown";
  return ErrorKind::Config;
}

}  // namespace

TEST(RunConfig, RejectsZeroBounds) {
  RunConfig c;
  EXPECT_NO_THROW(c.validate());
  c.cluster_bound = 0;
  EXPECT_EQ(kind_of([&] { c.validate(); }), ErrorKind::Config);
  c = RunConfig{};
  c.attempt_bound = 0;
  EXPECT_EQ(kind_of([&] { c.validate(); }), ErrorKind::Config);
  c = RunConfig{};
  c.max_iterations = 0;
  EXPECT_EQ(kind_of([&] { c.validate(); }), ErrorKind::Config);
}

TEST(Pipeline, AnnotatesInventoryWithoutConflicts) {
  SourceRepo repo = fixture("inventory");
  RunConfig config;
  std::size_t waves = 0;
  std::string wave_error;
  config.on_select = [&](const ClusterDAG& dag, const std::vector<std::size_t>& wave,
                         const SlotStates& states, const EntityIndex& index) {
    ++waves;
    if (wave_error.empty()) wave_error = check_wave(dag, wave, states, index);
  };
  PipelineResult r = run_pipeline(repo, config);
  EXPECT_TRUE(r.finished);
  EXPECT_EQ(r.terminated_by, "complete");
  EXPECT_TRUE(r.final_diagnostics.empty());
  EXPECT_LE(r.state.iteration, 50);
  EXPECT_EQ(waves, static_cast<std::size_t>(r.state.iteration));
  EXPECT_EQ(wave_error, "");
  for (const auto& [slot, rec] : r.state.slots) {
    EXPECT_TRUE(rec.state == SlotState::Validated || rec.state == SlotState::Fallback) << slot;
    EXPECT_LE(rec.attempts, config.attempt_bound) << slot;
  }
  WorkingCopy wc;
  wc.sync(r.repo);
  EXPECT_TRUE(wc.check(config.checker).empty());
  ASSERT_FALSE(r.state.trace.empty());
  EXPECT_DOUBLE_EQ(r.state.trace.back().coverage, 1.0);
}

TEST(Pipeline, KeepsDeveloperAnnotations) {
  SourceRepo repo = fixture("flask_mini");
  PipelineResult r = run_pipeline(repo, RunConfig{});
  const SlotRecord& cv = r.state.slots.at("flask_mini.ctx._cv_app#var");
  EXPECT_TRUE(cv.preexisting);
  EXPECT_EQ(cv.type.value_or(""), "ContextVar[AppContext]");
  EXPECT_EQ(committed_bindings(r.state).count("flask_mini.ctx._cv_app#var"), 0u);
  const SourceFile* ctx = r.repo.find("flask_mini/ctx.py");
  ASSERT_NE(ctx, nullptr);
  EXPECT_NE(ctx->text.find("_cv_app: ContextVar[AppContext]"), std::string::npos);
}

TEST(Pipeline, IsDeterministic) {
  SourceRepo repo = fixture("inventory");
  RunConfig config;
  nlohmann::json a = make_report(run_pipeline(repo, config), config);
  nlohmann::json b = make_report(run_pipeline(repo, config), config);
  EXPECT_EQ(a, b);
}

TEST(Pipeline, StallFlushesToAny) {
  SourceRepo repo = fixture("inventory");
  SilentOracle oracle;
  PipelineResult r = run_pipeline(repo, RunConfig{}, &oracle);
  EXPECT_EQ(r.terminated_by, "stall");
  EXPECT_TRUE(r.finished);
  ASSERT_TRUE(r.flush.has_value());
  EXPECT_FALSE(r.flush->fallbacks.empty());
  EXPECT_TRUE(r.final_diagnostics.empty());
  for (const auto& [slot, rec] : r.state.slots)
    if (!rec.preexisting) {
      EXPECT_EQ(rec.state, SlotState::Fallback) << slot;
      EXPECT_EQ(rec.type.value_or(""), "Any") << slot;
    }
}

TEST(Pipeline, OracleOutageLeavesStateUntouched) {
  SourceRepo repo = fixture("inventory");
  RunConfig config;
  WorkingCopy wc;
  PipelineState s = initialize_state(repo, config, wc);
  PipelineState before = s;
  DownOracle oracle;
  EXPECT_EQ(kind_of([&] { run_iteration(s, config, oracle, wc); }), ErrorKind::OracleUnavailable);
  EXPECT_EQ(s.iteration, before.iteration);
  EXPECT_EQ(s.edg.version, before.edg.version);
  ASSERT_EQ(s.slots.size(), before.slots.size());
  for (const auto& [slot, rec] : s.slots) {
    EXPECT_EQ(rec.state, before.slots.at(slot).state) << slot;
    EXPECT_EQ(rec.attempts, before.slots.at(slot).attempts) << slot;
  }
}

TEST(Checkpoint, StopAndResumeMatchesAnUninterruptedRun) {
  SourceRepo repo = fixture("inventory");
  fs::path dir = scratch_dir("ckpt");
  RunConfig plain;
  nlohmann::json expected = make_report(run_pipeline(repo, plain), plain);

  RunConfig first = plain;
  first.checkpoint = dir / "state.json";
  first.stop_after_iterations = 2;
  PipelineResult stopped = run_pipeline(repo, first);
  EXPECT_FALSE(stopped.finished);
  EXPECT_EQ(stopped.terminated_by, "stopped");
  EXPECT_EQ(stopped.state.iteration, 2);
  ASSERT_TRUE(fs::exists(first.checkpoint));

  PipelineState loaded = checkpoint_load(first.checkpoint);
  EXPECT_EQ(loaded.iteration, 2);
  EXPECT_EQ(loaded.trace.size(), 2u);
  EXPECT_EQ(loaded.fingerprint, repo_fingerprint(repo));

  RunConfig second = plain;
  second.checkpoint = first.checkpoint;
  PipelineResult resumed = run_pipeline(repo, second);
  EXPECT_TRUE(resumed.finished);
  EXPECT_EQ(make_report(resumed, second), expected);
  fs::remove_all(dir);
}

TEST(Checkpoint, RejectsCorruptAndForeignFiles) {
  fs::path dir = scratch_dir("ckpt-bad");
  std::ofstream(dir / "garbage.json") << "{ not json";
  EXPECT_EQ(kind_of([&] { checkpoint_load(dir / "garbage.json"); }), ErrorKind::CorruptCheckpoint);
  std::ofstream(dir / "schema.json") << R"({"schema_version": 99})";
  EXPECT_EQ(kind_of([&] { checkpoint_load(dir / "schema.json"); }), ErrorKind::CorruptCheckpoint);

  RunConfig c;
  c.checkpoint = dir / "inventory.json";
  c.stop_after_iterations = 1;
  run_pipeline(fixture("inventory"), c);
  c.stop_after_iterations.reset();
  EXPECT_EQ(kind_of([&] { run_pipeline(fixture("textkit"), c); }), ErrorKind::CorruptCheckpoint);
  fs::remove_all(dir);
}

TEST(Pipeline, SuppressesInherentErrorsFirst) {
  SourceRepo repo = load_repo(fixtures_dir() / "baseline" / "inherent");
  PipelineResult r = run_pipeline(repo, RunConfig{});
  EXPECT_EQ(r.state.baseline_suppressions, 3u);
  EXPECT_TRUE(r.final_diagnostics.empty());
  std::size_t ignores = 0;
  for (const SourceFile& f : r.repo.files)
    for (std::size_t p = f.text.find("# type: ignore"); p != std::string::npos;
         p = f.text.find("# type: ignore", p + 1))
      ++ignores;
  EXPECT_EQ(ignores, 3u);
}

TEST(Report, TraceRoundTripsAndProgressCsv) {
  PipelineResult r = run_pipeline(fixture("inventory"), RunConfig{});
  for (const IterationTrace& t : r.state.trace)
    EXPECT_EQ(to_json(trace_from_json(to_json(t))), to_json(t));
  std::string csv = progress_csv(r.state);
  EXPECT_EQ(csv.rfind("iteration,coverage\n", 0), 0u);
  EXPECT_EQ(static_cast<int>(std::count(csv.begin(), csv.end(), '\n')), r.state.iteration + 1);
  nlohmann::json rep = make_report(r, RunConfig{});
  EXPECT_EQ(rep["schema_version"], kReportSchemaVersion);
  EXPECT_EQ(rep["oracle"]["kind"], "rule");
  EXPECT_EQ(rep["slots_total"], r.state.slots.size());
  EXPECT_FALSE(rep.contains("fallback_flush"));
}
