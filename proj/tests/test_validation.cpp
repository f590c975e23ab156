#include <gtest/gtest.h>

#include <algorithm>

#include "edgtyper/driver.hpp"
#include "edgtyper/error.hpp"
#include "edgtyper/type_expr.hpp"
#include "edgtyper/validation.hpp"
#include "scripted_oracle.hpp"

using namespace edgtyper;
using namespace edgtyper::testing;

namespace {

SourceRepo repo_of(std::vector<SourceFile> files) {
  SourceRepo r;
  r.root = "/virtual";
  r.files = std::move(files);
  std::sort(r.files.begin(), r.files.end(),
            [](const SourceFile& a, const SourceFile& b) { return a.path < b.path; });
  return r;
}

}  // namespace

TEST(CheckerOutput, ParsesErrorsAndFoldsNotes) {
  auto ds = parse_checker_output(
      "pkg/a.py:3: error: Argument 1 to \"f\" has incompatible type \"str\"; expected \"int\"  "
      "[arg-type]\n"
      "pkg/a.py:3: note: See docs\n"
      "pkg/b.py:10: error: Name \"Widgit\" is not defined  [name-defined]\n");
  ASSERT_EQ(ds.size(), 2u);
  EXPECT_EQ(ds[0].file, "pkg/a.py");
  EXPECT_EQ(ds[0].line, 3);
  EXPECT_EQ(ds[0].code, "arg-type");
  EXPECT_NE(ds[0].message.find("See docs"), std::string::npos);
  EXPECT_EQ(ds[1].code, "name-defined");
  EXPECT_EQ(to_string(ds[1]), "pkg/b.py:10: error: Name \"Widgit\" is not defined  [name-defined]");
}

TEST(CheckerOutput, DefaultIgnoredCodes) {
  auto codes = default_ignored_codes();
  EXPECT_TRUE(codes.count("var-annotated"));
  EXPECT_TRUE(codes.count("has-type"));
  EXPECT_FALSE(codes.count("arg-type"));
}

TEST(Checker, MissingExecutableIsReported) {
  CheckerConfig c;
  c.path = "/nonexistent/mypy-binary";
  WorkingCopy wc;
  wc.sync(repo_of({{"m.py", "x = 1\n"}}));
  try {
    wc.check(c);
    FAIL() << "expected CheckerMissing";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::CheckerMissing);
  }
}

TEST(Checker, FindsAndFiltersErrors) {
  WorkingCopy wc;
  wc.sync(repo_of({{"m.py", "def f(x: int) -> int:\n    return x\n\nf(\"a\")\ny = []\n"}}));
  auto ds = wc.check(CheckerConfig{});
  ASSERT_EQ(ds.size(), 1u);
  EXPECT_EQ(ds[0].code, "arg-type");
  EXPECT_EQ(ds[0].line, 4);
}

TEST(Suppression, AddsIgnoreBeforeComments) {
  SourceRepo r = repo_of({{"m.py", "a = 1\nb = f()  # call\nc = 2  # type: ignore\n"}});
  std::vector<Diagnostic> ds = {{"m.py", 2, "name-defined", "x"}, {"m.py", 3, "x", "y"}};
  EXPECT_EQ(suppress_diagnostics(r, ds), 1u);
  EXPECT_EQ(r.files[0].text, "a = 1\nb = f()  # type: ignore  # call\nc = 2  # type: ignore\n");
}

TEST(Baseline, SuppressesInherentErrorsOnce) {
  SourceRepo r = load_repo(fixtures_dir() / "baseline" / "inherent");
  BaselineResult b = prepare_baseline(r, CheckerConfig{});
  EXPECT_EQ(b.suppressions, 3u);
  WorkingCopy wc;
  wc.sync(b.repo);
  EXPECT_TRUE(wc.check(CheckerConfig{}).empty());
  BaselineResult again = prepare_baseline(b.repo, CheckerConfig{});
  EXPECT_EQ(again.suppressions, 0u);
  for (std::size_t i = 0; i < b.repo.files.size(); ++i)
    EXPECT_EQ(again.repo.files[i].text, b.repo.files[i].text);
}

TEST(Attribution, CallSiteBlamesCalleeParameter) {
  SourceRepo r = repo_of({{"a.py", "def f(x: int):\n    return x\n\nf(\"s\")\n"}});
  auto ex = extract_entities(r);
  Resolver resolver(r, ex.entities);
  std::vector<Diagnostic> ds = {{"a.py", 4, "arg-type", "Argument 1 to \"f\" has incompatible type"}};
  auto reports = attribute_conflicts(ds, {"a.f#param:x"}, {{"a.f#param:x", "int"}}, r,
                                     ex.entities, resolver);
  ASSERT_EQ(reports.size(), 1u);
  EXPECT_EQ(reports[0].category, ConflictCategory::ParamTooRestrictive);
  EXPECT_EQ(reports[0].culprit_slots, std::vector<std::string>{"a.f#param:x"});

  SlotTable slots;
  slots["a.f#param:x"] = {SlotState::Inferred, "int", 1, false};
  auto res = resolve_conflict(reports[0], slots, ex.entities, r);
  ASSERT_EQ(res.size(), 1u);
  EXPECT_EQ(res[0].action, RepairAction::InvalidateFunction);
  EXPECT_EQ(res[0].feedback.rfind("[a.f#param:x]", 0), 0u);

  slots["a.f#param:x"].attempts = kDefaultAttemptBound;
  res = resolve_conflict(reports[0], slots, ex.entities, r);
  EXPECT_EQ(res[0].action, RepairAction::Fallback);
}

TEST(Attribution, OverrideNamesTheArgument) {
  SourceRepo r = repo_of({{"a.py",
                           "class A:\n    def m(self, x: str, y: int):\n        pass\n\n"
                           "class B(A):\n    def m(self, x: float, y: int):\n        pass\n"}});
  auto ex = extract_entities(r);
  Resolver resolver(r, ex.entities);
  std::vector<Diagnostic> ds = {
      {"a.py", 6, "override", "Argument 1 of \"m\" is incompatible with supertype \"A\""}};
  std::vector<std::string> applied = {"a.A.m#param:x", "a.A.m#param:y"};
  auto reports = attribute_conflicts(ds, applied, {{"a.A.m#param:x", "str"}, {"a.A.m#param:y", "int"}},
                                     r, ex.entities, resolver);
  ASSERT_EQ(reports.size(), 1u);
  EXPECT_EQ(reports[0].category, ConflictCategory::OverrideMismatch);
  EXPECT_EQ(reports[0].parent_entity, "a.A.m");
  EXPECT_EQ(reports[0].child_entity, "a.B.m");
  EXPECT_TRUE(reports[0].parent_applied);
  EXPECT_EQ(reports[0].culprit_slots, std::vector<std::string>{"a.A.m#param:x"});
}

TEST(Attribution, UndefinedNameBlamesTheAnnotation) {
  SourceRepo r = repo_of({{"a.py", "def make(kind: Widgit):\n    return kind\n"}});
  auto ex = extract_entities(r);
  Resolver resolver(r, ex.entities);
  std::vector<Diagnostic> ds = {{"a.py", 1, "name-defined", "Name \"Widgit\" is not defined"}};
  auto reports = attribute_conflicts(ds, {"a.make#param:kind"}, {{"a.make#param:kind", "Widgit"}},
                                     r, ex.entities, resolver);
  ASSERT_EQ(reports.size(), 1u);
  EXPECT_EQ(reports[0].category, ConflictCategory::NameUndefined);
  EXPECT_EQ(reports[0].culprit_slots, std::vector<std::string>{"a.make#param:kind"});
}

// Each fixture starts clean; the script plants one wrong annotation that
// triggers a known checker code.
class ConflictFixture : public ::testing::TestWithParam<std::string> {};

TEST_P(ConflictFixture, DetectsAttributesAndRepairs) {
  ConflictScript s = load_conflict_script(fixtures_dir() / "conflicts" / GetParam());
  SourceRepo repo = load_repo(s.repo);
  {
    WorkingCopy wc;
    wc.sync(repo);
    ASSERT_TRUE(wc.check(CheckerConfig{}).empty()) << "fixture must start clean";
  }
  ScriptedOracle oracle(s.answers);
  RunConfig config;
  PipelineResult result = run_pipeline(repo, config, &oracle);

  bool attributed = false;
  for (const IterationTrace& t : result.state.trace)
    for (const ConflictRecord& c : t.conflicts) {
      bool named = std::find(c.culprits.begin(), c.culprits.end(), s.mis_annotated) !=
                   c.culprits.end();
      bool coded = std::any_of(c.diagnostics.begin(), c.diagnostics.end(), [&](const auto& d) {
        return d.find("[" + s.code + "]") != std::string::npos;
      });
      if (named && coded) {
        EXPECT_EQ(c.category, s.category);
        attributed = true;
      }
    }
  EXPECT_TRUE(attributed) << "no conflict naming " << s.mis_annotated;

  EXPECT_TRUE(result.finished);
  EXPECT_TRUE(result.final_diagnostics.empty());
  for (const auto& [slot, rec] : result.state.slots) EXPECT_LE(rec.attempts, config.attempt_bound) << slot;
  const SlotRecord& bad = result.state.slots.at(s.mis_annotated);
  if (s.persistent) {
    EXPECT_EQ(bad.state, SlotState::Fallback);
    EXPECT_EQ(bad.type.value_or(""), "Any");
    EXPECT_EQ(bad.attempts, config.attempt_bound);
  } else {
    EXPECT_EQ(bad.state, SlotState::Validated);
    EXPECT_EQ(bad.type.value_or(""), normalize_type(s.answers.at(s.mis_annotated).back()).text);
  }
}

INSTANTIATE_TEST_SUITE_P(Scripted, ConflictFixture,
                         ::testing::Values("arg_type", "call_arg", "name_defined", "override",
                                           "return_value"));
