// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
// failure.
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

#include "edgtyper/driver.hpp"
#include "edgtyper/metrics.hpp"
#include "graph_oracle.hpp"
#include "scripted_oracle.hpp"
#include "type_oracle.hpp"

using namespace edgtyper;
using namespace edgtyper::testing;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

const std::vector<std::string> kRepos = {"flask_mini", "inventory", "textkit"};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// A criterion returns an empty string on success, otherwise the first
// violation; `detail` collects a short summary either way.
struct Criterion {
  int number;
  std::string title;
  std::function<std::string(std::ostringstream& detail)> run;
};

// ---- graphs ---------------------------------------------------------------

std::string condensation_equivalence(std::ostringstream& detail) {
  auto t0 = Clock::now();
  std::size_t clusters = 0;
  for (std::uint64_t seed = 1; seed <= 1000; ++seed) {
    EntityDependencyGraph g = random_graph(seed, 50);
    ClusterDAG dag = condense_and_bound(g, g.nodes.size());
    std::set<std::set<std::string>> got;
    for (const EntityCluster& c : dag.clusters)
      got.insert(std::set<std::string>(c.members.begin(), c.members.end()));
    if (got != reachability_components(g)) return "membership differs, seed " + std::to_string(seed);
    if (std::string err = check_condensation(g, dag, g.nodes.size()); !err.empty())
      return err + ", seed " + std::to_string(seed);
    clusters += dag.clusters.size();
  }
  double t = seconds_since(t0);
  detail << "1000 graphs, " << clusters << " clusters, " << t << " s";
  if (t >= 30) return "took " + std::to_string(t) + " s";
  return {};
}

// The random corpus plus a planted cycle through 8..n nodes, so most graphs
// carry an SCC well above the bound.
EntityDependencyGraph forced_graph(std::uint64_t seed) {
  EntityDependencyGraph g = random_graph(seed, 50);
  std::mt19937_64 rng(seed * 7919);
  std::vector<std::string> nodes(g.nodes.begin(), g.nodes.end());
  if (nodes.size() < 8) return g;
  std::shuffle(nodes.begin(), nodes.end(), rng);
  std::size_t k = std::uniform_int_distribution<std::size_t>(8, nodes.size())(rng);
  for (std::size_t i = 0; i < k; ++i)
    g.add_edge({nodes[i], nodes[(i + 1) % k], EdgeKind::Call, EdgeOrigin::Pattern});
  return g;
}

std::string bound_and_conservation(std::ostringstream& detail) {
  auto t0 = Clock::now();
  std::size_t large = 0, removed = 0;
  for (std::uint64_t seed = 1; seed <= 1000; ++seed) {
    EntityDependencyGraph g = forced_graph(seed);
    std::size_t biggest = 0;
    for (const auto& c : reachability_components(g)) biggest = std::max(biggest, c.size());
    if (biggest > 5) ++large;
    ClusterDAG dag = condense_and_bound(g, 5);
    if (std::string err = check_condensation(g, dag, 5); !err.empty())
      return err + ", seed " + std::to_string(seed);
    for (const EntityCluster& c : dag.clusters) removed += c.removed_internal_edges.size();
  }
  detail << "1000 graphs, " << large << " with an SCC over 5, " << removed
         << " edges removed, " << seconds_since(t0) << " s";
  if (large < 500) return "corpus has too few large SCCs";
  return {};
}

// ---- fixture runs -----------------------------------------------------------

struct FixtureRun {
  PipelineResult result;
  std::size_t waves = 0;
  std::string wave_error;
};

FixtureRun run_with_wave_check(const SourceRepo& repo, RunConfig config, Oracle* oracle = nullptr) {
  FixtureRun run;
  config.on_select = [&run](const ClusterDAG& dag, const std::vector<std::size_t>& wave,
                            const SlotStates& states, const EntityIndex& index) {
    ++run.waves;
    if (run.wave_error.empty()) run.wave_error = check_wave(dag, wave, states, index);
  };
  run.result = run_pipeline(repo, config, oracle);
  return run;
}

std::map<std::string, FixtureRun>& fixture_runs() {
  static std::map<std::string, FixtureRun> runs;
  if (runs.empty())
    for (const std::string& name : kRepos)
      runs[name] = run_with_wave_check(load_repo(fixtures_dir() / "repos" / name), RunConfig{});
  return runs;
}

std::string wave_validity(std::ostringstream& detail) {
  std::size_t waves = 0, runs = 0;
  for (auto& [name, run] : fixture_runs()) {
    if (!run.wave_error.empty()) return name + ": " + run.wave_error;
    waves += run.waves;
    ++runs;
  }
  for (const ConflictScript& s : all_conflict_scripts()) {
    ScriptedOracle oracle(s.answers);
    FixtureRun run = run_with_wave_check(load_repo(s.repo), RunConfig{}, &oracle);
    if (!run.wave_error.empty()) return s.name + ": " + run.wave_error;
    waves += run.waves;
    ++runs;
  }
  FixtureRun base =
      run_with_wave_check(load_repo(fixtures_dir() / "baseline" / "inherent"), RunConfig{});
  if (!base.wave_error.empty()) return "baseline: " + base.wave_error;
  waves += base.waves;
  ++runs;
  detail << runs << " runs, " << waves << " waves checked";
  return {};
}

std::string conflict_free(std::ostringstream& detail) {
  fs::path scratch = scratch_dir("accept-infer");
  for (const std::string& name : kRepos) {
    fs::path out = scratch / name, report = scratch / (name + ".json");
    auto t0 = Clock::now();
    ProcessResult p = run_process({EDG_TYPER_BIN, "infer", "--oracle", "rule", "--repo",
                                   (fixtures_dir() / "repos" / name).string(), "--out",
                                   out.string(), "--report", report.string()},
                                  fs::current_path());
    double t = seconds_since(t0);
    if (p.exit_code != 0) return name + ": exit " + std::to_string(p.exit_code) + " " + p.err;
    std::ifstream in(report);
    nlohmann::json rep = nlohmann::json::parse(in);
    int iterations = rep["iterations"].get<int>();
    if (iterations > 50) return name + ": " + std::to_string(iterations) + " iterations";
    if (t >= 120) return name + ": took " + std::to_string(t) + " s";
    // Inherent errors (unannotated locals) are already in the input; only
    // errors the annotations introduce count.
    SourceRepo input = load_repo(fixtures_dir() / "repos" / name), output = load_repo(out);
    std::size_t errors = 0;
    for (const auto& [bucket, n] : count_introduced_errors(input, output, CheckerConfig{}))
      if (bucket != "total") errors += n;
    if (errors) return name + ": " + std::to_string(errors) + " introduced checker errors";
    std::size_t files = output.files.size();
    char buf[128];
    std::snprintf(buf, sizeof buf, "%s%s %zu files %d it %.1f s", detail.str().empty() ? "" : "; ",
                  name.c_str(), files, iterations, t);
    detail << buf;
  }
  fs::remove_all(scratch);
  return {};
}

std::string backtracking(std::ostringstream& detail) {
  int named = 0, total = 0;
  for (const ConflictScript& s : all_conflict_scripts()) {
    ++total;
    ScriptedOracle oracle(s.answers);
    RunConfig config;
    PipelineResult r = run_pipeline(load_repo(s.repo), config, &oracle);
    bool found = false;
    for (const IterationTrace& t : r.state.trace)
      for (const ConflictRecord& c : t.conflicts) {
        bool coded = false;
        for (const std::string& d : c.diagnostics) coded |= d.find("[" + s.code + "]") != std::string::npos;
        if (coded && std::count(c.culprits.begin(), c.culprits.end(), s.mis_annotated)) found = true;
      }
    if (found) ++named;
    else return s.name + ": no conflict names " + s.mis_annotated;
    if (!r.final_diagnostics.empty()) return s.name + ": checker not clean after repair";
    for (const auto& [slot, rec] : r.state.slots)
      if (rec.attempts > config.attempt_bound)
        return s.name + ": " + slot + " used " + std::to_string(rec.attempts) + " attempts";
    const SlotRecord& bad = r.state.slots.at(s.mis_annotated);
    if (s.persistent && (bad.state != SlotState::Fallback || bad.type.value_or("") != "Any"))
      return s.name + ": persistent conflict did not end as Any";
    if (!s.persistent && bad.state != SlotState::Validated)
      return s.name + ": repaired slot not validated";
  }
  detail << named << "/" << total << " attributed";
  return {};
}

// ---- metrics ----------------------------------------------------------------

std::string metric_identity(std::ostringstream& detail) {
  // The pipeline outputs are fully annotated; the inputs carry a few
  // developer annotations; the ground-truth repo is hand annotated. Repos
  // without any annotated slot have nothing to score and are only
  // round-tripped.
  std::vector<std::pair<std::string, SourceRepo>> repos;
  for (const auto& [name, run] : fixture_runs()) {
    repos.emplace_back(name + " (output)", run.result.repo);
    repos.emplace_back(name, load_repo(fixtures_dir() / "repos" / name));
  }
  repos.emplace_back("truth", load_repo(fixtures_dir() / "eval_pair" / "truth"));
  std::size_t slots = 0, scored = 0;
  for (const auto& [name, r] : repos) {
    EvalReport self = evaluate_repo_pair(r, r);
    if (!self.records.empty()) {
      if (self.mean_sim != 1.0 || self.exact_rate != 1.0) return "self-evaluation below 1 for " + name;
      ++scored;
    }
    slots += self.records.size();
    StripResult st = strip_annotations(r);
    SourceRepo restored = apply_annotations(st.repo, st.archive).repo;
    EvalReport rt = evaluate_repo_pair(restored, r);
    if (rt.records.size() != self.records.size() || (!rt.records.empty() && rt.exact_rate != 1.0))
      return "strip/restore lost annotations in " + name;
  }
  if (scored < 4) return "too few annotated repos";
  detail << scored << " repos, " << slots << " slots at 1.00/1.00, restored exactly";
  return {};
}

std::string metric_properties(std::ostringstream& detail) {
  const AttrCatalog& catalog = AttrCatalog::builtin();
  SimOracle oracle(EDG_CATALOG_JSON);
  std::mt19937_64 rng(20240601);
  std::size_t exact_pairs = 0, partial = 0;
  for (int i = 0; i < 500; ++i) {
    GeneratedType a = random_type(rng);
    GeneratedType b = std::bernoulli_distribution(0.15)(rng) ? a : random_type(rng);
    std::string pair = "`" + a.text + "` vs `" + b.text + "`";
    double ab = type_sim(a.text, b.text, catalog), ba = type_sim(b.text, a.text, catalog);
    if (ab != ba) return "asymmetric: " + pair;
    if (ab < 0.0 || ab > 1.0) return "out of range: " + pair;
    bool exact = type_exact(a.text, b.text);
    if (exact && ab != 1.0) return "exact but sim below 1: " + pair;
    for (const std::string& t : {a.text, b.text}) {
      NormalizedType n = normalize_type(t);
      if (normalize_type(n.text).text != n.text) return "normalize not idempotent: " + t;
    }
    if (ab != oracle.sim(a, b)) return "oracle disagrees: " + pair;
    exact_pairs += exact;
    partial += ab > 0.0 && ab < 1.0;
  }
  detail << "500 pairs, " << exact_pairs << " exact, " << partial << " partial";
  return {};
}

// ---- baseline -----------------------------------------------------------------

std::string baseline(std::ostringstream& detail) {
  SourceRepo r = load_repo(fixtures_dir() / "baseline" / "inherent");
  CheckerConfig checker;
  std::size_t before = run_checker(r.root, checker).size();
  BaselineResult b = prepare_baseline(r, checker);
  WorkingCopy wc;
  wc.sync(b.repo);
  if (!wc.check(checker).empty()) return "baseline not clean";
  std::size_t comments = 0;
  for (const SourceFile& f : b.repo.files)
    for (std::size_t p = f.text.find("# type: ignore"); p != std::string::npos;
         p = f.text.find("# type: ignore", p + 1))
      ++comments;
  if (b.suppressions != 3 || comments != 3)
    return std::to_string(comments) + " suppression comments";
  BaselineResult again = prepare_baseline(b.repo, checker);
  if (again.suppressions != 0) return "second pass added suppressions";
  for (std::size_t i = 0; i < b.repo.files.size(); ++i)
    if (again.repo.files[i].text != b.repo.files[i].text) return "second pass changed " + b.repo.files[i].path;
  detail << before << " inherent errors, 3 comments, re-run unchanged";
  return {};
}

// ---- determinism ----------------------------------------------------------------

std::string trace_text(const PipelineState& s) {
  nlohmann::json j = nlohmann::json::array();
  for (const IterationTrace& t : s.trace) j.push_back(to_json(t));
  return j.dump();
}

std::string determinism(std::ostringstream& detail) {
  std::size_t bytes = 0;
  for (auto& [name, first] : fixture_runs()) {
    SourceRepo repo = load_repo(fixtures_dir() / "repos" / name);
    PipelineResult second = run_pipeline(repo, RunConfig{});
    const SourceRepo &a = first.result.repo, &b = second.repo;
    if (a.files.size() != b.files.size()) return name + ": file sets differ";
    for (std::size_t i = 0; i < a.files.size(); ++i) {
      if (a.files[i].path != b.files[i].path || a.files[i].text != b.files[i].text)
        return name + ": output differs in " + a.files[i].path;
      bytes += a.files[i].text.size();
    }
    if (trace_text(first.result.state) != trace_text(second.state)) return name + ": traces differ";

    fs::path dir = scratch_dir("accept-ckpt");
    RunConfig stop;
    stop.checkpoint = dir / "state.json";
    int k = std::max(1, first.result.state.iteration / 2);
    stop.stop_after_iterations = k;
    PipelineResult partial = run_pipeline(repo, stop);
    if (partial.finished) return name + ": stop request ignored";
    RunConfig resume;
    resume.checkpoint = stop.checkpoint;
    PipelineResult resumed = run_pipeline(repo, resume);
    fs::remove_all(dir);
    if (make_report(resumed, resume) != make_report(first.result, RunConfig{}))
      return name + ": resumed report differs (stopped at " + std::to_string(k) + ")";
  }
  detail << "3 repos, " << bytes << " output bytes identical, resume matches";
  return {};
}

}  // namespace

int main() {
  std::vector<Criterion> criteria = {
      {1, "condensation matches mutual reachability", condensation_equivalence},
      {2, "cluster bound, partition and edge conservation", bound_and_conservation},
      {3, "waves only select clusters with annotated dependencies", wave_validity},
      {4, "rule-oracle inference is conflict-free on bundled repos", conflict_free},
      {5, "injected conflicts are attributed and repaired", backtracking},
      {6, "self-evaluation and strip/restore are exact", metric_identity},
      {7, "type similarity properties and set-arithmetic oracle", metric_properties},
      {8, "baseline suppresses exactly the inherent errors", baseline},
      {9, "runs are deterministic and resumable", determinism},
  };
  int failures = 0;
  for (const Criterion& c : criteria) {
    std::ostringstream detail;
    detail.precision(3);
    std::string error;
    try {
      error = c.run(detail);
    } catch (const std::exception& e) {
      error = std::string("exception: ") + e.what();
    }
    if (error.empty()) {
      std::printf("PASS %d %s (%s)\n", c.number, c.title.c_str(), detail.str().c_str());
    } else {
      ++failures;
      std::printf("FAIL %d %s: %s\n", c.number, c.title.c_str(), error.c_str());
    }
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
