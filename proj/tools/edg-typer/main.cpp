// edg-typer: repository-level type annotation inference.
#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "edgtyper/config.hpp"
#include "edgtyper/driver.hpp"
#include "edgtyper/error.hpp"
#include "edgtyper/metrics.hpp"

namespace fs = std::filesystem;
using namespace edgtyper;

namespace {

enum Exit { kOk = 0, kFallbacks = 1, kUsage = 2, kEnvironment = 3 };

int exit_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::CheckerMissing:
    case ErrorKind::CheckerCrashed:
    case ErrorKind::OracleUnavailable:
    case ErrorKind::MalformedResponse:
      return kEnvironment;
    default:
      return kUsage;
  }
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << text;
}

struct Common {
  std::string config_file;
  std::string checker_path;

  RunConfig run_config() const {
    RunConfig c;
    if (!config_file.empty()) load_config_file(config_file, c);
    apply_environment(c);
    if (!checker_path.empty()) c.checker.path = checker_path;
    return c;
  }
};

void add_common(CLI::App* cmd, Common& common) {
  cmd->add_option("--config", common.config_file, "TOML-style key/value config file")
      ->check(CLI::ExistingFile);
  cmd->add_option("--checker-path", common.checker_path, "mypy executable (default: mypy)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"edg-typer: infer conflict-free type annotations for a Python repository"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "edg-typer 0.1.0");
  Common common;

  // infer
  std::string repo, out, oracle = "rule", checkpoint, report, progress;
  std::optional<int> max_iterations, stop_after;
  CLI::App* infer = app.add_subcommand("infer", "Annotate a repository");
  infer->add_option("--repo", repo, "Repository root")->required()->check(CLI::ExistingDirectory);
  infer->add_option("--out", out, "Directory for the annotated repository");
  infer->add_option("--oracle", oracle, "Inference oracle")
      ->check(CLI::IsMember({"rule", "http"}));
  infer->add_option("--checkpoint", checkpoint,
                    "Checkpoint file, written after each iteration and resumed if present");
  infer->add_option("--report", report, "Run report (JSON)");
  infer->add_option("--progress", progress, "Coverage per iteration (CSV)");
  infer->add_option("--max-iterations", max_iterations, "Iteration limit (default 100)")
      ->check(CLI::PositiveNumber);
  infer->add_option("--stop-after-iterations", stop_after,
                    "Stop after this many iterations, leaving the checkpoint to resume")
      ->check(CLI::PositiveNumber);
  add_common(infer, common);

  // graph
  std::string format = "dot";
  CLI::App* graph = app.add_subcommand("graph", "Export the entity dependency graph");
  graph->add_option("--repo", repo, "Repository root")->required()->check(CLI::ExistingDirectory);
  graph->add_option("--format", format, "dot or json")->check(CLI::IsMember({"dot", "json"}));
  graph->add_option("--out", out, "Output file (default: stdout)");
  add_common(graph, common);

  // prepare-baseline
  bool keep_annotations = false;
  CLI::App* baseline = app.add_subcommand(
      "prepare-baseline", "Strip annotations and silence remaining checker errors");
  baseline->add_option("--repo", repo, "Repository root")
      ->required()
      ->check(CLI::ExistingDirectory);
  baseline->add_option("--out", out, "Output directory (default: rewrite in place)");
  baseline->add_flag("--keep-annotations", keep_annotations, "Do not strip annotations first");
  add_common(baseline, common);

  // check
  CLI::App* check = app.add_subcommand("check", "Run the checker with the refinement filters");
  check->add_option("--repo", repo, "Repository root")->required()->check(CLI::ExistingDirectory);
  add_common(check, common);

  // evaluate
  std::string pred, truth, base_repo, csv;
  std::string eval_format = "table";
  CLI::App* evaluate = app.add_subcommand("evaluate", "Score predictions against ground truth");
  evaluate->add_option("--pred", pred, "Annotated repository")
      ->required()
      ->check(CLI::ExistingDirectory);
  evaluate->add_option("--truth", truth, "Ground-truth repository")
      ->required()
      ->check(CLI::ExistingDirectory);
  evaluate->add_option("--baseline", base_repo,
                       "Checker-clean unannotated repository; enables error counts")
      ->check(CLI::ExistingDirectory);
  evaluate->add_option("--report", report, "Evaluation report (JSON)");
  evaluate->add_option("--csv", csv, "Per-category breakdown (CSV)");
  evaluate->add_option("--format", eval_format, "table or json")
      ->check(CLI::IsMember({"table", "json"}));
  add_common(evaluate, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    RunConfig config = common.run_config();

    if (*infer) {
      if (infer->count("--oracle")) config.oracle = oracle_kind_from_string(oracle);
      if (max_iterations) config.max_iterations = *max_iterations;
      if (!checkpoint.empty()) config.checkpoint = checkpoint;
      config.stop_after_iterations = stop_after;
      PipelineResult result = run_pipeline(fs::path(repo), config);
      if (!out.empty()) write_repo(result.repo, out);
      nlohmann::json rep = make_report(result, config);
      if (!report.empty()) write_text(report, rep.dump(1) + "\n");
      if (!progress.empty()) write_text(progress, progress_csv(result.state));
      const auto& states = rep["states"];
      std::cout << "iterations " << result.state.iteration << " (" << result.terminated_by
                << "), slots " << rep["slots_total"].get<std::size_t>() << ": validated "
                << states["Validated"].get<std::size_t>() << ", fallback "
                << states["Fallback"].get<std::size_t>() << ", checker errors "
                << result.final_diagnostics.size() << "\n";
      for (const Diagnostic& d : result.final_diagnostics) std::cerr << to_string(d) << "\n";
      if (!result.finished) return kFallbacks;
      return states["Fallback"].get<std::size_t>() == 0 && result.final_diagnostics.empty()
                 ? kOk
                 : kFallbacks;
    }

    if (*graph) {
      SourceRepo r = load_repo(repo);
      ExtractResult ex = extract_entities(r);
      EntityDependencyGraph g = build_edg(ex.entities, resolve_statement_refs(r, ex.entities));
      std::string text = format == "json" ? to_json(g, ex.entities).dump(1) + "\n"
                                          : to_dot(g, ex.entities);
      if (out.empty()) std::cout << text;
      else write_text(out, text);
      for (const ParseFailure& p : ex.parse_errors)
        std::cerr << "skipped " << p.file << ":" << p.line << ": " << p.message << "\n";
      return kOk;
    }

    if (*baseline) {
      SourceRepo r = load_repo(repo);
      BaselineResult b = prepare_baseline(r, config.checker, !keep_annotations);
      write_repo(b.repo, out.empty() ? fs::path(repo) : fs::path(out));
      std::cout << "suppressions " << b.suppressions << ", passes " << b.passes << "\n";
      return kOk;
    }

    if (*check) {
      load_repo(repo);  // validates the root
      std::vector<Diagnostic> diags = run_checker(repo, config.checker);
      for (const Diagnostic& d : diags) std::cout << to_string(d) << "\n";
      return diags.empty() ? kOk : kFallbacks;
    }

    if (*evaluate) {
      SourceRepo p = load_repo(pred), t = load_repo(truth);
      EvalReport r = evaluate_repo_pair(p, t);
      if (!base_repo.empty())
        r.introduced_errors = count_introduced_errors(load_repo(base_repo), p, config.checker);
      if (!report.empty()) write_text(report, to_json(r).dump(1) + "\n");
      if (!csv.empty()) write_text(csv, category_csv(r));
      if (eval_format == "json") std::cout << to_json(r).dump(1) << "\n";
      else std::cout << to_table(r);
      return kOk;
    }
  } catch (const Error& e) {
    std::cerr << "edg-typer: " << to_string(e.kind()) << ": " << e.what() << "\n";
    return exit_for(e);
  } catch (const std::exception& e) {
    std::cerr << "edg-typer: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
