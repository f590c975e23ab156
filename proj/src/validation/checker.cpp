#include <fcntl.h>
#include <poll.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <cstring>
#include <regex>

#include "edgtyper/error.hpp"
#include "edgtyper/python/syntax.hpp"
#include "edgtyper/validation.hpp"

extern char** environ;

namespace edgtyper {

namespace fs = std::filesystem;

std::set<std::string> default_ignored_codes() { return {"var-annotated", "assignment", "has-type"}; }

std::string to_string(const Diagnostic& d) {
  return d.file + ":" + std::to_string(d.line) + ": error: " + d.message + "  [" + d.code + "]";
}

ProcessResult run_process(const std::vector<std::string>& argv, const fs::path& cwd) {
  int out_pipe[2], err_pipe[2];
  if (pipe(out_pipe) != 0 || pipe(err_pipe) != 0)
    throw Error(ErrorKind::Io, std::string("pipe: ") + std::strerror(errno));
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, out_pipe[1], STDOUT_FILENO);
  posix_spawn_file_actions_adddup2(&actions, err_pipe[1], STDERR_FILENO);
  posix_spawn_file_actions_addclose(&actions, out_pipe[0]);
  posix_spawn_file_actions_addclose(&actions, err_pipe[0]);
  posix_spawn_file_actions_addopen(&actions, STDIN_FILENO, "/dev/null", O_RDONLY, 0);
  if (!cwd.empty()) posix_spawn_file_actions_addchdir_np(&actions, cwd.c_str());
  std::vector<char*> args;
  for (const std::string& a : argv) args.push_back(const_cast<char*>(a.c_str()));
  args.push_back(nullptr);
  pid_t pid = 0;
  int rc = posix_spawnp(&pid, args[0], &actions, nullptr, args.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  close(out_pipe[1]);
  close(err_pipe[1]);
  if (rc != 0) {
    close(out_pipe[0]);
    close(err_pipe[0]);
    throw Error(ErrorKind::CheckerMissing,
                "cannot start " + argv.front() + ": " + std::strerror(rc));
  }
  ProcessResult result;
  pollfd fds[2] = {{out_pipe[0], POLLIN, 0}, {err_pipe[0], POLLIN, 0}};
  std::string* sinks[2] = {&result.out, &result.err};
  int open_fds = 2;
  char buf[65536];
  while (open_fds > 0) {
    if (poll(fds, 2, -1) < 0) {
      if (errno == EINTR) continue;
      break;
    }
    for (int i = 0; i < 2; ++i) {
      if (fds[i].fd < 0 || !(fds[i].revents & (POLLIN | POLLHUP | POLLERR))) continue;
      ssize_t n = read(fds[i].fd, buf, sizeof buf);
      if (n > 0) {
        sinks[i]->append(buf, static_cast<std::size_t>(n));
      } else {
        close(fds[i].fd);
        fds[i].fd = -1;
        --open_fds;
      }
    }
  }
  int status = 0;
  while (waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
  if (result.exit_code == 127 && result.out.empty())
    throw Error(ErrorKind::CheckerMissing, "cannot run " + argv.front() + ": " + result.err);
  return result;
}

std::vector<Diagnostic> parse_checker_output(std::string_view output) {
  static const std::regex line_re(
      R"(^(.+?):(\d+)(?::\d+)?: (error|note|warning): (.*?)(?:  \[([A-Za-z0-9_-]+)\])?\s*$)");
  std::vector<Diagnostic> out;
  bool last_was_error = false;
  std::size_t pos = 0;
  while (pos < output.size()) {
    std::size_t nl = output.find('\n', pos);
    std::string line(output.substr(pos, nl == std::string_view::npos ? nl : nl - pos));
    pos = nl == std::string_view::npos ? output.size() : nl + 1;
    std::smatch m;
    if (!std::regex_match(line, m, line_re)) continue;
    std::string file = m[1].str();
    if (file.starts_with("./")) file = file.substr(2);
    if (m[3] == "note") {
      if (last_was_error && !out.empty()) out.back().message += " | " + m[4].str();
      continue;
    }
    if (m[3] != "error") {
      last_was_error = false;
      continue;
    }
    out.push_back({file, std::stoi(m[2].str()), m[5].matched ? m[5].str() : "misc", m[4].str()});
    last_was_error = true;
  }
  return out;
}

namespace {

std::vector<std::string> checker_argv(const CheckerConfig& config, const fs::path& cache) {
  std::vector<std::string> argv = {config.path,          "--no-error-summary",
                                   "--show-error-codes", "--ignore-missing-imports",
                                   "--check-untyped-defs", "--no-color-output",
                                   "--cache-dir",        cache.string()};
  argv.insert(argv.end(), config.extra_flags.begin(), config.extra_flags.end());
  argv.push_back(".");
  return argv;
}

std::vector<Diagnostic> run_in(const fs::path& dir, const fs::path& cache,
                               const CheckerConfig& config) {
  ProcessResult r = run_process(checker_argv(config, cache), dir);
  std::vector<Diagnostic> diags = parse_checker_output(r.out);
  if (r.exit_code != 0 && r.exit_code != 1 && diags.empty())
    throw Error(ErrorKind::CheckerCrashed, "checker exited with " + std::to_string(r.exit_code) +
                                               ": " + r.err + r.out);
  if (r.exit_code == 1 && diags.empty() && !r.out.empty())
    throw Error(ErrorKind::CheckerCrashed, "unparseable checker output: " + r.out);
  std::vector<Diagnostic> kept;
  for (Diagnostic& d : diags)
    if (!config.ignored_codes.count(d.code)) kept.push_back(std::move(d));
  std::sort(kept.begin(), kept.end());
  kept.erase(std::unique(kept.begin(), kept.end()), kept.end());
  return kept;
}

fs::path make_temp_dir(const char* prefix) {
  std::string tmpl = (fs::temp_directory_path() / (std::string(prefix) + "XXXXXX")).string();
  if (!mkdtemp(tmpl.data())) throw Error(ErrorKind::Io, "cannot create temporary directory");
  return tmpl;
}

}  // namespace

std::vector<Diagnostic> run_checker(const fs::path& dir, const CheckerConfig& config) {
  fs::path cache = config.cache_dir;
  bool temp = cache.empty();
  if (temp) cache = make_temp_dir("edgtyper-cache-");
  try {
    auto diags = run_in(dir, cache, config);
    if (temp) fs::remove_all(cache);
    return diags;
  } catch (...) {
    std::error_code ec;
    if (temp) fs::remove_all(cache, ec);
    throw;
  }
}

std::string checker_version(const CheckerConfig& config) {
  ProcessResult r = run_process({config.path, "--version"}, {});
  if (r.exit_code != 0) throw Error(ErrorKind::CheckerMissing, config.path + " --version failed");
  std::string v = r.out;
  while (!v.empty() && (v.back() == '\n' || v.back() == ' ')) v.pop_back();
  return v;
}

WorkingCopy::WorkingCopy(fs::path dir) {
  if (dir.empty()) {
    fs::path root = make_temp_dir("edgtyper-wc-");
    dir_ = root / "repo";
    cache_ = root / "cache";
    owned_ = true;
  } else {
    dir_ = dir;
    cache_ = dir.parent_path() / (dir.filename().string() + ".cache");
  }
  fs::create_directories(dir_);
  fs::create_directories(cache_);
}

WorkingCopy::~WorkingCopy() {
  std::error_code ec;
  if (owned_) fs::remove_all(dir_.parent_path(), ec);
}

void WorkingCopy::sync(const SourceRepo& repo) {
  write_repo(repo, dir_);
  repo_ = repo;
  repo_.root = dir_;
}

std::vector<Diagnostic> WorkingCopy::check(const CheckerConfig& config) const {
  CheckerConfig c = config;
  fs::path cache = c.cache_dir.empty() ? cache_ : c.cache_dir;
  return run_in(dir_, cache, c);
}

std::size_t suppress_diagnostics(SourceRepo& repo, const std::vector<Diagnostic>& diags) {
  std::map<std::string, std::set<int>> lines;
  for (const Diagnostic& d : diags) lines[d.file].insert(d.line);
  std::size_t added = 0;
  for (auto& [path, wanted] : lines) {
    SourceFile* f = repo.find(path);
    if (!f) continue;
    std::unique_ptr<python::Module> m;
    try {
      m = std::make_unique<python::Module>(f->text);
    } catch (const python::SyntaxError&) {
      continue;
    }
    // Line start offsets.
    std::vector<std::size_t> starts = {0};
    for (std::size_t i = 0; i < f->text.size(); ++i)
      if (f->text[i] == '\n') starts.push_back(i + 1);
    std::vector<std::pair<std::size_t, std::string>> inserts;
    for (int line : wanted) {
      if (line < 1 || line > static_cast<int>(starts.size())) continue;
      // Lines inside a multi-line string cannot carry a comment.
      bool in_string = false;
      for (const python::Token& t : m->tokens())
        if (t.kind == python::TokenKind::String && t.line <= line && t.end_line > line)
          in_string = true;
      if (in_string) continue;
      std::size_t begin = starts[line - 1];
      std::size_t end = f->text.find('\n', begin);
      if (end == std::string::npos) end = f->text.size();
      const python::Comment* comment = nullptr;
      for (const python::Comment& c : m->comments())
        if (c.line == line) comment = &c;
      if (comment) {
        std::string_view text(f->text.data() + comment->begin, comment->end - comment->begin);
        if (text.find("type: ignore") != std::string_view::npos) continue;
        inserts.push_back({comment->begin, "# type: ignore  "});
      } else {
        std::size_t at = end;
        while (at > begin && (f->text[at - 1] == ' ' || f->text[at - 1] == '\t' ||
                              f->text[at - 1] == '\r'))
          --at;
        if (at > begin && f->text[at - 1] == '\\') continue;
        inserts.push_back({at, "  # type: ignore"});
      }
    }
    std::sort(inserts.rbegin(), inserts.rend());
    for (const auto& [at, text] : inserts) f->text.insert(at, text);
    added += inserts.size();
  }
  return added;
}

BaselineResult prepare_baseline(const SourceRepo& repo, const CheckerConfig& config, bool strip) {
  BaselineResult result;
  result.repo = strip ? strip_annotations(repo).repo : repo;
  WorkingCopy wc;
  std::vector<Diagnostic> diags;
  for (int pass = 1; pass <= kMaxBaselinePasses; ++pass) {
    result.passes = pass;
    wc.sync(result.repo);
    diags = wc.check(config);
    if (diags.empty()) {
      result.repo.root = repo.root;
      return result;
    }
    std::size_t added = suppress_diagnostics(result.repo, diags);
    result.suppressions += added;
    if (added == 0) break;
  }
  std::string listing;
  for (const Diagnostic& d : diags) listing += "\n  " + to_string(d);
  throw Error(ErrorKind::NonConverging,
              "baseline still has " + std::to_string(diags.size()) + " diagnostics:" + listing);
}

}  // namespace edgtyper
