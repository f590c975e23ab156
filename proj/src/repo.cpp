#include <algorithm>
#include <cstdint>
#include <fstream>
#include <sstream>

#include "edgtyper/error.hpp"
#include "edgtyper/frontend.hpp"

namespace edgtyper {

namespace fs = std::filesystem;

namespace {

bool valid_utf8(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    auto c = static_cast<unsigned char>(s[i]);
    std::size_t n = c < 0x80 ? 1 : (c >> 5) == 0x6 ? 2 : (c >> 4) == 0xE ? 3 : (c >> 3) == 0x1E ? 4 : 0;
    if (n == 0 || i + n > s.size()) return false;
    for (std::size_t k = 1; k < n; ++k)
      if ((static_cast<unsigned char>(s[i + k]) >> 6) != 0x2) return false;
    i += n;
  }
  return true;
}

bool skipped_dir(const fs::path& p) {
  std::string name = p.filename().string();
  return name == ".git" || name == "__pycache__" || name == ".mypy_cache" ||
         name == ".venv" || name == "venv" || name == "node_modules";
}

}  // namespace

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Io: return "IoError";
    case ErrorKind::Encoding: return "EncodingError";
    case ErrorKind::NoPythonFiles: return "NoPythonFiles";
    case ErrorKind::Parse: return "ParseError";
    case ErrorKind::UnknownSlot: return "UnknownSlot";
    case ErrorKind::InvalidTypeExpression: return "InvalidTypeExpression";
    case ErrorKind::UnknownEntityRef: return "UnknownEntityRef";
    case ErrorKind::OracleUnavailable: return "OracleUnavailable";
    case ErrorKind::MalformedResponse: return "MalformedResponse";
    case ErrorKind::OversizeCluster: return "OversizeCluster";
    case ErrorKind::CheckerMissing: return "CheckerMissing";
    case ErrorKind::CheckerCrashed: return "CheckerCrashed";
    case ErrorKind::NonConverging: return "NonConverging";
    case ErrorKind::CorruptCheckpoint: return "CorruptCheckpoint";
    case ErrorKind::SlotUniverseMismatch: return "SlotUniverseMismatch";
    case ErrorKind::Config: return "ConfigError";
  }
  return "Error";
}

const SourceFile* SourceRepo::find(std::string_view path) const {
  auto it = std::lower_bound(files.begin(), files.end(), path,
                             [](const SourceFile& f, std::string_view p) { return f.path < p; });
  return it != files.end() && it->path == path ? &*it : nullptr;
}

SourceFile* SourceRepo::find(std::string_view path) {
  return const_cast<SourceFile*>(std::as_const(*this).find(path));
}

SourceRepo load_repo(const fs::path& root) {
  std::error_code ec;
  if (!fs::is_directory(root, ec))
    throw Error(ErrorKind::Io, "cannot read repository root: " + root.string());
  SourceRepo repo;
  repo.root = root;
  fs::recursive_directory_iterator it(root, fs::directory_options::skip_permission_denied, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot read repository root: " + root.string());
  for (; it != fs::recursive_directory_iterator(); it.increment(ec)) {
    if (ec) throw Error(ErrorKind::Io, ec.message());
    const fs::path& p = it->path();
    if (it->is_directory() && skipped_dir(p)) {
      it.disable_recursion_pending();
      continue;
    }
    if (!it->is_regular_file() || p.extension() != ".py") continue;
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot read " + p.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    std::string rel = fs::relative(p, root).lexically_normal().generic_string();
    std::string text = buf.str();
    if (!valid_utf8(text)) throw Error(ErrorKind::Encoding, "file is not UTF-8: " + rel);
    repo.files.push_back({std::move(rel), std::move(text)});
  }
  if (repo.files.empty())
    throw Error(ErrorKind::NoPythonFiles, "no .py files under " + root.string());
  std::sort(repo.files.begin(), repo.files.end(),
            [](const SourceFile& a, const SourceFile& b) { return a.path < b.path; });
  return repo;
}

void write_repo(const SourceRepo& repo, const fs::path& dir) {
  for (const SourceFile& f : repo.files) {
    fs::path target = dir / f.path;
    fs::create_directories(target.parent_path());
    {
      std::ifstream in(target, std::ios::binary);
      if (in) {
        std::ostringstream buf;
        buf << in.rdbuf();
        if (buf.str() == f.text) continue;
      }
    }
    std::ofstream out(target, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + target.string());
    out << f.text;
  }
}

std::string module_name_for(std::string_view path) {
  std::string p(path);
  if (p.size() > 3 && p.ends_with(".py")) p.resize(p.size() - 3);
  if (p == "__init__") return "";
  if (p.ends_with("/__init__")) p.resize(p.size() - 9);
  std::replace(p.begin(), p.end(), '/', '.');
  return p;
}

std::string repo_fingerprint(const SourceRepo& repo) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](std::string_view s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    h ^= 0xff;
    h *= 1099511628211ULL;
  };
  for (const SourceFile& f : repo.files) {
    mix(f.path);
    mix(f.text);
  }
  std::ostringstream out;
  out << std::hex << h;
  return out.str();
}

}  // namespace edgtyper
