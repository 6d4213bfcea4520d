#include "counsel/store.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <fstream>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "counsel/errors.hpp"
#include "counsel/json_io.hpp"
#include "counsel/text.hpp"

namespace counsel {

namespace fs = std::filesystem;

namespace {

bool safe_id(const std::string& id) {
  if (id.empty() || id.size() > 128) return false;
  for (char c : id) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') return false;
  }
  return true;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw StorageError(fmt::format("cannot create directory '{}': {}", dir.string(), ec.message()));
  }
}

std::vector<std::string> stems(const fs::path& dir, std::string_view suffix) {
  std::vector<std::string> out;
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) return out;
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    auto name = entry.path().filename().string();
    if (name.size() > suffix.size() && name.ends_with(suffix) &&
        name.find('.') == name.size() - suffix.size()) {
      out.push_back(name.substr(0, name.size() - suffix.size()));
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

void write_file_atomic(const fs::path& path, const std::string& contents) {
  static std::atomic<unsigned> counter{0};
  auto tmp = path;
  tmp += fmt::format(".tmp{}.{}", std::hash<std::thread::id>{}(std::this_thread::get_id()) % 100000, counter++);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw StorageError(fmt::format("cannot write '{}'", tmp.string()));
    out << contents;
    out.flush();
    if (!out) {
      std::error_code ignored;
      fs::remove(tmp, ignored);
      throw StorageError(fmt::format("short write to '{}'", tmp.string()));
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    std::error_code ignored;
    fs::remove(tmp, ignored);
    throw StorageError(fmt::format("cannot move '{}' into place: {}", path.string(), ec.message()));
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFound(fmt::format("cannot read '{}'", path.string()));
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::string arc_content_id(const ArcRecord& arc) {
  return text::sha256_hex(to_json(arc).dump()).substr(0, 16);
}

FileArcStore::FileArcStore(fs::path root) : root_(std::move(root)) {}

std::string FileArcStore::persist(const ArcRecord& arc) {
  const Json body = to_json(arc);
  const auto dump = body.dump();
  const auto sha = text::sha256_hex(dump);
  const auto id = sha.substr(0, 16);

  Json envelope;
  envelope["id"] = id;
  envelope["sha256"] = sha;
  envelope["arc"] = body;

  std::ostringstream transcript;
  write_transcript_jsonl(transcript, id, arc);
  std::ostringstream decisions;
  write_decisions_jsonl(decisions, id, arc);

  std::lock_guard lock(mutex_);
  const auto dir = root_ / "arcs";
  ensure_dir(dir);
  write_file_atomic(dir / (id + ".transcript.jsonl"), transcript.str());
  write_file_atomic(dir / (id + ".decisions.jsonl"), decisions.str());
  write_file_atomic(dir / (id + ".json"), envelope.dump(2) + "\n");
  return id;
}

ArcRecord FileArcStore::load(const std::string& arc_id) const {
  if (!safe_id(arc_id)) throw NotFound(fmt::format("no arc '{}'", arc_id));
  const auto path = root_ / "arcs" / (arc_id + ".json");
  std::string raw;
  {
    std::lock_guard lock(mutex_);
    if (!fs::exists(path)) throw NotFound(fmt::format("no arc '{}'", arc_id));
    raw = read_file(path);
  }
  Json envelope = Json::parse(raw, nullptr, false);
  if (envelope.is_discarded() || !envelope.is_object() || !envelope.contains("arc") || !envelope.contains("sha256")) {
    throw CorruptRecord(fmt::format("arc '{}' is not a valid record", arc_id));
  }
  const auto& body = envelope["arc"];
  const auto sha = text::sha256_hex(body.dump());
  if (!envelope["sha256"].is_string() || sha != envelope["sha256"].get<std::string>() || sha.substr(0, 16) != arc_id) {
    throw CorruptRecord(fmt::format("arc '{}' fails its hash check", arc_id));
  }
  try {
    return arc_from_json(body);
  } catch (const std::exception& e) {
    throw CorruptRecord(fmt::format("arc '{}' cannot be decoded: {}", arc_id, e.what()));
  }
}

std::vector<std::string> FileArcStore::list() const {
  std::lock_guard lock(mutex_);
  return stems(root_ / "arcs", ".json");
}

void FileArcStore::save_case(const CaseFile& c) {
  if (!safe_id(c.id)) throw StorageError(fmt::format("case id '{}' is not storable", c.id));
  std::lock_guard lock(mutex_);
  const auto dir = root_ / "cases";
  ensure_dir(dir);
  write_file_atomic(dir / (c.id + ".json"), to_json(c).dump(2) + "\n");
}

CaseFile FileArcStore::load_case(const std::string& case_id) const {
  if (!safe_id(case_id)) throw NotFound(fmt::format("no case '{}'", case_id));
  const auto path = root_ / "cases" / (case_id + ".json");
  std::string raw;
  {
    std::lock_guard lock(mutex_);
    if (!fs::exists(path)) throw NotFound(fmt::format("no case '{}'", case_id));
    raw = read_file(path);
  }
  Json j = Json::parse(raw, nullptr, false);
  if (j.is_discarded()) throw CorruptRecord(fmt::format("case '{}' is not valid JSON", case_id));
  return validate_case(j, case_id);
}

std::vector<std::string> FileArcStore::list_cases() const {
  std::lock_guard lock(mutex_);
  return stems(root_ / "cases", ".json");
}

}  // namespace counsel
