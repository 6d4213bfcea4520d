#pragma once

#include <filesystem>
#include <mutex>
#include <string>
#include <vector>

#include "counsel/domain.hpp"

namespace counsel {

// Content address of an arc: first 16 hex digits of the SHA-256 of its JSON.
std::string arc_content_id(const ArcRecord& arc);

class ArcStore {
 public:
  virtual ~ArcStore() = default;
  // Returns the content-derived id. Throws StorageError.
  virtual std::string persist(const ArcRecord& arc) = 0;
  // Throws NotFound or CorruptRecord.
  virtual ArcRecord load(const std::string& arc_id) const = 0;
  virtual std::vector<std::string> list() const = 0;
};

// Layout under the root directory:
//   arcs/<id>.json              {"id", "sha256", "arc"}
//   arcs/<id>.transcript.jsonl  one line per turn
//   arcs/<id>.decisions.jsonl   one line per therapy decision
//   cases/<id>.json             registered case files
// Every file is written to a temporary name and renamed into place.
class FileArcStore : public ArcStore {
 public:
  explicit FileArcStore(std::filesystem::path root);

  std::string persist(const ArcRecord& arc) override;
  ArcRecord load(const std::string& arc_id) const override;
  std::vector<std::string> list() const override;

  void save_case(const CaseFile& c);
  CaseFile load_case(const std::string& case_id) const;
  std::vector<std::string> list_cases() const;

  const std::filesystem::path& root() const noexcept { return root_; }

 private:
  std::filesystem::path root_;
  mutable std::mutex mutex_;
};

// Writes `contents` to `path` through a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace counsel
