#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace biascope::io {

// Writes to a sibling temp file; commit() renames it over the target. If the
// object dies uncommitted the temp file is removed and the target untouched.
class AtomicFile {
 public:
  explicit AtomicFile(std::filesystem::path target, bool binary = false);
  ~AtomicFile();
  AtomicFile(const AtomicFile&) = delete;
  AtomicFile& operator=(const AtomicFile&) = delete;

  std::ofstream& stream() { return out_; }
  void commit();

 private:
  std::filesystem::path target_;
  std::filesystem::path temp_;
  std::ofstream out_;
  bool committed_ = false;
};

void write_text_atomic(const std::filesystem::path& path, std::string_view content);

std::string read_text(const std::filesystem::path& path);

// Parses a JSONL file; blank lines are skipped. Throws ParseError with line numbers.
std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);

}  // namespace biascope::io
