#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "biascope/matrix.hpp"
#include "biascope/text.hpp"

namespace biascope {

// Block file: 16-byte header ("CEMB", u32 version=1, u32 dim, u32 reserved),
// then f32 little-endian payload. The manifest lives next to it (see
// manifest_path) as JSONL: a header {"dim","layer","count",...} followed by
// one {"id","tokens","offset"} object per sentence; offsets count floats.
inline constexpr std::uint32_t kStoreVersion = 1;
inline constexpr std::size_t kStoreHeaderBytes = 16;

// "a.cemb" -> "a.manifest.jsonl"
std::filesystem::path manifest_path(const std::filesystem::path& block);

struct SentenceRecord {
  std::string id;
  text::Tokens tokens;
  std::uint64_t offset = 0;  // index of the first float of this sentence
};

struct StoreManifest {
  std::uint32_t dim = 0;
  std::string layer;
  std::vector<SentenceRecord> sentences;
  nlohmann::ordered_json extra = nlohmann::ordered_json::object();  // extra header keys
};

struct StoreEntry {
  std::string id;
  text::Tokens tokens;
  FloatMatrix vectors;  // tokens.size() x dim
};

// Streams sentences into a new store. Files appear atomically on finish().
class StoreWriter {
 public:
  StoreWriter(std::filesystem::path block, std::uint32_t dim, std::string layer,
              nlohmann::ordered_json extra_header = nlohmann::ordered_json::object());
  ~StoreWriter();
  StoreWriter(const StoreWriter&) = delete;
  StoreWriter& operator=(const StoreWriter&) = delete;

  void append(const std::string& id, const text::Tokens& tokens, const FloatMatrix& vectors);
  StoreManifest finish();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

StoreManifest write_store(std::span<const StoreEntry> entries, std::uint32_t dim,
                          const std::filesystem::path& block, const std::string& layer = "unspecified");

struct TokenRange {
  std::size_t first;
  std::size_t last;  // inclusive
};

// Read-only view of a store. Opening reads only the manifest and validates it
// against the block size; vectors are fetched with positioned reads, so one
// store may be shared by concurrent readers.
class EmbeddingStore {
 public:
  static EmbeddingStore open(const std::filesystem::path& block);

  std::uint32_t dim() const noexcept { return manifest_.dim; }
  const std::string& layer() const noexcept { return manifest_.layer; }
  std::size_t size() const noexcept { return manifest_.sentences.size(); }
  const StoreManifest& manifest() const noexcept { return manifest_; }
  const std::filesystem::path& path() const noexcept { return path_; }

  bool contains(const std::string& id) const { return index_.count(id) != 0; }
  const SentenceRecord& record(const std::string& id) const;
  std::vector<std::string> ids() const;

  FloatMatrix read_vectors(const std::string& id, std::optional<TokenRange> range = std::nullopt) const;

 private:
  struct File;
  std::filesystem::path path_;
  StoreManifest manifest_;
  std::map<std::string, std::size_t> index_;
  std::shared_ptr<const File> file_;
};

struct AlignedPair {
  std::string sentence_id;
  text::Tokens tokens_a, tokens_b;
  FloatMatrix vectors_a, vectors_b;
};

AlignedPair align_pair(const EmbeddingStore& a, const EmbeddingStore& b, const std::string& id);

}  // namespace biascope
