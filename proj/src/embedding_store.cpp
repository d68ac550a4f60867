#include "biascope/embedding_store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>

#include "biascope/error.hpp"
#include "biascope/io.hpp"

namespace biascope {

namespace {

void put_u32(char* dst, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) dst[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
}

std::uint32_t get_u32(const char* src) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(src[i])) << (8 * i);
  return v;
}

void encode_floats(std::span<const float> values, std::vector<char>& out) {
  out.resize(values.size() * 4);
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(out.data(), values.data(), out.size());
  } else {
    for (std::size_t i = 0; i < values.size(); ++i) put_u32(out.data() + 4 * i, std::bit_cast<std::uint32_t>(values[i]));
  }
}

void decode_floats(const char* src, std::span<float> out) {
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(out.data(), src, out.size() * 4);
  } else {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::bit_cast<float>(get_u32(src + 4 * i));
  }
}

nlohmann::ordered_json header_json(const StoreManifest& m) {
  nlohmann::ordered_json h;
  h["dim"] = m.dim;
  h["layer"] = m.layer;
  h["count"] = m.sentences.size();
  for (const auto& [k, v] : m.extra.items())
    if (k != "dim" && k != "layer" && k != "count") h[k] = v;
  return h;
}

}  // namespace

std::filesystem::path manifest_path(const std::filesystem::path& block) {
  std::filesystem::path p = block;
  if (p.extension() == ".cemb") p.replace_extension();
  p += ".manifest.jsonl";
  return p;
}

struct StoreWriter::Impl {
  std::filesystem::path block;
  StoreManifest manifest;
  io::AtomicFile file;
  std::set<std::string> seen;
  std::uint64_t next_offset = 0;
  bool finished = false;

  Impl(std::filesystem::path b, std::uint32_t dim, std::string layer, nlohmann::ordered_json extra)
      : block(b), file(b, true) {
    manifest.dim = dim;
    manifest.layer = std::move(layer);
    manifest.extra = std::move(extra);
  }
};

StoreWriter::StoreWriter(std::filesystem::path block, std::uint32_t dim, std::string layer,
                         nlohmann::ordered_json extra_header) {
  if (dim == 0) throw ValidationError("store dim must be positive");
  impl_ = std::make_unique<Impl>(std::move(block), dim, std::move(layer), std::move(extra_header));
  char header[kStoreHeaderBytes];
  std::memcpy(header, "CEMB", 4);
  put_u32(header + 4, kStoreVersion);
  put_u32(header + 8, dim);
  put_u32(header + 12, 0);
  impl_->file.stream().write(header, sizeof header);
}

StoreWriter::~StoreWriter() = default;

void StoreWriter::append(const std::string& id, const text::Tokens& tokens, const FloatMatrix& vectors) {
  auto& m = impl_->manifest;
  if (impl_->finished) throw ValidationError("store writer already finished");
  if (tokens.empty()) throw ValidationError("sentence '" + id + "' has no tokens");
  if (vectors.rows() != tokens.size() || vectors.cols() != m.dim)
    throw DimensionError("sentence '" + id + "': matrix is " + std::to_string(vectors.rows()) + "x" +
                         std::to_string(vectors.cols()) + ", expected " + std::to_string(tokens.size()) +
                         "x" + std::to_string(m.dim));
  if (!impl_->seen.insert(id).second) throw ValidationError("duplicate sentence id '" + id + "'");
  for (float v : vectors.data())
    if (!std::isfinite(v)) throw ValidationError("sentence '" + id + "' contains a non-finite value");

  std::vector<char> bytes;
  encode_floats(vectors.data(), bytes);
  impl_->file.stream().write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  m.sentences.push_back({id, tokens, impl_->next_offset});
  impl_->next_offset += vectors.data().size();
}

StoreManifest StoreWriter::finish() {
  auto& m = impl_->manifest;
  io::AtomicFile man(manifest_path(impl_->block));
  man.stream() << header_json(m).dump() << '\n';
  for (const auto& s : m.sentences) {
    nlohmann::ordered_json r;
    r["id"] = s.id;
    r["tokens"] = s.tokens;
    r["offset"] = s.offset;
    man.stream() << r.dump() << '\n';
  }
  impl_->file.commit();
  man.commit();
  impl_->finished = true;
  return m;
}

StoreManifest write_store(std::span<const StoreEntry> entries, std::uint32_t dim,
                          const std::filesystem::path& block, const std::string& layer) {
  StoreWriter w(block, dim, layer);
  for (const auto& e : entries) w.append(e.id, e.tokens, e.vectors);
  return w.finish();
}

struct EmbeddingStore::File {
  int fd = -1;
  std::uint64_t payload_floats = 0;
  ~File() {
    if (fd >= 0) ::close(fd);
  }
};

EmbeddingStore EmbeddingStore::open(const std::filesystem::path& block) {
  EmbeddingStore store;
  store.path_ = block;

  auto file = std::make_shared<File>();
  file->fd = ::open(block.c_str(), O_RDONLY);
  if (file->fd < 0) throw IoError("cannot open store " + block.string());
  char header[kStoreHeaderBytes];
  if (::pread(file->fd, header, sizeof header, 0) != static_cast<ssize_t>(sizeof header))
    throw FormatError(block.string() + ": truncated header");
  if (std::memcmp(header, "CEMB", 4) != 0) throw FormatError(block.string() + ": bad magic");
  if (get_u32(header + 4) != kStoreVersion)
    throw FormatError(block.string() + ": unsupported version " + std::to_string(get_u32(header + 4)));
  const std::uint32_t dim = get_u32(header + 8);
  if (dim == 0) throw FormatError(block.string() + ": dim is zero");
  const auto bytes = std::filesystem::file_size(block);
  if ((bytes - kStoreHeaderBytes) % 4 != 0) throw FormatError(block.string() + ": payload is not a whole number of floats");
  file->payload_floats = (bytes - kStoreHeaderBytes) / 4;

  auto lines = [&] {
    try {
      return io::read_jsonl(manifest_path(block));
    } catch (const ParseError& e) {
      throw FormatError(e.what());
    }
  }();
  if (lines.empty()) throw FormatError(block.string() + ": manifest is empty");
  auto& m = store.manifest_;
  try {
    const auto& h = lines[0];
    m.dim = h.at("dim").get<std::uint32_t>();
    m.layer = h.value("layer", std::string());
    const auto count = h.at("count").get<std::size_t>();
    for (const auto& [k, v] : h.items())
      if (k != "dim" && k != "layer" && k != "count") m.extra[k] = v;
    if (count != lines.size() - 1)
      throw FormatError(block.string() + ": manifest declares " + std::to_string(count) + " sentences but lists " +
                        std::to_string(lines.size() - 1));
    for (std::size_t i = 1; i < lines.size(); ++i) {
      SentenceRecord r;
      r.id = lines[i].at("id").get<std::string>();
      r.tokens = lines[i].at("tokens").get<text::Tokens>();
      r.offset = lines[i].at("offset").get<std::uint64_t>();
      m.sentences.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(block.string() + ": malformed manifest: " + e.what());
  }
  if (m.dim != dim)
    throw FormatError(block.string() + ": header dim " + std::to_string(dim) + " != manifest dim " + std::to_string(m.dim));

  std::uint64_t expected = 0;
  for (std::size_t i = 0; i < m.sentences.size(); ++i) {
    const auto& s = m.sentences[i];
    if (s.tokens.empty()) throw FormatError(block.string() + ": sentence '" + s.id + "' has no tokens");
    if (s.offset != expected)
      throw FormatError(block.string() + ": sentence '" + s.id + "' offset " + std::to_string(s.offset) +
                        ", expected " + std::to_string(expected));
    expected += s.tokens.size() * dim;
    if (!store.index_.emplace(s.id, i).second)
      throw FormatError(block.string() + ": duplicate sentence id '" + s.id + "'");
  }
  if (expected != file->payload_floats)
    throw FormatError(block.string() + ": manifest covers " + std::to_string(expected) + " floats, block holds " +
                      std::to_string(file->payload_floats));
  store.file_ = std::move(file);
  return store;
}

const SentenceRecord& EmbeddingStore::record(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw LookupError("sentence id '" + id + "' not in store " + path_.string());
  return manifest_.sentences[it->second];
}

std::vector<std::string> EmbeddingStore::ids() const {
  std::vector<std::string> out;
  out.reserve(size());
  for (const auto& s : manifest_.sentences) out.push_back(s.id);
  return out;
}

FloatMatrix EmbeddingStore::read_vectors(const std::string& id, std::optional<TokenRange> range) const {
  const auto& rec = record(id);
  const std::size_t n = rec.tokens.size();
  TokenRange r = range.value_or(TokenRange{0, n - 1});
  if (r.first > r.last || r.last >= n)
    throw RangeError("token range [" + std::to_string(r.first) + "," + std::to_string(r.last) +
                     "] outside sentence '" + id + "' of " + std::to_string(n) + " tokens");
  const std::size_t rows = r.last - r.first + 1;
  FloatMatrix out(rows, dim());
  std::vector<char> buf(rows * dim() * 4);
  const auto pos = static_cast<off_t>(kStoreHeaderBytes + 4 * (rec.offset + r.first * dim()));
  std::size_t done = 0;
  while (done < buf.size()) {
    ssize_t got = ::pread(file_->fd, buf.data() + done, buf.size() - done, pos + static_cast<off_t>(done));
    if (got <= 0) throw IoError("short read from " + path_.string());
    done += static_cast<std::size_t>(got);
  }
  decode_floats(buf.data(), out.data());
  return out;
}

AlignedPair align_pair(const EmbeddingStore& a, const EmbeddingStore& b, const std::string& id) {
  if (a.dim() != b.dim())
    throw FormatError("stores have different dims (" + std::to_string(a.dim()) + " vs " + std::to_string(b.dim()) + ")");
  const auto& ra = a.record(id);
  const auto& rb = b.record(id);
  if (ra.tokens.size() != rb.tokens.size())
    throw AlignmentError("sentence '" + id + "': " + std::to_string(ra.tokens.size()) + " tokens [" +
                         text::join(ra.tokens) + "] vs " + std::to_string(rb.tokens.size()) + " tokens [" +
                         text::join(rb.tokens) + "]");
  return {id, ra.tokens, rb.tokens, a.read_vectors(id), b.read_vectors(id)};
}

}  // namespace biascope
