#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "nightday/core/digest.hpp"
#include "nightday/core/error.hpp"
#include "nightday/nn/layers.hpp"

namespace nightday::nn {

// Single-file keyed tensor archive:
//
//   magic[4] | u16 version | u32 meta_len | meta (UTF-8 "key=value\n", sorted)
//   | u32 tensor_count | { u32 name_len | name | u32 rank | u32 dims[rank] | f32 values[] }*
//   | u64 FNV-1a of every preceding byte
//
// All integers and floats are little-endian.

inline constexpr std::uint16_t kArchiveVersion = 1;

struct TensorRecord {
  std::string name;
  std::vector<std::uint32_t> dims;
  std::vector<float> values;

  friend bool operator==(const TensorRecord&, const TensorRecord&) = default;
};

struct TensorArchive {
  std::string magic;  // exactly four bytes
  std::map<std::string, std::string> metadata;
  std::vector<TensorRecord> tensors;

  const TensorRecord* find(std::string_view name) const {
    for (const auto& t : tensors) {
      if (t.name == name) return &t;
    }
    return nullptr;
  }

  const std::string& meta(const std::string& key) const {
    auto it = metadata.find(key);
    if (it == metadata.end()) throw CheckpointError(CheckpointErrc::malformed, "missing metadata key '" + key + "'");
    return it->second;
  }
};

namespace detail {

class ByteWriter {
 public:
  void u16(std::uint16_t v) { put(v, 2); }
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void bytes(std::string_view s) { out_.append(s); }
  std::string& str() { return out_; }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  std::string out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view data) : data_(data) {}

  std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string_view bytes(std::size_t n) {
    need(n);
    auto s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }
  void need(std::size_t n) const {
    if (remaining() < n) throw CheckpointError(CheckpointErrc::truncated, "unexpected end of file");
  }

 private:
  std::uint64_t get(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  std::string_view data_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::string encode_archive(const TensorArchive& archive) {
  if (archive.magic.size() != 4) throw ArgumentError("archive magic must be four bytes");
  detail::ByteWriter w;
  w.bytes(archive.magic);
  w.u16(kArchiveVersion);
  std::string meta;
  for (const auto& [k, v] : archive.metadata) {
    if (k.empty() || k.find_first_of("=\n") != std::string::npos || v.find('\n') != std::string::npos)
      throw ArgumentError("archive metadata entry '" + k + "' is not representable");
    meta += k + "=" + v + "\n";
  }
  w.u32(static_cast<std::uint32_t>(meta.size()));
  w.bytes(meta);
  w.u32(static_cast<std::uint32_t>(archive.tensors.size()));
  for (const auto& t : archive.tensors) {
    std::size_t expect = 1;
    for (auto d : t.dims) expect *= d;
    if (expect != t.values.size()) throw ShapeError("archive tensor '" + t.name + "' has inconsistent dims");
    w.u32(static_cast<std::uint32_t>(t.name.size()));
    w.bytes(t.name);
    w.u32(static_cast<std::uint32_t>(t.dims.size()));
    for (auto d : t.dims) w.u32(d);
    for (float v : t.values) w.f32(v);
  }
  Fnv1a64 h;
  h.update(w.str());
  w.u64(h.value());
  return std::move(w.str());
}

inline TensorArchive decode_archive(std::string_view bytes, std::string_view expected_magic) {
  detail::ByteReader r(bytes);
  TensorArchive a;
  a.magic = std::string(r.bytes(4));
  if (a.magic != expected_magic)
    throw CheckpointError(CheckpointErrc::bad_magic, "expected magic '" + std::string(expected_magic) + "'");
  const std::uint16_t version = r.u16();
  if (version != kArchiveVersion)
    throw CheckpointError(CheckpointErrc::unsupported_version, "format version " + std::to_string(version));
  const std::uint32_t meta_len = r.u32();
  std::istringstream meta{std::string(r.bytes(meta_len))};
  for (std::string line; std::getline(meta, line);) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw CheckpointError(CheckpointErrc::malformed, "metadata line without '='");
    a.metadata[line.substr(0, eq)] = line.substr(eq + 1);
  }
  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    TensorRecord t;
    t.name = std::string(r.bytes(r.u32()));
    const std::uint32_t rank = r.u32();
    r.need(std::size_t{4} * rank);
    std::uint64_t n = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      t.dims.push_back(r.u32());
      n *= t.dims.back();
      if (n > r.remaining()) throw CheckpointError(CheckpointErrc::truncated, "tensor '" + t.name + "' exceeds file");
    }
    r.need(4 * n);
    t.values.resize(n);
    for (auto& v : t.values) v = r.f32();
    a.tensors.push_back(std::move(t));
  }
  const std::size_t body = r.position();
  const std::uint64_t stored = r.u64();
  if (r.remaining() != 0) throw CheckpointError(CheckpointErrc::malformed, "trailing bytes after checksum");
  Fnv1a64 h;
  h.update(bytes.substr(0, body));
  if (h.value() != stored) throw CheckpointError(CheckpointErrc::checksum_mismatch, "content checksum differs");
  return a;
}

inline void write_archive(const std::filesystem::path& path, const TensorArchive& archive) {
  const std::string bytes = encode_archive(archive);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError(CheckpointErrc::io, "cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError(CheckpointErrc::io, "write failed for '" + path.string() + "'");
}

inline TensorArchive read_archive(const std::filesystem::path& path, std::string_view expected_magic) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError(CheckpointErrc::io, "cannot open '" + path.string() + "'");
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_archive(bytes, expected_magic);
}

template <class T>
TensorRecord to_record(const Param<T>& p) {
  TensorRecord r;
  r.name = p.name;
  for (int d : p.value.shape()) r.dims.push_back(static_cast<std::uint32_t>(d));
  r.values.reserve(p.value.size());
  for (T v : p.value.values()) r.values.push_back(static_cast<float>(v));
  return r;
}

/// Copies archived values into `params`, matching by name and shape.
template <class T>
void assign_from(const TensorArchive& archive, const std::vector<Param<T>*>& params) {
  for (Param<T>* p : params) {
    const TensorRecord* r = archive.find(p->name);
    if (!r) throw CheckpointError(CheckpointErrc::malformed, "missing tensor '" + p->name + "'");
    std::vector<int> shape(r->dims.begin(), r->dims.end());
    if (shape != p->value.shape())
      throw CheckpointError(CheckpointErrc::malformed, "tensor '" + p->name + "' has unexpected shape");
    for (std::size_t i = 0; i < r->values.size(); ++i) p->value[i] = static_cast<T>(r->values[i]);
  }
}

}  // namespace nightday::nn
