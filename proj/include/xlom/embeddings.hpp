// Copyright 2026 The xlom Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "xlom/error.hpp"

namespace xlom::embeddings {

// On-disk layout (all integers little-endian, no padding):
//
//   offset  size  field
//   0       4     magic "EMB1"
//   4       2     version (u16) = 1
//   6       4     dim (u32) > 0
//   10      8     count (u64)
//   18      1     normalized flag (u8, 0 or 1)
//   19      4     encoder tag byte length (u32)
//   23      n     encoder tag, UTF-8
//   23+n    ...   count * dim IEEE-754 binary32 values, row-major
//
// Row ids live in a sidecar text file, one id per line, line i <-> row i.
inline constexpr std::array<char, 4> kMagic = {'E', 'M', 'B', '1'};
inline constexpr std::uint16_t kVersion = 1;
inline constexpr double kNormTolerance = 1e-4;

struct EmbeddingHeader {
  std::uint16_t version = kVersion;
  std::uint32_t dim = 0;
  std::uint64_t count = 0;
  bool normalized = false;
  std::string encoder_tag;
};

class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  explicit EmbeddingMatrix(std::size_t dim, std::string encoder_tag = {})
      : dim_(dim), encoder_tag_(std::move(encoder_tag)) {
    require(dim > 0, "embedding dim must be positive");
  }

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return ids_.size(); }
  bool empty() const noexcept { return ids_.empty(); }
  bool normalized() const noexcept { return normalized_; }
  const std::string& encoder_tag() const noexcept { return encoder_tag_; }
  const std::vector<std::string>& ids() const noexcept { return ids_; }
  std::span<const float> data() const noexcept { return data_; }

  std::span<const float> row(std::size_t i) const { return {data_.data() + i * dim_, dim_}; }

  void append(std::string id, std::span<const float> values) {
    require(values.size() == dim_, "row '", id, "' has ", values.size(), " components, expected ", dim_);
    ids_.push_back(std::move(id));
    data_.insert(data_.end(), values.begin(), values.end());
  }

  void set_normalized(bool flag) noexcept { normalized_ = flag; }
  void set_encoder_tag(std::string tag) { encoder_tag_ = std::move(tag); }

  // Row index by id; throws if absent.
  std::size_t index_of(const std::string& id) const {
    build_index();
    auto it = index_.find(id);
    require(it != index_.end(), "embedding id '", id, "' not found");
    return it->second;
  }

  bool contains(const std::string& id) const {
    build_index();
    return index_.contains(id);
  }

  // Checks unique ids and finite components; row index reported on failure.
  void validate() const {
    std::unordered_set<std::string_view> seen;
    for (std::size_t i = 0; i < ids_.size(); ++i) {
      require(seen.insert(ids_[i]).second, "duplicate id '", ids_[i], "' at row ", i);
      for (float v : row(i)) require(std::isfinite(v), "non-finite component at row ", i);
    }
  }

  // Scales every row to unit L2 norm. Zero rows are an error.
  void normalize() {
    for (std::size_t i = 0; i < size(); ++i) {
      auto* r = data_.data() + i * dim_;
      double sq = 0.0;
      for (std::size_t d = 0; d < dim_; ++d) sq += static_cast<double>(r[d]) * r[d];
      require(sq > 0.0, "zero vector at row ", i, " cannot be normalized");
      const double inv = 1.0 / std::sqrt(sq);
      for (std::size_t d = 0; d < dim_; ++d) r[d] = static_cast<float>(r[d] * inv);
    }
    normalized_ = true;
  }

  // Matrix with rows reordered to `order`; every id must exist.
  EmbeddingMatrix select(const std::vector<std::string>& order) const {
    EmbeddingMatrix out(dim_, encoder_tag_);
    out.normalized_ = normalized_;
    out.ids_.reserve(order.size());
    out.data_.reserve(order.size() * dim_);
    for (const auto& id : order) out.append(id, row(index_of(id)));
    return out;
  }

  bool operator==(const EmbeddingMatrix& o) const {
    return dim_ == o.dim_ && ids_ == o.ids_ && normalized_ == o.normalized_ && encoder_tag_ == o.encoder_tag_ &&
           data_.size() == o.data_.size() &&
           std::memcmp(data_.data(), o.data_.data(), data_.size() * sizeof(float)) == 0;
  }

 private:
  void build_index() const {
    if (index_.size() == ids_.size()) return;
    index_.clear();
    for (std::size_t i = 0; i < ids_.size(); ++i) index_.emplace(ids_[i], i);
  }

  std::size_t dim_ = 0;
  std::vector<std::string> ids_;
  std::vector<float> data_;
  bool normalized_ = false;
  std::string encoder_tag_;
  mutable std::unordered_map<std::string, std::size_t> index_;
};

namespace detail {

template <typename T>
void put_le(std::string& out, T value) {
  using U = std::make_unsigned_t<T>;
  auto u = static_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>(u & 0xFF));
    if constexpr (sizeof(T) > 1) u >>= 8;
  }
}

template <typename T>
T get_le(const std::string& in, std::size_t& pos) {
  require(pos + sizeof(T) <= in.size(), "truncated embedding header");
  std::make_unsigned_t<T> u = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    u |= static_cast<std::make_unsigned_t<T>>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  }
  pos += sizeof(T);
  return static_cast<T>(u);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot open ", path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace detail

inline std::string encode(const EmbeddingMatrix& m) {
  std::string out;
  out.reserve(32 + m.encoder_tag().size() + m.data().size() * 4);
  out.append(kMagic.data(), kMagic.size());
  detail::put_le<std::uint16_t>(out, kVersion);
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(m.dim()));
  detail::put_le<std::uint64_t>(out, m.size());
  detail::put_le<std::uint8_t>(out, m.normalized() ? 1 : 0);
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(m.encoder_tag().size()));
  out += m.encoder_tag();
  for (float v : m.data()) detail::put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

inline void write_embeddings(const EmbeddingMatrix& m, const std::filesystem::path& matrix_path,
                             const std::filesystem::path& ids_path) {
  for (const auto& id : m.ids()) require(id.find('\n') == std::string::npos, "id contains a newline: '", id, "'");
  {
    std::ofstream out(matrix_path, std::ios::binary | std::ios::trunc);
    require(out.good(), "cannot write ", matrix_path.string());
    const std::string bytes = encode(m);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    require(out.good(), "write failed: ", matrix_path.string());
  }
  std::ofstream ids(ids_path, std::ios::binary | std::ios::trunc);
  require(ids.good(), "cannot write ", ids_path.string());
  for (const auto& id : m.ids()) ids << id << '\n';
}

inline EmbeddingHeader decode_header(const std::string& bytes, std::size_t& pos) {
  require(bytes.size() >= 4 && std::equal(kMagic.begin(), kMagic.end(), bytes.begin()), "bad magic: not an EMB1 file");
  pos = 4;
  EmbeddingHeader h;
  h.version = detail::get_le<std::uint16_t>(bytes, pos);
  require(h.version == kVersion, "unsupported EMB1 version ", h.version);
  h.dim = detail::get_le<std::uint32_t>(bytes, pos);
  require(h.dim > 0, "EMB1 header dim must be positive");
  h.count = detail::get_le<std::uint64_t>(bytes, pos);
  const auto flag = detail::get_le<std::uint8_t>(bytes, pos);
  require(flag <= 1, "bad normalized flag ", static_cast<int>(flag));
  h.normalized = flag == 1;
  const auto tag_len = detail::get_le<std::uint32_t>(bytes, pos);
  require(pos + tag_len <= bytes.size(), "truncated encoder tag");
  h.encoder_tag = bytes.substr(pos, tag_len);
  pos += tag_len;
  return h;
}

inline std::vector<std::string> read_ids(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot open ", path.string());
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    ids.push_back(line);
  }
  return ids;
}

// Loads and validates a matrix. Rows are L2-normalized unless the header
// already flags them normalized (then the norms are checked) or `normalize`
// is false.
inline EmbeddingMatrix load_embeddings(const std::filesystem::path& matrix_path, const std::filesystem::path& ids_path,
                                       bool normalize = true) {
  const std::string bytes = detail::read_file(matrix_path);
  std::size_t pos = 0;
  const EmbeddingHeader h = decode_header(bytes, pos);
  auto ids = read_ids(ids_path);
  require(ids.size() == h.count, "id/count mismatch: header count ", h.count, ", ", ids.size(), " id lines");
  const std::uint64_t expected = h.count * h.dim * 4;
  require(bytes.size() - pos == expected, "payload size ", bytes.size() - pos, " bytes, expected ", expected);

  EmbeddingMatrix m(h.dim, h.encoder_tag);
  std::vector<float> row(h.dim);
  for (std::uint64_t i = 0; i < h.count; ++i) {
    for (std::uint32_t d = 0; d < h.dim; ++d) {
      const float v = std::bit_cast<float>(detail::get_le<std::uint32_t>(bytes, pos));
      require(std::isfinite(v), "non-finite component at row ", i, " (column ", d, ")");
      row[d] = v;
    }
    m.append(std::move(ids[i]), row);
  }
  m.validate();
  if (h.normalized) {
    for (std::size_t i = 0; i < m.size(); ++i) {
      double sq = 0.0;
      for (float v : m.row(i)) sq += static_cast<double>(v) * v;
      require(std::abs(std::sqrt(sq) - 1.0) <= kNormTolerance, "row ", i, " is flagged normalized but has norm ",
              std::sqrt(sq));
    }
    m.set_normalized(true);
  } else if (normalize) {
    m.normalize();
  }
  return m;
}

template <typename A, typename B>
double dot(const A& a, const B& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return s;
}

template <typename A, typename B>
double cosine(const A& a, const B& b) {
  require(a.size() == b.size(), "cosine: dimension mismatch ", a.size(), " vs ", b.size());
  const double na = dot(a, a);
  const double nb = dot(b, b);
  require(na > 0.0 && nb > 0.0, "cosine: zero vector");
  return std::clamp(dot(a, b) / std::sqrt(na * nb), -1.0, 1.0);
}

inline double cosine(std::span<const float> a, std::span<const float> b) { return cosine<>(a, b); }

}  // namespace xlom::embeddings
