// Post ingestion (JSON-lines), embedding ingestion (binary, unit-normalized),
// and corpus validation. Collections are immutable after load and safe for
// concurrent reads.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <cdrift/common.hpp>
#include <json.hpp>

namespace cdrift {

struct Post {
  std::string post_id;
  std::string author_id;
  std::int64_t created_at = 0;  // UTC seconds
  std::string text;
  std::int64_t like_count = 0;
  std::int64_t retweet_count = 0;
  std::int64_t author_followers = 0;
  std::optional<std::string> context_of;

  bool operator==(const Post&) const = default;
};

class PostCollection {
 public:
  PostCollection() = default;

  // Posts end up sorted by created_at; ties keep input order.
  explicit PostCollection(std::vector<Post> posts) : posts_(std::move(posts)) {
    std::stable_sort(posts_.begin(), posts_.end(),
                     [](const Post& a, const Post& b) { return a.created_at < b.created_at; });
    for (std::size_t i = 0; i < posts_.size(); ++i) {
      auto [it, fresh] = index_.emplace(posts_[i].post_id, i);
      if (!fresh) throw Error("duplicate post_id: " + posts_[i].post_id);
    }
  }

  std::size_t size() const { return posts_.size(); }
  bool empty() const { return posts_.empty(); }
  const Post& operator[](std::size_t i) const { return posts_[i]; }
  const std::vector<Post>& posts() const { return posts_; }

  bool contains(std::string_view id) const { return index_.count(std::string(id)) > 0; }
  std::size_t index_of(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) throw Error("unknown post_id: " + std::string(id));
    return it->second;
  }

  std::int64_t min_created_at() const {
    if (posts_.empty()) throw Error("empty corpus has no time range");
    return posts_.front().created_at;
  }
  std::int64_t max_created_at() const {
    if (posts_.empty()) throw Error("empty corpus has no time range");
    std::int64_t m = posts_.front().created_at;
    for (const auto& p : posts_) m = std::max(m, p.created_at);
    return m;
  }

  bool operator==(const PostCollection& o) const { return posts_ == o.posts_; }

 private:
  std::vector<Post> posts_;
  std::unordered_map<std::string, std::size_t> index_;
};

namespace detail {

inline std::int64_t require_int(const nlohmann::json& obj, const char* key,
                                std::size_t line_no) {
  if (!obj.contains(key))
    throw Error("line " + std::to_string(line_no) + ": missing field '" + key + "'");
  const auto& v = obj.at(key);
  if (!v.is_number_integer() && !v.is_number_unsigned())
    throw Error("line " + std::to_string(line_no) + ": field '" + key +
                "' must be an integer");
  return v.get<std::int64_t>();
}

inline std::string require_string(const nlohmann::json& obj, const char* key,
                                  std::size_t line_no) {
  if (!obj.contains(key))
    throw Error("line " + std::to_string(line_no) + ": missing field '" + key + "'");
  const auto& v = obj.at(key);
  if (!v.is_string())
    throw Error("line " + std::to_string(line_no) + ": field '" + key +
                "' must be a string");
  return v.get<std::string>();
}

}  // namespace detail

// JSON-lines reader. When context_append is set and context_of resolves
// within the corpus, the referenced post's original text is appended with a
// single space before sorting; the supplied embedding must represent the
// combined text (documented contract, embeddings are never recomputed here).
inline PostCollection load_posts(const std::string& path, bool context_append) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open posts file: " + path);

  std::vector<Post> posts;
  std::unordered_map<std::string, std::size_t> seen;
  std::vector<std::string> duplicates;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error("line " + std::to_string(line_no) + ": malformed JSON: " + e.what());
    }
    if (!obj.is_object())
      throw Error("line " + std::to_string(line_no) + ": expected a JSON object");

    Post p;
    p.post_id = detail::require_string(obj, "post_id", line_no);
    p.author_id = detail::require_string(obj, "author_id", line_no);
    p.created_at = detail::require_int(obj, "created_at", line_no);
    p.text = detail::require_string(obj, "text", line_no);
    p.like_count = detail::require_int(obj, "like_count", line_no);
    p.retweet_count = detail::require_int(obj, "retweet_count", line_no);
    p.author_followers = detail::require_int(obj, "author_followers", line_no);
    if (obj.contains("context_of") && !obj.at("context_of").is_null())
      p.context_of = detail::require_string(obj, "context_of", line_no);

    if (p.created_at <= 0)
      throw Error("line " + std::to_string(line_no) + ": created_at must be positive");
    if (p.like_count < 0 || p.retweet_count < 0 || p.author_followers < 0)
      throw Error("line " + std::to_string(line_no) + ": counts must be non-negative");

    auto [it, fresh] = seen.emplace(p.post_id, posts.size());
    if (!fresh) duplicates.push_back(p.post_id);
    posts.push_back(std::move(p));
  }

  if (!duplicates.empty()) {
    std::string msg = "duplicate post_id(s):";
    for (const auto& d : duplicates) msg += " " + d;
    throw Error(msg);
  }

  if (context_append) {
    // Append the referenced post's original (pre-append) text.
    std::vector<std::string> original(posts.size());
    for (std::size_t i = 0; i < posts.size(); ++i) original[i] = posts[i].text;
    for (auto& p : posts) {
      if (!p.context_of) continue;
      auto it = seen.find(*p.context_of);
      if (it == seen.end()) continue;  // unresolved references are ignored
      p.text += " " + original[it->second];
    }
  }

  return PostCollection(std::move(posts));
}

// Unit-norm embedding rows keyed by post_id. File layout: magic "CDRIFT01",
// u32 dimension, u64 count, count*dimension float32, then count id strings
// (u32 length + UTF-8 bytes); all integers little-endian.
class EmbeddingStore {
 public:
  static constexpr char kMagic[9] = "CDRIFT01";

  EmbeddingStore() = default;

  static EmbeddingStore from_rows(std::size_t dimension,
                                  std::vector<std::string> ids,
                                  const std::vector<std::vector<float>>& rows) {
    if (ids.size() != rows.size()) throw Error("ids/rows size mismatch");
    EmbeddingStore s;
    s.dim_ = dimension;
    s.ids_ = std::move(ids);
    s.data_.resize(s.ids_.size() * dimension);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != dimension)
        throw Error("embedding row dimension mismatch for " + s.ids_[r]);
      std::copy(rows[r].begin(), rows[r].end(), s.data_.begin() + r * dimension);
    }
    s.normalize_all();
    s.build_index();
    return s;
  }

  static EmbeddingStore load(const std::string& path, std::size_t expected_count) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open embeddings file: " + path);

    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0)
      throw Error("bad embeddings file magic: " + path);

    EmbeddingStore s;
    std::uint32_t dim = io::read_u32(in);
    std::uint64_t count = io::read_u64(in);
    if (dim == 0) throw Error("embeddings dimension must be positive");
    if (expected_count != 0 && count != expected_count)
      throw Error("embeddings count mismatch: file has " + std::to_string(count) +
                  ", expected " + std::to_string(expected_count));
    s.dim_ = dim;
    s.data_.resize(static_cast<std::size_t>(count) * dim);
    in.read(reinterpret_cast<char*>(s.data_.data()),
            static_cast<std::streamsize>(s.data_.size() * sizeof(float)));
    if (!in) throw Error("truncated embeddings payload: " + path);
    s.ids_.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
      std::uint32_t len = io::read_u32(in);
      std::string id(len, '\0');
      in.read(id.data(), len);
      if (!in) throw Error("truncated embeddings id table: " + path);
      s.ids_.push_back(std::move(id));
    }
    s.normalize_all();
    s.build_index();
    return s;
  }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write embeddings file: " + path);
    out.write(kMagic, 8);
    io::write_u32(out, static_cast<std::uint32_t>(dim_));
    io::write_u64(out, ids_.size());
    out.write(reinterpret_cast<const char*>(data_.data()),
              static_cast<std::streamsize>(data_.size() * sizeof(float)));
    for (const auto& id : ids_) {
      io::write_u32(out, static_cast<std::uint32_t>(id.size()));
      out.write(id.data(), static_cast<std::streamsize>(id.size()));
    }
    if (!out) throw Error("short write: " + path);
  }

  std::size_t dimension() const { return dim_; }
  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }

  bool has(std::string_view id) const { return row_of_.count(std::string(id)) > 0; }
  std::size_t row_of(std::string_view id) const {
    auto it = row_of_.find(std::string(id));
    if (it == row_of_.end()) throw Error("unknown embedding id: " + std::string(id));
    return it->second;
  }
  const std::string& id_of(std::size_t row) const { return ids_[row]; }

  std::span<const float> vec(std::size_t row) const {
    return {data_.data() + row * dim_, dim_};
  }

  double dot(std::size_t a, std::size_t b) const {
    const float* x = data_.data() + a * dim_;
    const float* y = data_.data() + b * dim_;
    double s = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) s += static_cast<double>(x[i]) * y[i];
    return s;
  }

  double dot(std::span<const float> q, std::size_t b) const {
    const float* y = data_.data() + b * dim_;
    double s = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) s += static_cast<double>(q[i]) * y[i];
    return s;
  }

  double similarity(std::string_view id_a, std::string_view id_b) const {
    return dot(row_of(id_a), row_of(id_b));
  }

 private:
  void normalize_all() {
    for (std::size_t r = 0; r < ids_.size(); ++r) {
      float* x = data_.data() + r * dim_;
      double n2 = 0.0;
      for (std::size_t i = 0; i < dim_; ++i) n2 += static_cast<double>(x[i]) * x[i];
      double n = std::sqrt(n2);
      if (n < 1e-12) throw Error("zero-norm embedding for post id " + ids_[r]);
      for (std::size_t i = 0; i < dim_; ++i)
        x[i] = static_cast<float>(x[i] / n);
    }
  }

  void build_index() {
    row_of_.clear();
    for (std::size_t r = 0; r < ids_.size(); ++r) {
      auto [it, fresh] = row_of_.emplace(ids_[r], r);
      if (!fresh) throw Error("duplicate embedding id: " + ids_[r]);
    }
  }

  std::size_t dim_ = 0;
  std::vector<float> data_;
  std::vector<std::string> ids_;
  std::unordered_map<std::string, std::size_t> row_of_;
};

struct CorpusReport {
  std::size_t post_count = 0;
  std::size_t missing_embedding_count = 0;
  std::size_t duplicate_id_count = 0;
  std::int64_t time_min = 0;
  std::int64_t time_max = 0;
  bool time_range_defined = false;
};

// Diagnostic pass; the pipeline refuses to proceed when
// missing_embedding_count > 0.
inline CorpusReport validate_corpus(const PostCollection& posts,
                                    const EmbeddingStore& store) {
  CorpusReport r;
  r.post_count = posts.size();
  for (const auto& p : posts.posts())
    if (!store.has(p.post_id)) ++r.missing_embedding_count;
  if (!posts.empty()) {
    r.time_min = posts.min_created_at();
    r.time_max = posts.max_created_at();
    r.time_range_defined = true;
  }
  return r;
}

}  // namespace cdrift
