// Approximate nearest-neighbour retrieval over unit vectors: a forest of
// random-hyperplane partition trees (each split plane bisects two points
// sampled from the node's subset), queried with a cross-tree priority queue.
// Retrieval doubles the candidate budget until the least-similar hit drops
// below the caller's threshold.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <queue>
#include <random>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include <cdrift/common.hpp>
#include <cdrift/corpus.hpp>

namespace cdrift {

struct Neighbor {
  std::string post_id;
  double similarity = 0.0;
};

// Sorted descending by similarity; ties broken by store row for determinism.
using NeighborSet = std::vector<Neighbor>;

class AnnIndex {
 public:
  static constexpr char kMagic[12] = "CDRIFT-ANN1";
  static constexpr std::size_t kDefaultLeafSize = 32;

  AnnIndex() = default;

  AnnIndex(const EmbeddingStore& store, std::size_t tree_count, std::uint64_t seed,
           std::size_t leaf_size = kDefaultLeafSize)
      : store_(&store), seed_(seed), leaf_size_(std::max<std::size_t>(leaf_size, 2)) {
    if (store.empty()) throw Error("cannot index an empty embedding store");
    if (tree_count < 1) throw Error("tree_count must be >= 1");
    trees_.resize(tree_count);
    std::vector<std::uint32_t> all(store.size());
    for (std::uint32_t i = 0; i < all.size(); ++i) all[i] = i;
    for (std::size_t t = 0; t < tree_count; ++t) {
      std::mt19937_64 rng(derive_seed(seed, "ann-tree-" + std::to_string(t)));
      auto items = all;
      trees_[t].root = build_node(trees_[t], items, 0, items.size(), rng, 0);
    }
  }

  std::size_t size() const { return store_ ? store_->size() : 0; }
  std::size_t tree_count() const { return trees_.size(); }
  std::uint64_t seed() const { return seed_; }
  const EmbeddingStore& store() const { return *store_; }

  // Top-k by cosine similarity, self included. search_budget bounds how many
  // distinct candidates the forest accumulates before exact rescoring
  // (default: k * tree_count, the usual forest heuristic).
  NeighborSet query_top(std::size_t query_row, std::size_t k,
                        std::size_t search_budget = 0) const {
    std::span<const float> q = store_->vec(query_row);
    auto rows = candidate_rows(q, k, search_budget);
    NeighborSet out;
    out.reserve(rows.size());
    for (auto r : rows) out.push_back({store_->id_of(r), store_->dot(q, r)});
    std::sort(out.begin(), out.end(), [this](const Neighbor& a, const Neighbor& b) {
      if (a.similarity != b.similarity) return a.similarity > b.similarity;
      return store_->row_of(a.post_id) < store_->row_of(b.post_id);
    });
    if (out.size() > k) out.resize(k);
    return out;
  }

  // All neighbours with similarity >= threshold, excluding the query itself.
  // Starts from initial_k candidates and doubles until the least-similar
  // retrieved candidate falls below the threshold (or the corpus is
  // exhausted).
  NeighborSet neighbors_above(const std::string& query_id, double threshold,
                              std::size_t initial_k = 10) const {
    if (!(threshold > 0.0 && threshold < 1.0))
      throw Error("threshold must lie in (0,1), got " + fmt_double(threshold));
    std::size_t row = store_->row_of(query_id);
    std::size_t n = store_->size();
    std::size_t k = std::max<std::size_t>(initial_k, 1);
    NeighborSet hits;
    for (;;) {
      // +1 leaves room for the query itself inside the top-k.
      NeighborSet top = query_top(row, std::min(k + 1, n));
      hits.clear();
      for (auto& nb : top)
        if (nb.post_id != query_id) hits.push_back(std::move(nb));
      bool exhausted = k >= n - 1 || top.size() < std::min(k + 1, n);
      bool frontier_above = !hits.empty() && hits.back().similarity >= threshold;
      if (exhausted || !frontier_above) break;
      k = std::min(k * 2, n - 1);
    }
    while (!hits.empty() && hits.back().similarity < threshold) hits.pop_back();
    return hits;
  }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write index snapshot: " + path);
    out.write(kMagic, 11);
    io::write_u64(out, seed_);
    io::write_u32(out, static_cast<std::uint32_t>(trees_.size()));
    io::write_u32(out, static_cast<std::uint32_t>(leaf_size_));
    io::write_u32(out, static_cast<std::uint32_t>(store_->dimension()));
    io::write_u64(out, store_->size());
    for (const auto& tree : trees_) {
      io::write_u32(out, static_cast<std::uint32_t>(tree.nodes.size()));
      io::write_u32(out, static_cast<std::uint32_t>(tree.root));
      for (const auto& node : tree.nodes) {
        io::write_u32(out, node.left >= 0 ? 1u : 0u);
        if (node.left >= 0) {
          io::write_u32(out, static_cast<std::uint32_t>(node.left));
          io::write_u32(out, static_cast<std::uint32_t>(node.right));
          io::write_f32(out, node.offset);
          for (float v : node.normal) io::write_f32(out, v);
        } else {
          io::write_u32(out, static_cast<std::uint32_t>(node.items.size()));
          for (auto item : node.items) io::write_u32(out, item);
        }
      }
    }
    if (!out) throw Error("short write: " + path);
  }

  static AnnIndex load(const std::string& path, const EmbeddingStore& store) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open index snapshot: " + path);
    char magic[11];
    in.read(magic, 11);
    if (!in || std::memcmp(magic, kMagic, 11) != 0)
      throw Error("bad index snapshot magic: " + path);

    AnnIndex idx;
    idx.store_ = &store;
    idx.seed_ = io::read_u64(in);
    std::uint32_t tree_count = io::read_u32(in);
    idx.leaf_size_ = io::read_u32(in);
    std::uint32_t dim = io::read_u32(in);
    std::uint64_t count = io::read_u64(in);
    if (dim != store.dimension() || count != store.size())
      throw Error("index snapshot does not match embedding store: " + path);
    idx.trees_.resize(tree_count);
    for (auto& tree : idx.trees_) {
      std::uint32_t node_count = io::read_u32(in);
      tree.root = static_cast<std::int32_t>(io::read_u32(in));
      tree.nodes.resize(node_count);
      for (auto& node : tree.nodes) {
        bool internal = io::read_u32(in) != 0;
        if (internal) {
          node.left = static_cast<std::int32_t>(io::read_u32(in));
          node.right = static_cast<std::int32_t>(io::read_u32(in));
          node.offset = io::read_f32(in);
          node.normal.resize(dim);
          for (auto& v : node.normal) v = io::read_f32(in);
        } else {
          std::uint32_t items = io::read_u32(in);
          node.items.resize(items);
          for (auto& item : node.items) item = io::read_u32(in);
        }
      }
      if (!in) throw Error("truncated index snapshot: " + path);
    }
    return idx;
  }

 private:
  struct Node {
    std::int32_t left = -1;   // -1 marks a leaf
    std::int32_t right = -1;
    float offset = 0.0f;
    std::vector<float> normal;        // internal nodes only
    std::vector<std::uint32_t> items; // leaves only
  };
  struct Tree {
    std::int32_t root = -1;
    std::vector<Node> nodes;
  };

  double margin(const Node& node, std::span<const float> v) const {
    double s = 0.0;
    for (std::size_t i = 0; i < node.normal.size(); ++i)
      s += static_cast<double>(node.normal[i]) * v[i];
    return s - node.offset;
  }

  // Recursive builder over items[lo, hi); returns the node index.
  std::int32_t build_node(Tree& tree, std::vector<std::uint32_t>& items,
                          std::size_t lo, std::size_t hi, std::mt19937_64& rng,
                          int depth) {
    std::size_t count = hi - lo;
    if (count <= leaf_size_ || depth > 60) {
      Node leaf;
      leaf.items.assign(items.begin() + lo, items.begin() + hi);
      std::sort(leaf.items.begin(), leaf.items.end());
      tree.nodes.push_back(std::move(leaf));
      return static_cast<std::int32_t>(tree.nodes.size() - 1);
    }

    Node node;
    std::size_t dim = store_->dimension();
    node.normal.resize(dim);
    std::uniform_int_distribution<std::size_t> pick(0, count - 1);
    bool split_ok = false;
    for (int attempt = 0; attempt < 8 && !split_ok; ++attempt) {
      std::size_t a = pick(rng), b = pick(rng);
      if (a == b) continue;
      auto va = store_->vec(items[lo + a]);
      auto vb = store_->vec(items[lo + b]);
      double norm2 = 0.0;
      for (std::size_t i = 0; i < dim; ++i) {
        double d = static_cast<double>(va[i]) - vb[i];
        node.normal[i] = static_cast<float>(d);
        norm2 += d * d;
      }
      if (norm2 < 1e-18) continue;  // coincident picks, try again
      double inv = 1.0 / std::sqrt(norm2);
      double off = 0.0;
      for (std::size_t i = 0; i < dim; ++i) {
        node.normal[i] = static_cast<float>(node.normal[i] * inv);
        off += 0.5 * (static_cast<double>(va[i]) + vb[i]) * node.normal[i];
      }
      node.offset = static_cast<float>(off);
      split_ok = true;
    }

    std::size_t mid = lo;
    if (split_ok) {
      // Partition in place by plane side; keep relative order deterministic.
      std::vector<std::uint32_t> left, right;
      left.reserve(count);
      right.reserve(count);
      for (std::size_t i = lo; i < hi; ++i) {
        if (margin(node, store_->vec(items[i])) >= 0.0)
          left.push_back(items[i]);
        else
          right.push_back(items[i]);
      }
      if (left.empty() || right.empty()) {
        split_ok = false;
      } else {
        std::copy(left.begin(), left.end(), items.begin() + lo);
        std::copy(right.begin(), right.end(), items.begin() + lo + left.size());
        mid = lo + left.size();
      }
    }
    if (!split_ok) {
      // Degenerate subset (e.g. many identical vectors): random balanced cut.
      std::shuffle(items.begin() + lo, items.begin() + hi, rng);
      mid = lo + count / 2;
      std::fill(node.normal.begin(), node.normal.end(), 0.0f);
      node.offset = 0.0f;
    }

    std::int32_t left_child = build_node(tree, items, lo, mid, rng, depth + 1);
    std::int32_t right_child = build_node(tree, items, mid, hi, rng, depth + 1);
    node.left = left_child;
    node.right = right_child;
    tree.nodes.push_back(std::move(node));
    return static_cast<std::int32_t>(tree.nodes.size() - 1);
  }

  // Best-first traversal across all trees; collects at least `budget`
  // distinct rows (or the whole corpus). Deterministic: the queue orders by
  // (bound, tree, node).
  std::vector<std::uint32_t> candidate_rows(std::span<const float> q, std::size_t k,
                                            std::size_t budget) const {
    if (budget == 0) budget = std::max<std::size_t>(k * trees_.size(), k);
    using Entry = std::tuple<double, std::uint32_t, std::int32_t>;
    std::priority_queue<Entry> pq;
    for (std::uint32_t t = 0; t < trees_.size(); ++t)
      pq.emplace(std::numeric_limits<double>::infinity(), t, trees_[t].root);

    std::vector<char> seen(store_->size(), 0);
    std::vector<std::uint32_t> rows;
    rows.reserve(budget + leaf_size_);
    while (!pq.empty() && rows.size() < budget) {
      auto [bound, t, ni] = pq.top();
      pq.pop();
      const Node& node = trees_[t].nodes[static_cast<std::size_t>(ni)];
      if (node.left < 0) {
        for (auto item : node.items) {
          if (!seen[item]) {
            seen[item] = 1;
            rows.push_back(item);
          }
        }
        continue;
      }
      double m = margin(node, q);
      // The far side remains reachable with a bound penalized by |margin|.
      pq.emplace(std::min(bound, m >= 0.0 ? m : -m), t, m >= 0.0 ? node.left : node.right);
      pq.emplace(std::min(bound, m >= 0.0 ? -m : m), t, m >= 0.0 ? node.right : node.left);
    }
    return rows;
  }

  const EmbeddingStore* store_ = nullptr;
  std::uint64_t seed_ = 0;
  std::size_t leaf_size_ = kDefaultLeafSize;
  std::vector<Tree> trees_;
};

inline AnnIndex build_index(const EmbeddingStore& store, std::size_t tree_count,
                            std::uint64_t seed,
                            std::size_t leaf_size = AnnIndex::kDefaultLeafSize) {
  return AnnIndex(store, tree_count, seed, leaf_size);
}

inline NeighborSet neighbors_above(const AnnIndex& index, const std::string& query_id,
                                   double threshold, std::size_t initial_k = 10) {
  return index.neighbors_above(query_id, threshold, initial_k);
}

// Exhaustive dot-product scan; the exact answer the forest approximates.
inline NeighborSet exact_neighbors(const EmbeddingStore& store,
                                   const std::string& query_id, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0))
    throw Error("threshold must lie in (0,1), got " + fmt_double(threshold));
  std::size_t row = store.row_of(query_id);
  std::span<const float> q = store.vec(row);
  NeighborSet out;
  for (std::size_t r = 0; r < store.size(); ++r) {
    if (r == row) continue;
    double s = store.dot(q, r);
    if (s >= threshold) out.push_back({store.id_of(r), s});
  }
  std::sort(out.begin(), out.end(), [&store](const Neighbor& a, const Neighbor& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return store.row_of(a.post_id) < store.row_of(b.post_id);
  });
  return out;
}

}  // namespace cdrift
