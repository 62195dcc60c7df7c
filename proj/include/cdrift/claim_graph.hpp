// Threshold similarity graph over posts, connected-component claim
// extraction (disjoint-set union), and clustering quality statistics used by
// the threshold sweep.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <cdrift/ann.hpp>
#include <cdrift/common.hpp>
#include <cdrift/corpus.hpp>

namespace cdrift {

// Disjoint-set union with path compression and union by rank.
class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n), rank_(n, 0) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }

  std::size_t find(std::size_t x) {
    std::size_t root = x;
    while (parent_[root] != root) root = parent_[root];
    while (parent_[x] != root) {
      std::size_t next = parent_[x];
      parent_[x] = root;
      x = next;
    }
    return root;
  }

  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (rank_[a] < rank_[b]) std::swap(a, b);
    parent_[b] = a;
    if (rank_[a] == rank_[b]) ++rank_[a];
    return true;
  }

  std::size_t size() const { return parent_.size(); }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::uint8_t> rank_;
};

struct GraphEdge {
  std::uint32_t a = 0;  // node indices, a < b
  std::uint32_t b = 0;
  double similarity = 0.0;
};

// Undirected, deduplicated, no self-loops; every edge similarity >= threshold.
class SimilarityGraph {
 public:
  SimilarityGraph() = default;

  SimilarityGraph(std::vector<std::string> node_ids, std::vector<GraphEdge> edges,
                  double threshold)
      : node_ids_(std::move(node_ids)), threshold_(threshold) {
    for (auto& e : edges) add_edge(e.a, e.b, e.similarity);
  }

  void add_edge(std::uint32_t a, std::uint32_t b, double similarity) {
    if (a == b) throw Error("self-loop edge on node " + std::to_string(a));
    if (similarity < threshold_)
      throw Error("edge similarity " + fmt_double(similarity) +
                  " below graph threshold " + fmt_double(threshold_));
    if (a > b) std::swap(a, b);
    std::uint64_t key = (static_cast<std::uint64_t>(a) << 32) | b;
    if (!adjacency_.insert(key).second) return;
    edges_.push_back({a, b, similarity});
  }

  bool has_edge(std::uint32_t a, std::uint32_t b) const {
    if (a == b) return false;
    if (a > b) std::swap(a, b);
    return adjacency_.count((static_cast<std::uint64_t>(a) << 32) | b) > 0;
  }

  std::size_t node_count() const { return node_ids_.size(); }
  const std::vector<std::string>& node_ids() const { return node_ids_; }
  const std::vector<GraphEdge>& edges() const { return edges_; }
  double threshold() const { return threshold_; }

 private:
  std::vector<std::string> node_ids_;
  std::vector<GraphEdge> edges_;
  std::unordered_set<std::uint64_t> adjacency_;
  double threshold_ = 0.0;
};

// One edge per post pair whose similarity clears the threshold, found through
// the index's candidate-doubling retrieval. Node order follows store rows.
inline SimilarityGraph build_claim_graph(const AnnIndex& index,
                                         const EmbeddingStore& store,
                                         double threshold,
                                         std::size_t initial_k = 10) {
  SimilarityGraph graph(
      [&] {
        std::vector<std::string> ids;
        ids.reserve(store.size());
        for (std::size_t r = 0; r < store.size(); ++r) ids.push_back(store.id_of(r));
        return ids;
      }(),
      {}, threshold);
  for (std::size_t r = 0; r < store.size(); ++r) {
    NeighborSet hits = index.neighbors_above(store.id_of(r), threshold, initial_k);
    for (const auto& h : hits)
      graph.add_edge(static_cast<std::uint32_t>(r),
                     static_cast<std::uint32_t>(store.row_of(h.post_id)),
                     h.similarity);
  }
  return graph;
}

struct ClaimCluster {
  std::size_t claim_id = 0;
  std::vector<std::size_t> members;  // indices into the PostCollection, time order
  std::int64_t first_ts = 0;
  std::int64_t last_ts = 0;

  std::size_t size() const { return members.size(); }
};

// Disjoint-set union over the edge list; isolated posts become singleton
// claims. claim_ids are assigned in order of earliest member timestamp
// (ties: earliest member's corpus position), which keeps reports stable.
inline std::vector<ClaimCluster> connected_components(const SimilarityGraph& graph,
                                                      const PostCollection& posts) {
  const auto& node_ids = graph.node_ids();
  UnionFind uf(node_ids.size());
  for (const auto& e : graph.edges()) uf.unite(e.a, e.b);

  // Group node indices by root, mapped into corpus positions.
  std::unordered_map<std::size_t, std::vector<std::size_t>> groups;
  groups.reserve(node_ids.size());
  for (std::size_t n = 0; n < node_ids.size(); ++n)
    groups[uf.find(n)].push_back(posts.index_of(node_ids[n]));

  std::vector<ClaimCluster> clusters;
  clusters.reserve(groups.size());
  for (auto& [root, members] : groups) {
    ClaimCluster c;
    std::sort(members.begin(), members.end());  // corpus order == time order
    c.members = std::move(members);
    c.first_ts = posts[c.members.front()].created_at;
    c.last_ts = posts[c.members.back()].created_at;
    for (auto m : c.members) c.last_ts = std::max(c.last_ts, posts[m].created_at);
    clusters.push_back(std::move(c));
  }
  std::sort(clusters.begin(), clusters.end(),
            [](const ClaimCluster& a, const ClaimCluster& b) {
              if (a.first_ts != b.first_ts) return a.first_ts < b.first_ts;
              return a.members.front() < b.members.front();
            });
  for (std::size_t i = 0; i < clusters.size(); ++i) clusters[i].claim_id = i;
  return clusters;
}

struct QualityStats {
  double mean_intra_distance = 0.0;  // cosine distance, multi-member clusters
  double mean_inter_distance = 0.0;  // between cluster centroids
  std::size_t cluster_count = 0;
  double singleton_fraction = 0.0;
  bool intra_defined = false;
  bool inter_defined = false;
};

namespace detail {

// Normalized mean vector of a cluster's members.
inline std::vector<double> cluster_centroid(const ClaimCluster& cluster,
                                            const PostCollection& posts,
                                            const EmbeddingStore& store) {
  std::vector<double> c(store.dimension(), 0.0);
  for (auto m : cluster.members) {
    auto v = store.vec(store.row_of(posts[m].post_id));
    for (std::size_t i = 0; i < c.size(); ++i) c[i] += v[i];
  }
  double n2 = 0.0;
  for (double x : c) n2 += x * x;
  if (n2 > 1e-24) {
    double inv = 1.0 / std::sqrt(n2);
    for (double& x : c) x *= inv;
  }
  return c;
}

inline double centroid_dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace detail

// Intra: mean over multi-member clusters of their mean pairwise cosine
// distance. Inter: mean cosine distance between cluster centroids. Each side
// is exhaustive up to sample_cap pairs, then switches to seeded sampling.
inline QualityStats cluster_quality(const std::vector<ClaimCluster>& clusters,
                                    const PostCollection& posts,
                                    const EmbeddingStore& store,
                                    std::size_t sample_cap = 200000,
                                    std::uint64_t seed = 1) {
  QualityStats q;
  q.cluster_count = clusters.size();
  if (clusters.empty()) return q;

  std::size_t singletons = 0;
  for (const auto& c : clusters)
    if (c.size() == 1) ++singletons;
  q.singleton_fraction = static_cast<double>(singletons) / clusters.size();

  // Intra-cluster distances.
  std::size_t total_pairs = 0;
  for (const auto& c : clusters)
    if (c.size() > 1) total_pairs += c.size() * (c.size() - 1) / 2;
  if (total_pairs > 0) {
    std::mt19937_64 rng(derive_seed(seed, "quality-intra"));
    double cluster_mean_sum = 0.0;
    std::size_t multi = 0;
    for (const auto& c : clusters) {
      if (c.size() < 2) continue;
      std::vector<std::size_t> rows(c.size());
      for (std::size_t i = 0; i < c.size(); ++i)
        rows[i] = store.row_of(posts[c.members[i]].post_id);
      std::size_t pairs = c.size() * (c.size() - 1) / 2;
      double sum = 0.0;
      std::size_t used = 0;
      if (total_pairs <= sample_cap) {
        for (std::size_t i = 0; i < rows.size(); ++i)
          for (std::size_t j = i + 1; j < rows.size(); ++j)
            sum += 1.0 - store.dot(rows[i], rows[j]);
        used = pairs;
      } else {
        // Budget proportional to the cluster's share of all pairs.
        std::size_t budget = std::max<std::size_t>(
            1, static_cast<std::size_t>(static_cast<double>(sample_cap) * pairs /
                                        total_pairs));
        std::uniform_int_distribution<std::size_t> pick(0, rows.size() - 1);
        while (used < budget) {
          std::size_t i = pick(rng), j = pick(rng);
          if (i == j) continue;
          sum += 1.0 - store.dot(rows[i], rows[j]);
          ++used;
        }
      }
      cluster_mean_sum += sum / static_cast<double>(used);
      ++multi;
    }
    q.mean_intra_distance = cluster_mean_sum / static_cast<double>(multi);
    q.intra_defined = true;
  }

  // Inter-cluster centroid distances.
  if (clusters.size() >= 2) {
    std::vector<std::vector<double>> centroids;
    centroids.reserve(clusters.size());
    for (const auto& c : clusters)
      centroids.push_back(detail::cluster_centroid(c, posts, store));
    std::size_t pairs = clusters.size() * (clusters.size() - 1) / 2;
    double sum = 0.0;
    std::size_t used = 0;
    if (pairs <= sample_cap) {
      for (std::size_t i = 0; i < centroids.size(); ++i)
        for (std::size_t j = i + 1; j < centroids.size(); ++j)
          sum += 1.0 - detail::centroid_dot(centroids[i], centroids[j]);
      used = pairs;
    } else {
      std::mt19937_64 rng(derive_seed(seed, "quality-inter"));
      std::uniform_int_distribution<std::size_t> pick(0, centroids.size() - 1);
      while (used < sample_cap) {
        std::size_t i = pick(rng), j = pick(rng);
        if (i == j) continue;
        sum += 1.0 - detail::centroid_dot(centroids[i], centroids[j]);
        ++used;
      }
    }
    q.mean_inter_distance = sum / static_cast<double>(used);
    q.inter_defined = true;
  }

  return q;
}

// The most dissimilar member pair per multi-member cluster, emitted for
// manual inspection of cluster coherence (human judgment stays manual).
struct DissimilarPair {
  std::size_t claim_id = 0;
  std::string post_a;
  std::string post_b;
  double similarity = 1.0;
};

inline std::vector<DissimilarPair> most_dissimilar_pairs(
    const std::vector<ClaimCluster>& clusters, const PostCollection& posts,
    const EmbeddingStore& store, std::size_t max_members_exact = 2000,
    std::uint64_t seed = 1) {
  std::vector<DissimilarPair> out;
  std::mt19937_64 rng(derive_seed(seed, "dissimilar-pairs"));
  for (const auto& c : clusters) {
    if (c.size() < 2) continue;
    std::vector<std::size_t> rows(c.size());
    for (std::size_t i = 0; i < c.size(); ++i)
      rows[i] = store.row_of(posts[c.members[i]].post_id);
    DissimilarPair worst;
    worst.claim_id = c.claim_id;
    worst.similarity = 2.0;
    auto consider = [&](std::size_t i, std::size_t j) {
      double s = store.dot(rows[i], rows[j]);
      if (s < worst.similarity) {
        worst.similarity = s;
        worst.post_a = store.id_of(rows[i]);
        worst.post_b = store.id_of(rows[j]);
      }
    };
    if (c.size() <= max_members_exact) {
      for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = i + 1; j < rows.size(); ++j) consider(i, j);
    } else {
      std::uniform_int_distribution<std::size_t> pick(0, rows.size() - 1);
      for (std::size_t draw = 0; draw < max_members_exact * 4; ++draw) {
        std::size_t i = pick(rng), j = pick(rng);
        if (i != j) consider(i, j);
      }
    }
    out.push_back(std::move(worst));
  }
  return out;
}

struct SweepRow {
  double threshold = 0.0;
  QualityStats quality;
  std::map<std::size_t, std::size_t> size_histogram;  // cluster size -> count
};

inline std::vector<SweepRow> threshold_sweep(const AnnIndex& index,
                                             const EmbeddingStore& store,
                                             const PostCollection& posts,
                                             const std::vector<double>& thresholds,
                                             std::size_t sample_cap = 200000,
                                             std::uint64_t seed = 1) {
  std::vector<SweepRow> rows;
  rows.reserve(thresholds.size());
  for (double t : thresholds) {
    if (!(t > 0.0 && t < 1.0))
      throw Error("sweep threshold must lie in (0,1), got " + fmt_double(t));
    SweepRow row;
    row.threshold = t;
    SimilarityGraph graph = build_claim_graph(index, store, t);
    auto clusters = connected_components(graph, posts);
    row.quality = cluster_quality(clusters, posts, store, sample_cap, seed);
    for (const auto& c : clusters) ++row.size_histogram[c.size()];
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace cdrift
