#include <catch_amalgamated.hpp>

#include <random>

#include "cdrift/ann.hpp"
#include "cdrift/claim_graph.hpp"
#include "cdrift/corpus.hpp"
#include "support/oracles.hpp"

using namespace cdrift;

namespace {

PostCollection posts_for(const std::vector<std::string>& ids,
                         std::int64_t first_ts = 1000) {
  std::vector<Post> raw;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    Post p;
    p.post_id = ids[i];
    p.author_id = "u";
    p.created_at = first_ts + static_cast<std::int64_t>(i);
    raw.push_back(p);
  }
  return PostCollection(raw);
}

}  // namespace

TEST_CASE("three identical vectors yield three edges") {
  std::vector<float> v{0.0f, 1.0f};
  EmbeddingStore store = EmbeddingStore::from_rows(2, {"a", "b", "c"}, {v, v, v});
  AnnIndex index(store, 4, 1);
  SimilarityGraph g = build_claim_graph(index, store, 0.88);
  CHECK(g.edges().size() == 3);
  for (const auto& e : g.edges()) {
    CHECK(e.a != e.b);
    CHECK(e.similarity >= 0.88);
  }
}

TEST_CASE("orthogonal corpus yields no edges") {
  EmbeddingStore store = EmbeddingStore::from_rows(
      3, {"a", "b", "c"},
      {{1.0f, 0.0f, 0.0f}, {0.0f, 1.0f, 0.0f}, {0.0f, 0.0f, 1.0f}});
  AnnIndex index(store, 4, 1);
  CHECK(build_claim_graph(index, store, 0.88).edges().empty());
}

TEST_CASE("graph stays undirected and duplicate-free") {
  SimilarityGraph g({"a", "b", "c"}, {}, 0.88);
  g.add_edge(0, 1, 0.9);
  g.add_edge(1, 0, 0.9);  // same edge, reversed
  CHECK(g.edges().size() == 1);
  CHECK(g.has_edge(0, 1));
  CHECK(g.has_edge(1, 0));
  CHECK_FALSE(g.has_edge(0, 2));
  CHECK_THROWS_AS(g.add_edge(0, 0, 0.95), Error);   // self loop
  CHECK_THROWS_AS(g.add_edge(0, 2, 0.5), Error);    // below threshold
}

TEST_CASE("single edge leaves the third post alone") {
  PostCollection posts = posts_for({"A", "B", "C"});
  SimilarityGraph g({"A", "B", "C"}, {{0, 1, 0.9}}, 0.88);
  auto clusters = connected_components(g, posts);
  REQUIRE(clusters.size() == 2);
  CHECK(clusters[0].members == std::vector<std::size_t>{0, 1});
  CHECK(clusters[1].members == std::vector<std::size_t>{2});
  CHECK(clusters[0].claim_id == 0);
  CHECK(clusters[0].first_ts == 1000);
  CHECK(clusters[0].last_ts == 1001);
}

TEST_CASE("components are transitive across chains") {
  PostCollection posts = posts_for({"A", "B", "C"});
  SimilarityGraph g({"A", "B", "C"}, {{0, 1, 0.9}, {1, 2, 0.9}}, 0.88);
  auto clusters = connected_components(g, posts);
  REQUIRE(clusters.size() == 1);
  CHECK(clusters[0].members == std::vector<std::size_t>{0, 1, 2});
}

TEST_CASE("cluster ids follow earliest member timestamp") {
  std::vector<Post> raw;
  for (auto [id, ts] : std::initializer_list<std::pair<const char*, int>>{
           {"late1", 500}, {"late2", 501}, {"early1", 100}, {"early2", 101}}) {
    Post p;
    p.post_id = id;
    p.author_id = "u";
    p.created_at = ts;
    raw.push_back(p);
  }
  PostCollection posts(raw);
  // Graph nodes in corpus (time-sorted) order: early1, early2, late1, late2.
  SimilarityGraph g({"early1", "early2", "late1", "late2"},
                    {{0, 1, 0.9}, {2, 3, 0.9}}, 0.88);
  auto clusters = connected_components(g, posts);
  REQUIRE(clusters.size() == 2);
  CHECK(posts[clusters[0].members[0]].post_id == "early1");
  CHECK(posts[clusters[1].members[0]].post_id == "late1");
}

TEST_CASE("partition matches BFS oracle on random graphs") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    std::mt19937_64 rng(seed);
    const std::size_t n = 1000;
    std::vector<std::string> ids;
    ids.reserve(n);
    for (std::size_t i = 0; i < n; ++i) ids.push_back("n" + std::to_string(i));
    PostCollection posts = posts_for(ids);

    std::vector<std::pair<std::size_t, std::size_t>> edges;
    SimilarityGraph g(ids, {}, 0.88);
    std::size_t m = 600 + rng() % 1200;
    for (std::size_t e = 0; e < m; ++e) {
      std::size_t a = rng() % n;
      std::size_t b = rng() % n;
      if (a == b) continue;
      double sim = 0.88 + 0.12 * oracle::uniform01(rng);
      if (!g.has_edge(static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b))) {
        g.add_edge(static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b), sim);
        edges.emplace_back(a, b);
      }
    }

    auto clusters = connected_components(g, posts);
    std::vector<std::vector<std::size_t>> got;
    for (const auto& c : clusters) {
      // Node index == corpus index here (ids created in time order).
      got.push_back(c.members);
    }
    std::sort(got.begin(), got.end());
    auto want = oracle::canonical_partition(oracle::bfs_components(n, edges));
    CHECK(got == want);
  }
}

TEST_CASE("raising the threshold refines exact-edge partitions") {
  oracle::BlobSet blobs = oracle::make_blobs(500, 24, 8, 0.05, 77);
  EmbeddingStore store = EmbeddingStore::from_rows(24, blobs.ids, blobs.vectors);
  PostCollection posts = posts_for(blobs.ids);

  auto exact_graph = [&](double threshold) {
    SimilarityGraph g(blobs.ids, {}, threshold);
    for (std::size_t a = 0; a < blobs.ids.size(); ++a)
      for (std::size_t b = a + 1; b < blobs.ids.size(); ++b) {
        double s = store.dot(a, b);
        if (s >= threshold)
          g.add_edge(static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b), s);
      }
    return g;
  };

  auto coarse = connected_components(exact_graph(0.80), posts);
  auto fine = connected_components(exact_graph(0.88), posts);
  CHECK(fine.size() >= coarse.size());

  std::vector<std::size_t> coarse_of(posts.size());
  for (const auto& c : coarse)
    for (std::size_t m : c.members) coarse_of[m] = c.claim_id;
  for (const auto& c : fine) {
    // Every fine cluster sits inside exactly one coarse cluster.
    for (std::size_t m : c.members)
      CHECK(coarse_of[m] == coarse_of[c.members.front()]);
  }
}

TEST_CASE("two tight orthogonal clusters give intra 0 and inter 1") {
  std::vector<float> x{1.0f, 0.0f};
  std::vector<float> y{0.0f, 1.0f};
  PostCollection posts = posts_for({"a1", "a2", "b1", "b2"});
  EmbeddingStore store =
      EmbeddingStore::from_rows(2, {"a1", "a2", "b1", "b2"}, {x, x, y, y});
  SimilarityGraph g({"a1", "a2", "b1", "b2"}, {{0, 1, 1.0}, {2, 3, 1.0}}, 0.88);
  auto clusters = connected_components(g, posts);
  QualityStats q = cluster_quality(clusters, posts, store, 200000, 1);
  REQUIRE(q.intra_defined);
  REQUIRE(q.inter_defined);
  CHECK_THAT(q.mean_intra_distance, Catch::Matchers::WithinAbs(0.0, 1e-6));
  CHECK_THAT(q.mean_inter_distance, Catch::Matchers::WithinAbs(1.0, 1e-6));
  CHECK(q.cluster_count == 2);
  CHECK(q.singleton_fraction == 0.0);
}

TEST_CASE("single cluster leaves inter-distance undefined") {
  std::vector<float> x{1.0f, 0.0f};
  PostCollection posts = posts_for({"a1", "a2"});
  EmbeddingStore store = EmbeddingStore::from_rows(2, {"a1", "a2"}, {x, x});
  SimilarityGraph g({"a1", "a2"}, {{0, 1, 1.0}}, 0.88);
  auto clusters = connected_components(g, posts);
  QualityStats q = cluster_quality(clusters, posts, store, 200000, 1);
  CHECK(q.intra_defined);
  CHECK_FALSE(q.inter_defined);
}

TEST_CASE("threshold sweep: intra distance non-increasing, extremes isolate") {
  oracle::BlobSet blobs = oracle::make_blobs(400, 16, 5, 0.06, 13);
  EmbeddingStore store = EmbeddingStore::from_rows(16, blobs.ids, blobs.vectors);
  PostCollection posts = posts_for(blobs.ids);
  AnnIndex index(store, 12, 3);

  auto rows = threshold_sweep(index, store, posts, {0.80, 0.88, 0.95});
  REQUIRE(rows.size() == 3);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i - 1].quality.intra_defined && rows[i].quality.intra_defined)
      CHECK(rows[i].quality.mean_intra_distance <=
            rows[i - 1].quality.mean_intra_distance + 1e-12);
  }

  auto extreme = threshold_sweep(index, store, posts, {0.999});
  CHECK(extreme[0].quality.singleton_fraction > 0.9);

  auto again = threshold_sweep(index, store, posts, {0.80, 0.88, 0.95});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].quality.mean_intra_distance ==
          again[i].quality.mean_intra_distance);
    CHECK(rows[i].size_histogram == again[i].size_histogram);
  }
}

TEST_CASE("most dissimilar pairs surface the cluster extremes") {
  // One cluster containing two far-apart ends and a bridge in the middle.
  std::vector<float> a{1.0f, 0.0f, 0.0f};
  std::vector<float> mid{0.709f, 0.709f, 0.0f};
  std::vector<float> b{0.0f, 1.0f, 0.0f};
  PostCollection posts = posts_for({"end1", "bridge", "end2"});
  EmbeddingStore store =
      EmbeddingStore::from_rows(3, {"end1", "bridge", "end2"}, {a, mid, b});
  SimilarityGraph g({"end1", "bridge", "end2"}, {}, 0.5);
  g.add_edge(0, 1, store.dot(0, 1));
  g.add_edge(1, 2, store.dot(1, 2));
  auto clusters = connected_components(g, posts);
  REQUIRE(clusters.size() == 1);
  auto pairs = most_dissimilar_pairs(clusters, posts, store);
  REQUIRE(pairs.size() == 1);
  CHECK(((pairs[0].post_a == "end1" && pairs[0].post_b == "end2") ||
         (pairs[0].post_a == "end2" && pairs[0].post_b == "end1")));
}
