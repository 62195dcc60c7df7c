#include <catch_amalgamated.hpp>

#include <filesystem>
#include <random>
#include <set>

#include "cdrift/ann.hpp"
#include "cdrift/corpus.hpp"
#include "support/oracles.hpp"

using namespace cdrift;

namespace {

EmbeddingStore blob_store(std::size_t n, std::size_t dim, std::size_t k,
                          double sigma, std::uint64_t seed) {
  oracle::BlobSet b = oracle::make_blobs(n, dim, k, sigma, seed);
  return EmbeddingStore::from_rows(dim, b.ids, b.vectors);
}

}  // namespace

TEST_CASE("index builds over random unit vectors") {
  std::mt19937_64 rng(7);
  std::vector<std::string> ids;
  std::vector<std::vector<float>> rows;
  for (std::size_t i = 0; i < 1000; ++i) {
    ids.push_back("r" + std::to_string(i));
    rows.push_back(oracle::unit_vector(16, rng));
  }
  EmbeddingStore store = EmbeddingStore::from_rows(16, ids, rows);
  AnnIndex index(store, 10, 123);
  CHECK_NOTHROW(index.neighbors_above("r0", 0.5));
}

TEST_CASE("tree_count zero is rejected") {
  EmbeddingStore store =
      EmbeddingStore::from_rows(2, {"a"}, {{1.0f, 0.0f}});
  CHECK_THROWS_AS(AnnIndex(store, 0, 1), Error);
}

TEST_CASE("same seed gives identical answers, twice built") {
  EmbeddingStore store = blob_store(400, 16, 8, 0.05, 11);
  AnnIndex first(store, 8, 99);
  AnnIndex second(store, 8, 99);
  for (const char* q : {"b00000", "b00017", "b00123"}) {
    NeighborSet a = first.neighbors_above(q, 0.88);
    NeighborSet b = second.neighbors_above(q, 0.88);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].post_id == b[i].post_id);
      CHECK(a[i].similarity == b[i].similarity);
    }
  }
}

TEST_CASE("query identical to three other vectors finds them all") {
  std::vector<float> v{0.6f, 0.8f, 0.0f};
  std::vector<float> w{0.0f, 0.0f, 1.0f};
  EmbeddingStore store =
      EmbeddingStore::from_rows(3, {"q", "c1", "c2", "c3", "far"},
                                {v, v, v, v, w});
  AnnIndex index(store, 6, 5);
  NeighborSet hits = index.neighbors_above("q", 0.88);
  REQUIRE(hits.size() == 3);
  for (const auto& h : hits) {
    CHECK(h.post_id != "q");
    CHECK(h.post_id != "far");
    CHECK_THAT(h.similarity, Catch::Matchers::WithinAbs(1.0, 1e-6));
  }
}

TEST_CASE("orthogonal query finds nothing") {
  EmbeddingStore store = EmbeddingStore::from_rows(
      4, {"q", "a", "b"},
      {{1.0f, 0.0f, 0.0f, 0.0f}, {0.0f, 1.0f, 0.0f, 0.0f},
       {0.0f, 0.0f, 1.0f, 0.0f}});
  AnnIndex index(store, 4, 3);
  CHECK(index.neighbors_above("q", 0.5).empty());
}

TEST_CASE("exact_neighbors scans everything") {
  std::vector<float> v{1.0f, 0.0f};
  EmbeddingStore store = EmbeddingStore::from_rows(2, {"a", "twin"}, {v, v});
  NeighborSet hits = exact_neighbors(store, "a", 0.9);
  REQUIRE(hits.size() == 1);
  CHECK(hits[0].post_id == "twin");
  CHECK_THAT(hits[0].similarity, Catch::Matchers::WithinAbs(1.0, 1e-6));
  CHECK_THROWS_AS(exact_neighbors(store, "a", 1.1), Error);
  CHECK_THROWS_AS(exact_neighbors(store, "a", 0.0), Error);
}

TEST_CASE("results are sorted, deduplicated, and above threshold") {
  EmbeddingStore store = blob_store(600, 24, 6, 0.05, 21);
  AnnIndex index(store, 12, 77);
  NeighborSet hits = index.neighbors_above("b00003", 0.88);
  for (std::size_t i = 0; i < hits.size(); ++i) {
    CHECK(hits[i].similarity >= 0.88);
    if (i > 0) CHECK(hits[i - 1].similarity >= hits[i].similarity);
    for (std::size_t j = i + 1; j < hits.size(); ++j)
      CHECK(hits[i].post_id != hits[j].post_id);
  }
}

TEST_CASE("snapshot round-trips and answers identically") {
  EmbeddingStore store = blob_store(500, 16, 5, 0.05, 31);
  AnnIndex index(store, 8, 2024);
  auto path = std::filesystem::temp_directory_path() / "cdrift_ann_test.bin";
  index.save(path.string());

  std::string bytes = read_file(path.string());
  CHECK(bytes.substr(0, 11) == std::string("CDRIFT-ANN1"));

  AnnIndex loaded = AnnIndex::load(path.string(), store);
  for (const char* q : {"b00000", "b00042", "b00311"}) {
    NeighborSet a = index.neighbors_above(q, 0.88);
    NeighborSet b = loaded.neighbors_above(q, 0.88);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
      CHECK(a[i].post_id == b[i].post_id);
  }
  std::filesystem::remove(path);
}

TEST_CASE("recall on planted blobs beats brute force fallback") {
  // Smaller sibling of the acceptance-scale run, for quick iteration.
  EmbeddingStore store = blob_store(2000, 32, 10, 0.04, 101);
  AnnIndex index(store, 16, 55);
  std::size_t found = 0, expected = 0;
  std::mt19937_64 rng(9);
  for (std::size_t qi = 0; qi < 20; ++qi) {
    std::string q = store.id_of(rng() % store.size());
    NeighborSet exact = exact_neighbors(store, q, 0.88);
    NeighborSet approx = index.neighbors_above(q, 0.88);
    std::set<std::string> got;
    for (const auto& h : approx) got.insert(h.post_id);
    for (const auto& h : exact)
      if (got.count(h.post_id)) ++found;
    expected += exact.size();
  }
  REQUIRE(expected > 0);
  CHECK(static_cast<double>(found) >= 0.95 * static_cast<double>(expected));
}
