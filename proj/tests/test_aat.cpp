#include <catch_amalgamated.hpp>

#include <algorithm>
#include <random>
#include <vector>

#include "cdrift/aat.hpp"
#include "cdrift/corpus.hpp"
#include "support/oracles.hpp"

using namespace cdrift;

// ---------------------------------------------------------------------------
// Preprocessing
// ---------------------------------------------------------------------------

TEST_CASE("preprocess strips urls, mentions, tags, emoji") {
  CHECK(preprocess("Check https://x.co @bob <b>NOW</b>") == "check now");
  CHECK(preprocess("go to www.example.com today") == "go to today");
  CHECK(preprocess("hello \xF0\x9F\x98\x80 world") == "hello world");
  CHECK(preprocess("") == "");
}

TEST_CASE("preprocess lemmatizes lightly") {
  CHECK(preprocess("labs leaked viruses") == "lab leak virus");
  // -ed only drops when the bare stem is a verb; "creat" is not a word.
  CHECK(preprocess("they created it") == "they created it");
  CHECK(preprocess("viruses churches stories") == "virus church story");
}

TEST_CASE("preprocess keeps clause punctuation attached") {
  CHECK(preprocess("One.  Two!!") == "one. two!");
  CHECK(preprocess("a , b") == "a, b");
}

TEST_CASE("mentions are only stripped at token start") {
  CHECK(preprocess("@user said hi") == "said hi");
  // Mid-token '@' is not a mention; both sides survive (as separate tokens).
  CHECK(preprocess("a@b said hi") == "a b said hi");
}

// ---------------------------------------------------------------------------
// Offline extraction
// ---------------------------------------------------------------------------

namespace {

std::vector<Triplet> offline(const std::string& text) {
  OfflineExtractor ex;
  return ex.extract_batch({{"p1", preprocess(text)}});
}

Post make_post(std::string id, std::int64_t ts, std::string text) {
  Post p;
  p.post_id = std::move(id);
  p.author_id = "author";
  p.created_at = ts;
  p.text = std::move(text);
  return p;
}

}  // namespace

TEST_CASE("extractor finds subject-verb-object") {
  auto got = offline("The chinese government created the covid bioweapon");
  REQUIRE(got.size() == 1);
  CHECK(got[0].actor == "chinese government");
  CHECK(got[0].action == "created");
  CHECK(got[0].target == "covid bioweapon");
}

TEST_CASE("extractor handles empty and verbless text") {
  CHECK(offline("").empty());
  CHECK(offline("the big red balloon").empty());
}

TEST_CASE("extractor emits one candidate per clause") {
  auto got = offline("Labs leaked the virus. Media hides the truth.");
  REQUIRE(got.size() == 2);
  CHECK(got[0].action == "leak");
  CHECK(got[1].actor == "media");
}

TEST_CASE("extract_triplets batches posts through the extractor") {
  struct CountingExtractor : TripletExtractor {
    std::size_t batches = 0;
    std::vector<Triplet> extract_batch(const ExtractionBatch& batch) override {
      ++batches;
      std::vector<Triplet> out;
      for (const auto& [id, text] : batch) out.push_back({id, "a", "did", "b"});
      return out;
    }
  };
  std::vector<Post> raw;
  for (int i = 0; i < 5; ++i)
    raw.push_back(make_post("p" + std::to_string(i), 100 + i, "text"));
  PostCollection posts(std::move(raw));

  CountingExtractor ex;
  ExtractionOptions opt;
  opt.batch_size = 2;
  auto got = extract_triplets(ex, posts, opt);
  CHECK(got.size() == 5);
  CHECK(ex.batches == 3);  // 2 + 2 + 1
}

TEST_CASE("failed batches are retried, then propagate") {
  struct FlakyExtractor : TripletExtractor {
    int calls = 0;
    int fail_first_n;
    explicit FlakyExtractor(int n) : fail_first_n(n) {}
    std::vector<Triplet> extract_batch(const ExtractionBatch& batch) override {
      if (++calls <= fail_first_n) throw Error("transient failure");
      std::vector<Triplet> out;
      for (const auto& [id, text] : batch) out.push_back({id, "a", "did", "b"});
      return out;
    }
  };
  std::vector<Post> raw{make_post("p0", 100, "x"), make_post("p1", 101, "y")};
  PostCollection posts(std::move(raw));

  FlakyExtractor once(1);
  auto got = extract_triplets(once, posts);
  CHECK(got.size() == 2);
  CHECK(once.calls == 2);

  FlakyExtractor always(1000);
  CHECK_THROWS_WITH(extract_triplets(always, posts),
                    Catch::Matchers::ContainsSubstring("after 3 attempts"));
}

TEST_CASE("filter drops pronoun actors and verb-only targets") {
  std::vector<Triplet> in{
      {"p1", "they", "spread", "lies"},
      {"p2", "deep state", "wants", "vaccinate"},
      {"p3", "government", "suppress", "the evidence"},
  };
  auto out = filter_triplets(in);
  CHECK(out[0].actor.empty());          // pronoun actor removed
  CHECK(out[0].action == "spread");     // action slot is never filtered
  CHECK(out[1].actor == "deep state");  // multiword actor retained
  CHECK(out[1].target.empty());         // single-word verb target removed
  CHECK(out[2].target == "the evidence");
}

// ---------------------------------------------------------------------------
// Phrase vectors and k-means
// ---------------------------------------------------------------------------

namespace {

// Builds a provider over two tight groups of unit vectors along orthogonal
// axes; phrases a00..(n-1) sit on axis 0, b.. on axis 1.
struct TwoBlobFixture {
  EmbeddingStore store;
  std::vector<std::string> phrases;

  explicit TwoBlobFixture(std::size_t per_blob, double sigma = 0.02,
                          std::uint64_t seed = 5) {
    std::mt19937_64 rng(seed);
    std::vector<std::string> ids;
    std::vector<std::vector<float>> rows;
    const std::size_t dim = 8;
    for (std::size_t blob = 0; blob < 2; ++blob) {
      for (std::size_t i = 0; i < per_blob; ++i) {
        std::vector<float> v(dim, 0.0f);
        v[blob] = 1.0f;
        for (std::size_t d = 0; d < dim; ++d)
          v[d] += static_cast<float>(sigma * oracle::normal01(rng));
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%c%02zu", blob == 0 ? 'a' : 'b', i);
        ids.emplace_back(buf);
        rows.push_back(std::move(v));
      }
    }
    store = EmbeddingStore::from_rows(dim, ids, rows);
    phrases = ids;
  }
};

}  // namespace

TEST_CASE("two separated blobs cluster cleanly at k=2") {
  TwoBlobFixture fx(10);
  PhraseVectorProvider prov(&fx.store, false);
  auto pc = cluster_phrases(fx.phrases, prov, 2, 7, "actor");
  CHECK(pc.slot == "actor");
  CHECK(pc.k == 2);
  CHECK_FALSE(pc.degenerate);
  CHECK(pc.silhouette > 0.9);
  // Every a-phrase shares a cluster, every b-phrase the other.
  auto a_cluster = pc.cluster_of("a00");
  auto b_cluster = pc.cluster_of("b00");
  CHECK(a_cluster != b_cluster);
  for (std::size_t i = 0; i < 10; ++i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "a%02zu", i);
    CHECK(pc.cluster_of(buf) == a_cluster);
    std::snprintf(buf, sizeof(buf), "b%02zu", i);
    CHECK(pc.cluster_of(buf) == b_cluster);
  }
  CHECK_THROWS_WITH(pc.cluster_of("zz"),
                    Catch::Matchers::ContainsSubstring("not in clustering"));
}

TEST_CASE("identical vectors at k=2 are flagged degenerate") {
  std::vector<std::string> ids{"one", "two", "three"};
  std::vector<std::vector<float>> rows(3, std::vector<float>{1.0f, 0.0f});
  EmbeddingStore store = EmbeddingStore::from_rows(2, ids, rows);
  PhraseVectorProvider prov(&store, false);
  auto pc = cluster_phrases(ids, prov, 2, 3);
  CHECK(pc.degenerate);
  CHECK(pc.silhouette == 0.0);
}

TEST_CASE("clustering is deterministic under a fixed seed") {
  TwoBlobFixture fx(12);
  PhraseVectorProvider prov(&fx.store, false);
  auto first = cluster_phrases(fx.phrases, prov, 3, 99);
  auto second = cluster_phrases(fx.phrases, prov, 3, 99);
  CHECK(first.assignment == second.assignment);
  CHECK(first.centroids == second.centroids);
  CHECK(first.inertia == second.inertia);
  CHECK(first.silhouette == second.silhouette);
}

TEST_CASE("cluster count bounds are enforced") {
  TwoBlobFixture fx(3);
  PhraseVectorProvider prov(&fx.store, false);
  CHECK_THROWS_WITH(cluster_phrases(fx.phrases, prov, 0, 1),
                    Catch::Matchers::ContainsSubstring("must be >= 1"));
  CHECK_THROWS_WITH(cluster_phrases(fx.phrases, prov, 7, 1),
                    Catch::Matchers::ContainsSubstring("exceeds phrase count"));
}

TEST_CASE("lloyd inertia trace never increases") {
  auto blobs = oracle::make_blobs(60, 12, 4, 0.15, 21);
  EmbeddingStore store = EmbeddingStore::from_rows(12, blobs.ids, blobs.vectors);
  PhraseVectorProvider prov(&store, false);
  auto pc = cluster_phrases(blobs.ids, prov, 4, 13);
  REQUIRE(pc.inertia_trace.size() >= 2);
  for (std::size_t i = 1; i < pc.inertia_trace.size(); ++i)
    CHECK(pc.inertia_trace[i] <= pc.inertia_trace[i - 1] + 1e-9);
}

TEST_CASE("select_k recovers a planted five-blob structure") {
  auto blobs = oracle::make_orthogonal_blobs(50, 16, 5, 0.03, 31);
  EmbeddingStore store = EmbeddingStore::from_rows(16, blobs.ids, blobs.vectors);
  PhraseVectorProvider prov(&store, false);
  std::vector<std::size_t> range;
  for (std::size_t k = 2; k <= 10; ++k) range.push_back(k);
  auto sel = select_k(blobs.ids, prov, range, 17);
  CHECK(sel.best_k == 5);
  CHECK(sel.table.size() == range.size());
}

TEST_CASE("select_k with a single candidate picks it") {
  TwoBlobFixture fx(5);
  PhraseVectorProvider prov(&fx.store, false);
  auto sel = select_k(fx.phrases, prov, {2}, 17);
  CHECK(sel.best_k == 2);
  CHECK_THROWS_WITH(select_k(fx.phrases, prov, {}, 17),
                    Catch::Matchers::ContainsSubstring("non-empty k range"));
}

TEST_CASE("hash phrase vectors are unit-norm and deterministic") {
  auto v1 = hash_phrase_vector("lab leak", 64);
  auto v2 = hash_phrase_vector("lab leak", 64);
  CHECK(v1 == v2);
  double n2 = 0.0;
  for (float f : v1) n2 += double(f) * f;
  CHECK_THAT(n2, Catch::Matchers::WithinAbs(1.0, 1e-4));
  CHECK(hash_phrase_vector("other phrase", 64) != v1);
}

TEST_CASE("provider refuses hashing when fallback is off") {
  TwoBlobFixture fx(3);
  PhraseVectorProvider strict(&fx.store, false);
  CHECK_THROWS_WITH(strict.vec("unseen phrase"),
                    Catch::Matchers::ContainsSubstring("no ingested vector"));
  PhraseVectorProvider loose(&fx.store, true);
  CHECK(loose.vec("unseen phrase").size() == fx.store.dimension());
  PhraseVectorProvider hash_only(nullptr, true, 32);
  CHECK(hash_only.vec("anything").size() == 32);
}

// ---------------------------------------------------------------------------
// MMR sampling
// ---------------------------------------------------------------------------

namespace {

std::vector<std::vector<float>> unit_items(std::size_t n, std::size_t dim,
                                           std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::vector<float>> items;
  for (std::size_t i = 0; i < n; ++i) items.push_back(oracle::unit_vector(dim, rng));
  return items;
}

}  // namespace

TEST_CASE("mmr at lambda=1 orders by centroid similarity") {
  std::vector<std::vector<float>> items{
      {0.2f, 0.98f}, {0.9f, 0.436f}, {0.5f, 0.866f}, {0.99f, 0.141f}};
  std::vector<double> centroid{1.0, 0.0};
  auto order = mmr_sample(items, centroid, 4, 1.0);
  CHECK(order == std::vector<std::size_t>{3, 1, 2, 0});
}

TEST_CASE("mmr at lambda=0 pushes the second pick far from the first") {
  // Index 1 duplicates the top pick; index 2 is nearly orthogonal.
  std::vector<std::vector<float>> items{
      {1.0f, 0.0f}, {1.0f, 0.0f}, {0.1f, 0.995f}};
  std::vector<double> centroid{1.0, 0.0};
  auto order = mmr_sample(items, centroid, 2, 0.0);
  REQUIRE(order.size() == 2);
  CHECK(order[0] == 0);
  CHECK(order[1] == 2);
}

TEST_CASE("mmr avoids duplicates while alternatives remain") {
  std::vector<std::vector<float>> items{
      {0.9f, 0.43589f, 0.0f},   // nearest the centroid
      {0.9f, 0.43589f, 0.0f},   // exact duplicate of it
      {0.8f, -0.6f, 0.0f},      // decent relevance, far from the first pick
  };
  std::vector<double> centroid{1.0, 0.0, 0.0};
  auto order = mmr_sample(items, centroid, 3, 0.5);
  REQUIRE(order.size() == 3);
  CHECK(order[0] == 0);
  CHECK(order[1] == 2);  // duplicate deferred until nothing else is left
  CHECK(order[2] == 1);
}

TEST_CASE("mmr matches the greedy oracle on random sets") {
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL, 4ULL}) {
    auto items = unit_items(6, 5, seed);
    std::mt19937_64 rng(seed + 100);
    std::vector<double> centroid;
    for (auto f : oracle::unit_vector(5, rng)) centroid.push_back(f);
    auto got = mmr_sample(items, centroid, 6, 0.5);
    auto want = oracle::mmr_trace(items, centroid, 6, 0.5);
    CHECK(got == want);
  }
}

TEST_CASE("mmr validates lambda and clamps n") {
  std::vector<std::vector<float>> items{{1.0f, 0.0f}};
  std::vector<double> centroid{1.0, 0.0};
  CHECK_THROWS_WITH(mmr_sample(items, centroid, 1, -0.1),
                    Catch::Matchers::ContainsSubstring("lambda"));
  CHECK_THROWS_WITH(mmr_sample(items, centroid, 1, 1.5),
                    Catch::Matchers::ContainsSubstring("lambda"));
  CHECK(mmr_sample(items, centroid, 10, 0.5).size() == 1);
  CHECK(mmr_sample(std::vector<std::vector<float>>{}, centroid, 3, 0.5).empty());
}

// ---------------------------------------------------------------------------
// Mutation flags
// ---------------------------------------------------------------------------

namespace {

PhraseClusters toy_clusters(std::string slot) {
  PhraseClusters pc;
  pc.slot = std::move(slot);
  pc.k = 2;
  pc.phrases = {"alpha", "beta", "gamma"};  // sorted
  pc.assignment = {0, 1, 0};
  return pc;
}

Triplet trip(std::string actor, std::string action, std::string target) {
  return Triplet{"p", std::move(actor), std::move(action), std::move(target)};
}

}  // namespace

TEST_CASE("a slot mutates when phrases span two clusters") {
  auto actors = toy_clusters("actor");
  auto actions = toy_clusters("action");
  auto targets = toy_clusters("target");

  std::vector<Triplet> spanning{trip("alpha", "x", ""), trip("beta", "x", "")};
  auto f = detect_aat_mutations(3, spanning, actors, actions, targets);
  CHECK(f.claim_id == 3);
  CHECK(f.actor_mutated);
  CHECK_FALSE(f.action_mutated);
  CHECK_FALSE(f.target_mutated);
  CHECK(f.any_mutated);

  std::vector<Triplet> same_cluster{trip("alpha", "", ""), trip("gamma", "", "")};
  CHECK_FALSE(detect_aat_mutations(3, same_cluster, actors, actions, targets)
                  .actor_mutated);
}

TEST_CASE("empty or unknown phrases never count toward mutation") {
  auto pc = toy_clusters("actor");
  std::vector<Triplet> none{trip("", "x", ""), trip("", "y", "")};
  CHECK_FALSE(detect_aat_mutations(1, none, pc, pc, pc).any_mutated);

  std::vector<Triplet> unknown{trip("alpha", "", ""), trip("not-clustered", "", "")};
  CHECK_FALSE(detect_aat_mutations(1, unknown, pc, pc, pc).actor_mutated);
}

TEST_CASE("mutation flags ignore triplet order") {
  auto pc = toy_clusters("x");
  std::vector<Triplet> trips{trip("alpha", "beta", "gamma"),
                             trip("beta", "beta", "gamma"),
                             trip("gamma", "alpha", "alpha")};
  auto base = detect_aat_mutations(2, trips, pc, pc, pc);
  std::sort(trips.begin(), trips.end(), [](const Triplet& a, const Triplet& b) {
    return a.actor > b.actor;
  });
  auto shuffled = detect_aat_mutations(2, trips, pc, pc, pc);
  CHECK(base.actor_mutated == shuffled.actor_mutated);
  CHECK(base.action_mutated == shuffled.action_mutated);
  CHECK(base.target_mutated == shuffled.target_mutated);
}
