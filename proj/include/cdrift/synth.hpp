// Deterministic synthetic corpus with planted structure: well-separated
// claim clusters (half of which drift and mutate over time), Weibull
// lifespans whose scale depends on mutation status, and templated texts that
// exercise the lexicon scorer and the triplet extractor. The demo tool and
// the end-to-end tests both build their inputs from this generator, so it
// must stay bit-stable for a fixed seed: all randomness is drawn from
// purpose-keyed engines through portable uniform/normal helpers.
#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "cdrift/aat.hpp"
#include "cdrift/common.hpp"
#include "cdrift/corpus.hpp"

#include <json.hpp>

namespace cdrift {

// Ten-category demo lexicon bundled with the repository (data/lexicon.cdl
// carries the same bytes; a test keeps them in sync). Plain common-word
// lists assembled for this project - not derived from any commercial
// dictionary.
inline constexpr const char* kDemoLexicon =
    R"(# Demo lexicon: ten categories of common English markers.
# Entries are lowercase; trailing * marks a prefix stem; entries with spaces
# match as phrases.

[ppron]
i, me, my, mine, we, us, our, ours, you, your, yours
he, him, his, she, her, hers, they, them, their, theirs, it, its
myself, yourself, himself, herself, ourselves, themselves
everyone, everybody, someone, somebody, anyone, anybody, nobody

[time_orientation]
now, today, tomorrow, yesterday, soon, later, past, future, present
moment, day, week, month, year, decade, era, early, late, ago
eventually, immediately, currently, recently, previously, history
ancient, modern, forever, again, always, never

[health]
health, healthy, sick, sickness, ill, illness, disease, virus, infection
vaccine, vaccin*, medic*, doctor, hospital, clinic, cure, symptom
pandemic, epidemic, outbreak, immune, immunity, drug, pill, dose
therapy, treatment, cancer, flu, fever, pain, blood, dna, gene, body
side effect

[cogproc]
think, thought, know, knowledge, believe, belief, understand, realize
reason, logic, cause, because, effect, therefore, conclude, question
wonder, doubt, certain, uncertain, maybe, perhaps, possibly, probably
assume, consider, analyze, examine, evidence, proof, prove, theory
idea, insight, aware, remember, forget, decide

[tone_neg]
bad, worse, worst, terrible, horrible, awful, evil, wrong, sad
angry, anger, hate, hatred, fear, afraid, scared, scary, ugly, nasty
cruel, toxic, dirty, dark, doom, gloom, misery, tragic, tragedy
pathetic, disaster, failure, hopeless, worthless, vile, wicked
sinister, grim, dread

[socrefs]
friend, family, mother, father, parent, child, children, brother
sister, neighbor, community, society, public, citizen, nation
country, government, leader, president, official, elite, media
press, journalist, scientist, expert, group, team, member, crowd
folk, human, humanity, world, population, voter, worker

[conflict]
war, battle, fight, enemy, weapon, bomb, gun, soldier, army
invasion, violence, violent, conflict, clash, struggle, resist
resistance, rebel, revolt, riot, destroy, destruction, threat
threaten, assault, combat, hostile, aggression, defend, defense
strike, kill, murder, victim, casualty, siege, raid, ambush

[moral]
moral, immoral, right, honest, dishonest, truth, true, false, lie
liar, justice, injustice, fair, unfair, virtue, vice, sin, sinful
guilt, guilty, innocent, shame, honor, noble, corrupt, integrity
ethic*, principle, duty, obligation, betray, betrayal, loyal
loyalty, deserve, blame

[power]
power, powerful, powerless, control, dominate, domination, rule
ruler, authority, command, force, influence, manipulate, puppet
master, obey, submit, oppress, oppression, tyranny, tyrant
dictator, regime, empire, throne, crown, boss, superior, inferior
weak, strong, strength, mighty, supreme, hierarchy, agenda
new world order

[risk]
risk, risky, danger, dangerous, threat, unsafe, safety, safe
warning, warn, caution, cautious, hazard, peril, gamble, chance
vulnerable, exposure, exposed, crisis, emergency, urgent, alarm
alarming, beware, careful, reckless, security, insecure, protection
precaution, jeopardy, fragile, unstable, collapse, panic
)";

struct SynthConfig {
  std::size_t post_count = 5000;
  std::size_t dim = 64;
  std::size_t claim_count = 120;  // multi-post claims; every second one mutates
  std::uint64_t seed = 42;
  double drift_step = 0.08;       // per-post step magnitude of mutating chains
  double mutating_scale_days = 40.0;   // Weibull lifespan scale, mutating
  double plain_scale_days = 12.0;      // Weibull lifespan scale, non-mutating
  double lifespan_shape = 0.8;
};

// Ground truth for one planted multi-post claim.
struct SynthClaimTruth {
  bool mutating = false;
  double lifespan_days = 0.0;
  bool actor_switch = false;
  bool action_switch = false;
  bool target_switch = false;
  std::vector<std::string> post_ids;  // in planted time order
};

struct SynthCorpus {
  std::vector<Post> posts;
  std::vector<std::string> embedding_ids;        // aligned with vectors
  std::vector<std::vector<float>> vectors;
  std::vector<SynthClaimTruth> claims;           // singletons not listed
  std::unordered_map<std::string, std::size_t> truth_of_post;
};

namespace detail {

// Portable uniform in [0,1) from the engine's raw 64-bit output; avoids the
// implementation-defined std::*_distribution wrappers so fixture bytes do
// not depend on the standard library.
inline double synth_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double synth_normal(std::mt19937_64& rng) {
  double u1 = synth_uniform(rng);
  double u2 = synth_uniform(rng);
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * 3.141592653589793238462643383279502884 * u2);
}

inline std::vector<double> synth_unit_vector(std::mt19937_64& rng,
                                             std::size_t dim) {
  std::vector<double> v(dim);
  double n2 = 0.0;
  for (double& x : v) {
    x = synth_normal(rng);
    n2 += x * x;
  }
  double inv = 1.0 / std::sqrt(n2);
  for (double& x : v) x *= inv;
  return v;
}

inline std::vector<float> to_float_row(const std::vector<double>& v) {
  std::vector<float> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<float>(v[i]);
  return out;
}

}  // namespace detail

// Slot pools for templated texts. All actors/targets are two words and all
// actions one word so every post of a claim has the same token count; a
// lexicon category's share then only moves when the template content moves.
inline const std::vector<std::string>& synth_actor_pool() {
  static const std::vector<std::string> kActors = {
      "deep state",     "big pharma",        "global elite",
      "shadow cabal",   "tech moguls",       "foreign agents",
      "corrupt officials", "secret society"};
  return kActors;
}

inline const std::vector<std::string>& synth_action_pool() {
  static const std::vector<std::string> kActions = {
      "created", "released", "spread", "hid",
      "pushed",  "leaked",   "funded", "designed"};
  return kActions;
}

inline const std::vector<std::string>& synth_target_pool() {
  static const std::vector<std::string> kTargets = {
      "secret virus", "mind control",  "water supply",  "election results",
      "food supply",  "human dna",     "vaccine agenda", "global economy"};
  return kTargets;
}

// Six plain (non-verb, single-word) members of each demo lexicon category,
// used as interchangeable topic filler.
inline const std::vector<std::vector<std::string>>& synth_topic_words() {
  static const std::vector<std::vector<std::string>> kTopics = {
      {"they", "them", "everyone", "somebody", "nobody", "anybody"},
      {"today", "tomorrow", "future", "past", "moment", "era"},
      {"virus", "vaccine", "doctor", "hospital", "symptom", "disease"},
      {"theory", "evidence", "logic", "doubt", "idea", "reason"},
      {"evil", "toxic", "awful", "grim", "misery", "doom"},
      {"family", "citizen", "society", "nation", "community", "media"},
      {"war", "weapon", "enemy", "soldier", "violence", "battle"},
      {"truth", "justice", "virtue", "shame", "honor", "guilt"},
      {"regime", "tyrant", "empire", "authority", "puppet", "throne"},
      {"danger", "hazard", "crisis", "peril", "alarm", "caution"}};
  return kTopics;
}

namespace detail {

// "the <actor> <action> the <target> . <w0> <w1> of the <w2> <w3>"
// 13 word tokens per post, always.
inline std::string synth_post_text(const std::string& actor,
                                   const std::string& action,
                                   const std::string& target,
                                   const std::vector<std::string>& filler) {
  std::string text = "the " + actor + " " + action + " the " + target + " . " +
                     filler[0] + " " + filler[1] + " of the " + filler[2] +
                     " " + filler[3];
  return text;
}

}  // namespace detail

inline SynthCorpus generate_synth_corpus(const SynthConfig& cfg = {}) {
  if (cfg.claim_count * 10 + 100 > cfg.post_count)
    throw Error("synth corpus: post budget too small for " +
                std::to_string(cfg.claim_count) + " claims");

  SynthCorpus out;
  out.posts.reserve(cfg.post_count);
  out.embedding_ids.reserve(cfg.post_count);
  out.vectors.reserve(cfg.post_count);

  // Independent engines per concern so a change in one draw sequence does
  // not reshuffle everything else.
  std::mt19937_64 rng_shape(derive_seed(cfg.seed, "synth-shape"));
  std::mt19937_64 rng_centers(derive_seed(cfg.seed, "synth-centers"));
  std::mt19937_64 rng_slots(derive_seed(cfg.seed, "synth-slots"));
  std::mt19937_64 rng_engage(derive_seed(cfg.seed, "synth-engagement"));

  const std::int64_t kEpoch = 1600000000;  // corpus start, UTC seconds
  const std::int64_t kStartSpan = 200LL * 86400;
  const auto& actors = synth_actor_pool();
  const auto& actions = synth_action_pool();
  const auto& targets = synth_target_pool();
  const auto& topics = synth_topic_words();

  // Claim sizes, capped so at least ~200 posts remain for singletons.
  std::size_t budget = cfg.post_count - 200;
  std::vector<std::size_t> sizes(cfg.claim_count);
  std::size_t used = 0;
  for (std::size_t c = 0; c < cfg.claim_count; ++c) {
    std::size_t s = 10 + static_cast<std::size_t>(rng_shape() % 46);
    if (used + s > budget) s = 10;
    sizes[c] = s;
    used += s;
  }

  std::size_t next_post = 0;
  auto post_id_for = [&]() {
    char buf[16];
    std::snprintf(buf, sizeof buf, "p%06zu", next_post++);
    return std::string(buf);
  };

  for (std::size_t c = 0; c < cfg.claim_count; ++c) {
    SynthClaimTruth truth;
    truth.mutating = (c % 2 == 0);

    std::size_t s = sizes[c];
    std::int64_t start =
        kEpoch + static_cast<std::int64_t>(detail::synth_uniform(rng_shape) *
                                           static_cast<double>(kStartSpan));
    double scale =
        truth.mutating ? cfg.mutating_scale_days : cfg.plain_scale_days;
    double u = detail::synth_uniform(rng_shape);
    double lifespan =
        scale * std::pow(-std::log(1.0 - u), 1.0 / cfg.lifespan_shape);
    lifespan = std::min(std::max(lifespan, 2.0), 180.0);
    truth.lifespan_days = lifespan;

    // Timestamps: the first third of the posts lands inside the first 20
    // hours (so the 24h drift window always sees several posts), the rest
    // spreads out to exactly `lifespan` days after the seed.
    std::vector<std::int64_t> times(s);
    std::size_t n_early = std::max<std::size_t>(3, s / 3);
    for (std::size_t i = 0; i < n_early; ++i)
      times[i] = start + static_cast<std::int64_t>(
                             72000.0 * static_cast<double>(i) /
                             static_cast<double>(n_early));
    std::size_t m = s - n_early;
    for (std::size_t j = 1; j <= m; ++j) {
      double frac = static_cast<double>(j) / static_cast<double>(m);
      times[n_early + j - 1] =
          start + static_cast<std::int64_t>(std::llround(
                      86400.0 * (1.0 + (lifespan - 1.0) * frac)));
    }

    // Embeddings: a shared unit center; mutating claims take a small random
    // step per post (consecutive similarity ~0.997), others stay put so
    // their early drift is exactly zero.
    std::vector<double> v = detail::synth_unit_vector(rng_centers, cfg.dim);

    // Slot content and the lexicon topic pair.
    std::size_t actor_a = rng_slots() % actors.size();
    std::size_t action_a = rng_slots() % actions.size();
    std::size_t target_a = rng_slots() % targets.size();
    std::size_t actor_b = (actor_a + 1 + rng_slots() % (actors.size() - 1)) %
                          actors.size();
    std::size_t action_b =
        (action_a + 1 + rng_slots() % (actions.size() - 1)) % actions.size();
    std::size_t target_b =
        (target_a + 1 + rng_slots() % (targets.size() - 1)) % targets.size();
    unsigned mask = truth.mutating ? 1u + static_cast<unsigned>(rng_slots() % 7)
                                   : 0u;
    truth.actor_switch = (mask & 1u) != 0;
    truth.action_switch = (mask & 2u) != 0;
    truth.target_switch = (mask & 4u) != 0;
    std::size_t cat_a = rng_slots() % topics.size();
    std::size_t cat_b = (cat_a + 1 + rng_slots() % (topics.size() - 1)) %
                        topics.size();

    // Engagement level varies by claim.
    double claim_engage = detail::synth_normal(rng_engage) * 0.5;
    std::size_t author_pool = 2 + static_cast<std::size_t>(rng_engage() % 9);
    std::size_t author_base = static_cast<std::size_t>(rng_engage() % 90000);

    for (std::size_t i = 0; i < s; ++i) {
      bool after_actor = truth.actor_switch && i >= s / 3;
      bool after_action = truth.action_switch && i >= s / 2;
      bool after_target = truth.target_switch && i >= (2 * s) / 3;
      bool after_topic = truth.mutating && i >= s / 2;

      const std::string& actor = actors[after_actor ? actor_b : actor_a];
      const std::string& action = actions[after_action ? action_b : action_a];
      const std::string& target = targets[after_target ? target_b : target_a];
      const auto& ta = topics[cat_a];
      const auto& tb = topics[cat_b];
      std::vector<std::string> filler =
          after_topic ? std::vector<std::string>{tb[1], tb[2], tb[3], ta[0]}
                      : std::vector<std::string>{ta[1], ta[2], ta[3], tb[0]};

      Post p;
      p.post_id = post_id_for();
      p.author_id =
          "u" + std::to_string(author_base +
                               static_cast<std::size_t>(rng_engage()) %
                                   author_pool);
      p.created_at = times[i];
      p.text = detail::synth_post_text(actor, action, target, filler);
      double z = detail::synth_normal(rng_engage);
      p.like_count = static_cast<std::uint64_t>(
          std::exp(1.5 + claim_engage + 1.2 * z));
      p.retweet_count = p.like_count / 3 + rng_engage() % 5;
      p.author_followers = static_cast<std::uint64_t>(
          std::exp(6.0 + claim_engage + 1.5 * detail::synth_normal(rng_engage)));

      truth.post_ids.push_back(p.post_id);
      out.truth_of_post.emplace(p.post_id, out.claims.size());
      out.embedding_ids.push_back(p.post_id);
      out.vectors.push_back(detail::to_float_row(v));
      out.posts.push_back(std::move(p));

      if (truth.mutating && i + 1 < s) {
        std::vector<double> g =
            detail::synth_unit_vector(rng_centers, cfg.dim);
        double n2 = 0.0;
        for (std::size_t d = 0; d < cfg.dim; ++d) {
          v[d] += cfg.drift_step * g[d];
          n2 += v[d] * v[d];
        }
        double inv = 1.0 / std::sqrt(n2);
        for (double& x : v) x *= inv;
      }
    }
    out.claims.push_back(std::move(truth));
  }

  // Singletons fill the remaining budget: isolated vectors, one post each.
  while (out.posts.size() < cfg.post_count) {
    Post p;
    p.post_id = post_id_for();
    p.author_id = "u" + std::to_string(rng_engage() % 100000);
    p.created_at =
        kEpoch + static_cast<std::int64_t>(detail::synth_uniform(rng_shape) *
                                           static_cast<double>(kStartSpan));
    const auto& ta = topics[rng_slots() % topics.size()];
    p.text = detail::synth_post_text(
        synth_actor_pool()[rng_slots() % actors.size()],
        synth_action_pool()[rng_slots() % actions.size()],
        synth_target_pool()[rng_slots() % targets.size()],
        {ta[0], ta[1], ta[2], ta[3]});
    double z = detail::synth_normal(rng_engage);
    p.like_count = static_cast<std::uint64_t>(std::exp(1.5 + 1.2 * z));
    p.retweet_count = p.like_count / 3;
    p.author_followers = static_cast<std::uint64_t>(
        std::exp(6.0 + 1.5 * detail::synth_normal(rng_engage)));
    out.embedding_ids.push_back(p.post_id);
    out.vectors.push_back(detail::to_float_row(
        detail::synth_unit_vector(rng_centers, cfg.dim)));
    out.posts.push_back(std::move(p));
  }

  return out;
}

// Extracts triplets from the generated posts offline, then builds a vector
// store keyed by every distinct slot phrase (deterministic trigram-hash
// vectors). The demo's "ingested phrase vectors" input.
inline EmbeddingStore synth_phrase_vectors(const PostCollection& posts,
                                           std::size_t dim = 64) {
  OfflineExtractor extractor;
  std::vector<Triplet> triplets =
      filter_triplets(extract_triplets(extractor, posts));
  std::set<std::string> phrases;
  for (const Triplet& t : triplets) {
    if (!t.actor.empty()) phrases.insert(t.actor);
    if (!t.action.empty()) phrases.insert(t.action);
    if (!t.target.empty()) phrases.insert(t.target);
  }
  std::vector<std::string> ids(phrases.begin(), phrases.end());
  std::vector<std::vector<float>> rows;
  rows.reserve(ids.size());
  for (const std::string& p : ids) rows.push_back(hash_phrase_vector(p, dim));
  return EmbeddingStore::from_rows(dim, std::move(ids), rows);
}

// Writes posts.jsonl, embeddings.bin and lexicon.cdl under `dir` (which must
// already exist). Returns the embeddings store for callers that keep going
// in-process.
inline EmbeddingStore write_synth_corpus(const SynthCorpus& corpus,
                                         const std::string& dir) {
  std::string jsonl;
  for (const Post& p : corpus.posts) {
    nlohmann::json j{{"post_id", p.post_id},
                     {"author_id", p.author_id},
                     {"created_at", p.created_at},
                     {"text", p.text},
                     {"like_count", p.like_count},
                     {"retweet_count", p.retweet_count},
                     {"author_followers", p.author_followers}};
    jsonl += j.dump();
    jsonl += '\n';
  }
  write_file(dir + "/posts.jsonl", jsonl);
  write_file(dir + "/lexicon.cdl", kDemoLexicon);
  std::size_t dim = corpus.vectors.empty() ? 1 : corpus.vectors.front().size();
  EmbeddingStore store =
      EmbeddingStore::from_rows(dim, corpus.embedding_ids, corpus.vectors);
  store.save(dir + "/embeddings.bin");
  return store;
}

}  // namespace cdrift
